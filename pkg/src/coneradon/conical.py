"""Inversion of the weighted conical Radon transform on the cylinder.

Two routes are provided:

* Method 1 recovers the V-line transform of every horizontal slice from the
  cone data (a singular integral over the axis tilt and opening angle) and
  inverts it slice by slice.
* Method 2 (``k in {0, 1}``) integrates the data over the opening angle,
  which yields the Hilbert transform of the 3D Radon transform (``k = 1``) or of
  its derivative (``k = 0``) along the lines ``s = z cos(beta) - sin(beta)``.
  The second derivative of the Radon transform is then backprojected.

The module also holds the conical backprojection (discrete adjoint), a direct
per-voxel singular quadrature, and discrete surrogates of the stability norms.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from . import _kernels
from .forward import ConeQuadratureSpec, axis_vector, _volume_geometry
from .grids import ConeData, RadonData3D, Volume3D, VlineSinogram, vline_psi_grid
from .special import hilbert_uniform
from .vline import VlineInversionConfig, invert_vline

log = logging.getLogger(__name__)


def cell_widths(nodes, lo: float | None = None, hi: float | None = None) -> np.ndarray:
    """Quadrature widths of a 1D grid: distance between neighbouring midpoints.

    ``lo``/``hi`` close the first and last cell (defaults: mirror the
    neighbouring half-spacing).
    """
    x = np.asarray(nodes, float)
    if x.size == 1:
        return np.array([1.0 if lo is None or hi is None else hi - lo])
    mid = 0.5 * (x[1:] + x[:-1])
    left = np.concatenate([[x[0] - (mid[0] - x[0]) if lo is None else lo], mid])
    right = np.concatenate([mid, [x[-1] + (x[-1] - mid[-1]) if hi is None else hi]])
    return right - left


def dz_derivative(a: np.ndarray, dz: float, order: int, axis: int = 1) -> np.ndarray:
    """``order``-fold second-order finite difference along ``axis`` (one-sided at the ends)."""
    out = np.asarray(a, float)
    for _ in range(order):
        if out.shape[axis] < 3:
            raise ValueError("need at least three samples for a z-derivative")
        out = np.gradient(out, dz, axis=axis, edge_order=2)
    return out


# --------------------------------------------------------------------------
# Method 1: reduction to V-lines
# --------------------------------------------------------------------------

def _kernel_const(k: int) -> float:
    return (-1) ** (k - 1) / (2 * np.pi**2 * math.factorial(k - 1))


def _q(gamma, psi_v, beta):
    return np.cos(gamma) * np.cos(psi_v) * np.sin(beta) + np.sin(gamma) * np.cos(beta)


def kernel_value(k: int, beta: float, psi: float, psi_v: float) -> float:
    """Pointwise kernel ``H_k(beta, psi; psi_v)`` as a principal value in ``gamma``.

    ``H_k = c_k int_{-pi/2}^0 sin^{k-1}(g) cos(g) sin(psi_v) /
    (cos(psi) - q(g)) dg`` with ``q = cos(g) cos(psi_v) sin(beta) + sin(g) cos(beta)``
    and ``c_k = (-1)^{k-1} / (2 pi^2 (k-1)!)``. The denominator
    ``cos(psi) - R cos(g - g0)`` has at most two simple zeros; each one is
    removed by subtracting the residue term and adding its logarithmic PV.
    """
    if k < 1:
        raise ValueError("the kernel needs k >= 1")
    A = np.cos(psi_v) * np.sin(beta)
    B = np.cos(beta)
    R = math.hypot(A, B)
    g0 = math.atan2(B, A)
    c = math.cos(psi)
    lo, hi = -np.pi / 2, 0.0

    def num(g):
        return np.sin(g) ** (k - 1) * np.cos(g) * np.sin(psi_v)

    def den(g):
        return c - R * np.cos(g - g0)

    roots = []
    if R > abs(c):
        d = math.acos(c / R)
        for cand in (g0 + d, g0 - d):
            for shift in (-2 * np.pi, 0.0, 2 * np.pi):
                g = cand + shift
                if lo < g < hi:
                    roots.append(g)
    # near a root g_r: den(g) ~ R sin(g_r - g0) (g - g_r)
    total = 0.0
    for gr in roots:
        slope = R * math.sin(gr - g0)
        total += num(gr) / slope * math.log((hi - gr) / (gr - lo))

    def smooth(g):
        val = num(g) / den(g)
        for gr in roots:
            slope = R * math.sin(gr - g0)
            val = val - num(gr) / (slope * (g - gr))
        return val

    pts = sorted(roots)
    val, _ = integrate.quad(smooth, lo, hi, points=pts or None, limit=400, epsabs=1e-12, epsrel=1e-10)
    return _kernel_const(k) * (val + total)


@dataclass(frozen=True)
class KernelTable:
    """Product-integration weights of the V-line recovery.

    ``values[v, b, p]`` maps the samples ``G[b, p] = d_z^k [C_k / sin psi]``
    at ``(beta_b, psi_p)`` to the V-line value at ``psi_v_nodes[v]``. They
    combine the kernel ``H_k`` (``gamma`` integral, midpoint rule on
    ``gamma_nodes``), the rectangle rule in beta and an exact integration in
    ``cos(psi)`` of the piecewise-linear interpolant of ``G``.
    """

    k_weight: int
    beta_nodes: np.ndarray
    psi_nodes: np.ndarray
    psi_v_nodes: np.ndarray
    gamma_nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("kernel table has non-finite entries")
        if self.values.shape != (self.psi_v_nodes.size, self.beta_nodes.size, self.psi_nodes.size):
            raise ValueError("kernel table shape does not match the grids")


def _pl_coefficients(s_asc, q):
    """Coefficients ``a[.., p]`` with ``sum_p a_p G_p = -int_{-1}^{1} G'(s)/(s-q) ds
    + G(-1)/(1+q) + G(1)/(1-q)`` for the piecewise-linear interpolant of node
    values ``G_p`` on ``s_asc``, linearly extrapolated to ``s = -1`` and ``s = 1``.
    """
    n = s_asc.size
    ext = np.concatenate([[-1.0], s_asc, [1.0]])
    d = np.diff(ext)
    qq = q[..., None]
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(ext - qq))
    L = logs[..., 1:] - logs[..., :-1]  # per cell
    # -sum_c slope_c L_c with slope_c = (G_{c+1} - G_c)/d_c
    coef = np.zeros(q.shape + (n + 2,))
    coef[..., 1:] -= L / d
    coef[..., :-1] += L / d
    coef[..., 0] += 1.0 / (1.0 + q)
    coef[..., -1] += 1.0 / (1.0 - q)
    # fold the extrapolated end values back onto the interior nodes
    t0 = (-1.0 - ext[1]) / (ext[2] - ext[1])
    t1 = (1.0 - ext[n]) / (ext[n] - ext[n - 1])
    out = coef[..., 1:-1].copy()
    out[..., 0] += coef[..., 0] * (1 - t0)
    out[..., 1] += coef[..., 0] * t0
    out[..., n - 1] += coef[..., -1] * (1 + t1)
    out[..., n - 2] -= coef[..., -1] * t1
    return out


def kernel_table(k_weight: int, beta_nodes, psi_nodes, n_gamma: int = 512,
                 psi_v_nodes=None) -> KernelTable:
    """Weights that turn ``d_z^k [C_k/sin psi]`` into V-line data.

    The V-line value is ``c_k sum_b dbeta int dgamma sin^{k-1} cos(gamma)
    sin(psi_v) I(q)``, where ``I(q)`` is the PV integral
    ``int_0^pi d_psi G / (cos psi - q) dpsi`` plus the boundary terms from the
    values of ``G`` at ``psi = 0`` and ``psi = pi``.
    """
    if k_weight < 1:
        raise ValueError("kernel_table requires k_weight >= 1")
    b = np.asarray(beta_nodes, float)
    p = np.asarray(psi_nodes, float)
    if psi_v_nodes is None:
        psi_v_nodes = vline_psi_grid(max(2, p.size // 2))
    pv = np.asarray(psi_v_nodes, float)
    order = np.argsort(np.cos(p))
    s_asc = np.cos(p)[order]
    if np.any(np.diff(s_asc) <= 0):
        raise ValueError("psi nodes must be distinct")
    gam = -np.pi / 2 + (np.arange(n_gamma) + 0.5) * (np.pi / 2) / n_gamma
    dgam = (np.pi / 2) / n_gamma
    db = cell_widths(b, 0.0, np.pi)
    wg = np.sin(gam) ** (k_weight - 1) * np.cos(gam) * dgam
    vals = np.zeros((pv.size, b.size, p.size))
    for iv, psv in enumerate(pv):
        q = _q(gam[None, :], psv, b[:, None])  # (n_b, n_g)
        coef = _pl_coefficients(s_asc, q)  # (n_b, n_g, n_p) in ascending-s order
        w = np.einsum("bg,bgp->bp", np.broadcast_to(wg, q.shape), coef)
        w *= _kernel_const(k_weight) * np.sin(psv) * db[:, None]
        vals[iv][:, order] = w
    return KernelTable(k_weight, b, p, pv, gam, vals)


def vline_from_cone(c: ConeData, kt: KernelTable) -> list[VlineSinogram]:
    """V-line data of every horizontal slice ``z = z_nodes[i]`` of ``f``."""
    if c.k_weight < 1 or c.k_weight != kt.k_weight:
        raise ValueError("cone data and kernel table need the same k_weight >= 1")
    if c.z_nodes.size < c.k_weight + 2:
        raise ValueError("need at least k+2 z samples")
    if not (np.allclose(c.beta_nodes, kt.beta_nodes) and np.allclose(c.psi_nodes, kt.psi_nodes)):
        raise ValueError("kernel table grids do not match the data")
    G = c.data / np.sin(c.psi_nodes)
    G = dz_derivative(G, c.dz, c.k_weight, axis=1)
    V = np.einsum("vbp,fzbp->zfv", kt.values, G, optimize=True)
    return [VlineSinogram(V[i], kt.psi_v_nodes) for i in range(V.shape[0])]


def invert_cone_method1(c: ConeData, kt: KernelTable,
                        vcfg: VlineInversionConfig = VlineInversionConfig(), n_x: int | None = None) -> Volume3D:
    """Recover the V-line data per slice and invert each slice."""
    sinos = vline_from_cone(c, kt)
    n_x = n_x or max(3, c.z_nodes.size)
    slices = [invert_vline(s, vcfg, n_x).values for s in sinos]
    vol = np.stack(slices, axis=-1)
    return Volume3D(vol, float(c.z_nodes[0]), float(c.z_nodes[-1]), 1.0)


# --------------------------------------------------------------------------
# Method 2: reduction to the 3D Radon transform
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Method2Intermediate:
    """Moments ``m(phi, beta, z)`` and their merge onto uniform s-grids.

    ``moments`` holds ``-(1/pi) int C_k cos^{k-2}(psi) dpsi`` (``k = 1``) or the
    finite-part version for ``k = 0``; these sample ``H d_s^{1-k} R f`` at
    ``s = z cos(beta) - sin(beta)``. ``radon`` holds ``d_s^{k+1}`` of that
    function merged from a direction and its antipode (``derivative_order =
    k + 1``), ``valid`` flags directions whose merged window covers the support.
    """

    k_weight: int
    moments: np.ndarray
    radon: RadonData3D
    derivative_order: int
    valid: np.ndarray
    windows: dict = field(default_factory=dict, compare=False)


def _psi_moments(c: ConeData) -> np.ndarray:
    psi = c.psi_nodes
    w = cell_widths(psi, 0.0, np.pi)
    if c.k_weight == 1:
        return -(1 / np.pi) * np.sum(c.data * (w / np.cos(psi)), axis=-1)
    # finite part of int C_0 / cos^2 = -PV int d_psi C_0 tan(psi)
    dC = np.gradient(c.data, psi, axis=-1, edge_order=2)
    fp = -np.sum(dC * (w * np.tan(psi)), axis=-1)
    return -(1 / np.pi) * fp


def _check_sphere_grid(c: ConeData):
    if c.n_phi % 2:
        raise ValueError("Method 2 needs an even number of vertex angles")
    b = c.beta_nodes
    if not np.allclose(b + b[::-1], np.pi, atol=1e-9):
        raise ValueError("Method 2 needs a beta grid symmetric about pi/2")
    p = c.psi_nodes
    if not np.allclose(p + p[::-1], np.pi, atol=1e-9):
        raise ValueError("Method 2 needs a psi grid symmetric about pi/2")
    if b.size < 16:
        warnings.warn("fewer than 16 beta nodes underresolve the sphere", RuntimeWarning, stacklevel=3)


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3 - 2 * x)


def _merge_windows(c: ConeData, moments, support_z: float, min_overlap: float):
    """For every direction the derivative ``d_s^{k+1} M`` on the two z-windows
    (own and antipodal), with partition-of-unity weights.

    Returns per direction ``(s_a, d_a, w_a, s_b, d_b, w_b)`` with ascending
    s-nodes, plus the validity flag.
    """
    k = c.k_weight
    n_phi = c.n_phi
    z = c.z_nodes
    D = dz_derivative(moments, c.dz, k + 1, axis=2)  # (phi, beta, z)
    betas = c.beta_nodes
    n_b = betas.size
    Z_lo, Z_hi = z[0], z[-1]
    out = {}
    valid = np.zeros((n_phi, n_b), bool)
    for ip in range(n_phi):
        jp = (ip + n_phi // 2) % n_phi
        for ib in range(n_b):
            jb = n_b - 1 - ib
            cb, sb = math.cos(betas[ib]), math.sin(betas[ib])
            if abs(cb) < 1e-9:
                continue
            scale = cb ** (-(k + 1))
            s_own = z * cb - sb
            d_own = scale * D[ip, ib]
            s_par = z * cb + sb
            d_par = (-1) ** k * scale * D[jp, jb]
            wins = []
            for s_w, d_w in ((s_own, d_own), (s_par, d_par)):
                if s_w[0] > s_w[-1]:
                    s_w, d_w = s_w[::-1], d_w[::-1]
                wins.append((s_w, d_w))
            wins.sort(key=lambda t: t[0][0])
            (s1, d1), (s2, d2) = wins
            a2, b1 = s2[0], s1[-1]
            overlap = b1 - a2
            # support of Rf for f inside the cylinder and |z| <= support_z
            reach = sb + abs(cb) * support_z
            ok = overlap >= 2 * min_overlap and s1[0] <= -reach and s2[-1] >= reach
            valid[ip, ib] = ok
            if overlap > 0:
                w1 = np.where(s1 <= a2, 1.0, _smoothstep((b1 - s1) / overlap))
                w2 = np.where(s2 >= b1, 1.0, _smoothstep((s2 - a2) / overlap))
            else:
                w1 = np.ones_like(s1)
                w2 = np.ones_like(s2)
            out[(ip, ib)] = (s1, d1, w1, s2, d2, w2)
    return out, valid


def _default_s_grid(c: ConeData, support_z: float, ds: float | None):
    zmax = max(abs(c.z_nodes[0]), abs(c.z_nodes[-1]))
    S = 1.0 + max(zmax, support_z) + 0.5
    ds = ds or c.dz / 2
    n = int(np.ceil(S / ds))
    return np.arange(-n, n + 1) * ds


def cone_moments(c: ConeData, support_z: float | None = None, s_nodes=None,
                 min_overlap: float = 0.1) -> Method2Intermediate:
    """Integrate the data over ``psi`` and map the result to the 3D Radon domain.

    ``radon.data[phi, beta, :]`` holds ``d_s^{k+1} (H d_s^{1-k} R f)`` on the
    uniform ``s_nodes`` (zero outside the covered window); for ``k = 1`` that is
    ``H d_s^2 R f``, for ``k = 0`` it is ``H d_s^2 R f`` as well.
    ``support_z`` bounds ``|z|`` on the support of ``f`` (default: the vertex range).
    """
    if c.k_weight not in (0, 1):
        raise ValueError("the reduction to the Radon transform only works for k = 0 and k = 1")
    _check_sphere_grid(c)
    if support_z is None:
        support_z = max(abs(c.z_nodes[0]), abs(c.z_nodes[-1]))
    mom = np.moveaxis(_psi_moments(c), 1, 2)  # (phi, beta, z)
    wins, valid = _merge_windows(c, mom, support_z, min_overlap)
    s = _default_s_grid(c, support_z, None) if s_nodes is None else np.asarray(s_nodes, float)
    data = np.zeros((c.n_phi, c.beta_nodes.size, s.size))
    for (ip, ib), (s1, d1, w1, s2, d2, w2) in wins.items():
        acc = np.zeros(s.size)
        for sw, dw, ww in ((s1, d1, w1), (s2, d2, w2)):
            inside = (s >= sw[0]) & (s <= sw[-1])
            if inside.any():
                acc[inside] += CubicSpline(sw, dw * ww)(s[inside])
        data[ip, ib] = acc
    radon = RadonData3D(data, c.phi, c.beta_nodes, s)
    return Method2Intermediate(c.k_weight, mom, radon, c.k_weight + 1, valid, wins)


def _beta_fill_map(valid: np.ndarray, betas: np.ndarray):
    """Linear interpolation in beta (fixed phi) across invalid rows, as index
    pairs and weights; constant beyond the outermost valid rows."""
    n_phi, n_b = valid.shape
    idx = np.zeros((n_phi, n_b, 2), np.int64)
    wts = np.zeros((n_phi, n_b, 2))
    for ip in range(n_phi):
        ok = np.flatnonzero(valid[ip])
        if ok.size == 0:
            raise ValueError("no direction of this vertex angle has enough z coverage")
        for ib in range(n_b):
            if valid[ip, ib]:
                idx[ip, ib] = ib
                wts[ip, ib] = (1.0, 0.0)
                continue
            pos = np.searchsorted(ok, ib)
            if pos == 0 or pos == ok.size:
                src = ok[0] if pos == 0 else ok[-1]
                idx[ip, ib] = src
                wts[ip, ib] = (1.0, 0.0)
                continue
            lo, hi = ok[pos - 1], ok[pos]
            a = (betas[ib] - betas[lo]) / (betas[hi] - betas[lo])
            idx[ip, ib] = (lo, hi)
            wts[ip, ib] = (1 - a, a)
    return idx, wts


def _fill_invalid(prof: np.ndarray, valid: np.ndarray, betas: np.ndarray) -> np.ndarray:
    idx, wts = _beta_fill_map(valid, betas)
    rows = np.arange(prof.shape[0])[:, None]
    return (wts[..., 0, None] * prof[rows, idx[..., 0]] + wts[..., 1, None] * prof[rows, idx[..., 1]])


def radon_second_derivative(inter: Method2Intermediate) -> RadonData3D:
    """``d_s^2 R f`` per direction: minus the Hilbert transform of the merged data."""
    r = inter.radon
    prof = -hilbert_uniform(r.data, axis=-1)
    prof = _fill_invalid(prof, inter.valid, r.beta_nodes)
    return RadonData3D(prof, r.phi, r.beta_nodes, r.s_nodes)


def _sphere_directions(phi, betas):
    pp, bb = np.meshgrid(phi, betas, indexing="ij")
    om = axis_vector(pp, bb).reshape(-1, 3)
    dphi = 2 * np.pi / phi.size
    w = (np.sin(bb) * cell_widths(betas, 0.0, np.pi)[None, :] * dphi).ravel()
    return om, w


def _target_axes(shape, z_range, extent_xy=1.0):
    return (np.linspace(-extent_xy, extent_xy, shape[0]), np.linspace(-extent_xy, extent_xy, shape[1]),
            np.linspace(z_range[0], z_range[1], shape[2]))


def backproject_radon(d2: RadonData3D, shape, z_range=(-1.0, 1.0)) -> Volume3D:
    """``f(x) = -(1/(8 pi^2)) int_{S^2} d_s^2 R f(w, <w, x>) dS(w)`` (sin(beta) dbeta dphi)."""
    om, w = _sphere_directions(d2.phi, d2.beta_nodes)
    prof = d2.data.reshape(-1, d2.s_nodes.size)
    xs, ys, zs = _target_axes(shape, z_range)
    s = d2.s_nodes
    vals = _kernels.backproject_kernel(np.ascontiguousarray(prof), om, w, s[0], s[1] - s[0], xs, ys, zs)
    return Volume3D(-vals / (8 * np.pi**2), z_range[0], z_range[1], 1.0)


def invert_cone_method2(c: ConeData, shape=(64, 64, 64), z_range=(-1.0, 1.0),
                        min_overlap: float = 0.1) -> Volume3D:
    """Radon route: psi-moments, Hilbert inversion, second derivative, backprojection."""
    support_z = max(abs(z_range[0]), abs(z_range[1]))
    inter = cone_moments(c, support_z=support_z, min_overlap=min_overlap)
    log.info("method 2: %d of %d directions have full z coverage", inter.valid.sum(), inter.valid.size)
    return backproject_radon(radon_second_derivative(inter), shape, z_range)


def invert_cone_direct(c: ConeData, shape=(24, 24, 24), z_range=(-1.0, 1.0), allow_large: bool = False,
                       min_overlap: float = 0.1) -> Volume3D:
    """Per-voxel evaluation of the direct singular-integral formula.

    ``d_s^2 R f(w, t) = -(1/pi) PV int d_s^{k+1} M(s) / (t - s) ds`` is evaluated
    directly at ``t = <w, x>`` for every voxel by a z-quadrature with
    singularity subtraction, where ``M`` is the psi-moment of the data. The
    result is backprojected; directions without full coverage borrow the
    values of their beta neighbours as in :func:`invert_cone_method2`.
    Intended for small grids only.
    """
    if not allow_large and int(np.prod(shape)) > 32**3:
        raise ValueError("invert_cone_direct is limited to 32^3 voxels; pass allow_large=True")
    support_z = max(abs(z_range[0]), abs(z_range[1]))
    inter = cone_moments(c, support_z=support_z, s_nodes=np.zeros(8), min_overlap=min_overlap)
    n_phi, n_b = inter.valid.shape
    n_pts = c.z_nodes.size
    s_nodes = np.zeros((n_phi * n_b, 2, n_pts))
    e_vals = np.zeros_like(s_nodes)
    w_vals = np.zeros_like(s_nodes)
    lo = np.zeros((n_phi * n_b, 2))
    hi = np.zeros((n_phi * n_b, 2))
    valid = np.zeros(n_phi * n_b, bool)
    for (ip, ib), (s1, d1, w1, s2, d2, w2) in inter.windows.items():
        d = ip * n_b + ib
        valid[d] = inter.valid[ip, ib]
        for iw, (sw, dw, ww) in enumerate(((s1, d1, w1), (s2, d2, w2))):
            s_nodes[d, iw] = sw
            e_vals[d, iw] = dw * ww
            h = sw[1] - sw[0]
            wq = np.full(sw.size, h)
            wq[[0, -1]] = h / 2
            w_vals[d, iw] = wq
            lo[d, iw], hi[d, iw] = sw[0], sw[-1]
    om, w = _sphere_directions(c.phi, c.beta_nodes)
    idx, wts = _beta_fill_map(inter.valid, c.beta_nodes)
    # flatten (phi, beta) source indices to direction indices
    fill_idx = (np.arange(n_phi)[:, None, None] * n_b + idx).reshape(-1, 2)
    fill_w = wts.reshape(-1, 2)
    xs, ys, zs = _target_axes(shape, z_range)
    vals = _kernels.direct_kernel(s_nodes, e_vals, w_vals, lo, hi, valid, fill_idx, fill_w, om, w, xs, ys, zs)
    return Volume3D(-vals / (8 * np.pi**2), z_range[0], z_range[1], 1.0)


# --------------------------------------------------------------------------
# adjoint and stability norms
# --------------------------------------------------------------------------

def cone_measure(c: ConeData) -> float:
    """Cell volume ``dphi dz dbeta dpsi`` of the pairing on the cone grid (uniform grids)."""
    dphi = 2 * np.pi / c.n_phi
    db = cell_widths(c.beta_nodes, 0.0, np.pi)
    dp = cell_widths(c.psi_nodes, 0.0, np.pi)
    return dphi, c.dz, db, dp


def adjoint_cone(g: ConeData, target: Volume3D, q: ConeQuadratureSpec = ConeQuadratureSpec()) -> Volume3D:
    """Conical backprojection: the transpose of the forward quadrature with respect
    to the pairings ``dphi dz dbeta dpsi`` (data) and ``dV`` (volume).

    ``target`` fixes the output grid; its values are ignored.
    """
    dphi, dz, db, dp = cone_measure(g)
    weighted = g.data * dphi * dz * db[None, None, :, None] * dp[None, None, None, :]
    org, h, lo, hi = _volume_geometry(target, clip_to_support=False)
    zmax = max(abs(target.z_min), abs(target.z_max), float(np.max(np.abs(g.z_nodes))))
    out = _kernels.cone_adjoint_kernel(np.ascontiguousarray(weighted), target.shape, org, h, lo, hi,
                                       g.phi, g.z_nodes, g.beta_nodes, g.psi_nodes, int(g.k_weight),
                                       int(q.n_eta), float(q.step_r), q.length(zmax))
    return Volume3D(out / target.voxel_volume, target.z_min, target.z_max, target.extent_xy)


def pair_cone(a: ConeData, b: ConeData) -> float:
    dphi, dz, db, dp = cone_measure(a)
    return float(np.sum(a.data * b.data * db[None, None, :, None] * dp[None, None, None, :]) * dphi * dz)


def pair_volume(a: Volume3D, b: Volume3D) -> float:
    return float(np.sum(a.values * b.values) * a.voxel_volume)


def sobolev_minus_1(f: Volume3D, pad: int = 2) -> float:
    """``||f||_{-1} = ( (2 pi)^{-3} int |F f(xi)|^2 / (1 + |xi|^2) dxi )^{1/2}``.

    ``F f`` is approximated by a zero-padded FFT scaled by the voxel volume.
    """
    v = f.values
    shape = tuple(pad * n for n in v.shape)
    h = (2 * f.extent_xy / (v.shape[0] - 1), 2 * f.extent_xy / (v.shape[1] - 1),
         (f.z_max - f.z_min) / (v.shape[2] - 1))
    F = np.fft.fftn(v, shape, axes=(0, 1, 2)) * np.prod(h)
    xi = np.meshgrid(*[2 * np.pi * np.fft.fftfreq(n, d) for n, d in zip(shape, h)], indexing="ij")
    w = 1.0 / (1.0 + xi[0] ** 2 + xi[1] ** 2 + xi[2] ** 2)
    dxi = np.prod([2 * np.pi / (n * d) for n, d in zip(shape, h)])
    return float(np.sqrt(np.sum(np.abs(F) ** 2 * w) * dxi / (2 * np.pi) ** 3))


def stability_norms(f: Volume3D, c: ConeData) -> dict:
    """Discrete surrogates of the norms in the stability estimate.

    ``cone_norm`` is ``( int |C_k f / cos^{2-k} psi|^2 |cos beta| sin beta )^{1/2}``
    over ``(phi, z, beta, psi)`` and ``cone_norm_1`` adds the same quadrature of
    ``d_z C_k f``.
    """
    if c.data.shape[1] < 3:
        raise ValueError("need at least three z samples")
    dphi, dz, db, dp = cone_measure(c)
    k = c.k_weight
    cb = np.abs(np.cos(c.beta_nodes)) * np.sin(c.beta_nodes) * db
    wpsi = dp / np.abs(np.cos(c.psi_nodes)) ** (2 * (2 - k))
    W = cb[None, None, :, None] * wpsi[None, None, None, :] * dphi * dz
    cone2 = float(np.sum(c.data**2 * W))
    dC = dz_derivative(c.data, c.dz, 1, axis=1)
    cone2_1 = cone2 + float(np.sum(dC**2 * W))
    return {
        "sobolev_minus_1": sobolev_minus_1(f),
        "cone_norm": math.sqrt(cone2),
        "cone_norm_1": math.sqrt(cone2_1),
        "l2": math.sqrt(pair_volume(f, f)),
    }
