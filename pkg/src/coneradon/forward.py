"""Discrete forward models: 2D X-ray, V-line and Radon transforms, the weighted
conical Radon transform on the cylinder and the 3D Radon transform."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .grids import ConeData, Image2D, Volume3D, VlineSinogram


@dataclass(frozen=True)
class RayQuadratureSpec:
    step: float = 1e-3
    r_max: float | None = None

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.r_max is not None and self.step > 1e-2 * self.r_max:
            raise ValueError("step must not exceed r_max / 100")

    def length(self, z_abs_max: float = 0.0) -> float:
        return self.r_max if self.r_max is not None else 2.0 * (1.0 + z_abs_max)


@dataclass(frozen=True)
class ConeQuadratureSpec:
    n_eta: int = 256
    step_r: float = 1e-3
    r_max: float | None = None

    def __post_init__(self):
        if self.n_eta < 16:
            raise ValueError("n_eta must be at least 16")
        if self.step_r <= 0:
            raise ValueError("step_r must be positive")

    def length(self, z_abs_max: float) -> float:
        return self.r_max if self.r_max is not None else 2.0 * (1.0 + z_abs_max)


def axis_vector(phi, beta) -> np.ndarray:
    """Cone axis ``a(phi, beta) = (-cos(phi) sin(beta), -sin(phi) sin(beta), cos(beta))``."""
    phi = np.asarray(phi, float)
    beta = np.asarray(beta, float)
    sb = np.sin(beta)
    return np.stack([-np.cos(phi) * sb, -np.sin(phi) * sb, np.cos(beta)], axis=-1)


def _check_unit(d, tol=1e-6):
    d = np.asarray(d, float)
    if abs(np.linalg.norm(d) - 1.0) > tol:
        raise ValueError("direction must be a unit vector")
    return d


def xray_2d(img: Image2D, vertex, direction, q: RayQuadratureSpec = RayQuadratureSpec()) -> float:
    """One-sided ray integral ``int_0^r_max F(vertex + r direction) dr``."""
    d = _check_unit(direction)
    v = np.asarray(vertex, float)
    return float(_kernels.ray_sum_2d(img.values, img.extent, v[0], v[1], d[0], d[1],
                                     0.0, q.length(), q.step))


def _vline(img, n_phi, psi_nodes, q, sides):
    psi = np.asarray(psi_nodes, float)
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    data = _kernels.vline_kernel(np.ascontiguousarray(img.values), float(img.extent), phis, psi,
                                 q.step, q.length(), np.asarray(sides, float))
    return VlineSinogram(data, psi)


def vline_forward(img: Image2D, n_phi: int, psi_nodes,
                  q: RayQuadratureSpec = RayQuadratureSpec()) -> VlineSinogram:
    """V-line transform: for vertex ``theta(phi_k)`` and half-opening ``psi_j`` the
    sum of the two rays with directions ``-theta(phi_k -+ psi_j)``."""
    return _vline(img, n_phi, psi_nodes, q, (1.0, -1.0))


def xray_forward(img: Image2D, n_phi: int, psi_nodes,
                 q: RayQuadratureSpec = RayQuadratureSpec()) -> VlineSinogram:
    """One-sided X-ray data ``XF(phi, psi)``: ray from ``theta(phi)`` with direction
    ``-theta(phi - psi)``, in the same ``(phi, psi)`` layout as the V-line data."""
    return _vline(img, n_phi, psi_nodes, q, (1.0,))


def radon_2d(img: Image2D, alpha: float, s: float, q: RayQuadratureSpec = RayQuadratureSpec()) -> float:
    """Line integral over ``{x : <x, (cos a, sin a)> = s}``; zero for ``|s| >= 1``."""
    if abs(s) >= 1.0:
        return 0.0
    c, sn = np.cos(alpha), np.sin(alpha)
    half = q.length() / 2
    return float(_kernels.ray_sum_2d(img.values, img.extent, s * c, s * sn, -sn, c,
                                     -half, half, q.step))


def _volume_geometry(vol: Volume3D, clip_to_support: bool = True):
    shape = vol.shape
    org = np.array([-vol.extent_xy, -vol.extent_xy, vol.z_min])
    h = np.array([2 * vol.extent_xy / (shape[0] - 1), 2 * vol.extent_xy / (shape[1] - 1),
                  (vol.z_max - vol.z_min) / (shape[2] - 1)])
    lo = org.copy()
    hi = org + h * (np.array(shape) - 1)
    if clip_to_support:
        nz = np.nonzero(vol.values)
        if nz[0].size == 0:
            return org, h, lo, lo.copy()
        # the interpolant vanishes beyond one voxel from the nonzero set
        i_lo = np.array([a.min() for a in nz]) - 1
        i_hi = np.array([a.max() for a in nz]) + 1
        lo = np.maximum(lo, org + h * i_lo)
        hi = np.minimum(hi, org + h * i_hi)
    return org, h, lo, hi


def weighted_xray(vol: Volume3D, vertex, u, k: int, q: RayQuadratureSpec = RayQuadratureSpec()) -> float:
    """``X_k f(v, u) = int_0^inf f(v + r u) r^k dr`` for a direction ``u`` of any length.

    The integral is taken in the parameter ``r`` itself (step ``q.step/|u|``), so
    the homogeneity ``X_k(v, lam u) = lam^(-k-1) X_k(v, u)`` is a property of the
    quadrature, not of a rescaling.
    """
    u = np.asarray(u, float)
    nu = np.linalg.norm(u)
    if nu == 0:
        raise ValueError("direction must be non-zero")
    v = np.asarray(vertex, float)
    org, h, lo, hi = _volume_geometry(vol)
    zmax = max(abs(vol.z_min), abs(vol.z_max))
    return float(_kernels.weighted_ray_3d(vol.values, org, h, lo, hi, v[0], v[1], v[2],
                                          u[0], u[1], u[2], int(k), q.step / nu,
                                          q.length(zmax) / nu))


def _check_cone_grids(beta_nodes, psi_nodes):
    b = np.asarray(beta_nodes, float)
    p = np.asarray(psi_nodes, float)
    if p.size == 0 or p.min() <= 0 or p.max() >= np.pi:
        raise ValueError("psi grid must lie in the open interval (0, pi)")
    if b.size == 0 or b.min() <= 0 or b.max() >= np.pi:
        raise ValueError("beta grid must lie in the open interval (0, pi)")
    return b, p


def conical_forward_multi(vol: Volume3D, k_weights, n_phi: int, z_nodes, beta_nodes, psi_nodes,
                          q: ConeQuadratureSpec = ConeQuadratureSpec()) -> list[ConeData]:
    """Weighted conical transform for several weights sharing one pass over the cones."""
    ks = np.asarray(k_weights, dtype=np.int64)
    if np.any(ks < 0):
        raise ValueError("k_weight must be non-negative")
    b, p = _check_cone_grids(beta_nodes, psi_nodes)
    z = np.asarray(z_nodes, float)
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    org, h, lo, hi = _volume_geometry(vol)
    zmax = max(abs(vol.z_min), abs(vol.z_max), float(np.max(np.abs(z))))
    out = _kernels.cone_kernel(np.ascontiguousarray(vol.values), org, h, lo, hi, phis, z, b, p,
                               ks, int(q.n_eta), float(q.step_r), q.length(zmax))
    return [ConeData(out[i], int(k), z, b, p) for i, k in enumerate(ks)]


def conical_forward(vol: Volume3D, k_weight: int, n_phi: int, z_nodes, beta_nodes, psi_nodes,
                    q: ConeQuadratureSpec = ConeQuadratureSpec()) -> ConeData:
    """Weighted conical Radon transform ``C_k f(phi, z, beta, psi)``.

    The cone with vertex ``(theta(phi), z)``, axis ``a(phi, beta)`` and
    half-opening ``psi`` is parametrized by ``r`` along the rays
    ``w(eta) = cos(psi) a + sin(psi) (cos(eta) u1 + sin(eta) u2)``, where
    ``u1 = (-sin phi, cos phi, 0)`` and ``u2 = a x u1``. The surface element is
    ``r sin(psi) dr deta``; with the weight ``r^k`` this gives
    ``sin(psi) sum_eta sum_r f r^k dr deta`` (trapezoid in r, rectangle in eta).
    """
    if k_weight < 0:
        raise ValueError("k_weight must be non-negative")
    return conical_forward_multi(vol, [k_weight], n_phi, z_nodes, beta_nodes, psi_nodes, q)[0]


def _frame(omega):
    """Orthonormal vectors spanning the plane perpendicular to ``omega``."""
    w = np.asarray(omega, float)
    ref = np.array([1.0, 0.0, 0.0]) if abs(w[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(w, ref)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(w, e1)
    return e1, e2


def radon_3d_many(vol: Volume3D, omegas, s_nodes, step: float = 1e-2) -> np.ndarray:
    """Plane integrals for every direction in ``omegas`` (shape ``(n, 3)``) and offset in ``s_nodes``."""
    om = np.atleast_2d(np.asarray(omegas, float))
    if np.any(np.abs(np.linalg.norm(om, axis=1) - 1) > 1e-6):
        raise ValueError("omega must be a unit vector")
    e1 = np.empty_like(om)
    e2 = np.empty_like(om)
    for i, w in enumerate(om):
        e1[i], e2[i] = _frame(w)
    org, h, lo, hi = _volume_geometry(vol)
    half = float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi))))
    return _kernels.plane_kernel(np.ascontiguousarray(vol.values), org, h, lo, hi, om,
                                 e1, e2, np.asarray(s_nodes, float), float(step), half)


def radon_3d(vol: Volume3D, omega, s: float, q: RayQuadratureSpec = RayQuadratureSpec(step=1e-2)) -> float:
    """Plane integral ``int_{<x, omega> = s} f dA`` by a 2D trapezoidal rule."""
    return float(radon_3d_many(vol, [omega], [s], q.step)[0, 0])
