"""Inversion of the V-line transform and the one-sided X-ray transform on the circle.

The data are expanded in angular Fourier series. Each coefficient is divided
by the factor linking it to the Radon coefficient ``(RF)_n(s)`` with
``s = sin(psi)``, and the Radon coefficients are inverted radially with
Perry's stable formula, discretized cell by cell on ``r_i = i/M``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .grids import Image2D, PolarCoefficients, VlineSinogram, polar_to_cartesian
from .special import cheb_T

# The V-line coefficients divided by cos(n(psi - pi/2)) equal twice the Radon
# coefficients; the disc oracle in the tests pins this factor.
C_NORM_VLINE = 0.5
C_NORM_XRAY = 1.0


class Variant(str, Enum):
    PERRY_STABLE = "PerryStable"
    CORMACK_EXTERIOR = "CormackExterior"


@dataclass(frozen=True)
class VlineInversionConfig:
    epsilon: float = 0.005
    n_max: int | None = None
    m: int | None = None
    variant: Variant = Variant.PERRY_STABLE

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.n_max is not None and self.n_max < 1:
            raise ValueError("n_max must be positive")
        if self.m is not None and self.m < 2:
            raise ValueError("m must be at least 2")
        object.__setattr__(self, "variant", Variant(self.variant))


def _resolve(s: VlineSinogram, config: VlineInversionConfig):
    n_max = config.n_max if config.n_max is not None else s.n_phi // 2
    m = config.m if config.m is not None else s.psi_nodes.size + 1
    return n_max, m


def sinogram_coeffs(s: VlineSinogram, n_max: int) -> np.ndarray:
    """Angular Fourier coefficients ``G[n + n_max, j]`` of the data (FFT divided by ``n_phi``)."""
    if s.n_phi < 2 * n_max:
        raise ValueError(f"n_phi={s.n_phi} cannot resolve n_max={n_max}; need n_phi >= 2 n_max")
    spectrum = np.fft.fft(s.data, axis=0) / s.n_phi
    orders = np.arange(-n_max, n_max)
    return spectrum[orders % s.n_phi]


def _angle_factor(n_max: int, s_nodes) -> np.ndarray:
    n = np.arange(-n_max, n_max)[:, None]
    return n * (np.arcsin(np.asarray(s_nodes))[None, :] - np.pi / 2)


def regularized_radon_coeffs(G, config: VlineInversionConfig, s_nodes) -> np.ndarray:
    """Tikhonov-damped division ``H = c G / (eps^2 + c^2)`` with ``c = cos(n(arcsin s - pi/2))``."""
    G = np.asarray(G)
    c = np.cos(_angle_factor(G.shape[0] // 2, s_nodes))
    return c * G / (config.epsilon**2 + c**2)


def xray_radon_coeffs(G, s_nodes) -> np.ndarray:
    """Exact division ``H = G / exp(-i n (arcsin s - pi/2))`` for one-sided X-ray data."""
    G = np.asarray(G)
    return G * np.exp(1j * _angle_factor(G.shape[0] // 2, s_nodes))


def perry_weights(n: int, i: int, j, radii) -> np.ndarray:
    """Cell integrals of Perry's kernel for the output radius ``r_i`` and cell ``[r_j, r_j+1]``.

    For ``j < i`` (cells inside ``r_i``) this is ``int U_{|n|-1}(s/r_i) ds/r_i``,
    i.e. ``(T_|n|(r_{j+1}/r_i) - T_|n|(r_j/r_i)) / |n|`` and zero for ``n = 0``.
    For ``j >= i`` it is ``int [x + sqrt(x^2-1)]^{-|n|} / sqrt(x^2-1) dx`` with
    ``x = s/r_i``, which evaluates to differences of ``-exp(-|n| arccosh x)/|n|``
    (``arccosh x`` for ``n = 0``).
    """
    radii = np.asarray(radii, float)
    j = np.asarray(j)
    ri = radii[i]
    x0 = radii[j] / ri
    x1 = radii[j + 1] / ri
    an = abs(n)
    inner = j < i
    if an == 0:
        w_in = np.zeros(np.shape(j))
    else:
        w_in = (cheb_T(an, np.minimum(x1, 1.0)) - cheb_T(an, np.minimum(x0, 1.0))) / an
    u0 = np.arccosh(np.maximum(x0, 1.0))
    u1 = np.arccosh(np.maximum(x1, 1.0))
    if an == 0:
        w_out = u1 - u0
    else:
        w_out = -(np.exp(-an * u1) - np.exp(-an * u0)) / an
    out = np.where(inner, w_in, w_out)
    return out[()] if out.ndim == 0 else out


class _WeightFactory:
    """Builds the signed radial weight matrices ``W`` with
    ``F(r_i) = (1/pi) sum_j W[i, j] g'_j`` (``i = 1..m-1``) for any ``|n|``.

    The angles ``arccos(x)`` and ``arccosh(x)`` of the cell end points
    ``x = r_j/r_i`` do not depend on ``n`` and are computed once.
    """

    def __init__(self, m: int, exterior: bool = False):
        i = np.arange(1, m)[:, None]
        j = np.arange(m)[None, :]
        x0 = j / i
        x1 = (j + 1) / i
        self.outer = j >= i
        self.exterior = exterior
        self.t0 = np.arccos(np.minimum(x0, 1.0))
        self.t1 = np.arccos(np.minimum(x1, 1.0))
        self.u0 = np.arccosh(np.maximum(x0, 1.0))
        self.u1 = np.arccosh(np.maximum(x1, 1.0))

    def __call__(self, an: int) -> np.ndarray:
        if self.exterior:
            if an == 0:
                w = self.u1 - self.u0
            else:
                w = (np.sinh(an * self.u1) - np.sinh(an * self.u0)) / an
            return np.where(self.outer, -w, 0.0)
        if an == 0:
            return np.where(self.outer, -(self.u1 - self.u0), 0.0)
        # T_n(x) = cos(n arccos x) on the inner cells, where x <= 1
        w_in = (np.cos(an * self.t1) - np.cos(an * self.t0)) / an
        w_out = -(np.exp(-an * self.u1) - np.exp(-an * self.u0)) / an
        return np.where(self.outer, -w_out, w_in)


def _pad_s(H: np.ndarray, m: int) -> np.ndarray:
    """Extend ``H`` given on ``s_j = j/m`` (``j = 1..m-1``) to ``j = 0..m``.

    At ``s = 0`` even orders are extrapolated quadratically (the Radon
    coefficient is even in s) and odd orders vanish; at ``s = 1`` the data are
    zero because the support lies inside the unit disc.
    """
    n_max = H.shape[0] // 2
    odd = (np.arange(-n_max, n_max) % 2) == 1
    out = np.zeros((H.shape[0], m + 1), complex)
    out[:, 1:m] = H
    out[:, 0] = np.where(odd, 0.0, (4 * H[:, 0] - H[:, 1]) / 3)
    return out


def _radial(H, m, scale, exterior=False):
    n_max = H.shape[0] // 2
    Hp = _pad_s(H, m)
    gprime = scale * m * np.diff(Hp, axis=1)  # derivative on each cell [r_j, r_j+1]
    F = np.zeros((2 * n_max, m + 1), complex)
    weights = _WeightFactory(m, exterior)
    for an in range(n_max + 1):
        # orders +an and -an share the weights; -n_max has no positive partner
        rows = [n_max + an, n_max - an] if 0 < an < n_max else [n_max - an if an else n_max]
        g = gprime[rows]
        rhs = np.concatenate([g.real, g.imag]).T
        sol = weights(an) @ rhs / np.pi
        k = len(rows)
        F[rows, 1:m] = (sol[:, :k] + 1j * sol[:, k:]).T
    F[n_max, 0] = (4 * F[n_max, 1] - F[n_max, 2]) / 3
    return F


def radial_solve(H, config: VlineInversionConfig | None = None, m: int | None = None,
                 scale: float = C_NORM_VLINE) -> PolarCoefficients:
    """Recover ``F_n(r_i)`` from ``H[n, j]`` sampled at ``s_j = j/m``, ``j = 1..m-1``.

    With ``g'_j = scale * m * (H[j+1] - H[j])`` on each cell,
    ``F_n(r_i) = (1/pi) [sum_{j<i} w1 g'_j - sum_{j>=i} w2 g'_j]`` where
    ``w1``/``w2`` are the cell weights of :func:`perry_weights`.
    ``scale`` converts ``H`` into Radon coefficients.
    """
    H = np.asarray(H, complex)
    if m is None:
        m = config.m if config is not None and config.m is not None else H.shape[1] + 1
    if H.shape[1] != m - 1:
        raise ValueError("H must hold the samples s_j = j/m for j = 1..m-1")
    return PolarCoefficients(_radial(H, m, scale))


def _uniform_s_coeffs(s: VlineSinogram, n_max: int, m: int):
    """Coefficients on ``s_j = j/m``; interpolated linearly in ``s`` if the
    sinogram is not already sampled there."""
    G = sinogram_coeffs(s, n_max)
    s_data = np.sin(s.psi_nodes)
    s_grid = np.arange(1, m) / m
    if s_data.size == s_grid.size and np.allclose(s_data, s_grid, atol=1e-12):
        return G, s_grid
    Gi = np.empty((G.shape[0], s_grid.size), complex)
    for r in range(G.shape[0]):
        Gi[r] = (np.interp(s_grid, s_data, G[r].real, left=0, right=0)
                 + 1j * np.interp(s_grid, s_data, G[r].imag, left=0, right=0))
    return Gi, s_grid


def invert_vline_coeffs(s: VlineSinogram, config: VlineInversionConfig = VlineInversionConfig()) -> PolarCoefficients:
    n_max, m = _resolve(s, config)
    G, s_grid = _uniform_s_coeffs(s, n_max, m)
    H = regularized_radon_coeffs(G, config, s_grid)
    return radial_solve(H, m=m, scale=C_NORM_VLINE)


def invert_vline(s: VlineSinogram, config: VlineInversionConfig = VlineInversionConfig(),
                 n_x: int = 201) -> Image2D:
    """Reconstruct ``F`` on an ``n_x x n_x`` grid from its V-line data."""
    return polar_to_cartesian(invert_vline_coeffs(s, config), n_x)


def invert_vline_exterior(s: VlineSinogram, config: VlineInversionConfig) -> PolarCoefficients:
    """Cormack-type exterior formula: uses only V-lines outside the radius ``r``.

    Severely ill-posed; provided for diagnostics only. The cell weights are
    ``int T_|n|(s/r)/sqrt(s^2-r^2) ds = [sinh(|n| arccosh(s/r))/|n|]``.
    """
    n_max, m = _resolve(s, config)
    G, s_grid = _uniform_s_coeffs(s, n_max, m)
    H = regularized_radon_coeffs(G, config, s_grid)
    F = _radial(H, m, C_NORM_VLINE, exterior=True)
    diag = {"variant": Variant.CORMACK_EXTERIOR.value, "ill_posed": True,
            "warning": "exterior inversion amplifies data errors exponentially in |n|; "
                       "use for diagnostics only"}
    return PolarCoefficients(F, diag)


def invert_xray_coeffs(s: VlineSinogram, config: VlineInversionConfig = VlineInversionConfig()) -> PolarCoefficients:
    n_max, m = _resolve(s, config)
    G, s_grid = _uniform_s_coeffs(s, n_max, m)
    H = xray_radon_coeffs(G, s_grid)
    return radial_solve(H, m=m, scale=C_NORM_XRAY)


def invert_xray(s: VlineSinogram, config: VlineInversionConfig = VlineInversionConfig(),
                n_x: int = 201) -> Image2D:
    """Reconstruct ``F`` from one-sided X-ray data; no regularization is applied."""
    return polar_to_cartesian(invert_xray_coeffs(s, config), n_x)
