"""Sampled-data containers and polar/Cartesian resampling.

Conventions used throughout the package:

* 2D images are indexed ``values[ix, iy]`` with nodes
  ``x = linspace(-extent, extent, n_x)`` (``indexing='ij'``).
* Volumes are indexed ``values[ix, iy, iz]``; the z nodes run from ``z_min``
  to ``z_max`` inclusive.
* Angular Fourier coefficients carry the ``1/(2 pi)`` normalisation, i.e. a
  DFT over ``n`` uniform angles is divided by ``n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Image2D:
    values: np.ndarray
    extent: float = 1.0

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 2:
            raise ValueError("Image2D values must be 2D")
        if min(v.shape) < 3:
            raise ValueError(f"Image2D needs at least 3 samples per axis, got {v.shape}")
        if self.extent <= 0:
            raise ValueError("extent must be positive")
        object.__setattr__(self, "values", v)

    @property
    def n_x(self) -> int:
        return self.values.shape[0]

    @property
    def n_y(self) -> int:
        return self.values.shape[1]

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.extent, self.extent, self.n_x)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(-self.extent, self.extent, self.n_y)

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")


@dataclass(frozen=True)
class Volume3D:
    values: np.ndarray
    z_min: float = -1.0
    z_max: float = 1.0
    extent_xy: float = 1.0

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 3:
            raise ValueError("Volume3D values must be 3D")
        if min(v.shape) < 2:
            raise ValueError("Volume3D needs at least 2 samples per axis")
        if not self.z_min < self.z_max:
            raise ValueError("z_min must be smaller than z_max")
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.extent_xy, self.extent_xy, self.shape[0])

    @property
    def y(self) -> np.ndarray:
        return np.linspace(-self.extent_xy, self.extent_xy, self.shape[1])

    @property
    def z(self) -> np.ndarray:
        return np.linspace(self.z_min, self.z_max, self.shape[2])

    @property
    def voxel_volume(self) -> float:
        dx = 2 * self.extent_xy / (self.shape[0] - 1)
        dy = 2 * self.extent_xy / (self.shape[1] - 1)
        dz = (self.z_max - self.z_min) / (self.shape[2] - 1)
        return dx * dy * dz

    def mesh(self):
        return np.meshgrid(self.x, self.y, self.z, indexing="ij")


@dataclass(frozen=True)
class PolarCoefficients:
    """Angular Fourier coefficients ``F_n(r_i)`` on the radii ``r_i = i/m``.

    ``coeffs`` has shape ``(2*n_max, m+1)``; row ``n + n_max`` holds order
    ``n`` for ``n = -n_max, ..., n_max-1``.
    """

    coeffs: np.ndarray
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        c = _frozen(self.coeffs, complex)
        if c.ndim != 2 or c.shape[0] % 2 or c.shape[1] < 2:
            raise ValueError(f"bad PolarCoefficients shape {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def n_max(self) -> int:
        return self.coeffs.shape[0] // 2

    @property
    def m(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max)

    @property
    def radii(self) -> np.ndarray:
        return np.arange(self.m + 1) / self.m

    def order(self, n: int) -> np.ndarray:
        return self.coeffs[n + self.n_max]


@dataclass(frozen=True)
class VlineSinogram:
    """Samples of a V-line (or one-sided X-ray) transform at
    ``phi_k = 2 pi k / n_phi`` and the half-opening angles ``psi_nodes``."""

    data: np.ndarray
    psi_nodes: np.ndarray

    def __post_init__(self):
        d = _frozen(self.data)
        psi = _frozen(self.psi_nodes)
        if d.ndim != 2 or d.shape[1] != psi.size:
            raise ValueError("data must have shape (n_phi, len(psi_nodes))")
        if np.any(np.diff(psi) <= 0):
            raise ValueError("psi_nodes must be strictly increasing")
        if psi[0] <= 0 or psi[-1] >= np.pi / 2:
            raise ValueError("psi_nodes must lie in the open interval (0, pi/2)")
        if not np.all(np.isfinite(d)):
            raise ValueError("sinogram contains non-finite values")
        object.__setattr__(self, "data", d)
        object.__setattr__(self, "psi_nodes", psi)

    @property
    def n_phi(self) -> int:
        return self.data.shape[0]

    @property
    def phi(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_phi) / self.n_phi


@dataclass(frozen=True)
class ConeData:
    """Samples of the weighted conical transform, indexed ``(phi, z, beta, psi)``."""

    data: np.ndarray
    k_weight: int
    z_nodes: np.ndarray
    beta_nodes: np.ndarray
    psi_nodes: np.ndarray

    def __post_init__(self):
        d = _frozen(self.data)
        z = _frozen(self.z_nodes)
        b = _frozen(self.beta_nodes)
        p = _frozen(self.psi_nodes)
        if self.k_weight < 0:
            raise ValueError("k_weight must be non-negative")
        if d.ndim != 4 or d.shape[1:] != (z.size, b.size, p.size):
            raise ValueError(f"data shape {d.shape} does not match grids")
        for name, g in (("beta", b), ("psi", p)):
            if g.size and (g.min() <= 0 or g.max() >= np.pi):
                raise ValueError(f"{name} grid must lie in the open interval (0, pi)")
        if z.size > 2 and not np.allclose(np.diff(z), z[1] - z[0], rtol=1e-9, atol=1e-12):
            raise ValueError("z_nodes must be uniform")
        for name, a in (("data", d), ("z", z), ("beta", b), ("psi", p)):
            object.__setattr__(self, name if name == "data" else f"{name}_nodes", a)

    @property
    def n_phi(self) -> int:
        return self.data.shape[0]

    @property
    def phi(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_phi) / self.n_phi

    @property
    def dz(self) -> float:
        return float(self.z_nodes[1] - self.z_nodes[0]) if self.z_nodes.size > 1 else 1.0

    def with_data(self, data) -> "ConeData":
        return ConeData(data, self.k_weight, self.z_nodes, self.beta_nodes, self.psi_nodes)


@dataclass(frozen=True)
class RadonData3D:
    """3D Radon samples on the ``(phi, beta)`` direction grid ``a(phi, beta)``."""

    data: np.ndarray
    phi: np.ndarray
    beta_nodes: np.ndarray
    s_nodes: np.ndarray

    def __post_init__(self):
        d = _frozen(self.data)
        s = _frozen(self.s_nodes)
        if d.shape != (len(self.phi), len(self.beta_nodes), s.size):
            raise ValueError("RadonData3D data shape does not match grids")
        if s.size > 2 and not np.allclose(np.diff(s), s[1] - s[0]):
            raise ValueError("s_nodes must be uniform")
        object.__setattr__(self, "data", d)
        object.__setattr__(self, "s_nodes", s)
        object.__setattr__(self, "phi", _frozen(self.phi))
        object.__setattr__(self, "beta_nodes", _frozen(self.beta_nodes))


def open_grid(n: int, upper: float = np.pi) -> np.ndarray:
    """Midpoint grid ``(j + 1/2) * upper / n`` on the open interval ``(0, upper)``."""
    return (np.arange(n) + 0.5) * upper / n


def vline_psi_grid(n_psi: int) -> np.ndarray:
    """Half-opening angles with ``sin(psi_j) = j / (n_psi + 1)``, ``j = 1..n_psi``.

    Together with the implicit end points ``s = 0`` and ``s = 1`` this is the
    uniform radial grid ``r_i = i/M`` with ``M = n_psi + 1``.
    """
    if n_psi < 2:
        raise ValueError("need at least two opening angles")
    return np.arcsin(np.arange(1, n_psi + 1) / (n_psi + 1))


def bilinear_sample(img: Image2D, x, y) -> np.ndarray:
    """Bilinear interpolation of ``img``; exactly zero outside the grid."""
    v = img.values
    h_x = 2 * img.extent / (img.n_x - 1)
    h_y = 2 * img.extent / (img.n_y - 1)
    fx = (np.asarray(x, float) + img.extent) / h_x
    fy = (np.asarray(y, float) + img.extent) / h_y
    inside = (fx >= 0) & (fx <= img.n_x - 1) & (fy >= 0) & (fy <= img.n_y - 1)
    fx = np.clip(fx, 0, img.n_x - 1)
    fy = np.clip(fy, 0, img.n_y - 1)
    i0 = np.minimum(np.floor(fx).astype(int), img.n_x - 2)
    j0 = np.minimum(np.floor(fy).astype(int), img.n_y - 2)
    tx = fx - i0
    ty = fy - j0
    out = ((1 - tx) * (1 - ty) * v[i0, j0] + tx * (1 - ty) * v[i0 + 1, j0]
           + (1 - tx) * ty * v[i0, j0 + 1] + tx * ty * v[i0 + 1, j0 + 1])
    return np.where(inside, out, 0.0)


def cartesian_to_polar(img: Image2D, n_max: int, m: int, oversample: int = 2) -> PolarCoefficients:
    """Angular Fourier coefficients of ``img`` on the radii ``i/m``.

    The image is sampled bilinearly on ``2*oversample*n_max`` uniform angles
    per radius and analysed with an FFT divided by the number of angles.
    The outermost radius ``r_m = 1`` is zero by construction.
    """
    if n_max < 1 or m < 1:
        raise ValueError("n_max and m must be at least 1")
    n_ang = 2 * n_max * max(1, int(oversample))
    phi = 2 * np.pi * np.arange(n_ang) / n_ang
    r = np.arange(m + 1) / m
    rr, pp = np.meshgrid(r, phi, indexing="ij")
    samples = bilinear_sample(img, rr * np.cos(pp), rr * np.sin(pp))
    samples[m] = 0.0
    spectrum = np.fft.fft(samples, axis=1) / n_ang
    orders = np.arange(-n_max, n_max)
    return PolarCoefficients(spectrum[:, orders % n_ang].T)


def polar_to_cartesian(p: PolarCoefficients, n_x: int, extent: float = 1.0,
                       oversample: int = 4) -> Image2D:
    """Synthesize the Fourier series on a polar grid and resample to Cartesian.

    The angular series is evaluated with an inverse FFT on
    ``oversample * 2 * n_max`` angles; values are then interpolated linearly
    in radius and angle. Nodes with ``|x| > 1`` are set to zero.
    """
    if n_x < 3:
        raise ValueError("n_x must be at least 3")
    n_max, m = p.n_max, p.m
    n_ang = 2 * n_max * max(1, int(oversample))
    spectrum = np.zeros((n_ang, m + 1), complex)
    spectrum[p.orders % n_ang] = p.coeffs
    polar = (np.fft.ifft(spectrum, axis=0) * n_ang).real  # (n_ang, m+1)

    xs = np.linspace(-extent, extent, n_x)
    xx, yy = np.meshgrid(xs, xs, indexing="ij")
    r = np.hypot(xx, yy)
    ang = np.mod(np.arctan2(yy, xx), 2 * np.pi)
    fr = np.clip(r * m, 0, m)
    i0 = np.minimum(np.floor(fr).astype(int), m - 1)
    tr = fr - i0
    fa = ang / (2 * np.pi) * n_ang
    k0 = np.floor(fa).astype(int) % n_ang
    k1 = (k0 + 1) % n_ang
    ta = fa - np.floor(fa)
    out = ((1 - tr) * ((1 - ta) * polar[k0, i0] + ta * polar[k1, i0])
           + tr * ((1 - ta) * polar[k0, i0 + 1] + ta * polar[k1, i0 + 1]))
    out[r > 1.0] = 0.0
    return Image2D(out, extent)
