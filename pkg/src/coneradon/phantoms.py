"""Deterministic test phantoms and the additive noise model."""
from __future__ import annotations

import dataclasses
from enum import Enum

import numpy as np

from .grids import ConeData, Image2D, RadonData3D, Volume3D, VlineSinogram


class BallKind(str, Enum):
    INDICATOR = "indicator"
    GAUSSIAN = "gaussian"


def phantom_smiley(n: int = 201) -> Image2D:
    """Smiley face on an ``n x n`` grid over ``[-1, 1]^2``.

    Face: disc of radius 0.75 with value 1. Eyes: discs of radius 0.12 at
    ``(+-0.3, 0.3)`` with value 0. Mouth: the arc ``0.35 <= r <= 0.45`` with
    polar angle between 200 and 340 degrees, value 0.
    """
    if n < 51:
        raise ValueError("phantom_smiley needs n >= 51")
    x = np.linspace(-1.0, 1.0, n)
    x = 0.5 * (x - x[::-1])  # exactly antisymmetric, so the mirror symmetry survives rounding
    xx, yy = np.meshgrid(x, x, indexing="ij")
    r = np.hypot(xx, yy)
    f = (r <= 0.75).astype(float)
    for ex in (-0.3, 0.3):
        f[np.hypot(xx - ex, yy - 0.3) <= 0.12] = 0.0
    ang = np.degrees(np.mod(np.arctan2(yy, xx), 2 * np.pi))
    f[(r >= 0.35) & (r <= 0.45) & (ang >= 200) & (ang <= 340)] = 0.0
    return Image2D(f, 1.0)


def phantom_disc(n: int, radius: float, center=(0.0, 0.0), value: float = 1.0,
                 supersample: int = 1) -> Image2D:
    """Disc indicator; ``supersample > 1`` averages over sub-pixel points so
    that edge pixels carry their covered area fraction."""
    if center[0] ** 2 + center[1] ** 2 > 0 and np.hypot(*center) + radius >= 1:
        raise ValueError("disc must lie inside the unit disc")
    if radius >= 1:
        raise ValueError("disc must lie inside the unit disc")
    x = np.linspace(-1.0, 1.0, n)
    h = x[1] - x[0]
    s = max(1, int(supersample))
    offs = ((np.arange(s) + 0.5) / s - 0.5) * h if s > 1 else np.zeros(1)
    acc = np.zeros((n, n))
    for ox in offs:
        for oy in offs:
            xx, yy = np.meshgrid(x + ox, x + oy, indexing="ij")
            acc += np.hypot(xx - center[0], yy - center[1]) <= radius
    return Image2D(value * acc / s**2, 1.0)


def phantom_gaussian2d(n: int, sigma: float, center=(0.0, 0.0)) -> Image2D:
    """Gaussian bump ``exp(-|x-c|^2 / (2 sigma^2))`` cut off at the unit circle."""
    x = np.linspace(-1.0, 1.0, n)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    f = np.exp(-((xx - center[0]) ** 2 + (yy - center[1]) ** 2) / (2 * sigma**2))
    f[np.hypot(xx, yy) >= 1.0] = 0.0
    return Image2D(f, 1.0)


def _volume_axes(shape, z_range, extent_xy):
    nx, ny, nz = shape
    return (np.linspace(-extent_xy, extent_xy, nx), np.linspace(-extent_xy, extent_xy, ny),
            np.linspace(z_range[0], z_range[1], nz))


def phantom_ball3d(shape=(64, 64, 64), center=(0.0, 0.0, 0.0), radius: float = 0.5,
                   kind: BallKind | str = BallKind.INDICATOR, z_range=(-1.0, 1.0),
                   extent_xy: float = 1.0, supersample: int = 1) -> Volume3D:
    """Ball phantom on a Cartesian grid.

    ``kind="indicator"`` samples the ball indicator (averaged over
    ``supersample**3`` sub-voxel points). ``kind="gaussian"`` samples
    ``exp(-|x-c|^2/(2 sigma^2))`` with ``sigma = radius/2``; it is set to zero
    outside the unit cylinder to keep the support inside.
    """
    kind = BallKind(kind)
    c = np.asarray(center, float)
    if radius < 0:
        raise ValueError("radius must be non-negative")
    if np.hypot(c[0], c[1]) + radius >= extent_xy:
        raise ValueError("ball must lie inside the cylinder")
    x, y, z = _volume_axes(shape, z_range, extent_xy)
    if radius == 0:
        return Volume3D(np.zeros(shape), z_range[0], z_range[1], extent_xy)
    if kind is BallKind.GAUSSIAN:
        xx, yy, zz = np.meshgrid(x, y, z, indexing="ij")
        sigma = radius / 2
        f = np.exp(-((xx - c[0]) ** 2 + (yy - c[1]) ** 2 + (zz - c[2]) ** 2) / (2 * sigma**2))
        f[np.hypot(xx, yy) >= 1.0] = 0.0
        return Volume3D(f, z_range[0], z_range[1], extent_xy)
    s = max(1, int(supersample))
    h = np.array([x[1] - x[0], y[1] - y[0], z[1] - z[0]])
    offs = ((np.arange(s) + 0.5) / s - 0.5) if s > 1 else np.zeros(1)
    acc = np.zeros(shape)
    for ox in offs:
        dx2 = (x + ox * h[0] - c[0])[:, None, None] ** 2
        for oy in offs:
            dy2 = (y + oy * h[1] - c[1])[None, :, None] ** 2
            for oz in offs:
                dz2 = (z + oz * h[2] - c[2])[None, None, :] ** 2
                acc += (dx2 + dy2 + dz2) <= radius**2
    return Volume3D(acc / s**3, z_range[0], z_range[1], extent_xy)


def random_smooth_phantom3d(seed: int, shape=(24, 24, 24), n_blobs: int = 4,
                            z_range=(-1.0, 1.0)) -> Volume3D:
    """Sum of a few random Gaussian blobs (positive weights) inside radius 0.6."""
    rng = np.random.default_rng(seed)
    x, y, z = _volume_axes(shape, z_range, 1.0)
    xx, yy, zz = np.meshgrid(x, y, z, indexing="ij")
    f = np.zeros(shape)
    zc = 0.5 * (z_range[0] + z_range[1])
    zh = 0.5 * (z_range[1] - z_range[0])
    for _ in range(n_blobs):
        rad = 0.4 * np.sqrt(rng.uniform())
        ang = rng.uniform(0, 2 * np.pi)
        c = (rad * np.cos(ang), rad * np.sin(ang), zc + rng.uniform(-0.4, 0.4) * zh)
        sigma = rng.uniform(0.08, 0.18)
        w = rng.uniform(0.5, 1.5)
        f += w * np.exp(-((xx - c[0]) ** 2 + (yy - c[1]) ** 2 + (zz - c[2]) ** 2) / (2 * sigma**2))
    f[np.hypot(xx, yy) >= 1.0] = 0.0
    return Volume3D(f, z_range[0], z_range[1], 1.0)


_DATA_FIELD = {Image2D: "values", Volume3D: "values", VlineSinogram: "data",
               ConeData: "data", RadonData3D: "data"}


def add_noise(data, level: float, seed: int):
    """Add i.i.d. Gaussian noise with standard deviation ``level * max|data|``.

    Accepts any container of this package or a bare array and returns the
    same type. The generator is ``numpy.random.default_rng(seed)``.
    """
    if level < 0:
        raise ValueError("noise level must be non-negative")
    field = _DATA_FIELD.get(type(data))
    arr = np.asarray(getattr(data, field) if field else data, float)
    if level == 0:
        noisy = arr.copy()
    else:
        rng = np.random.default_rng(seed)
        noisy = arr + rng.normal(0.0, level * np.max(np.abs(arr)), arr.shape)
    return dataclasses.replace(data, **{field: noisy}) if field else noisy
