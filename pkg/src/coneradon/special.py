"""Chebyshev polynomials on the whole real line and a discrete Hilbert transform."""
from __future__ import annotations

import numpy as np

_SNAP = 1e-8


def cheb_T(k: int, z):
    """Chebyshev polynomial of the first kind via its closed-form branches.

    ``cos(k arccos z)`` on ``|z| <= 1``, ``cosh(k arccosh z)`` for ``z > 1`` and
    ``(-1)^k cosh(k arccosh |z|)`` for ``z < -1``.
    """
    if k < 0:
        raise ValueError("cheb_T needs a non-negative order")
    z = np.asarray(z, dtype=float)
    az = np.abs(z)
    sign = np.where(z < 0, (-1.0) ** k, 1.0)
    with np.errstate(over="ignore"):
        inner = np.cos(k * np.arccos(np.clip(z, -1.0, 1.0)))
        outer = sign * np.cosh(k * np.arccosh(np.maximum(az, 1.0)))
    out = np.where(az <= 1.0, inner, outer)
    near = np.abs(az - 1.0) < _SNAP
    out = np.where(near, sign, out)
    return out[()] if out.ndim == 0 else out


def cheb_U(k: int, z):
    """Chebyshev polynomial of the second kind, with ``U_{-1} = 0``.

    Uses ``sin((k+1)t)/sin(t)`` with ``z = cos t`` inside ``[-1, 1]`` and the
    hyperbolic analogue outside; the removable singularity at ``z = +-1`` is
    replaced by the limits ``U_k(1) = k+1`` and ``U_k(-1) = (-1)^k (k+1)``.
    """
    if k < -1:
        raise ValueError("cheb_U is defined for k >= -1")
    z = np.asarray(z, dtype=float)
    if k == -1:
        out = np.zeros_like(z)
        return out[()] if out.ndim == 0 else out
    az = np.abs(z)
    sign = np.where(z < 0, (-1.0) ** k, 1.0)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        t = np.arccos(np.clip(z, -1.0, 1.0))
        inner = np.sin((k + 1) * t) / np.sin(t)
        u = np.arccosh(np.maximum(az, 1.0))
        outer = sign * np.sinh((k + 1) * u) / np.sinh(u)
    out = np.where(az <= 1.0, inner, outer)
    near = np.abs(az - 1.0) < _SNAP
    out = np.where(near, sign * (k + 1.0), out)
    return out[()] if out.ndim == 0 else out


def hilbert_uniform(g, axis: int = -1) -> np.ndarray:
    """Hilbert transform ``(1/pi) PV int g(t)/(s-t) dt`` of uniformly sampled data.

    The data are convolved with the band-limited discrete kernel
    ``2/(pi m)`` (odd ``m``, zero for even ``m``), whose frequency response is
    exactly ``-i sign(w)``. The convolution runs through an FFT on a grid
    padded by a factor two, so there is no periodic wrap-around. The result
    does not depend on the sample spacing.
    """
    g = np.asarray(g, dtype=float)
    n = g.shape[axis]
    if n < 8:
        raise ValueError("hilbert_uniform needs at least 8 samples")
    size = 2 * n
    m = np.arange(-(n - 1), n)
    ker = np.zeros(m.size)
    odd = (m % 2) != 0
    ker[odd] = 2.0 / (np.pi * m[odd])
    n_fft = 1 << int(np.ceil(np.log2(size + n)))
    g_moved = np.moveaxis(g, axis, -1)
    spectrum = np.fft.rfft(g_moved, n_fft, axis=-1) * np.fft.rfft(ker, n_fft)
    full = np.fft.irfft(spectrum, n_fft, axis=-1)
    out = full[..., n - 1:2 * n - 1]
    return np.moveaxis(out, -1, axis)
