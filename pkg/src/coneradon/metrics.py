"""Error metrics used by the tests and the reproduction harness."""
from __future__ import annotations

import numpy as np
from scipy import ndimage


def relative_l2(recon, reference, mask=None) -> float:
    """``||recon - reference|| / ||reference||`` over the optional boolean mask."""
    a = np.asarray(getattr(recon, "values", recon), float)
    b = np.asarray(getattr(reference, "values", reference), float)
    if mask is not None:
        a, b = a[mask], b[mask]
    den = np.linalg.norm(b)
    if den == 0:
        return float(np.linalg.norm(a))
    return float(np.linalg.norm(a - b) / den)


def jump_band_mask(reference, width: float, extent: float = 1.0) -> np.ndarray:
    """Mask that is False within ``width`` (in domain units) of a jump of ``reference``.

    A pixel counts as a jump pixel if it differs from one of its four
    neighbours. The mask is the complement of that set dilated by ``width``.
    """
    v = np.asarray(getattr(reference, "values", reference), float)
    jump = np.zeros(v.shape, bool)
    for ax in range(v.ndim):
        d = np.diff(v, axis=ax) != 0
        lo = [slice(None)] * v.ndim
        hi = [slice(None)] * v.ndim
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        jump[tuple(lo)] |= d
        jump[tuple(hi)] |= d
    h = 2 * extent / (v.shape[0] - 1)
    it = max(1, int(np.ceil(width / h)))
    return ~ndimage.binary_dilation(jump, iterations=it)
