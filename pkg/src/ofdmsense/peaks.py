"""Greedy local-maximum peak selection on magnitude spectra.

Works for 1-D and 3-D magnitude arrays.  A cell is a candidate when it is a
local maximum over its full neighbourhood (wrap-around on circular axes,
edge-clamped on one-sided axes).  Candidates are accepted in descending
magnitude order, skipping any candidate inside the exclusion box of an
already accepted peak; magnitude ties resolve to the lexicographically
smallest signed index tuple.
"""
from __future__ import annotations

import numpy as np
from scipy import ndimage


def local_max_mask(mag: np.ndarray, wrap: tuple) -> np.ndarray:
    """Boolean mask of local maxima over the (3^ndim - 1)-neighbourhood."""
    modes = tuple("wrap" if w else "nearest" for w in wrap)
    filt = ndimage.maximum_filter(mag, size=3, mode=modes)
    return mag >= filt


def _axis_dist(a: np.ndarray, b: int, n: int, wrap: bool) -> np.ndarray:
    d = np.abs(a - b)
    return np.minimum(d, n - d) if wrap else d


def select_peaks(mag: np.ndarray, n_peaks: int, half_widths: tuple,
                 wrap: tuple, signed_axes: tuple) -> np.ndarray:
    """Pick up to ``n_peaks`` storage-index tuples, strongest first.

    ``signed_axes`` holds the storage-to-signed-bin map per axis (used only
    for deterministic tie-breaking).  Returns an (n_found, ndim) int array;
    n_found < n_peaks when the spectrum has too few local maxima.
    """
    if n_peaks < 0:
        raise ValueError("n_peaks must be >= 0")
    if n_peaks == 0:
        return np.zeros((0, mag.ndim), dtype=int)
    cand = np.argwhere(local_max_mask(mag, wrap))
    if len(cand) == 0:
        return np.zeros((0, mag.ndim), dtype=int)
    vals = mag[tuple(cand.T)]
    signed = np.column_stack([signed_axes[ax][cand[:, ax]] for ax in range(mag.ndim)])
    # primary key: descending magnitude; ties: ascending signed tuple
    order = np.lexsort(tuple(signed[:, ax] for ax in reversed(range(mag.ndim))) + (-vals,))
    cand = cand[order]

    accepted = []
    for idx in cand:
        ok = True
        for acc in accepted:
            inside = True
            for ax in range(mag.ndim):
                d = _axis_dist(np.array(idx[ax]), int(acc[ax]), mag.shape[ax], wrap[ax])
                if d > half_widths[ax]:
                    inside = False
                    break
            if inside:
                ok = False
                break
        if ok:
            accepted.append(idx)
            if len(accepted) == n_peaks:
                break
    return np.array(accepted, dtype=int).reshape(len(accepted), mag.ndim)
