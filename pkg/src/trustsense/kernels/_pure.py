"""Pure-Python / numpy fallback for the hot kernels.

Semantics here are the reference; the compiled module in ``_core.pyx``
must produce bit-identical results. Keep both in sync.
"""

from __future__ import annotations

import numpy as np


def classify_reports(k, k_v, k_r, users, validated, reliable, tie_draws):
    """Classify a batch of reports, updating per-user counters in place.

    Reports are processed in order. For each report from user ``u``:
    the submission counter ``k[u]`` is incremented first; validated
    reports bump ``k_v`` (and ``k_r`` when reliable) and are decided by
    the validation outcome; non-validated reports are accepted when the
    post-increment trust exceeds 1/2, rejected below, and tie-broken by
    ``tie_draws[i] < 0.5`` at exactly 1/2. The trust comparison is done
    in integers (2*k_r vs k_v) so ties are exact.

    Returns (decisions, probs): decisions are 1 for accept / 0 for
    reject; probs carry the acceptance probability the classifier
    assigned (trust value for non-validated reports, 1.0/0.0 for
    validated ones).
    """
    n = len(users)
    decisions = np.zeros(n, dtype=np.uint8)
    probs = np.zeros(n, dtype=np.float64)
    for i in range(n):
        u = users[i]
        k[u] += 1
        if validated[i]:
            k_v[u] += 1
            if reliable[i]:
                k_r[u] += 1
                decisions[i] = 1
                probs[i] = 1.0
            else:
                decisions[i] = 0
                probs[i] = 0.0
        else:
            ku = k[u]
            trust = k_r[u] / ku + 0.5 * (1.0 - k_v[u] / ku)
            probs[i] = trust
            d = 2 * k_r[u] - k_v[u]
            if d > 0:
                decisions[i] = 1
            elif d < 0:
                decisions[i] = 0
            else:
                decisions[i] = 1 if tie_draws[i] < 0.5 else 0
    return decisions, probs


def sectorize_points(lats, lons, lat_min, lat_max, lon_min, lon_max, rows, cols):
    """Map coordinate arrays to row-major sector indices; -1 if outside."""
    lats = np.asarray(lats, dtype=np.float64)
    lons = np.asarray(lons, dtype=np.float64)
    inb = (lats >= lat_min) & (lats <= lat_max) & (lons >= lon_min) & (lons <= lon_max)
    row = ((lat_max - lats) / (lat_max - lat_min) * rows).astype(np.int64)
    col = ((lons - lon_min) / (lon_max - lon_min) * cols).astype(np.int64)
    np.minimum(row, rows - 1, out=row)
    np.minimum(col, cols - 1, out=col)
    out = row * cols + col
    out[~inb] = -1
    return out


def count_black_pixels(pixels, height, width, rows, cols, threshold):
    """Per-sector counts of pixels with intensity below ``threshold``.

    Pixel (x, y) belongs to sector (y*rows//height, x*cols//width): the
    proportional mapping with the same half-open boundary rule as the
    sector grid.
    """
    px = np.asarray(pixels, dtype=np.uint8).reshape(height, width)
    row_of = (np.arange(height, dtype=np.int64) * rows) // height
    col_of = (np.arange(width, dtype=np.int64) * cols) // width
    sector = row_of[:, None] * cols + col_of[None, :]
    black = (px < threshold).astype(np.int64)
    counts = np.bincount(sector.ravel(), weights=black.ravel(), minlength=rows * cols)
    return counts.astype(np.int64)
