# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Must stay bit-identical to ``_pure``."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def classify_reports(
    cnp.int64_t[::1] k,
    cnp.int64_t[::1] k_v,
    cnp.int64_t[::1] k_r,
    cnp.int64_t[::1] users,
    cnp.uint8_t[::1] validated,
    cnp.uint8_t[::1] reliable,
    cnp.float64_t[::1] tie_draws,
):
    cdef Py_ssize_t n = users.shape[0]
    decisions_arr = np.zeros(n, dtype=np.uint8)
    probs_arr = np.zeros(n, dtype=np.float64)
    cdef cnp.uint8_t[::1] decisions = decisions_arr
    cdef cnp.float64_t[::1] probs = probs_arr
    cdef Py_ssize_t i
    cdef cnp.int64_t u, ku, d
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
            probs[i] = k_r[u] / (<double> ku) + 0.5 * (1.0 - k_v[u] / (<double> ku))
            d = 2 * k_r[u] - k_v[u]
            if d > 0:
                decisions[i] = 1
            elif d < 0:
                decisions[i] = 0
            else:
                decisions[i] = 1 if tie_draws[i] < 0.5 else 0
    return decisions_arr, probs_arr


def sectorize_points(
    object lats_o,
    object lons_o,
    double lat_min,
    double lat_max,
    double lon_min,
    double lon_max,
    long rows,
    long cols,
):
    lats_arr = np.ascontiguousarray(lats_o, dtype=np.float64)
    lons_arr = np.ascontiguousarray(lons_o, dtype=np.float64)
    cdef cnp.float64_t[::1] lats = lats_arr
    cdef cnp.float64_t[::1] lons = lons_arr
    cdef Py_ssize_t n = lats.shape[0]
    out_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef Py_ssize_t i
    cdef double lat, lon
    cdef cnp.int64_t row, col
    for i in range(n):
        lat = lats[i]
        lon = lons[i]
        if lat < lat_min or lat > lat_max or lon < lon_min or lon > lon_max:
            out[i] = -1
            continue
        row = <cnp.int64_t> ((lat_max - lat) / (lat_max - lat_min) * rows)
        col = <cnp.int64_t> ((lon - lon_min) / (lon_max - lon_min) * cols)
        if row > rows - 1:
            row = rows - 1
        if col > cols - 1:
            col = cols - 1
        out[i] = row * cols + col
    return out_arr


def count_black_pixels(object pixels_o, long height, long width, long rows, long cols, long threshold):
    px_arr = np.ascontiguousarray(np.asarray(pixels_o, dtype=np.uint8).reshape(-1))
    cdef cnp.uint8_t[::1] px = px_arr
    counts_arr = np.zeros(rows * cols, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef Py_ssize_t x, y
    cdef cnp.int64_t srow, scol
    for y in range(height):
        srow = (y * rows) // height
        for x in range(width):
            if px[y * width + x] < threshold:
                scol = (x * cols) // width
                counts[srow * cols + scol] += 1
    return counts_arr
