# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: connected-component flood fill and point NMS.

Signatures and outputs match :mod:`ppn._fallback` exactly.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def label_components(const cnp.uint8_t[:, ::1] mask, int connectivity=4):
    """Label connected foreground regions of ``mask`` with an explicit-stack flood fill.

    Labels start at 1 and are numbered in raster order of each component's
    first pixel. Returns ``(labels, n_labels)``.
    """
    cdef Py_ssize_t h = mask.shape[0]
    cdef Py_ssize_t w = mask.shape[1]
    if connectivity != 4 and connectivity != 8:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    labels_arr = np.zeros((h, w), dtype=np.int32)
    cdef cnp.int32_t[:, ::1] labels = labels_arr
    n_fg = int(np.count_nonzero(mask)) if h and w else 0
    if n_fg == 0:
        return labels_arr, 0
    # every pixel is pushed at most once (labelled on push)
    stack_arr = np.empty(n_fg, dtype=np.int64)
    cdef cnp.int64_t[::1] stack = stack_arr
    cdef Py_ssize_t top, r, c, rr, cc, k
    cdef cnp.int64_t p
    cdef cnp.int32_t current = 0
    cdef int n_nb = 4 if connectivity == 4 else 8
    cdef int dr[8]
    cdef int dc[8]
    dr[:] = [-1, 1, 0, 0, -1, -1, 1, 1]
    dc[:] = [0, 0, -1, 1, -1, 1, -1, 1]

    for r in range(h):
        for c in range(w):
            if mask[r, c] == 0 or labels[r, c] != 0:
                continue
            current += 1
            labels[r, c] = current
            top = 0
            stack[top] = r * w + c
            top += 1
            while top > 0:
                top -= 1
                p = stack[top]
                rr = p // w
                cc = p - rr * w
                for k in range(n_nb):
                    if 0 <= rr + dr[k] < h and 0 <= cc + dc[k] < w:
                        if mask[rr + dr[k], cc + dc[k]] != 0 and labels[rr + dr[k], cc + dc[k]] == 0:
                            labels[rr + dr[k], cc + dc[k]] = current
                            stack[top] = (rr + dr[k]) * w + cc + dc[k]
                            top += 1
    return labels_arr, int(current)


def nms_select(const double[::1] x, const double[::1] y, const double[::1] conf,
               double radius, double threshold):
    """Greedy point suppression; returns kept indices in selection order.

    Points with ``conf < threshold`` are discarded first. The most confident
    survivor (earliest index on ties) is kept and every survivor strictly
    closer than ``radius`` to it is removed, until none remain.
    """
    cdef Py_ssize_t n = x.shape[0]
    if y.shape[0] != n or conf.shape[0] != n:
        raise ValueError("x, y and conf must have equal length")
    idx = np.flatnonzero(np.asarray(conf) >= threshold)
    order_arr = idx[np.argsort(-np.asarray(conf)[idx], kind="stable")].astype(np.int64)
    cdef cnp.int64_t[::1] order = order_arr
    cdef Py_ssize_t m = order.shape[0]
    alive_arr = np.ones(m, dtype=np.uint8)
    cdef cnp.uint8_t[::1] alive = alive_arr
    keep_arr = np.empty(m, dtype=np.int64)
    cdef cnp.int64_t[::1] keep = keep_arr
    cdef Py_ssize_t a, b, n_keep = 0
    cdef double r2 = radius * radius
    cdef double px, py, dx, dy
    for a in range(m):
        if not alive[a]:
            continue
        keep[n_keep] = order[a]
        n_keep += 1
        px = x[order[a]]
        py = y[order[a]]
        for b in range(a + 1, m):
            if alive[b]:
                dx = x[order[b]] - px
                dy = y[order[b]] - py
                if dx * dx + dy * dy < r2:
                    alive[b] = 0
    return keep_arr[:n_keep].copy()
