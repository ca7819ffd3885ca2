"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``.

Outputs are identical to the compiled versions, including label numbering.
"""
from __future__ import annotations

import numpy as np


def _row_runs(row: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Start (inclusive) and stop (exclusive) columns of the True runs in ``row``."""
    padded = np.concatenate(([0], (row != 0).astype(np.int8), [0]))
    edges = np.flatnonzero(np.diff(padded))
    return edges[0::2], edges[1::2]


def label_components(mask: np.ndarray, connectivity: int = 4) -> tuple[np.ndarray, int]:
    """Run-length connected-component labelling with union-find.

    Labels are renumbered so that components appear in raster order of their
    first pixel, which is what the compiled flood fill produces.
    """
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    mask = np.ascontiguousarray(mask, dtype=np.uint8)
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    if not mask.any():
        return labels, 0

    reach = 1 if connectivity == 8 else 0
    parent: list[int] = []

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    runs = []  # (row, start, stop, provisional id)
    prev: list[tuple[int, int, int]] = []
    for r in range(h):
        starts, stops = _row_runs(mask[r])
        cur = []
        j = 0
        for s, e in zip(starts.tolist(), stops.tolist()):
            rid = len(parent)
            parent.append(rid)
            # advance past previous-row runs that end before this one can touch
            while j < len(prev) and prev[j][1] + reach <= s:
                j += 1
            k = j
            while k < len(prev) and prev[k][0] < e + reach:
                ra, rb = find(prev[k][2]), find(rid)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
                k += 1
            cur.append((s, e, rid))
            runs.append((r, s, e, rid))
        prev = cur

    final: dict[int, int] = {}
    for r, s, e, rid in runs:
        root = find(rid)
        lab = final.get(root)
        if lab is None:
            lab = final[root] = len(final) + 1
        labels[r, s:e] = lab
    return labels, len(final)


def nms_select(x: np.ndarray, y: np.ndarray, conf: np.ndarray, radius: float,
               threshold: float) -> np.ndarray:
    """Greedy point suppression; returns kept indices in selection order."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    conf = np.asarray(conf, dtype=np.float64)
    if not (len(x) == len(y) == len(conf)):
        raise ValueError("x, y and conf must have equal length")
    idx = np.flatnonzero(conf >= threshold)
    order = idx[np.argsort(-conf[idx], kind="stable")]
    r2 = radius * radius
    keep = []
    while order.size:
        best = order[0]
        keep.append(best)
        rest = order[1:]
        dx = x[rest] - x[best]
        dy = y[rest] - y[best]
        order = rest[dx * dx + dy * dy >= r2]
    return np.asarray(keep, dtype=np.int64)
