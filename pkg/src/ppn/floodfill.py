"""Thresholded blob detection (TBD): the classical flood-fill baseline.

Pixels at or above a threshold are grouped into connected islands, islands
smaller than ``min_area`` are dropped, and each survivor is reported at the
unweighted mean of its pixel coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import Catalog


@dataclass
class Island:
    pixels: np.ndarray   # (k, 2) integer (row, col)
    centroid: tuple      # (x, y)
    peak: float


def _values(image) -> np.ndarray:
    return np.asarray(getattr(image, "values", image))


def label_islands(values: np.ndarray, tau: float, connectivity: int = 4):
    """Label map of the ``values >= tau`` mask and the number of islands."""
    return kernels.label_components(values >= tau, connectivity)


def _sparse_table(values: np.ndarray, labels: np.ndarray, n: int):
    # only foreground pixels matter; avoids full-image index grids
    rr, cc = np.nonzero(labels)
    lab = labels[rr, cc]
    area = np.bincount(lab, minlength=n + 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cx = np.bincount(lab, weights=cc, minlength=n + 1) / area
        cy = np.bincount(lab, weights=rr, minlength=n + 1) / area
    peak = np.full(n + 1, -np.inf)
    np.maximum.at(peak, lab, values[rr, cc].astype(np.float64))
    return area, cx, cy, peak


def threshold_blob_detect(image, tau: float = 0.5, min_area: int = 3, connectivity: int = 4) -> Catalog:
    """Single-threshold TBD; score of each detection is the island's peak value."""
    if not 0 < tau < 1:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    if min_area < 1:
        raise ValueError("min_area must be >= 1")
    values = _values(image)
    labels, n = label_islands(values, tau, connectivity)
    if n == 0:
        return Catalog(kind="detection")
    area, cx, cy, peak = _sparse_table(values, labels, n)
    ok = np.flatnonzero(area >= min_area)
    ok = ok[ok > 0]
    return Catalog(np.stack([cx[ok], cy[ok]], axis=1), _clip_score(peak[ok]), kind="detection")


def _clip_score(peak: np.ndarray) -> np.ndarray:
    # detection scores live in (0, 1); a normalized image's maximum is exactly 1
    return np.clip(peak, 1e-7, 1 - 1e-7)


def islands(image, tau: float = 0.5, min_area: int = 3, connectivity: int = 4) -> list[Island]:
    """Surviving islands with their pixel lists (slower; for inspection and tests)."""
    values = _values(image)
    labels, n = label_islands(values, tau, connectivity)
    out = []
    if n == 0:
        return out
    area, cx, cy, peak = _sparse_table(values, labels, n)
    rr, cc = np.nonzero(labels)
    lab = labels[rr, cc]
    order = np.argsort(lab, kind="stable")
    bounds = np.searchsorted(lab[order], np.arange(n + 2))
    for k in range(1, n + 1):
        if area[k] < min_area:
            continue
        sel = order[bounds[k]:bounds[k + 1]]
        out.append(Island(np.stack([rr[sel], cc[sel]], axis=1), (float(cx[k]), float(cy[k])), float(peak[k])))
    return out


def log_thresholds(n: int = 20, lo: float = 0.1, hi: float = 1.0) -> np.ndarray:
    """``n`` log-spaced thresholds from ``hi`` down to ``lo``, both inclusive."""
    return np.geomspace(hi, lo, n)


def multi_threshold_detect(image, thresholds=None, min_area: int = 3, connectivity: int = 4) -> Catalog:
    """Approximate multi-threshold de-blending.

    Islands are found at the lowest threshold. An island is replaced by the
    islands it contains at the next higher threshold only when it splits
    there into two or more; a single child is followed upward in case it
    splits later, otherwise the parent is kept.
    """
    thr = np.asarray(log_thresholds() if thresholds is None else thresholds, dtype=np.float64)
    if thr.ndim != 1 or len(thr) == 0:
        raise ValueError("thresholds must be a non-empty list")
    if (np.diff(thr) >= 0).any():
        raise ValueError("thresholds must be strictly descending")
    if (thr <= 0).any() or (thr > 1).any():
        raise ValueError("thresholds must lie in (0, 1]")
    values = _values(image)
    levels = thr[::-1]  # ascending: coarse islands first
    labelled = []
    for t in levels:
        labels, n = label_islands(values, t, connectivity)
        area, cx, cy, peak = _sparse_table(values, labels, n)
        labelled.append((labels, n, area, cx, cy, peak))

    # children[level][k]: labels at level + 1 nested inside island k of level
    kids_of = []
    for lv in range(len(levels) - 1):
        lab_hi, _, area_hi, *_ = labelled[lv + 1]
        rr, cc = np.nonzero(lab_hi)
        pairs = np.unique(np.stack([labelled[lv][0][rr, cc], lab_hi[rr, cc]], axis=1), axis=0)
        table: dict[int, list[int]] = {}
        for parent, child in pairs.tolist():
            if area_hi[child] >= min_area:
                table.setdefault(parent, []).append(child)
        kids_of.append(table)

    def children(level: int, k: int) -> list[int]:
        return kids_of[level].get(k, [])

    def refine(level: int, k: int) -> list[tuple[int, int]]:
        if level + 1 >= len(levels):
            return [(level, k)]
        kids = children(level, k)
        if len(kids) >= 2:
            return [leaf for c in kids for leaf in refine(level + 1, c)]
        if len(kids) == 1:
            sub = refine(level + 1, kids[0])
            if len(sub) >= 2:
                return sub
        return [(level, k)]

    _, n0, area0, *_ = labelled[0]
    leaves = []
    for k in range(1, n0 + 1):
        if area0[k] >= min_area:
            leaves.extend(refine(0, k))
    if not leaves:
        return Catalog(kind="detection")
    xy = np.array([(labelled[lv][3][k], labelled[lv][4][k]) for lv, k in leaves])
    score = np.array([labelled[lv][5][k] for lv, k in leaves])
    return Catalog(xy, _clip_score(score), kind="detection")
