"""Detection metrics: exclusive matching, precision/recall/F1 and their curves."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .core import Catalog


@dataclass
class MatchResult:
    tp: int
    fp: int
    fn: int
    pairs: list = field(default_factory=list)  # (prediction index, truth index, pixel distance)

    @property
    def matched_truths(self) -> np.ndarray:
        return np.array([t for _, t, _ in self.pairs], dtype=int)


def _xy(c) -> np.ndarray:
    return np.asarray(getattr(c, "xy", c), dtype=np.float64).reshape(-1, 2)


def match(predictions, truths, r_tp: float, spacing: float = 32.0) -> MatchResult:
    """Greedy exclusive matching by ascending distance.

    Every (prediction, truth) pair within ``r_tp * spacing`` pixels (inclusive)
    is a candidate; candidates are accepted shortest first (ties by prediction
    index, then truth index) when neither end is already matched.
    """
    p, t = _xy(predictions), _xy(truths)
    radius = r_tp * spacing
    if len(p) == 0 or len(t) == 0 or radius < 0:
        return MatchResult(0, len(p), len(t), [])
    tree_p, tree_t = cKDTree(p), cKDTree(t)
    near = tree_p.query_ball_tree(tree_t, radius * (1 + 1e-9) + 1e-12)
    pi = np.fromiter((i for i, js in enumerate(near) for _ in js), dtype=np.int64)
    ti = np.fromiter((j for js in near for j in js), dtype=np.int64)
    d = np.hypot(p[pi, 0] - t[ti, 0], p[pi, 1] - t[ti, 1])
    keep = d <= radius  # exact inclusive test; the tree query is padded
    pi, ti, d = pi[keep], ti[keep], d[keep]
    order = np.lexsort((ti, pi, d))
    used_p = np.zeros(len(p), dtype=bool)
    used_t = np.zeros(len(t), dtype=bool)
    pairs = []
    for k in order:
        a, b = pi[k], ti[k]
        if not used_p[a] and not used_t[b]:
            used_p[a] = used_t[b] = True
            pairs.append((int(a), int(b), float(d[k])))
    tp = len(pairs)
    return MatchResult(tp, len(p) - tp, len(t) - tp, pairs)


def precision(m: MatchResult) -> float:
    """``tp / (tp + fp)``; 1.0 when there are no predictions (nothing claimed wrongly)."""
    denom = m.tp + m.fp
    return 1.0 if denom == 0 else m.tp / denom


def recall(m: MatchResult) -> float:
    """``tp / (tp + fn)``; 1.0 when there are no truths."""
    denom = m.tp + m.fn
    return 1.0 if denom == 0 else m.tp / denom


def f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2.0 * p * r / (p + r)


def recall_by_flux(predictions, truths: Catalog, r_tp: float, bin_edges, spacing: float = 32.0,
                   result: MatchResult | None = None) -> list[dict]:
    """Recall of the truths falling in each ``[lo, hi)`` flux bin, from one global match."""
    m = result if result is not None else match(predictions, truths, r_tp, spacing)
    found = np.zeros(len(truths), dtype=bool)
    if m.pairs:
        found[m.matched_truths] = True
    return _bin_recall(np.asarray(truths.score), found, bin_edges)


def _bin_recall(flux: np.ndarray, found: np.ndarray, bin_edges) -> list[dict]:
    edges = np.asarray(bin_edges, dtype=np.float64)
    rows = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        inside = (flux >= lo) & (flux < hi)
        n = int(inside.sum())
        hit = int(found[inside].sum())
        rows.append({
            "lo": float(lo), "hi": float(hi), "flux": float(0.5 * (lo + hi)),
            "n_truth": n, "n_found": hit, "recall": hit / n if n else None,
        })
    return rows


def precision_vs_rtp(predictions, truths, r_tp_values, spacing: float = 32.0) -> list[dict]:
    """Precision recomputed independently at each matching radius."""
    out = []
    for r in r_tp_values:
        m = match(predictions, truths, float(r), spacing)
        out.append({"r_tp": float(r), "precision": precision(m), "tp": m.tp, "fp": m.fp})
    return out


@dataclass
class Tally:
    """Accumulates match counts (and per-truth hit flags) across many images."""

    tp: int = 0
    fp: int = 0
    fn: int = 0
    flux: list = field(default_factory=list)
    found: list = field(default_factory=list)

    def add(self, m: MatchResult, truths: Catalog) -> None:
        self.tp += m.tp
        self.fp += m.fp
        self.fn += m.fn
        hit = np.zeros(len(truths), dtype=bool)
        if m.pairs:
            hit[m.matched_truths] = True
        self.flux.append(np.asarray(truths.score))
        self.found.append(hit)

    @property
    def result(self) -> MatchResult:
        return MatchResult(self.tp, self.fp, self.fn)

    def recall_by_bin(self, bin_edges) -> list[dict]:
        flux = np.concatenate(self.flux) if self.flux else np.zeros(0)
        found = np.concatenate(self.found) if self.found else np.zeros(0, bool)
        return _bin_recall(flux, found, bin_edges)


def report(predictions, truths: Catalog, r_tp: float = 0.4, spacing: float = 32.0,
           bin_edges=None, rtp_sweep=None) -> dict:
    """The JSON report behind the ``evaluate`` command."""
    m = match(predictions, truths, r_tp, spacing)
    p, r = precision(m), recall(m)
    out = {"precision": p, "recall": r, "f1": f1(p, r), "tp": m.tp, "fp": m.fp, "fn": m.fn,
           "r_tp": r_tp, "spacing": spacing, "per_bin": [], "per_rtp": []}
    if bin_edges is not None:
        out["per_bin"] = recall_by_flux(predictions, truths, r_tp, bin_edges, spacing, result=m)
    if rtp_sweep is not None:
        out["per_rtp"] = precision_vs_rtp(predictions, truths, rtp_sweep, spacing)
    return out
