"""Independent slow reference implementations used to cross-check the library."""
import math

import numpy as np


def nms_reference(points, r, c_min):
    """Plain-list greedy suppression over (x, y, conf) tuples; returns kept indices."""
    remaining = [i for i, p in enumerate(points) if p[2] >= c_min]
    kept = []
    while remaining:
        best = remaining[0]
        for i in remaining[1:]:
            if points[i][2] > points[best][2]:
                best = i
        kept.append(best)
        bx, by = points[best][0], points[best][1]
        remaining = [
            i for i in remaining
            if i != best and not ((points[i][0] - bx) ** 2 + (points[i][1] - by) ** 2 < r * r)
        ]
    return kept


def greedy_match_reference(pred, truth, radius):
    """Repeatedly take the globally closest unused pair within ``radius``."""
    used_p, used_t, pairs = set(), set(), []
    while True:
        best = None
        for i, (px, py) in enumerate(pred):
            if i in used_p:
                continue
            for j, (tx, ty) in enumerate(truth):
                if j in used_t:
                    continue
                d = math.hypot(px - tx, py - ty)
                if d <= radius and (best is None or (d, i, j) < best):
                    best = (d, i, j)
        if best is None:
            return pairs
        _, i, j = best
        used_p.add(i)
        used_t.add(j)
        pairs.append((i, j))


def bce_sum(c, y, mask):
    c = np.asarray(c, np.float64)
    return float(-(mask * (y * np.log(c) + (1 - y) * np.log(1 - c))).sum())


def nearest_source_targets(sources, grid, r_near, r_far):
    """Loop-based target encoding: per origin, scan every source."""
    m, n = grid.shape
    c_hat = np.zeros((m, n))
    b = np.zeros((m, n))
    r_hat = np.zeros((m, n, 2))
    for i in range(m):
        for j in range(n):
            ox, oy = (j + 0.5) * grid.spacing, (i + 0.5) * grid.spacing
            best, bd = None, math.inf
            for k, (x, y) in enumerate(sources):
                d = math.hypot((x - ox) / grid.spacing, (y - oy) / grid.spacing)
                if d < bd:
                    best, bd = k, d
            if best is None:
                b[i, j] = 1
                continue
            if bd <= r_near + 1e-12:
                c_hat[i, j] = 1
                b[i, j] = 1
                x, y = sources[best]
                r_hat[i, j] = ((x - ox) / grid.spacing, (y - oy) / grid.spacing)
            elif bd > r_far + 1e-12:
                b[i, j] = 1
    return c_hat, r_hat, b


def bfs_label(mask, connectivity=4):
    """Breadth-first labelling in raster order of first pixel."""
    from collections import deque

    h, w = mask.shape
    labels = np.zeros((h, w), np.int64)
    nbrs = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    if connectivity == 8:
        nbrs += [(-1, -1), (-1, 1), (1, -1), (1, 1)]
    n = 0
    for r in range(h):
        for c in range(w):
            if mask[r, c] and not labels[r, c]:
                n += 1
                labels[r, c] = n
                q = deque([(r, c)])
                while q:
                    y, x = q.popleft()
                    for dy, dx in nbrs:
                        yy, xx = y + dy, x + dx
                        if 0 <= yy < h and 0 <= xx < w and mask[yy, xx] and not labels[yy, xx]:
                            labels[yy, xx] = n
                            q.append((yy, xx))
    return labels, n


def gradient_check(params, loss_fn, h=1e-3, per_tensor=4, seed=0):
    """Central differences against autograd on sampled coordinates.

    A coordinate whose +-h interval straddles a ReLU kink has one-sided slopes
    that disagree; the derivative is undefined there, so it is reported in
    ``kinks`` instead of being compared. Returns ``(rows, kinks)`` where each
    row is ``(name, index, numeric, analytic)``.
    """
    import torch

    for _, p in params:
        p.grad = None
    loss_fn().backward()
    rng = np.random.default_rng(seed)
    rows, kinks = [], []
    with torch.no_grad():
        f0 = loss_fn().item()
        for name, p in params:
            flat = p.data.view(-1)
            for k in rng.choice(flat.numel(), size=min(per_tensor, flat.numel()), replace=False):
                old = flat[k].item()
                flat[k] = old + h
                up = loss_fn().item()
                flat[k] = old - h
                down = loss_fn().item()
                flat[k] = old
                fwd, bwd = (up - f0) / h, (f0 - down) / h
                ana = p.grad.view(-1)[k].item()
                if abs(fwd - bwd) > 0.05 * max(abs(fwd), abs(bwd), 1e-6):
                    kinks.append((name, int(k)))
                    continue
                rows.append((name, int(k), (up - down) / (2 * h), ana))
    return rows, kinks


def grad_agrees(num, ana, rel=1e-2, floor=1e-6):
    return abs(num - ana) <= rel * max(abs(num), abs(ana), floor)
