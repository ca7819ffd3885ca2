"""Whole-image detection: patch, forward, decode offsets, global NMS."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import torch

from . import kernels
from .core import Catalog, GridSpec, Image
from .net import PPN, NetOutput, forward_batch
from .skysim import patch_array


@dataclass(frozen=True)
class InferConfig:
    overlap: int = 4
    r_nms: float = 0.35
    c_nms: float = 0.8
    batch_size: int = 64

    def __post_init__(self):
        if not 0 < self.c_nms < 1:
            raise ValueError("c_nms must lie in (0, 1)")
        if self.r_nms < 0:
            raise ValueError("r_nms must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class ProposalSet:
    """Candidate points in whole-image pixels: ``xy`` ``(N, 2)`` and ``conf`` ``(N,)``."""

    xy: np.ndarray
    conf: np.ndarray

    def __post_init__(self):
        self.xy = np.asarray(self.xy, dtype=np.float64).reshape(-1, 2)
        self.conf = np.asarray(self.conf, dtype=np.float64).reshape(-1)

    def __len__(self) -> int:
        return len(self.conf)

    @classmethod
    def concat(cls, sets) -> "ProposalSet":
        sets = list(sets)
        if not sets:
            return cls(np.zeros((0, 2)), np.zeros(0))
        return cls(np.concatenate([s.xy for s in sets]), np.concatenate([s.conf for s in sets]))


def decode(output: NetOutput, grid: GridSpec, patch_origin=(0.0, 0.0)) -> ProposalSet:
    """One proposal per origin: patch origin + origin centre + offset * spacing."""
    conf = np.asarray(output.confidence, dtype=np.float64)
    reg = np.asarray(output.regression, dtype=np.float64)
    # patch-local positions first, so shifting the patch shifts every point by exactly the origin
    local = grid.origin_centers() + reg * grid.spacing
    pts = local + np.asarray(patch_origin, dtype=np.float64)
    return ProposalSet(pts.reshape(-1, 2), conf.reshape(-1))


def decode_batch(conf: np.ndarray, reg: np.ndarray, grid: GridSpec, origins: np.ndarray) -> ProposalSet:
    """Vectorized :func:`decode` over ``(B, m, n)`` outputs and ``(B, 2)`` patch origins."""
    local = grid.origin_centers()[None] + reg.astype(np.float64) * grid.spacing
    pts = local + origins[:, None, None, :]
    return ProposalSet(pts.reshape(-1, 2), conf.astype(np.float64).reshape(-1))


def nms(points: ProposalSet, r_nms: float, c_nms: float, spacing: float = 32.0) -> ProposalSet:
    """Greedy confidence-ordered suppression.

    Points below ``c_nms`` are dropped. Then the most confident remaining
    point is kept and every remaining point strictly within ``r_nms`` grid
    units (``r_nms * spacing`` pixels) of it is removed, repeatedly.
    Confidence ties go to the earlier point.
    """
    if len(points) == 0:
        return ProposalSet(np.zeros((0, 2)), np.zeros(0))
    keep = kernels.nms_select(points.xy[:, 0], points.xy[:, 1], points.conf, r_nms * spacing, c_nms)
    return ProposalSet(points.xy[keep], points.conf[keep])


def _sync(device) -> None:
    if device is not None and torch.device(device).type == "cuda":
        torch.cuda.synchronize(device)


def propose(model: PPN, image: Image, grid: GridSpec, config: InferConfig, timer=None) -> ProposalSet:
    """All decoded proposals for ``image`` before NMS, in stable patch/origin order."""
    tick = timer or (lambda step, ns: None)
    device = next(model.parameters()).device
    t0 = time.perf_counter_ns()
    patches, origins = patch_array(image, grid.patch_size, config.overlap)
    tick("patching", time.perf_counter_ns() - t0)

    t0 = time.perf_counter_ns()
    confs, regs = [], []
    for start in range(0, len(patches), config.batch_size):
        c, r = forward_batch(model, patches[start:start + config.batch_size], device)
        confs.append(c)
        regs.append(r)
    props = decode_batch(np.concatenate(confs), np.concatenate(regs), grid, origins)
    _sync(device)
    tick("cnn", time.perf_counter_ns() - t0)
    return props


def detect(model: PPN, image: Image, grid: GridSpec, config: InferConfig = InferConfig(),
           timer=None) -> Catalog:
    """Detection catalog for a normalized image.

    ``timer``, if given, is called with ``(step, nanoseconds)`` for the
    ``patching``, ``cnn`` and ``nms`` steps.
    """
    tick = timer or (lambda step, ns: None)
    props = propose(model, image, grid, config, timer)
    t0 = time.perf_counter_ns()
    kept = nms(props, config.r_nms, config.c_nms, grid.spacing)
    tick("nms", time.perf_counter_ns() - t0)
    return to_catalog(kept, image.width, image.height)


def to_catalog(kept: ProposalSet, width: int, height: int) -> Catalog:
    """Detection catalog from retained proposals, clipped into the image frame."""
    # offsets may point slightly past the border
    xy = kept.xy.copy()
    xy[:, 0] = np.clip(xy[:, 0], 0.0, np.nextafter(width, 0))
    xy[:, 1] = np.clip(xy[:, 1], 0.0, np.nextafter(height, 0))
    return Catalog(xy, kept.conf, kind="detection")
