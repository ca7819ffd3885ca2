"""Per-step wall-clock timing of the PPN and baseline detectors.

Images are simulated at a fixed source density so that timings across the
size ladder reflect the machine rather than the workload. Model
construction and file I/O are excluded from every measurement.
"""
from __future__ import annotations

import csv
import gc
import logging
import math
import time
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from . import floodfill, kernels
from .core import GridSpec, Image
from .infer import InferConfig, detect
from .net import PPN
from .skysim import SimConfig, patch_starts, simulate

log = logging.getLogger(__name__)

SOURCES_PER_MPIX = 135  # per 1024 x 1024 image
CSV_HEADER = ["detector", "size", "step", "repeat", "seconds"]


@dataclass(frozen=True)
class TimingRecord:
    detector: str
    image_size: int
    step: str
    seconds: float
    repeat_index: int


class PPNDetector:
    name = "ppn"
    steps = ("patching", "cnn", "nms")

    def __init__(self, model: PPN, grid: GridSpec = GridSpec(), config: InferConfig = InferConfig()):
        self.model, self.grid, self.config = model, grid, config

    def run(self, image: Image, tick) -> None:
        detect(self.model, image, self.grid, self.config, timer=tick)


class BaselineDetector:
    """Single-threshold TBD, the lower-bound cost of the flood-fill pipeline."""

    name = "baseline"
    steps = ("tbd",)

    def __init__(self, tau: float = 0.5, min_area: int = 3):
        self.tau, self.min_area = tau, min_area

    def run(self, image: Image, tick) -> None:
        t0 = time.perf_counter_ns()
        floodfill.threshold_blob_detect(image, self.tau, self.min_area)
        tick("tbd", time.perf_counter_ns() - t0)


def time_detection(detector, image: Image, repeat_index: int = 0) -> list[TimingRecord]:
    """Time one detection; one record per declared step plus ``total``."""
    steps: dict[str, int] = {}

    def tick(step: str, ns: int) -> None:
        steps[step] = steps.get(step, 0) + ns

    t0 = time.perf_counter_ns()
    detector.run(image, tick)
    total = time.perf_counter_ns() - t0
    size = image.width
    out = [TimingRecord(detector.name, size, s, steps.get(s, 0) / 1e9, repeat_index) for s in detector.steps]
    out.append(TimingRecord(detector.name, size, "total", total / 1e9, repeat_index))
    return out


def sources_for_size(size: int) -> int:
    return int(round(SOURCES_PER_MPIX * (size / 1024) ** 2))


def workload(size: int, seed: int) -> Image:
    """The deterministic benchmark image for ``size``."""
    image, _ = simulate(SimConfig(image_size=size, n_sources=sources_for_size(size), seed=seed + size))
    return image


def ppn_patch_count(size: int, patch_size: int = 224, overlap: int = 4) -> int:
    return len(patch_starts(size, patch_size, overlap)) ** 2


def scaling_run(detectors, sizes, repeats: int = 50, seed: int = 0, warmup: bool = True,
                on_record=None) -> list[TimingRecord]:
    """Time every detector at every size ``repeats`` times (strictly sequential)."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    if any(s <= 0 for s in sizes):
        raise ValueError("sizes must be positive")
    records: list[TimingRecord] = []

    def emit(recs):
        records.extend(recs)
        if on_record is not None:
            for r in recs:
                on_record(r)

    for size in sizes:
        try:
            image = workload(size, seed)
        except MemoryError:
            log.warning("size %d: out of memory while simulating; skipped", size)
            emit([TimingRecord(d.name, size, "skipped", math.nan, -1) for d in detectors])
            continue
        for det in detectors:
            try:
                if warmup:
                    time_detection(det, image)
                for rep in range(repeats):
                    emit(time_detection(det, image, rep))
            except (MemoryError, RuntimeError) as exc:
                if isinstance(exc, RuntimeError) and "memory" not in str(exc).lower():
                    raise
                log.warning("%s at size %d: %s; skipped", det.name, size, exc)
                emit([TimingRecord(det.name, size, "skipped", math.nan, -1)])
        del image
        gc.collect()
    return records


def write_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([r.detector, r.image_size, r.step, r.repeat_index, f"{r.seconds:.9f}"])


def read_csv(path) -> list[TimingRecord]:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if rd.fieldnames != CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
        return [TimingRecord(r["detector"], int(r["size"]), r["step"], float(r["seconds"]), int(r["repeat"]))
                for r in rd]


def summarize(records) -> dict:
    """``{(detector, size, step): (mean, std, n)}`` over repeats (skipped rows ignored)."""
    groups = defaultdict(list)
    for r in records:
        if r.step != "skipped" and math.isfinite(r.seconds):
            groups[(r.detector, r.image_size, r.step)].append(r.seconds)
    out = {}
    for key, vals in groups.items():
        arr = np.asarray(vals)
        out[key] = (float(arr.mean()), float(arr.std(ddof=1)) if len(arr) > 1 else 0.0, len(arr))
    return out


def table(records, detector: str) -> str:
    """Markdown table of mean +- std seconds per size, one column per step."""
    summ = summarize(records)
    steps = {"ppn": ["patching", "cnn", "nms", "total"], "baseline": ["tbd", "total"]}.get(detector)
    if steps is None:
        steps = sorted({k[2] for k in summ if k[0] == detector})
    sizes = sorted({k[1] for k in summ if k[0] == detector})
    lines = ["| size | " + " | ".join(steps) + " |", "|---" * (len(steps) + 1) + "|"]
    for s in sizes:
        cells = []
        for st in steps:
            m = summ.get((detector, s, st))
            cells.append("n/a" if m is None else f"{m[0]:.3f} ± {m[1]:.3f}")
        lines.append(f"| {s}² | " + " | ".join(cells) + " |")
    return "\n".join(lines)


def curves(records) -> list[dict]:
    """Rows of ``detector, size, mean_total, sqrt_mean_total`` and per-step fractions of the total."""
    summ = summarize(records)
    rows = []
    for det, size in sorted({(k[0], k[1]) for k in summ}):
        total = summ.get((det, size, "total"))
        if total is None:
            continue
        row = {"detector": det, "size": size, "mean_total": total[0], "sqrt_mean_total": math.sqrt(total[0])}
        for (d, s, st), (mean, _, _) in summ.items():
            if d == det and s == size and st != "total":
                row[f"frac_{st}"] = mean / total[0] if total[0] > 0 else math.nan
        rows.append(row)
    return rows


def compare_backends(sizes=(1024, 2048), repeats: int = 3, seed: int = 0, n_points: int = 20000) -> list[dict]:
    """Time the flood-fill and NMS kernels under every available backend."""
    rows = []
    impls = kernels.backends()
    rng = np.random.default_rng(seed)
    for size in sizes:
        mask = np.ascontiguousarray(workload(size, seed).values >= 0.5, dtype=np.uint8)
        dense = np.ones((size, size), dtype=np.uint8)
        for name, impl in impls.items():
            for label, m in (("label_sparse", mask), ("label_dense", dense)):
                times = []
                for _ in range(repeats):
                    t0 = time.perf_counter()
                    impl.label_components(m, 4)
                    times.append(time.perf_counter() - t0)
                rows.append({"kernel": label, "backend": name, "size": size,
                             "mean_s": float(np.mean(times)), "min_s": float(np.min(times))})
    x = rng.uniform(0, 4096, n_points)
    y = rng.uniform(0, 4096, n_points)
    c = rng.uniform(0, 1, n_points)
    for name, impl in impls.items():
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            impl.nms_select(x, y, c, 11.2, 0.8)
            times.append(time.perf_counter() - t0)
        rows.append({"kernel": "nms", "backend": name, "size": n_points,
                     "mean_s": float(np.mean(times)), "min_s": float(np.min(times))})
    return rows
