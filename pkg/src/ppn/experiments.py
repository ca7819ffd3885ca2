"""Experiment orchestrations: thin loops over library operations that emit
CSV/JSON tables analogous to the hyper-parameter and results tables."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bench, floodfill
from .core import Catalog, GridSpec, Image
from .evaluate import Tally, f1, match, precision, recall
from .infer import InferConfig, nms, propose, to_catalog
from .net import PPN, NetConfig, build, save
from .skysim import SimConfig, flux_bin_edges, simulate
from .train import PatchSet, TrainConfig, train, write_history

log = logging.getLogger(__name__)

TRAIN, VAL, TEST = 0, 1, 2


def image_seed(seed: int, split: int, index: int) -> int:
    """Independent per-image seed for a split (train / val / test)."""
    return int(np.random.SeedSequence([seed, split, index]).generate_state(1)[0])


@dataclass
class DataConfig:
    image_size: int = 1024
    sources_lo: int = 120
    sources_hi: int = 150
    n_bins: int = 30
    sigma: float = 1.0
    psf_fwhm: float = 3.0
    overlap: int = 4
    n_train: int = 2048
    n_val: int = 256
    seed: int = 0

    def sim(self, split: int, index: int) -> SimConfig:
        s = image_seed(self.seed, split, index)
        n = int(np.random.default_rng(s).integers(self.sources_lo, self.sources_hi + 1))
        return SimConfig(image_size=self.image_size, n_sources=n, n_bins=self.n_bins, sigma=self.sigma,
                         psf_fwhm=self.psf_fwhm, seed=s)

    def scenes(self, split: int, count: int | None = None):
        i = 0
        while count is None or i < count:
            yield simulate(self.sim(split, i))
            i += 1


def build_datasets(data: DataConfig, grid: GridSpec, tcfg: TrainConfig) -> tuple[PatchSet, PatchSet]:
    tr = PatchSet.from_images(data.scenes(TRAIN), grid, tcfg.r_near, tcfg.r_far, data.overlap, data.n_train)
    va = PatchSet.from_images(data.scenes(VAL), grid, tcfg.r_near, tcfg.r_far, data.overlap, data.n_val)
    return tr, va


def train_model(out_dir, net_cfg: NetConfig, tcfg: TrainConfig, data: DataConfig,
                datasets=None, name: str = "model") -> tuple[PPN, list, Path]:
    """Train one model and write ``<name>.ppnmodel`` and ``<name>.history.csv`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tr, va = datasets if datasets is not None else build_datasets(data, net_cfg.grid, tcfg)
    log.info("training on %d patches, validating on %d", len(tr), len(va))
    model = build(net_cfg)
    model, history = train(model, tr, va, tcfg, history_path=out / f"{name}.history.csv")
    path = out / f"{name}.ppnmodel"
    save(model, path)
    write_history(out / f"{name}.history.csv", history)
    return model, history, path


@dataclass
class EvalResult:
    tally: Tally
    rtp_tallies: dict = field(default_factory=dict)

    def summary(self) -> dict:
        m = self.tally.result
        p, r = precision(m), recall(m)
        return {"precision": p, "recall": r, "f1": f1(p, r), "tp": m.tp, "fp": m.fp, "fn": m.fn}


def test_scenes(data: DataConfig, n_images: int) -> list[tuple[Image, Catalog]]:
    return list(data.scenes(TEST, n_images))


def evaluate_model(model: PPN, scenes, grid: GridSpec, r_nms_values, c_nms: float = 0.8,
                   r_tp: float = 0.4, rtp_sweep=(), overlap: int = 4) -> dict:
    """Evaluate one model at several NMS radii, reusing one forward pass per image."""
    results = {float(r): EvalResult(Tally(), {float(t): Tally() for t in rtp_sweep}) for r in r_nms_values}
    icfg = InferConfig(overlap=overlap, c_nms=c_nms)
    for image, truth in scenes:
        props = propose(model, image, grid, icfg)
        for r_nms, res in results.items():
            det = to_catalog(nms(props, r_nms, c_nms, grid.spacing), image.width, image.height)
            res.tally.add(match(det, truth, r_tp, grid.spacing), truth)
            for t, tal in res.rtp_tallies.items():
                tal.add(match(det, truth, t, grid.spacing), truth)
    return results


def evaluate_baseline(scenes, grid: GridSpec, r_tp: float = 0.4, rtp_sweep=(), thresholds=None,
                      min_area: int = 3) -> EvalResult:
    res = EvalResult(Tally(), {float(t): Tally() for t in rtp_sweep})
    for image, truth in scenes:
        det = floodfill.multi_threshold_detect(image, thresholds, min_area)
        res.tally.add(match(det, truth, r_tp, grid.spacing), truth)
        for t, tal in res.rtp_tallies.items():
            tal.add(match(det, truth, t, grid.spacing), truth)
    return res


def accuracy_tables(results: dict, edges, baseline: EvalResult | None = None) -> dict:
    """Per-r_NMS summaries, recall per flux bin and precision per r_tp."""
    out = {}
    for r_nms, res in results.items():
        out[f"ppn@{r_nms:g}"] = _tables(res, edges)
    if baseline is not None:
        out["baseline"] = _tables(baseline, edges)
    return out


def _tables(res: EvalResult, edges) -> dict:
    d = res.summary()
    d["per_bin"] = res.tally.recall_by_bin(edges)
    d["per_rtp"] = [{"r_tp": t, "precision": precision(tal.result)} for t, tal in sorted(res.rtp_tallies.items())]
    return d


def rnms_sweep(model: PPN, scenes, grid: GridSpec, r_nms_values, c_nms: float = 0.8, r_tp: float = 0.4,
               overlap: int = 4) -> list[dict]:
    results = evaluate_model(model, scenes, grid, r_nms_values, c_nms, r_tp, rtp_sweep=(1.0,), overlap=overlap)
    rows = []
    for r_nms, res in sorted(results.items()):
        s = res.summary()
        rows.append({"r_nms": r_nms, "precision": s["precision"], "recall": s["recall"], "f1": s["f1"],
                     "precision_rtp1": precision(res.rtp_tallies[1.0].result)})
    return rows


def focal_sweep(out_dir, points, net_cfg: NetConfig, tcfg: TrainConfig, data: DataConfig, n_test: int = 10,
                r_nms: float = 0.35, c_nms: float = 0.8) -> list[dict]:
    """Train one model per ``(gamma, alpha)`` point on shared data; evaluate each on shared test images."""
    out = Path(out_dir)
    datasets = build_datasets(data, net_cfg.grid, tcfg)
    scenes = test_scenes(data, n_test)
    rows = []
    for gamma, alpha in points:
        name = focal_model_name(gamma, alpha)
        path = out / f"{name}.ppnmodel"
        cfg = TrainConfig(**{**tcfg.to_dict(), "gamma": gamma, "alpha": alpha})
        if path.exists():
            from .net import load
            model = load(path, expect=net_cfg)
            log.info("reusing %s", path)
        else:
            model, _, path = train_model(out, net_cfg, cfg, data, datasets, name)
        res = evaluate_model(model, scenes, net_cfg.grid, [r_nms], c_nms)[float(r_nms)]
        rows.append({"gamma": gamma, "alpha": alpha, **res.summary(), "model": path.name})
    return rows


def focal_model_name(gamma: float, alpha: float) -> str:
    return f"model_g{gamma:g}_a{alpha:g}"


def speed(sizes, repeats: int, seed: int, model: PPN | None, net_cfg: NetConfig, detectors=("ppn", "baseline"),
          overlap: int = 4, on_record=None):
    if model is None:
        model = build(net_cfg)  # weights do not affect timing
    model.eval()
    dets = []
    if "ppn" in detectors:
        dets.append(bench.PPNDetector(model, net_cfg.grid, InferConfig(overlap=overlap)))
    if "baseline" in detectors:
        dets.append(bench.BaselineDetector())
    return bench.scaling_run(dets, sizes, repeats, seed, on_record=on_record)


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_rows(path, rows: list[dict]) -> None:
    import csv

    if not rows:
        Path(path).write_text("")
        return
    keys = list(rows[0])
    for r in rows[1:]:
        keys += [k for k in r if k not in keys]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def flux_edges(data: DataConfig):
    return flux_bin_edges(data.n_bins, data.sigma)
