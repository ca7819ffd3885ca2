"""Command-line entry point: ``ppn <command> [options]``.

Every command's settings are merged from built-in defaults, then an optional
JSON file (``--config``), then explicit flags; ``--print-config`` shows the
effective settings as JSON that can be fed back through ``--config``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

log = logging.getLogger("ppn")


class UsageError(Exception):
    """Bad invocation: unknown keys, missing required settings (exit status 2)."""


class MissingPrerequisite(Exception):
    """An experiment needs an artifact produced by another command."""


# ---------------------------------------------------------------------------
# value parsers accept either the command-line string or a JSON value


def _int(v) -> int:
    if isinstance(v, bool):
        raise ValueError("expected an integer")
    return int(v)


def _float(v) -> float:
    return float(v)


def _str(v) -> str:
    return str(v)


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _opt_float(v):
    if v is None or str(v).lower() in ("none", "null", ""):
        return None
    return float(v)


def _int_list(v) -> list:
    if isinstance(v, (list, tuple)):
        return [int(x) for x in v]
    return [int(x) for x in str(v).split(",") if x.strip()]


def _float_list(v) -> list:
    """Comma list ``a,b,c`` or range ``lo:hi:n`` (n evenly spaced values, inclusive)."""
    if isinstance(v, (list, tuple)):
        return [float(x) for x in v]
    s = str(v)
    if ":" in s:
        lo, hi, n = s.split(":")
        return [float(x) for x in np.round(np.linspace(float(lo), float(hi), int(n)), 10)]
    return [float(x) for x in s.split(",") if x.strip()]


def _range_pair(v) -> list:
    if isinstance(v, (list, tuple)):
        lo, hi = v
    else:
        lo, hi = str(v).split(":")
    lo, hi = int(lo), int(hi)
    if lo < 0 or hi < lo:
        raise ValueError(f"bad source range {lo}:{hi}")
    return [lo, hi]


def _points(v) -> list:
    """Focal grid points ``gamma:alpha,gamma:alpha``."""
    if isinstance(v, (list, tuple)):
        return [[float(g), float(a)] for g, a in v]
    out = []
    for item in str(v).split(","):
        g, a = item.split(":")
        out.append([float(g), float(a)])
    return out


@dataclass(frozen=True)
class Opt:
    name: str
    parse: Callable
    default: Any = None
    help: str = ""
    required: bool = False

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")


FOCAL_GRID = "0:0.5,0:1,0:2,1:0.5,1:1,1:2,2:0.5,2:1,2:2"
TABLE_RTP = "0.05,0.1,0.15,0.2,0.25,0.4,0.5,1.0"

SEED = Opt("seed", _int, 0, "seed threaded through every stochastic component")

DATA_OPTS = [
    Opt("image_size", _int, 1024, "simulated image side in pixels"),
    Opt("sources", _range_pair, [120, 150], "source count range LO:HI per image"),
    Opt("n_bins", _int, 30, "flux bins"),
    Opt("sigma", _float, 1.0, "background rms"),
    Opt("psf_fwhm", _float, 3.0, "PSF FWHM in pixels"),
    Opt("overlap", _int, 4, "patch overlap in pixels"),
]
NET_OPTS = [
    Opt("base_depth", _int, 9, "base conv layers: 9, 17 or 31"),
    Opt("head_channels", _int, 128, "proposal-head width"),
    Opt("pi", _float, 0.01, "prior for the confidence-bias init"),
    Opt("dropout", _float, 0.2, "dropout rate"),
]
TRAIN_OPTS = [
    Opt("n_train", _int, 2048, "training patches"),
    Opt("n_val", _int, 256, "validation patches"),
    Opt("epochs", _int, 30, "training epochs"),
    Opt("batch_size", _int, 32, "patches per optimizer step"),
    Opt("learning_rate", _float, 1e-3, "Adam step size"),
    Opt("alpha", _float, 0.5, "focal positive weight"),
    Opt("gamma", _float, 0.0, "focal exponent"),
    Opt("r_far", _opt_float, None, "ignore-band outer radius in grid units (default r_near)"),
    Opt("n_c", _opt_float, None, "confidence-loss coefficient (default 1/batch size)"),
    Opt("n_r", _opt_float, None, "regression-loss coefficient (default 1/batch size)"),
]

COMMANDS: dict[str, list[Opt]] = {
    "simulate": [
        Opt("out", _str, None, "output directory", required=True),
        Opt("count", _int, 1, "number of images"),
        Opt("size", _int, 1024, "image side in pixels"),
        Opt("sources", _range_pair, [120, 150], "source count range LO:HI"),
        Opt("n_bins", _int, 30, "flux bins"),
        Opt("sigma", _float, 1.0, "background rms"),
        Opt("psf_fwhm", _float, 3.0, "PSF FWHM in pixels"),
        SEED,
    ],
    "train": [Opt("out", _str, None, "output directory", required=True), *DATA_OPTS, *NET_OPTS,
              *TRAIN_OPTS, SEED],
    "detect": [
        Opt("model", _str, None, "model file (.ppnmodel)", required=True),
        Opt("image", _str, None, "image file (.ppn)", required=True),
        Opt("out", _str, None, "detection CSV", required=True),
        Opt("r_nms", _float, 0.35, "NMS radius in grid units"),
        Opt("c_nms", _float, 0.8, "NMS confidence threshold"),
        Opt("overlap", _int, 4, "patch overlap in pixels"),
        Opt("batch_size", _int, 64, "patches per forward call"),
        SEED,
    ],
    "detect-baseline": [
        Opt("image", _str, None, "image file (.ppn)", required=True),
        Opt("out", _str, None, "detection CSV", required=True),
        Opt("tau", _float, 0.5, "normalized threshold"),
        Opt("min_area", _int, 3, "minimum island area in pixels"),
        Opt("connectivity", _int, 4, "4 or 8"),
        Opt("thresholds", _float_list, None, "descending list for multi-threshold mode"),
        SEED,
    ],
    "evaluate": [
        Opt("pred", _str, None, "detection CSV", required=True),
        Opt("truth", _str, None, "truth CSV", required=True),
        Opt("out", _str, None, "report JSON", required=True),
        Opt("r_tp", _float, 0.4, "match radius in grid units"),
        Opt("spacing", _float, 32.0, "pixels per grid unit"),
        Opt("flux_bins", _int, None, "report recall per flux bin"),
        Opt("sigma", _opt_float, None, "background rms for flux bins (default: image sidecar, else 1)"),
        Opt("rtp_sweep", _float_list, None, "precision curve radii, a,b,c or lo:hi:n"),
        SEED,
    ],
    "bench": [
        Opt("out", _str, None, "timings CSV", required=True),
        Opt("detector", _str, "both", "ppn, baseline or both"),
        Opt("sizes", _int_list, [1024, 2048, 3072, 4096], "comma-separated image sides"),
        Opt("repeats", _int, 50, "timed repeats per size"),
        Opt("model", _str, None, "model file; an untrained model of --base-depth is used if absent"),
        Opt("base_depth", _int, 9, "base depth for the untrained timing model"),
        Opt("overlap", _int, 4, "patch overlap in pixels"),
        SEED,
    ],
    "bench-report": [
        Opt("timings", _str, None, "timings CSV from 'bench'", required=True),
        Opt("out", _str, None, "output directory", required=True),
    ],
    "bench-kernels": [
        Opt("out", _str, None, "output CSV", required=True),
        Opt("sizes", _int_list, [1024, 2048], "mask sides"),
        Opt("repeats", _int, 3, "repeats per kernel"),
        SEED,
    ],
    "experiment": [
        Opt("out", _str, None, "output directory (default runs/<name>)"),
        Opt("model", _str, None, "trained model (accuracy, rnms-sweep)"),
        Opt("images", _int, 10, "held-out test images"),
        Opt("r_nms", _float, 0.35, "NMS radius"),
        Opt("r_nms_star", _opt_float, 0.8, "second NMS radius for accuracy (none to skip)"),
        Opt("c_nms", _float, 0.8, "NMS confidence threshold"),
        Opt("r_tp", _float, 0.4, "match radius"),
        Opt("rtp_sweep", _float_list, TABLE_RTP, "precision radii for accuracy"),
        Opt("r_nms_values", _float_list, "0.1,0.2,0.35,0.5,0.65,0.8,1.0", "rnms-sweep radii"),
        Opt("points", _points, FOCAL_GRID, "focal-sweep gamma:alpha points"),
        Opt("baseline", _bool, True, "also score the multi-threshold baseline (accuracy)"),
        Opt("sizes", _int_list, [1024, 2048, 3072, 4096], "speed: image sides"),
        Opt("repeats", _int, 5, "speed: repeats per size"),
        Opt("detector", _str, "both", "speed: ppn, baseline or both"),
        *DATA_OPTS, *NET_OPTS, *TRAIN_OPTS, SEED,
    ],
}
EXPERIMENTS = ("focal-sweep", "rnms-sweep", "accuracy", "speed")


class RunConfig:
    """Effective settings of one command with the source of each value."""

    def __init__(self, command: str, opts: list[Opt]):
        self.command = command
        self.opts = {o.name: o for o in opts}
        self.values: dict[str, Any] = {o.name: o.default for o in opts}
        self.provenance: dict[str, str] = {o.name: "default" for o in opts}

    def apply(self, settings: dict, source: str) -> None:
        for key, raw in settings.items():
            if key not in self.opts:
                raise UsageError(f"unknown setting {key!r} for '{self.command}' (from {source})")
            opt = self.opts[key]
            try:
                self.values[key] = None if raw is None else opt.parse(raw)
            except (TypeError, ValueError) as exc:
                raise UsageError(f"bad value for {key} ({source}): {raw!r}: {exc}") from None
            self.provenance[key] = source

    def check_required(self) -> None:
        for name, opt in self.opts.items():
            if opt.required and self.values[name] is None:
                raise UsageError(f"'{self.command}' requires {opt.flag}")

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None

    def as_json(self) -> str:
        return json.dumps(self.values, indent=2, sort_keys=True)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ppn", description="Point Proposal Network toolkit")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for name, opts in COMMANDS.items():
        sp = sub.add_parser(name, help=f"{name} (see '{name} --help')", argument_default=argparse.SUPPRESS)
        if name == "experiment":
            sp.add_argument("name", choices=EXPERIMENTS)
        sp.add_argument("--config", help="JSON settings file (flags override it)")
        sp.add_argument("--print-config", action="store_true", help="print effective settings as JSON and exit")
        for o in opts:
            default = o.default if not isinstance(o.default, list) else ",".join(map(str, o.default))
            sp.add_argument(o.flag, dest=o.name, metavar=o.name.upper(),
                            help=f"{o.help} (default: {default})")
    return p


def resolve(argv) -> tuple[argparse.Namespace, RunConfig]:
    args = _parser().parse_args(argv)
    cfg = RunConfig(args.command, COMMANDS[args.command])
    config_file = getattr(args, "config", None)
    if config_file:
        try:
            data = json.loads(Path(config_file).read_text())
        except OSError as exc:
            raise OSError(exc.errno, exc.strerror, config_file) from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"{config_file}: invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError(f"{config_file}: expected a JSON object")
        cfg.apply(data, f"file {config_file}")
    flags = {k: v for k, v in vars(args).items() if k in cfg.opts}
    cfg.apply(flags, "command line")
    return args, cfg


def run(argv=None) -> int:
    """Run one command; returns the process exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args, cfg = resolve(argv)
    except SystemExit as exc:  # argparse: --help or usage error
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"ppn: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"ppn: error: {exc.strerror}: {exc.filename}", file=sys.stderr)
        return 1

    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "print_config", False):
        print(cfg.as_json())
        return 0
    for name, src in cfg.provenance.items():
        log.debug("setting %s = %r (%s)", name, cfg.values[name], src)
    try:
        cfg.check_required()
        handler = HANDLERS[cfg.command]
        if cfg.command == "experiment":
            handler(cfg, args.name)
        else:
            handler(cfg)
    except UsageError as exc:
        print(f"ppn: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        where = exc.filename or ""
        print(f"ppn: error: {exc.strerror or exc}: {where}".rstrip(": "), file=sys.stderr)
        return 1
    except (MissingPrerequisite, ValueError, FloatingPointError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"ppn: error: {msg}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


# ---------------------------------------------------------------------------
# command handlers


def _seed_all(seed: int) -> None:
    import torch

    torch.manual_seed(seed)
    np.random.seed(seed % 2**32)


def _data_config(cfg: RunConfig):
    from .experiments import DataConfig

    lo, hi = cfg.sources
    return DataConfig(image_size=cfg.image_size, sources_lo=lo, sources_hi=hi, n_bins=cfg.n_bins,
                      sigma=cfg.sigma, psf_fwhm=cfg.psf_fwhm, overlap=cfg.overlap,
                      n_train=cfg.n_train, n_val=cfg.n_val, seed=cfg.seed)


def _net_config(cfg: RunConfig):
    from .net import NetConfig

    return NetConfig(base_depth=cfg.base_depth, head_channels=cfg.head_channels, pi=cfg.pi,
                     dropout_rate=cfg.dropout, seed=cfg.seed)


def _train_config(cfg: RunConfig):
    from .train import TrainConfig

    return TrainConfig(alpha=cfg.alpha, gamma=cfg.gamma, r_far=cfg.r_far, batch_size=cfg.batch_size,
                       n_c=cfg.n_c, n_r=cfg.n_r, epochs=cfg.epochs, learning_rate=cfg.learning_rate,
                       seed=cfg.seed)


def cmd_simulate(cfg: RunConfig) -> None:
    from .core import write_catalog, write_image
    from .experiments import image_seed
    from .skysim import SimConfig, simulate

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    lo, hi = cfg.sources
    for i in range(cfg.count):
        s = image_seed(cfg.seed, 0, i)
        n = int(np.random.default_rng(s).integers(lo, hi + 1))
        sc = SimConfig(image_size=cfg.size, n_sources=n, n_bins=cfg.n_bins, sigma=cfg.sigma,
                       psf_fwhm=cfg.psf_fwhm, seed=s)
        image, truth = simulate(sc)
        stem = out / f"img_{i:05d}"
        meta = {"rms_sigma": cfg.sigma, "seed": s, "n_sources": n, "image_size": cfg.size,
                "n_bins": cfg.n_bins, "psf_fwhm": cfg.psf_fwhm}
        write_image(stem.with_suffix(".ppn"), image, meta)
        write_catalog(stem.with_suffix(".truth.csv"), truth)
    print(f"wrote {cfg.count} image(s) to {out}")


def cmd_train(cfg: RunConfig) -> None:
    from .experiments import train_model, write_json

    _seed_all(cfg.seed)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "config.json", cfg.values)
    _, history, path = train_model(out, _net_config(cfg), _train_config(cfg), _data_config(cfg))
    (out / "model.history.csv").replace(out / "history.csv")
    best = min(history, key=lambda r: r["val_loss"])
    print(f"saved {path} (best epoch {best['epoch']}, val loss {best['val_loss']:.5f})")


def _load_model(path):
    from .net import load

    if not Path(path).exists():
        raise MissingPrerequisite(f"no trained model at {path}; run 'ppn train --out DIR' first")
    return load(path)


def cmd_detect(cfg: RunConfig) -> None:
    from .core import read_image, write_catalog
    from .infer import InferConfig, detect

    model = _load_model(cfg.model)
    image = read_image(cfg.image).normalized()
    icfg = InferConfig(overlap=cfg.overlap, r_nms=cfg.r_nms, c_nms=cfg.c_nms, batch_size=cfg.batch_size)
    cat = detect(model, image, model.config.grid, icfg)
    write_catalog(cfg.out, cat)
    print(f"{len(cat)} detections -> {cfg.out}")


def cmd_detect_baseline(cfg: RunConfig) -> None:
    from .core import read_image, write_catalog
    from .floodfill import multi_threshold_detect, threshold_blob_detect

    image = read_image(cfg.image).normalized()
    if cfg.thresholds:
        cat = multi_threshold_detect(image, cfg.thresholds, cfg.min_area, cfg.connectivity)
    else:
        cat = threshold_blob_detect(image, cfg.tau, cfg.min_area, cfg.connectivity)
    write_catalog(cfg.out, cat)
    print(f"{len(cat)} detections -> {cfg.out}")


def cmd_evaluate(cfg: RunConfig) -> None:
    from .core import read_catalog, read_meta
    from .evaluate import report
    from .experiments import write_json
    from .skysim import flux_bin_edges

    pred = read_catalog(cfg.pred, "detection")
    truth = read_catalog(cfg.truth, "truth")
    edges = None
    if cfg.flux_bins:
        sigma = cfg.sigma
        if sigma is None:
            meta = Path(str(cfg.truth).replace(".truth.csv", ".meta.json"))
            sigma = float(read_meta(meta).get("rms_sigma", 1.0)) if meta.exists() else 1.0
        edges = flux_bin_edges(cfg.flux_bins, sigma)
    rep = report(pred, truth, cfg.r_tp, cfg.spacing, edges, cfg.rtp_sweep)
    write_json(cfg.out, rep)
    print(f"precision {rep['precision']:.4f} recall {rep['recall']:.4f} f1 {rep['f1']:.4f} -> {cfg.out}")


def _detectors(name: str) -> tuple:
    if name not in ("ppn", "baseline", "both"):
        raise UsageError(f"--detector must be ppn, baseline or both, got {name!r}")
    return ("ppn", "baseline") if name == "both" else (name,)


def cmd_bench(cfg: RunConfig) -> None:
    from . import bench
    from .experiments import speed
    from .net import NetConfig

    _seed_all(cfg.seed)
    model = _load_model(cfg.model) if cfg.model else None
    net_cfg = model.config if model is not None else NetConfig(base_depth=cfg.base_depth, seed=cfg.seed)
    records = speed(cfg.sizes, cfg.repeats, cfg.seed, model, net_cfg, _detectors(cfg.detector), cfg.overlap)
    bench.write_csv(cfg.out, records)
    for det in _detectors(cfg.detector):
        print(f"{det}:\n{bench.table(records, det)}\n")


def cmd_bench_report(cfg: RunConfig) -> None:
    from . import bench
    from .experiments import write_rows

    records = bench.read_csv(cfg.timings)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for det in sorted({r.detector for r in records}):
        text = bench.table(records, det)
        (out / f"table_{det}.md").write_text(text + "\n")
        print(f"{det}:\n{text}\n")
    write_rows(out / "curves.csv", bench.curves(records))
    summ = bench.summarize(records)
    write_rows(out / "summary.csv", [
        {"detector": d, "size": s, "step": st, "mean": m, "std": sd, "n": n}
        for (d, s, st), (m, sd, n) in sorted(summ.items())
    ])


def cmd_bench_kernels(cfg: RunConfig) -> None:
    from . import bench, kernels
    from .experiments import write_rows

    rows = bench.compare_backends(cfg.sizes, cfg.repeats, cfg.seed)
    write_rows(cfg.out, rows)
    print(f"active backend: {kernels.BACKEND}")
    for r in rows:
        print(f"{r['kernel']:>13} {r['backend']:>7} {r['size']:>6}  mean {r['mean_s']:.4f}s  min {r['min_s']:.4f}s")


def cmd_experiment(cfg: RunConfig, name: str) -> None:
    from . import bench, experiments as ex

    _seed_all(cfg.seed)
    out = Path(cfg.out or f"runs/{name}")
    out.mkdir(parents=True, exist_ok=True)
    data = _data_config(cfg)
    net_cfg = _net_config(cfg)
    artifacts: list[str] = []

    def emit(fname: str, obj) -> None:
        path = out / fname
        if fname.endswith(".csv"):
            ex.write_rows(path, obj)
        else:
            ex.write_json(path, obj)
        artifacts.append(fname)

    if name == "focal-sweep":
        rows = ex.focal_sweep(out, [tuple(p) for p in cfg.points], net_cfg, _train_config(cfg), data,
                              cfg.images, cfg.r_nms, cfg.c_nms)
        emit("focal_sweep.csv", rows)
        artifacts += [r["model"] for r in rows]
        _print_rows(rows, ["gamma", "alpha", "precision", "recall", "f1"])
    elif name in ("rnms-sweep", "accuracy"):
        if not cfg.model:
            raise MissingPrerequisite(
                f"experiment {name} needs --model; produce one with 'ppn train --out DIR' "
                "or 'ppn experiment focal-sweep'")
        model = _load_model(cfg.model)
        scenes = ex.test_scenes(data, cfg.images)
        if name == "rnms-sweep":
            rows = ex.rnms_sweep(model, scenes, model.config.grid, cfg.r_nms_values, cfg.c_nms, cfg.r_tp,
                                 cfg.overlap)
            emit("rnms_sweep.csv", rows)
            _print_rows(rows, ["r_nms", "precision", "recall", "f1", "precision_rtp1"])
        else:
            radii = [cfg.r_nms] + ([cfg.r_nms_star] if cfg.r_nms_star is not None else [])
            res = ex.evaluate_model(model, scenes, model.config.grid, radii, cfg.c_nms, cfg.r_tp,
                                    cfg.rtp_sweep, cfg.overlap)
            base = (ex.evaluate_baseline(scenes, model.config.grid, cfg.r_tp, cfg.rtp_sweep)
                    if cfg.baseline else None)
            tables = ex.accuracy_tables(res, ex.flux_edges(data), base)
            emit("accuracy.json", tables)
            emit("precision_vs_rtp.csv", [
                {"detector": k, "r_tp": row["r_tp"], "precision": row["precision"]}
                for k, t in tables.items() for row in t["per_rtp"]])
            emit("recall_by_flux.csv", [
                {"detector": k, "flux": row["flux"], "n_truth": row["n_truth"], "recall": row["recall"]}
                for k, t in tables.items() for row in t["per_bin"]])
            _print_rows([{"detector": k, **{f: t[f] for f in ("precision", "recall", "f1")}}
                         for k, t in tables.items()], ["detector", "precision", "recall", "f1"])
    elif name == "speed":
        model = _load_model(cfg.model) if cfg.model else None
        if model is not None:
            net_cfg = model.config
        records = ex.speed(cfg.sizes, cfg.repeats, cfg.seed, model, net_cfg, _detectors(cfg.detector),
                           cfg.overlap)
        bench.write_csv(out / "timings.csv", records)
        artifacts.append("timings.csv")
        emit("curves.csv", bench.curves(records))
        for det in _detectors(cfg.detector):
            (out / f"table_{det}.md").write_text(bench.table(records, det) + "\n")
            artifacts.append(f"table_{det}.md")
            print(f"{det}:\n{bench.table(records, det)}\n")
    ex.write_json(out / "manifest.json", {"experiment": name, "config": cfg.values,
                                          "artifacts": sorted(set(artifacts))})


def _print_rows(rows: list[dict], keys: list[str]) -> None:
    print("  ".join(f"{k:>14}" for k in keys))
    for r in rows:
        print("  ".join(f"{r[k]:>14.4f}" if isinstance(r[k], float) else f"{r[k]!s:>14}" for k in keys))


HANDLERS = {
    "simulate": cmd_simulate,
    "train": cmd_train,
    "detect": cmd_detect,
    "detect-baseline": cmd_detect_baseline,
    "evaluate": cmd_evaluate,
    "bench": cmd_bench,
    "bench-report": cmd_bench_report,
    "bench-kernels": cmd_bench_kernels,
    "experiment": cmd_experiment,
}

if __name__ == "__main__":
    main()
