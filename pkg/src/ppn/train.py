"""Ground-truth encoding, the focal + regression loss, and the training loop."""
from __future__ import annotations

import copy
import csv
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
import torch
import torch.nn.functional as F

from .core import Catalog, GridSpec
from .net import PPN
from .skysim import patch_array, patch_truth

log = logging.getLogger(__name__)

R_NEAR = math.sqrt(2 * 0.5**2)
EPS = 1e-7
# absorbs rounding when a source sits exactly on the r_near circle
_BOUNDARY_TOL = 1e-12


@dataclass
class TargetMaps:
    c_hat: np.ndarray   # (m, n) 0/1
    r_hat: np.ndarray   # (m, n, 2) grid-unit offsets, zero where c_hat == 0
    b: np.ndarray       # (m, n) 0/1, origin contributes to the confidence loss
    b_star: np.ndarray  # (m, n) 0/1, origin contributes to the regression loss


@dataclass
class TrainConfig:
    alpha: float = 0.5
    gamma: float = 0.0
    r_near: float = R_NEAR
    r_far: float | None = None
    batch_size: int = 128
    n_c: float | None = None
    n_r: float | None = None
    epochs: int = 30
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    seed: int = 0

    def __post_init__(self):
        if self.r_far is None:
            self.r_far = self.r_near
        if self.r_far < self.r_near:
            raise ValueError("r_far must be >= r_near")
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def encode_targets(truth: Catalog, grid: GridSpec, r_near: float = R_NEAR, r_far: float | None = None) -> TargetMaps:
    """Per-origin targets for sources given in patch pixel coordinates.

    An origin is positive when its nearest source is within ``r_near`` grid
    units (inclusive); origins whose nearest source lies in ``(r_near, r_far]``
    are excluded from both loss terms.
    """
    if r_far is None:
        r_far = r_near
    m, n = grid.shape
    origins = grid.origin_centers().reshape(-1, 2)
    c_hat = np.zeros(m * n, dtype=np.float32)
    r_hat = np.zeros((m * n, 2), dtype=np.float32)
    if len(truth) == 0:
        ones = np.ones((m, n), dtype=np.float32)
        return TargetMaps(c_hat.reshape(m, n), r_hat.reshape(m, n, 2), ones, np.zeros((m, n), np.float32))

    diff = (truth.xy[None, :, :] - origins[:, None, :]) / grid.spacing  # (origins, sources, 2)
    d2 = (diff**2).sum(axis=-1)
    nearest = np.argmin(d2, axis=1)  # first index wins ties
    rows = np.arange(len(origins))
    d2_min = d2[rows, nearest]
    pos = d2_min <= r_near**2 + _BOUNDARY_TOL
    far = d2_min > r_far**2 + _BOUNDARY_TOL
    c_hat[pos] = 1.0
    r_hat[pos] = diff[rows, nearest][pos]
    b = (pos | far).astype(np.float32)
    return TargetMaps(c_hat.reshape(m, n), r_hat.reshape(m, n, 2), b.reshape(m, n), c_hat.reshape(m, n).copy())


def confidence_loss(c, targets: TargetMaps, alpha: float, gamma: float) -> float:
    """Focal confidence loss summed over origins with ``b == 1``."""
    c = np.asarray(c, dtype=np.float64)
    if c.shape != targets.c_hat.shape:
        raise ValueError(f"confidence shape {c.shape} != target shape {targets.c_hat.shape}")
    if ((c <= 0) | (c >= 1)).any():
        raise ValueError("confidence values must lie strictly in (0, 1); clamp to [1e-7, 1-1e-7] first")
    pos = targets.c_hat == 1
    term = np.where(pos, alpha * (1 - c) ** gamma * np.log(c), c**gamma * np.log1p(-c))
    return float(-(targets.b * term).sum())


def regression_loss(r, targets: TargetMaps) -> float:
    """Squared offset error over ``b* == 1`` origins, divided by the origin count."""
    r = np.asarray(r, dtype=np.float64)
    if r.shape != targets.r_hat.shape:
        raise ValueError(f"regression shape {r.shape} != target shape {targets.r_hat.shape}")
    m, n = targets.c_hat.shape
    sq = ((targets.r_hat - r) ** 2).sum(axis=-1)
    return float((targets.b_star * sq).sum() / (m * n))


def total_loss(e_c: float, e_r: float, n_c: float, n_r: float) -> float:
    return n_c * e_c + n_r * e_r


def batch_losses(logits, reg, c_hat, r_hat, b, b_star, alpha: float, gamma: float):
    """Per-sample ``(E_c, E_r)`` tensors for a batch, computed from confidence logits."""
    log_c = F.logsigmoid(logits).clamp(min=math.log(EPS), max=math.log1p(-EPS))
    log_1mc = F.logsigmoid(-logits).clamp(min=math.log(EPS), max=math.log1p(-EPS))
    c = log_c.exp()
    if gamma == 0:
        pos_term = alpha * log_c
        neg_term = log_1mc
    else:
        pos_term = alpha * (1 - c) ** gamma * log_c
        neg_term = c**gamma * log_1mc
    e_c = -(b * torch.where(c_hat == 1, pos_term, neg_term)).sum(dim=(1, 2))
    mn = c_hat.shape[1] * c_hat.shape[2]
    e_r = (b_star * ((r_hat - reg) ** 2).sum(dim=-1)).sum(dim=(1, 2)) / mn
    return e_c, e_r


class PatchSet:
    """Normalized patches with their encoded targets, held as contiguous arrays."""

    def __init__(self, patches: np.ndarray, targets: list[TargetMaps], truths: list[Catalog] | None = None):
        if len(patches) != len(targets):
            raise ValueError("patch and target counts differ")
        self.patches = np.ascontiguousarray(patches, dtype=np.float32)
        self.c_hat = np.stack([t.c_hat for t in targets]) if targets else np.zeros((0, 0, 0), np.float32)
        self.r_hat = np.stack([t.r_hat for t in targets]) if targets else np.zeros((0, 0, 0, 2), np.float32)
        self.b = np.stack([t.b for t in targets]) if targets else np.zeros((0, 0, 0), np.float32)
        self.b_star = np.stack([t.b_star for t in targets]) if targets else np.zeros((0, 0, 0), np.float32)
        self.truths = truths

    def __len__(self) -> int:
        return len(self.patches)

    def tensors(self, idx, dtype=torch.float32):
        conv = lambda a: torch.from_numpy(np.ascontiguousarray(a[idx])).to(dtype)  # noqa: E731
        return (conv(self.patches).unsqueeze(1), conv(self.c_hat), conv(self.r_hat),
                conv(self.b), conv(self.b_star))

    @classmethod
    def from_images(cls, scenes, grid: GridSpec, r_near: float = R_NEAR, r_far: float | None = None,
                    overlap: int = 4, limit: int | None = None) -> "PatchSet":
        """Patchify ``(image, truth)`` pairs and encode targets, stopping at ``limit`` patches."""
        patches, targets, truths = [], [], []
        for image, truth in scenes:
            arr, origins = patch_array(image, grid.patch_size, overlap)
            for p, origin in zip(arr, origins):
                local = patch_truth(truth, origin, grid.patch_size)
                patches.append(p)
                targets.append(encode_targets(local, grid, r_near, r_far))
                truths.append(local)
                if limit is not None and len(patches) >= limit:
                    return cls(np.stack(patches), targets, truths)
        return cls(np.stack(patches) if patches else np.zeros((0, grid.patch_size, grid.patch_size)),
                   targets, truths)


def _batch_loss(model: PPN, batch, cfg: TrainConfig):
    x, c_hat, r_hat, b, b_star = batch
    logits, reg = model.logits(x)
    e_c, e_r = batch_losses(logits, reg, c_hat, r_hat, b, b_star, cfg.alpha, cfg.gamma)
    n_c = cfg.n_c if cfg.n_c is not None else 1.0 / len(x)
    n_r = cfg.n_r if cfg.n_r is not None else 1.0 / len(x)
    return n_c * e_c.sum() + n_r * e_r.sum()


@torch.no_grad()
def evaluate_loss(model: PPN, data: PatchSet, cfg: TrainConfig) -> float:
    """Mean eval-mode loss over ``data``, batch-size weighted."""
    was_training = model.training
    model.eval()
    total, count = 0.0, 0
    dtype = next(model.parameters()).dtype
    try:
        for start in range(0, len(data), cfg.batch_size):
            idx = np.arange(start, min(start + cfg.batch_size, len(data)))
            loss = _batch_loss(model, data.tensors(idx, dtype), cfg)
            total += float(loss) * len(idx)
            count += len(idx)
    finally:
        model.train(was_training)
    return total / count


def train(model: PPN, train_set: PatchSet, val_set: PatchSet, config: TrainConfig,
          history_path=None, progress=None):
    """Adam training with per-epoch validation; returns the best-validation model and history.

    ``history`` is a list of ``{"epoch", "train_loss", "val_loss"}`` dicts, one
    per epoch. The returned model carries the parameters of the epoch with the
    lowest validation loss.
    """
    if len(train_set) == 0 or len(val_set) == 0:
        raise ValueError("training and validation sets must be non-empty")
    rng = np.random.default_rng(config.seed)
    torch.manual_seed(config.seed)
    opt = torch.optim.Adam(model.parameters(), lr=config.learning_rate,
                           betas=(config.beta1, config.beta2))
    dtype = next(model.parameters()).dtype
    history = []
    best_val, best_state = math.inf, None
    for epoch in range(1, config.epochs + 1):
        model.train()
        order = rng.permutation(len(train_set))
        running, seen = 0.0, 0
        for bi, start in enumerate(range(0, len(order), config.batch_size)):
            idx = order[start:start + config.batch_size]
            loss = _batch_loss(model, train_set.tensors(idx, dtype), config)
            if not torch.isfinite(loss):
                raise FloatingPointError(f"non-finite loss {loss.item()} at epoch {epoch}, batch {bi}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            running += loss.item() * len(idx)
            seen += len(idx)
        val = evaluate_loss(model, val_set, config)
        row = {"epoch": epoch, "train_loss": running / seen, "val_loss": val}
        history.append(row)
        log.info("epoch %d train %.5f val %.5f", epoch, row["train_loss"], val)
        if progress is not None:
            progress(row)
        if val < best_val:
            best_val = val
            best_state = copy.deepcopy(model.state_dict())
        if history_path is not None:
            write_history(history_path, history)
    model.load_state_dict(best_state)
    model.eval()
    return model, history


def write_history(path, history: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_loss", "val_loss"])
        for row in history:
            w.writerow([row["epoch"], repr(row["train_loss"]), repr(row["val_loss"])])
