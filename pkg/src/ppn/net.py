"""The proposal network: a residual base plus a three-convolution proposal head.

The base downsamples the input by stride-2 convolutions until it matches the
origin grid; the head turns the feature map into an ``(m, n)`` confidence
matrix (logistic output) and an ``(m, n, 2)`` offset matrix in grid units.
"""
from __future__ import annotations

import json
import math
import struct
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .core import FormatError, GridSpec

MODEL_MAGIC = b"PPNMODL1"

# conv layers = 1 stem + 2 per residual block (1x1 projection shortcuts not counted)
STAGE_LAYOUTS = {
    9: (1, 1, 1, 1),
    17: (3, 2, 2, 1),
    31: (5, 4, 3, 3),
}
STAGE_CHANNELS = (32, 64, 128, 256)
STEM_CHANNELS = 16


@dataclass(frozen=True)
class NetConfig:
    base_depth: int = 31
    input_size: int = 224
    grid: GridSpec = field(default_factory=GridSpec)
    stem_channels: int = STEM_CHANNELS
    stage_channels: tuple = STAGE_CHANNELS
    stage_blocks: tuple | None = None
    head_channels: int = 128
    pi: float = 0.01
    dropout_rate: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.grid, dict):
            object.__setattr__(self, "grid", GridSpec(**self.grid))
        object.__setattr__(self, "stage_channels", tuple(self.stage_channels))
        if self.stage_blocks is None:
            if self.base_depth not in STAGE_LAYOUTS:
                raise ValueError(
                    f"base_depth {self.base_depth} has no reference layout; "
                    f"choose one of {sorted(STAGE_LAYOUTS)} or pass stage_blocks"
                )
            object.__setattr__(self, "stage_blocks", STAGE_LAYOUTS[self.base_depth])
        object.__setattr__(self, "stage_blocks", tuple(self.stage_blocks))
        if self.input_size != self.grid.patch_size:
            raise ValueError(
                f"input_size {self.input_size} differs from grid.patch_size {self.grid.patch_size}"
            )
        ratio = self.input_size // self.grid.grid_m
        if self.input_size % self.grid.grid_m or ratio < 2 or ratio & (ratio - 1):
            raise ValueError(
                f"input_size / grid_m = {self.input_size / self.grid.grid_m} must be a power of two >= 2"
            )
        n_down = int(math.log2(ratio))
        if len(self.stage_blocks) != n_down - 1:
            raise ValueError(
                f"{n_down} downsamplings need {n_down - 1} stages, got stage_blocks={self.stage_blocks}"
            )
        if len(self.stage_channels) != len(self.stage_blocks):
            raise ValueError("stage_channels and stage_blocks must have equal length")
        if any(b < 1 for b in self.stage_blocks):
            raise ValueError("every stage needs at least one residual block")
        if 1 + 2 * sum(self.stage_blocks) != self.base_depth:
            raise ValueError(
                f"stage_blocks {self.stage_blocks} give {1 + 2 * sum(self.stage_blocks)} conv layers, "
                f"not base_depth={self.base_depth}"
            )
        if not 0 < self.pi < 1:
            raise ValueError("pi must lie in (0, 1)")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError("dropout_rate must lie in [0, 1)")

    @property
    def n_downsample(self) -> int:
        return int(math.log2(self.input_size // self.grid.grid_m))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stage_channels"] = list(self.stage_channels)
        d["stage_blocks"] = list(self.stage_blocks)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NetConfig":
        d = dict(d)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown NetConfig keys: {sorted(unknown)}")
        if "grid" in d and isinstance(d["grid"], dict):
            d["grid"] = GridSpec(**d["grid"])
        for k in ("stage_channels", "stage_blocks"):
            if d.get(k) is not None:
                d[k] = tuple(d[k])
        return cls(**d)


def confidence_bias(pi: float) -> float:
    """Bias that makes a zero-input logistic output equal ``pi``."""
    return -math.log((1.0 - pi) / pi)


class ResidualBlock(nn.Module):
    def __init__(self, c_in: int, c_out: int, stride: int, dropout: float):
        super().__init__()
        self.conv1 = nn.Conv2d(c_in, c_out, 3, stride=stride, padding=1, bias=False)
        self.bn1 = nn.BatchNorm2d(c_out)
        self.conv2 = nn.Conv2d(c_out, c_out, 3, stride=1, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(c_out)
        self.shortcut = nn.Identity()
        if stride != 1 or c_in != c_out:
            self.shortcut = nn.Sequential(
                nn.Conv2d(c_in, c_out, 1, stride=stride, bias=False),
                nn.BatchNorm2d(c_out),
            )
        self.drop = nn.Dropout(dropout)

    def forward(self, x):
        out = torch.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        return self.drop(torch.relu(out + self.shortcut(x)))


class PPN(nn.Module):
    """Input ``(B, 1, P, P)``; returns ``(confidence (B, m, n), regression (B, m, n, 2))``."""

    def __init__(self, config: NetConfig):
        super().__init__()
        self.config = config
        gen_state = torch.random.get_rng_state()
        torch.manual_seed(config.seed)
        try:
            self._build(config)
        finally:
            torch.random.set_rng_state(gen_state)

    def _build(self, cfg: NetConfig):
        self.stem = nn.Sequential(
            nn.Conv2d(1, cfg.stem_channels, 3, stride=2, padding=1, bias=False),
            nn.BatchNorm2d(cfg.stem_channels),
            nn.ReLU(inplace=True),
        )
        blocks = []
        c_in = cfg.stem_channels
        for n_blocks, c_out in zip(cfg.stage_blocks, cfg.stage_channels):
            for b in range(n_blocks):
                blocks.append(ResidualBlock(c_in, c_out, 2 if b == 0 else 1, cfg.dropout_rate))
                c_in = c_out
        self.base = nn.Sequential(*blocks)

        hc = cfg.head_channels
        self.head = nn.Sequential(
            nn.Conv2d(c_in, hc, 3, padding=1),
            nn.Dropout(cfg.dropout_rate),
            nn.Conv2d(hc, hc, 3, padding=1),
            nn.Dropout(cfg.dropout_rate),
        )
        self.conf_out = nn.Conv2d(hc, 1, 1)
        self.reg_out = nn.Conv2d(hc, 2, 1)

        for m in self.modules():
            if isinstance(m, nn.Conv2d):
                nn.init.kaiming_normal_(m.weight, mode="fan_in", nonlinearity="relu")
                if m.bias is not None:
                    nn.init.zeros_(m.bias)
        for m in self.head:
            if isinstance(m, nn.Conv2d):
                nn.init.kaiming_normal_(m.weight, mode="fan_in", nonlinearity="linear")
        for m in (self.conf_out, self.reg_out):
            nn.init.normal_(m.weight, std=0.01)
        nn.init.constant_(self.conf_out.bias, confidence_bias(cfg.pi))
        nn.init.zeros_(self.reg_out.bias)

    def logits(self, x):
        feat = self.head(self.base(self.stem(x)))
        return self.conf_out(feat)[:, 0], self.reg_out(feat).permute(0, 2, 3, 1)

    def forward(self, x):
        z, reg = self.logits(x)
        return torch.sigmoid(z), reg


def build(config: NetConfig) -> PPN:
    return PPN(config)


def count_conv_layers(model: PPN) -> int:
    """Main-path convolutions of the base (stem + residual convs)."""
    n = 1
    for blk in model.base:
        n += 2
    return n


@dataclass
class NetOutput:
    confidence: np.ndarray  # (m, n) in (0, 1)
    regression: np.ndarray  # (m, n, 2) grid-unit (dx, dy)


def _as_batch(patches, input_size: int) -> np.ndarray:
    arr = np.asarray(getattr(patches, "values", patches), dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1:] != (input_size, input_size):
        raise ValueError(
            f"expected patches of shape ({input_size}, {input_size}), got {arr.shape[-2:]}"
        )
    return arr


@torch.no_grad()
def forward_batch(model: PPN, patches, device=None) -> tuple[np.ndarray, np.ndarray]:
    """Eval-mode forward of ``(B, P, P)`` patches; returns numpy confidence and regression."""
    arr = _as_batch(patches, model.config.input_size)
    was_training = model.training
    model.eval()
    try:
        x = torch.from_numpy(arr).unsqueeze(1)
        param = next(model.parameters())
        x = x.to(device=device or param.device, dtype=param.dtype)
        conf, reg = model(x)
        conf = conf.clamp(1e-7, 1 - 1e-7)
        return conf.cpu().numpy(), reg.cpu().numpy()
    finally:
        model.train(was_training)


def forward(model: PPN, patch) -> NetOutput:
    """Forward one normalized patch (an :class:`~ppn.core.Image` or 2-D array)."""
    conf, reg = forward_batch(model, patch)
    return NetOutput(conf[0], reg[0])


# ---------------------------------------------------------------------------
# model container
#
# layout (little endian):
#   magic "PPNMODL1"
#   u32 config_len, config JSON (utf-8)
#   u32 n_entries
#   per entry: u16 name_len, name (utf-8), u8 ndim, u32 * ndim shape, f32 * prod(shape) data
#   u32 crc32 of everything above


def save(model: PPN, path) -> None:
    cfg = json.dumps({"format": 1, "net": model.config.to_dict()}, sort_keys=True).encode()
    state = {k: v for k, v in model.state_dict().items() if v.is_floating_point()}
    parts = [MODEL_MAGIC, struct.pack("<I", len(cfg)), cfg, struct.pack("<I", len(state))]
    for name, tensor in state.items():
        arr = tensor.detach().cpu().numpy().astype("<f4")
        raw = name.encode()
        parts.append(struct.pack("<H", len(raw)) + raw)
        parts.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes(order="C"))
    body = b"".join(parts)
    tmp = Path(str(path) + ".tmp")
    tmp.write_bytes(body + struct.pack("<I", zlib.crc32(body)))
    tmp.replace(path)


class _Reader:
    def __init__(self, data: bytes, path):
        self.data, self.pos, self.path = data, 0, path

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(f"{self.path}: truncated while reading {what}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def load(path, expect: NetConfig | None = None, grid: GridSpec | None = None) -> PPN:
    """Read a model file; ``expect``/``grid`` reject files built for another geometry."""
    data = Path(path).read_bytes()
    if data[:8] != MODEL_MAGIC:
        raise FormatError(f"{path}: not a model file (bad magic {data[:8]!r})")
    if len(data) < 12:
        raise FormatError(f"{path}: truncated")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    rd = _Reader(body, path)
    rd.take(8, "magic")
    (clen,) = rd.unpack("<I", "config length")
    try:
        header = json.loads(rd.take(clen, "config").decode())
        config = NetConfig.from_dict(header["net"])
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"{path}: bad config block: {exc}") from None
    if zlib.crc32(body) != crc:
        raise FormatError(f"{path}: checksum mismatch (file truncated or corrupt)")
    if expect is not None:
        _check_expected(config, expect, path)
    if grid is not None and config.grid != grid:
        for f in ("patch_size", "grid_m", "grid_n"):
            if getattr(config.grid, f) != getattr(grid, f):
                raise FormatError(
                    f"{path}: grid.{f} is {getattr(config.grid, f)}, expected {getattr(grid, f)}"
                )

    (n_entries,) = rd.unpack("<I", "entry count")
    arrays = {}
    for k in range(n_entries):
        (nlen,) = rd.unpack("<H", f"entry {k} name length")
        name = rd.take(nlen, f"entry {k} name").decode()
        (ndim,) = rd.unpack("<B", f"entry {name!r} rank")
        shape = rd.unpack(f"<{ndim}I", f"entry {name!r} shape")
        count = int(np.prod(shape)) if ndim else 1
        raw = rd.take(4 * count, f"entry {name!r} data")
        arrays[name] = np.frombuffer(raw, dtype="<f4").reshape(shape)
    if rd.pos != len(body):
        raise FormatError(f"{path}: {len(body) - rd.pos} trailing bytes after last entry")

    model = PPN(config)
    state = model.state_dict()
    for name, tensor in state.items():
        if not tensor.is_floating_point():
            continue
        if name not in arrays:
            raise FormatError(f"{path}: missing entry {name!r}")
        if tuple(arrays[name].shape) != tuple(tensor.shape):
            raise FormatError(
                f"{path}: entry {name!r} has shape {arrays[name].shape}, model expects {tuple(tensor.shape)}"
            )
        state[name] = torch.from_numpy(arrays[name].astype(np.float32))
    extra = set(arrays) - set(state)
    if extra:
        raise FormatError(f"{path}: unexpected entry {sorted(extra)[0]!r}")
    model.load_state_dict(state)
    model.eval()
    return model


def _check_expected(found: NetConfig, expect: NetConfig, path) -> None:
    fd, ed = found.to_dict(), expect.to_dict()
    for key in ed:
        if key == "grid":
            for g in ("patch_size", "grid_m", "grid_n"):
                if fd["grid"][g] != ed["grid"][g]:
                    raise FormatError(f"{path}: grid.{g} is {fd['grid'][g]}, expected {ed['grid'][g]}")
        elif key != "seed" and fd[key] != ed[key]:
            raise FormatError(f"{path}: {key} is {fd[key]!r}, expected {ed[key]!r}")
