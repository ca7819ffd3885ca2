"""Synthetic survey images: Gaussian-PSF point sources on white Gaussian noise.

Peak fluxes come from equal-population bins ``J_k = (1/3 + k/3) * sigma`` and
the image is linearly normalized to [0, 1] after rendering.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Catalog, Image, normalize

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class SimConfig:
    image_size: int = 1024
    n_sources: int = 135
    n_bins: int = 30
    sigma: float = 1.0
    psf_fwhm: float = 3.0
    seed: int = 0
    allow_overlap: bool = True

    def __post_init__(self):
        if self.image_size < 1:
            raise ValueError("image_size must be positive")
        if self.n_sources < 0:
            raise ValueError("n_sources must be >= 0")
        if self.n_bins < 1:
            raise ValueError("n_bins must be >= 1")
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if not self.psf_fwhm > 0:
            raise ValueError("psf_fwhm must be > 0")


def flux_bins(n_bins: int, sigma: float) -> np.ndarray:
    """Peak flux of each bin, ``(1/3 + k/3) * sigma`` for ``k = 0 .. n_bins-1``."""
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    k = np.arange(n_bins, dtype=np.float64)
    return (1.0 / 3.0 + k / 3.0) * sigma


def flux_bin_edges(n_bins: int, sigma: float) -> np.ndarray:
    """Edges halfway between consecutive bin fluxes (``n_bins + 1`` values)."""
    j = flux_bins(n_bins, sigma)
    step = sigma / 3.0
    return np.concatenate([[j[0] - step / 2], j + step / 2])


def flux_bin_index(flux, sigma: float) -> np.ndarray:
    """Inverse of :func:`flux_bins`: nearest bin index for each flux."""
    return np.rint(3.0 * np.asarray(flux, dtype=np.float64) / sigma - 1.0).astype(int)


def psf_radius(psf_fwhm: float) -> int:
    """Half-width of the rendering stamp; the profile is < 4e-6 of peak beyond it."""
    return int(math.ceil(5.0 * psf_fwhm * FWHM_TO_SIGMA))


def render_sources(shape: tuple[int, int], xy: np.ndarray, peaks: np.ndarray, psf_fwhm: float) -> np.ndarray:
    """Noise-free sky: a circular Gaussian of the given peak at each ``(x, y)``."""
    h, w = shape
    sky = np.zeros(shape, dtype=np.float64)
    s = psf_fwhm * FWHM_TO_SIGMA
    rad = psf_radius(psf_fwhm)
    inv = 1.0 / (2.0 * s * s)
    for (x, y), peak in zip(np.asarray(xy, dtype=np.float64), np.asarray(peaks, dtype=np.float64)):
        cx, cy = int(round(x)), int(round(y))
        x0, x1 = max(cx - rad, 0), min(cx + rad + 1, w)
        y0, y1 = max(cy - rad, 0), min(cy + rad + 1, h)
        if x0 >= x1 or y0 >= y1:
            continue
        gx = np.exp(-((np.arange(x0, x1) - x) ** 2) * inv)
        gy = np.exp(-((np.arange(y0, y1) - y) ** 2) * inv)
        sky[y0:y1, x0:x1] += peak * np.outer(gy, gx)
    return sky


def simulate(config: SimConfig, positions=None, bin_index=None) -> tuple[Image, Catalog]:
    """Generate a normalized image and its truth catalog.

    ``positions`` (``(n, 2)`` x/y) and ``bin_index`` (length ``n``) override
    the random draws; they are mainly useful for constructing test scenes.
    The catalog records the pre-normalization peak flux of every source.
    """
    size = config.image_size
    if size < 2 * psf_radius(config.psf_fwhm) + 1:
        raise ValueError(
            f"image_size {size} is too small for a PSF of FWHM {config.psf_fwhm} px "
            f"(needs >= {2 * psf_radius(config.psf_fwhm) + 1})"
        )
    rng = np.random.default_rng(config.seed)
    n = config.n_sources

    if positions is None:
        xy = rng.uniform(0.0, size, size=(n, 2))
    else:
        xy = np.asarray(positions, dtype=np.float64).reshape(n, 2)
    if bin_index is None:
        bins = np.arange(n) % config.n_bins
    else:
        bins = np.asarray(bin_index, dtype=int).reshape(n)
        if ((bins < 0) | (bins >= config.n_bins)).any():
            raise ValueError("bin_index out of range")
    if not config.allow_overlap and positions is None and n > 1:
        xy = _separate(xy, rng, size, config.psf_fwhm)
    peaks = flux_bins(config.n_bins, config.sigma)[bins]

    noise = rng.standard_normal((size, size)) * config.sigma
    raw = noise + render_sources((size, size), xy, peaks, config.psf_fwhm)
    image = Image(normalize(raw), rms_sigma=config.sigma)
    return image, Catalog(xy, peaks, kind="truth")


def _separate(xy: np.ndarray, rng, size: int, fwhm: float, max_tries: int = 1000) -> np.ndarray:
    """Redraw positions until no two sources lie within two FWHM of each other."""
    out = xy.copy()
    min_d2 = (2.0 * fwhm) ** 2
    for i in range(1, len(out)):
        for _ in range(max_tries):
            d2 = ((out[:i] - out[i]) ** 2).sum(axis=1)
            if (d2 >= min_d2).all():
                break
            out[i] = rng.uniform(0.0, size, size=2)
        else:
            raise ValueError("could not place sources without overlap; lower n_sources")
    return out


def patch_starts(length: int, patch_size: int, overlap: int) -> list[int]:
    """Start offsets along one axis; the last patch is clamped to the image edge."""
    if patch_size > length:
        raise ValueError(f"patch size {patch_size} exceeds image extent {length}")
    if not 0 <= overlap < patch_size:
        raise ValueError(f"overlap must satisfy 0 <= overlap < patch_size, got {overlap}")
    stride = patch_size - overlap
    starts = list(range(0, length - patch_size + 1, stride))
    if starts[-1] + patch_size < length:
        starts.append(length - patch_size)
    return starts


def patchify(image: Image, patch_size: int = 224, overlap: int = 4) -> list[tuple[Image, tuple[int, int]]]:
    """Tile ``image`` into ``patch_size`` squares; returns ``(patch, (x0, y0))`` pairs in raster order."""
    xs = patch_starts(image.width, patch_size, overlap)
    ys = patch_starts(image.height, patch_size, overlap)
    v = image.values
    return [
        (Image(v[y0:y0 + patch_size, x0:x0 + patch_size], image.rms_sigma), (x0, y0))
        for y0 in ys
        for x0 in xs
    ]


def patch_array(image: Image, patch_size: int = 224, overlap: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Stacked patches ``(N, P, P)`` and their ``(x0, y0)`` origins ``(N, 2)``."""
    xs = patch_starts(image.width, patch_size, overlap)
    ys = patch_starts(image.height, patch_size, overlap)
    v = image.values
    out = np.empty((len(xs) * len(ys), patch_size, patch_size), dtype=np.float32)
    origins = np.empty((len(out), 2), dtype=np.float64)
    k = 0
    for y0 in ys:
        for x0 in xs:
            out[k] = v[y0:y0 + patch_size, x0:x0 + patch_size]
            origins[k] = (x0, y0)
            k += 1
    return out, origins


def patch_truth(truth: Catalog, origin: tuple[float, float], patch_size: int) -> Catalog:
    """Truth sources inside a patch, shifted into patch-local coordinates."""
    x0, y0 = origin
    local = truth.shifted(-x0, -y0)
    inside = (local.x >= 0) & (local.x < patch_size) & (local.y >= 0) & (local.y < patch_size)
    return local.subset(inside)


def estimate_rms(values: np.ndarray) -> float:
    """Robust background rms from the median absolute deviation."""
    v = np.asarray(values, dtype=np.float64).ravel()
    return float(1.4826 * np.median(np.abs(v - np.median(v))))
