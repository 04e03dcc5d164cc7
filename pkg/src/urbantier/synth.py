"""Synthetic city generator: households, covariate rasters and street-scene
segmentation maps driven by one latent spatial affluence field."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import GeoPoint, HouseholdRecord, OrdinalBinning
from .errors import ConfigError
from .geoimagery import N_SEG_CLASSES, CovariateRaster

LAT0, LNG0, SPAN = 15.30, 75.05, 0.16
RASTER_CELLS = 40
SEG_IMAGE_SIDE = 24

INCOME_EDGES = (10000.0, 20000.0, 50000.0, 100000.0, 200000.0)
WATER_EDGES = (8.0, 15.0, 25.0, 40.0, 60.0)

# segmentation class indices used as signal carriers (ADE20K-style ids)
SEG_BUILDING, SEG_SKY, SEG_TREE, SEG_ROAD, SEG_CAR = 1, 2, 4, 6, 20


def default_binnings(n_classes: int):
    if not (2 <= n_classes <= 6):
        raise ConfigError("synthetic city supports 2..6 classes")
    income = OrdinalBinning(
        "income", INCOME_EDGES[: n_classes - 1],
        [f"income_class_{i}" for i in range(n_classes)])
    water = OrdinalBinning(
        "water", WATER_EDGES[: n_classes - 1],
        [f"water_class_{i}" for i in range(n_classes)])
    return income, water


def _field(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Smooth latent affluence surface on the unit square."""
    core = np.exp(-((u - 0.45) ** 2 + (v - 0.55) ** 2) / 0.09)
    texture = 0.35 * np.sin(2.7 * np.pi * u) * np.sin(1.9 * np.pi * v)
    ridge = 0.25 * np.exp(-((u - 0.85) ** 2 + (v - 0.2) ** 2) / 0.02)
    return core + texture + ridge


def _rank01(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=np.float64)
    ranks[order] = np.arange(len(x))
    return ranks / max(len(x) - 1, 1)


def _to_units(score: np.ndarray, edges, lo: float, hi: float,
              n_classes: int) -> np.ndarray:
    """Map scores to target units so score quantiles land on the bin edges,
    giving near-balanced classes."""
    qs = np.quantile(score, np.arange(1, n_classes) / n_classes)
    xs = np.concatenate([[score.min() - 1e-9], qs, [score.max() + 1e-9]])
    ys = np.concatenate([[lo], np.asarray(edges[: n_classes - 1]), [hi]])
    # guard against degenerate quantiles on tiny noise scales
    xs = np.maximum.accumulate(xs + np.arange(len(xs)) * 1e-12)
    return np.interp(score, xs, ys)


@dataclass
class SynthCity:
    records: list
    rasters: list
    seg_images: dict
    summaries: dict                      # id -> 150-vector of proportions
    income_binning: OrdinalBinning
    water_binning: OrdinalBinning


def generate_synthetic_city(size: int, n_classes: int = 4, seed: int = 0,
                            signal_strength: float = 0.9) -> SynthCity:
    """Deterministic synthetic survey with covariates correlated to a latent
    affluence score; target noise scales with (1 - signal_strength)."""
    if size < 100:
        raise ConfigError("size must be >= 100")
    if not (0.0 <= signal_strength <= 1.0):
        raise ConfigError("signal_strength must be in [0, 1]")
    income_binning, water_binning = default_binnings(n_classes)
    rng = np.random.default_rng(seed)

    u = rng.random(size)
    v = rng.random(size)
    s = _rank01(_field(u, v))

    def target_score():
        noise = rng.normal(0.0, 0.35, size)
        return signal_strength * s + (1.0 - signal_strength) * noise

    income = _to_units(target_score(), INCOME_EDGES, 2000.0, 180000.0, n_classes)
    water = _to_units(target_score(), WATER_EDGES, 0.5, 55.0, n_classes)

    hh_size = np.clip(np.round(6.0 - 4.0 * s + rng.normal(0, 0.9, size)), 1, 14)
    residents = np.clip(np.round(hh_size + rng.normal(0.5, 0.8, size)), 1, 18)
    dwell_score = s + rng.normal(0, 0.15, size)
    dwelling = np.where(dwell_score > 0.66, "detached",
                        np.where(dwell_score > 0.33, "apartment", "informal"))
    dma = [f"zone_{int(ui * 4)}{int(vi * 4)}" for ui, vi in zip(u, v)]

    records = []
    for i in range(size):
        records.append(HouseholdRecord(
            id=f"hh{i:05d}",
            location=GeoPoint(LAT0 + v[i] * SPAN, LNG0 + u[i] * SPAN),
            attributes={
                "household_size": float(hh_size[i]),
                "residents": float(residents[i]),
                "dwelling": str(dwelling[i]),
                "dma_zone": dma[i],
            },
            income_monthly=float(income[i]),
            water_kl=float(water[i]),
        ))

    # covariate rasters on the same latent surface
    cell = SPAN / RASTER_CELLS
    cu, cv = np.meshgrid((np.arange(RASTER_CELLS) + 0.5) / RASTER_CELLS,
                         (np.arange(RASTER_CELLS) + 0.5) / RASTER_CELLS)
    g = _field(cu, cv)
    g = (g - g.min()) / (g.max() - g.min())

    def raster(name, values):
        # ASCII grid rows run north to south: flip the v axis
        return CovariateRaster(name=name, ncols=RASTER_CELLS, nrows=RASTER_CELLS,
                               xllcorner=LNG0, yllcorner=LAT0, cellsize=cell,
                               nodata=-9999.0, values=values[::-1])

    rasters = [
        raster("nightlight", 5.0 + 58.0 * g + rng.normal(0, 0.4, g.shape)),
        raster("pop_density", 18000.0 - 11000.0 * g + rng.normal(0, 250.0, g.shape)),
        raster("building_sqft", 350.0 + 2400.0 * g + rng.normal(0, 40.0, g.shape)),
        raster("building_height", 3.0 + 9.0 * g + rng.normal(0, 0.25, g.shape)),
    ]

    # street-scene class maps sampled from per-household mixtures
    seg_images = {}
    summaries = {}
    n_px = SEG_IMAGE_SIDE * SEG_IMAGE_SIDE
    for i, rec in enumerate(records):
        sp = float(np.clip(s[i] + rng.normal(0, 0.03), 0.0, 1.0))
        probs = np.full(N_SEG_CLASSES, 0.001)
        probs[SEG_BUILDING] = 0.10 + 0.45 * sp
        probs[SEG_TREE] = 0.42 - 0.30 * sp
        probs[SEG_CAR] = 0.02 + 0.10 * sp
        probs[SEG_ROAD] = 0.12
        probs[SEG_SKY] = 0.18
        probs /= probs.sum()
        counts = rng.multinomial(n_px, probs)
        flat = np.repeat(np.arange(N_SEG_CLASSES), counts).astype(np.uint8)
        rng.shuffle(flat)
        seg_images[rec.id] = flat.reshape(SEG_IMAGE_SIDE, SEG_IMAGE_SIDE)
        summaries[rec.id] = counts / n_px

    return SynthCity(records, rasters, seg_images, summaries,
                     income_binning, water_binning)
