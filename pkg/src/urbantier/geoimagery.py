"""Tile math, ASCII-grid covariate rasters and segmentation summaries."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .dataset import MISSING, FeatureMatrix, GeoPoint
from .errors import DataError

MERCATOR_LAT_LIMIT = 85.0511287798066
N_SEG_CLASSES = 150
SEG_IGNORE = 255


def point_to_tile(point: GeoPoint, zoom: int):
    """Slippy-map tile containing the point."""
    if not (0 <= zoom <= 22):
        raise DataError(f"zoom {zoom} outside [0, 22]")
    if abs(point.lat) >= MERCATOR_LAT_LIMIT:
        raise DataError(f"latitude {point.lat} beyond Web-Mercator bound")
    n = 2 ** zoom
    x = int(math.floor((point.lng + 180.0) / 360.0 * n))
    lat_rad = math.radians(point.lat)
    y = int(math.floor((1.0 - math.asinh(math.tan(lat_rad)) / math.pi) / 2.0 * n))
    # points exactly on the antimeridian / pole edge stay in range
    return min(x, n - 1), min(y, n - 1), zoom


def tile_to_point(x: int, y: int, zoom: int) -> GeoPoint:
    """North-west corner of a tile (inverse of the slippy mapping)."""
    n = 2 ** zoom
    lng = x / n * 360.0 - 180.0
    lat = math.degrees(math.atan(math.sinh(math.pi * (1.0 - 2.0 * y / n))))
    return GeoPoint(lat, lng)


def tile_center(x: int, y: int, zoom: int) -> GeoPoint:
    nw = tile_to_point(x, y, zoom)
    se = tile_to_point(x + 1, y + 1, zoom)
    return GeoPoint((nw.lat + se.lat) / 2.0, (nw.lng + se.lng) / 2.0)


@dataclass
class CovariateRaster:
    """Row-major grid (first row is the northernmost) in ASCII-grid layout."""

    name: str
    ncols: int
    nrows: int
    xllcorner: float
    yllcorner: float
    cellsize: float
    nodata: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(
            self.nrows, self.ncols)
        if self.cellsize <= 0:
            raise DataError(f"raster {self.name}: cellsize must be positive")

    def sample(self, point: GeoPoint) -> float:
        """Value of the cell containing the point; NaN when out of bounds
        or nodata."""
        col = math.floor((point.lng - self.xllcorner) / self.cellsize)
        row_south = math.floor((point.lat - self.yllcorner) / self.cellsize)
        if not (0 <= col < self.ncols and 0 <= row_south < self.nrows):
            warnings.warn(f"point ({point.lat}, {point.lng}) outside raster {self.name}")
            return MISSING
        v = self.values[self.nrows - 1 - row_south, col]
        if v == self.nodata:
            return MISSING
        return float(v)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"ncols {self.ncols}\n")
            fh.write(f"nrows {self.nrows}\n")
            fh.write(f"xllcorner {self.xllcorner!r}\n")
            fh.write(f"yllcorner {self.yllcorner!r}\n")
            fh.write(f"cellsize {self.cellsize!r}\n")
            fh.write(f"NODATA_value {self.nodata!r}\n")
            for row in self.values:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def load(cls, path, name: str | None = None) -> "CovariateRaster":
        header = {}
        rows = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                parts = line.split()
                if not parts:
                    continue
                key = parts[0].lower()
                if len(parts) == 2 and key in ("ncols", "nrows", "xllcorner",
                                               "yllcorner", "cellsize",
                                               "nodata_value"):
                    header[key] = float(parts[1])
                else:
                    rows.append([float(v) for v in parts])
        try:
            ncols = int(header["ncols"])
            nrows = int(header["nrows"])
        except KeyError as exc:
            raise DataError(f"{path}: missing header field {exc}") from None
        values = np.array(rows, dtype=np.float64)
        if values.size != ncols * nrows:
            raise DataError(f"{path}: expected {ncols * nrows} values, got {values.size}")
        import os
        return cls(
            name=name or os.path.splitext(os.path.basename(str(path)))[0],
            ncols=ncols, nrows=nrows,
            xllcorner=header["xllcorner"], yllcorner=header["yllcorner"],
            cellsize=header["cellsize"],
            nodata=header.get("nodata_value", -9999.0),
            values=values.reshape(nrows, ncols),
        )


def sample_raster(raster: CovariateRaster, point: GeoPoint) -> float:
    return raster.sample(point)


@dataclass
class SegmentationSummary:
    image_id: str
    proportions: np.ndarray

    def __post_init__(self):
        self.proportions = np.asarray(self.proportions, dtype=np.float64)
        if self.proportions.shape != (N_SEG_CLASSES,):
            raise DataError(f"segmentation summary needs {N_SEG_CLASSES} entries")


def segmentation_proportions_from_array(pixels: np.ndarray,
                                        image_id: str = "") -> SegmentationSummary:
    pixels = np.asarray(pixels)
    bad = (pixels >= N_SEG_CLASSES) & (pixels != SEG_IGNORE)
    if bad.any():
        raise DataError(
            f"class-index image {image_id!r}: values in 150..254 are invalid")
    valid = pixels[pixels != SEG_IGNORE]
    if valid.size == 0:
        raise DataError(f"class-index image {image_id!r}: all pixels ignored")
    counts = np.bincount(valid.ravel().astype(np.int64), minlength=N_SEG_CLASSES)
    return SegmentationSummary(image_id, counts / valid.size)


def segmentation_proportions(path, image_id: str | None = None) -> SegmentationSummary:
    """Pixel-class proportions of a single-channel 8-bit class-index PNG."""
    with Image.open(path) as img:
        if img.mode != "L":
            raise DataError(f"{path}: expected single-channel 8-bit image, got {img.mode}")
        pixels = np.asarray(img, dtype=np.uint8)
    if image_id is None:
        import os
        image_id = os.path.splitext(os.path.basename(str(path)))[0]
    return segmentation_proportions_from_array(pixels, image_id)


def build_geo_features(records, rasters) -> FeatureMatrix:
    """One ``geo:`` column per raster, nearest-cell sampled per household."""
    cols = [f"geo:{r.name}" for r in rasters]
    values = np.full((len(records), len(rasters)), MISSING)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for i, rec in enumerate(records):
            for j, raster in enumerate(rasters):
                values[i, j] = raster.sample(rec.location)
    return FeatureMatrix([r.id for r in records], cols, values)
