import math

import numpy as np
import pytest
from PIL import Image

from urbantier.dataset import GeoPoint, HouseholdRecord
from urbantier.errors import DataError
from urbantier.geoimagery import (CovariateRaster, build_geo_features,
                                  point_to_tile, sample_raster,
                                  segmentation_proportions,
                                  segmentation_proportions_from_array,
                                  tile_center)


def slippy_oracle(lat, lng, zoom):
    n = 2 ** zoom
    x = math.floor((lng + 180) / 360 * n)
    y = math.floor((1 - math.asinh(math.tan(math.radians(lat))) / math.pi) / 2 * n)
    return x, y


class TestTiles:
    def test_origin_zoom0(self):
        assert point_to_tile(GeoPoint(0, 0), 0) == (0, 0, 0)

    def test_origin_zoom1(self):
        # direct evaluation of the slippy formula
        assert slippy_oracle(0, 0, 1) == (1, 1)
        assert point_to_tile(GeoPoint(0, 0), 1) == (1, 1, 1)

    def test_roundtrip_random_points(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            lat = float(rng.uniform(-80, 80))
            lng = float(rng.uniform(-179.9, 179.9))
            zoom = int(rng.integers(1, 19))
            x, y, z = point_to_tile(GeoPoint(lat, lng), zoom)
            assert (x, y) == slippy_oracle(lat, lng, zoom)
            cx, cy, _ = point_to_tile(tile_center(x, y, zoom), zoom)
            assert (cx, cy) == (x, y)

    def test_mercator_bound_rejected(self):
        with pytest.raises(DataError):
            point_to_tile(GeoPoint(86.0, 0.0), 5)

    def test_zoom_range_rejected(self):
        with pytest.raises(DataError):
            point_to_tile(GeoPoint(0, 0), 23)

    def test_monotone_in_lng_and_lat(self):
        zoom = 10
        xs = [point_to_tile(GeoPoint(10.0, lng), zoom)[0]
              for lng in np.linspace(-170, 170, 50)]
        assert xs == sorted(xs)
        ys = [point_to_tile(GeoPoint(lat, 10.0), zoom)[1]
              for lat in np.linspace(-80, 80, 50)]
        assert ys == sorted(ys, reverse=True)


class TestRaster:
    def test_single_cell(self):
        r = CovariateRaster("t", 1, 1, 0.0, 0.0, 1.0, -9999.0, np.array([[7.0]]))
        assert sample_raster(r, GeoPoint(0.5, 0.5)) == 7.0

    def test_nodata_is_missing(self):
        r = CovariateRaster("t", 1, 1, 0.0, 0.0, 1.0, -9999.0,
                            np.array([[-9999.0]]))
        assert np.isnan(sample_raster(r, GeoPoint(0.5, 0.5)))

    def test_out_of_bounds_missing_with_warning(self):
        r = CovariateRaster("t", 1, 1, 0.0, 0.0, 1.0, -9999.0, np.array([[1.0]]))
        with pytest.warns(UserWarning, match="outside"):
            assert np.isnan(sample_raster(r, GeoPoint(5.0, 5.0)))

    def test_3x3_cell_centers(self):
        # constructed grid: every cell holds a distinct value
        vals = np.arange(9, dtype=float).reshape(3, 3)
        r = CovariateRaster("t", 3, 3, 10.0, 20.0, 0.5, -9999.0, vals)
        for i in range(3):        # row 0 is the northernmost
            for j in range(3):
                lat = 20.0 + (2 - i) * 0.5 + 0.25
                lng = 10.0 + j * 0.5 + 0.25
                assert sample_raster(r, GeoPoint(lat, lng)) == vals[i, j]

    def test_index_arithmetic_on_random_probes(self):
        rng = np.random.default_rng(1)
        vals = rng.normal(size=(8, 6))
        r = CovariateRaster("t", 6, 8, -3.0, 40.0, 0.25, -9999.0, vals)
        for _ in range(10_000 // 10):
            lng = float(rng.uniform(-3.0, -3.0 + 6 * 0.25 - 1e-9))
            lat = float(rng.uniform(40.0, 40.0 + 8 * 0.25 - 1e-9))
            col = math.floor((lng - r.xllcorner) / r.cellsize)
            row = math.floor((lat - r.yllcorner) / r.cellsize)
            assert sample_raster(r, GeoPoint(lat, lng)) == vals[8 - 1 - row, col]

    def test_ascii_grid_roundtrip(self, tmp_path):
        rng = np.random.default_rng(2)
        vals = rng.normal(size=(4, 5))
        r = CovariateRaster("night", 5, 4, 75.0, 15.0, 0.01, -9999.0, vals)
        p = tmp_path / "night.asc"
        r.save(p)
        back = CovariateRaster.load(p)
        assert back.name == "night"
        assert np.array_equal(back.values, r.values)
        assert back.cellsize == r.cellsize


class TestSegmentation:
    def test_2x2_example(self):
        s = segmentation_proportions_from_array(np.array([[1, 1], [2, 3]]))
        assert s.proportions[1] == 0.5
        assert s.proportions[2] == 0.25
        assert s.proportions[3] == 0.25
        assert s.proportions.sum() == 1.0

    def test_uniform_image(self):
        s = segmentation_proportions_from_array(np.full((4, 4), 5))
        assert s.proportions[5] == 1.0

    def test_ignore_pixels_excluded(self):
        img = np.array([[0, 255], [255, 1]])
        s = segmentation_proportions_from_array(img)
        assert s.proportions[0] == 0.5 and s.proportions[1] == 0.5

    def test_random_images_match_pixel_counts(self):
        # oracle: exhaustive pixel count
        rng = np.random.default_rng(3)
        for _ in range(20):
            img = rng.integers(0, 150, size=(16, 16))
            s = segmentation_proportions_from_array(img)
            assert abs(s.proportions.sum() - 1.0) < 1e-9
            for c in np.unique(img):
                assert s.proportions[c] == np.sum(img == c) / img.size

    def test_reserved_values_rejected(self):
        with pytest.raises(DataError, match="150..254"):
            segmentation_proportions_from_array(np.array([[150]]))

    def test_all_ignore_rejected(self):
        with pytest.raises(DataError, match="ignored"):
            segmentation_proportions_from_array(np.full((2, 2), 255))

    def test_png_roundtrip(self, tmp_path):
        img = np.array([[1, 1], [2, 3]], dtype=np.uint8)
        p = tmp_path / "x.png"
        Image.fromarray(img, mode="L").save(p)
        s = segmentation_proportions(p)
        assert s.image_id == "x"
        assert s.proportions[1] == 0.5

    def test_non_grayscale_rejected(self, tmp_path):
        p = tmp_path / "rgb.png"
        Image.new("RGB", (2, 2)).save(p)
        with pytest.raises(DataError, match="single-channel"):
            segmentation_proportions(p)


class TestGeoFeatures:
    def make_records(self):
        return [HouseholdRecord("h1", GeoPoint(20.25, 10.25), {}),
                HouseholdRecord("h2", GeoPoint(50.0, 50.0), {})]

    def test_known_cell_value_and_missing_row(self):
        r = CovariateRaster("night", 1, 1, 10.0, 20.0, 0.5, -9999.0,
                            np.array([[3.5]]))
        fm = build_geo_features(self.make_records(), [r])
        assert fm.column_names == ["geo:night"]
        assert fm.values[0, 0] == 3.5
        assert np.isnan(fm.values[1, 0])

    def test_column_order_matches_raster_order(self):
        a = CovariateRaster("a", 1, 1, 10.0, 20.0, 0.5, -9999.0, np.array([[1.0]]))
        b = CovariateRaster("b", 1, 1, 10.0, 20.0, 0.5, -9999.0, np.array([[2.0]]))
        fm = build_geo_features(self.make_records(), [b, a])
        assert fm.column_names == ["geo:b", "geo:a"]
