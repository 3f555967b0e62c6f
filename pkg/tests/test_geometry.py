import math

import numpy as np
import pytest

from spotmatch import (
    GeometryError,
    Polygon,
    SelfIntersectionError,
    center_points,
    is_simple,
    polygon_area,
    polygon_diou,
    polygon_iou,
)
from conftest import ribbon_polygon, star_polygon
from oracles import raster_iou

UNIT_SQUARE = Polygon(((0, 0), (1, 0), (1, 1), (0, 1)))
OFFSET_SQUARE = UNIT_SQUARE.translated(0.5, 0.0)
# hand evaluation of the offset-squares case: IoU 1/3, centers shift by 0.5,
# farthest cross-corner pair is (0,0)-(1.5,1)
OFFSET_DIOU = 1.0 / 3.0 - 0.5 / math.sqrt(1.5**2 + 1.0**2)


class TestPolygonType:
    def test_too_few_points(self):
        with pytest.raises(GeometryError):
            Polygon(((0, 0), (1, 1)))

    def test_non_finite(self):
        with pytest.raises(GeometryError):
            Polygon(((0, 0), (1, float("nan")), (1, 1)))

    def test_k_requires_even_count(self):
        with pytest.raises(GeometryError):
            _ = Polygon(((0, 0), (1, 0), (0, 1))).k

    def test_degenerate_flag(self):
        collinear = Polygon(((0, 0), (0.5, 0.5), (1, 1)))
        assert collinear.degenerate
        assert not UNIT_SQUARE.degenerate


class TestArea:
    def test_unit_square(self):
        assert polygon_area(UNIT_SQUARE) == 1.0

    def test_rotation_invariance(self):
        rotated = Polygon(((1, 1), (0, 1), (0, 0), (1, 0)))
        assert polygon_area(rotated) == polygon_area(UNIT_SQUARE)

    def test_triangle(self):
        assert polygon_area(Polygon(((0, 0), (1, 0), (0, 1)))) == 0.5

    def test_collinear_is_zero(self):
        assert polygon_area(Polygon(((0, 0), (0.5, 0.5), (1, 1)))) == 0.0


class TestIoU:
    def test_identical(self):
        assert polygon_iou(UNIT_SQUARE, UNIT_SQUARE) == 1.0

    def test_rotated_ring_is_same_region(self):
        rotated = Polygon(((1, 1), (0, 1), (0, 0), (1, 0)))
        assert polygon_iou(UNIT_SQUARE, rotated) == 1.0

    def test_offset_squares(self):
        value = polygon_iou(UNIT_SQUARE, OFFSET_SQUARE)
        assert value == pytest.approx(1.0 / 3.0, abs=1e-9)
        assert abs(value - raster_iou(UNIT_SQUARE.points, OFFSET_SQUARE.points)) < 1e-3

    def test_disjoint(self):
        assert polygon_iou(UNIT_SQUARE, UNIT_SQUARE.translated(5, 5)) == 0.0

    def test_degenerate_input(self):
        collinear = Polygon(((0, 0), (0.5, 0.5), (1, 1)))
        assert polygon_iou(collinear, UNIT_SQUARE) == 0.0

    def test_self_intersecting_rejected_when_validated(self):
        bowtie = Polygon(((0, 0), (1, 1), (1, 0), (0, 1)))
        assert not is_simple(bowtie)
        with pytest.raises(SelfIntersectionError):
            polygon_iou(bowtie, UNIT_SQUARE, validate=True)
        # without validation the call still returns a number
        polygon_iou(bowtie, UNIT_SQUARE)

    def test_symmetry_random(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            a = star_polygon(rng)
            b = star_polygon(rng)
            assert polygon_iou(a, b) == polygon_iou(b, a)

    def test_matches_rasterization(self):
        rng = np.random.default_rng(11)
        for _ in range(60):
            a = star_polygon(rng, n_points=int(rng.integers(6, 14)))
            b = star_polygon(rng, n_points=int(rng.integers(6, 14)))
            exact = polygon_iou(a, b)
            approx = raster_iou(a.points, b.points)
            assert abs(exact - approx) < 1e-3

    def test_translation_invariance(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            a = star_polygon(rng)
            b = star_polygon(rng)
            base = polygon_iou(a, b)
            shifted = polygon_iou(a.translated(0.37, -0.21), b.translated(0.37, -0.21))
            assert abs(base - shifted) < 1e-9


class TestCenterPoints:
    def test_unit_square_k3(self):
        poly = Polygon(((0, 0), (0.5, 0), (1, 0), (1, 1), (0.5, 1), (0, 1)))
        assert center_points(poly).centers == ((0.0, 0.5), (0.5, 0.5), (1.0, 0.5))

    def test_mirror_symmetric_centers_on_axis(self):
        poly = Polygon(((0, -0.2), (0.5, -0.4), (1, -0.1), (1, 0.1), (0.5, 0.4), (0, 0.2)))
        for _, y in center_points(poly).centers:
            assert y == 0.0

    def test_matches_direct_midpoints(self):
        rng = np.random.default_rng(3)
        poly = ribbon_polygon(rng, k=5)
        centers = center_points(poly).as_array()
        pts = poly.as_array()
        k = 5
        expected = 0.5 * (pts[:k] + pts[2 * k - 1 : k - 1 : -1])
        assert np.allclose(centers, expected, atol=0)

    def test_odd_count_rejected(self):
        with pytest.raises(GeometryError):
            center_points(Polygon(((0, 0), (1, 0), (0, 1))))


class TestDIoU:
    def test_identical_is_one(self):
        rng = np.random.default_rng(5)
        poly = ribbon_polygon(rng)
        assert abs(polygon_diou(poly, poly) - 1.0) < 1e-12

    def test_offset_squares(self):
        assert polygon_diou(UNIT_SQUARE, OFFSET_SQUARE) == pytest.approx(
            OFFSET_DIOU, abs=1e-9
        )

    def test_far_apart_is_negative(self):
        assert polygon_diou(UNIT_SQUARE, UNIT_SQUARE.translated(10, 10)) < 0

    def test_bounded_and_below_iou(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            a = ribbon_polygon(rng, k=4, center=(rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7)))
            b = ribbon_polygon(rng, k=4, center=(rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7)))
            diou = polygon_diou(a, b)
            assert -1.0 <= diou <= 1.0
            assert diou <= polygon_iou(a, b) + 1e-12

    def test_translation_invariance(self):
        rng = np.random.default_rng(19)
        a = ribbon_polygon(rng, k=6)
        b = ribbon_polygon(rng, k=6, center=(0.55, 0.52))
        base = polygon_diou(a, b)
        shifted = polygon_diou(a.translated(0.2, 0.3), b.translated(0.2, 0.3))
        assert abs(base - shifted) < 1e-9

    def test_k_mismatch(self):
        rng = np.random.default_rng(23)
        with pytest.raises(GeometryError):
            polygon_diou(ribbon_polygon(rng, k=4), ribbon_polygon(rng, k=5))

    def test_collapsed_clouds_have_zero_penalty(self):
        # all points coincide: degenerate area, zero normalizer -> plain IoU (0)
        dot = Polygon(((0.5, 0.5), (0.5, 0.5), (0.5, 0.5), (0.5, 0.5)))
        assert polygon_diou(dot, dot) == 0.0
