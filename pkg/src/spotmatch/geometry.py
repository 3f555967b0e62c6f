"""Polygon geometry for paired-boundary text regions: area, IoU, centers, DIoU."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEGENERATE_AREA_EPS = 1e-12
DIOU_DENOM_EPS = 1e-9


class GeometryError(ValueError):
    """Malformed polygon input (too few points, odd count where pairs are required, K mismatch)."""


class SelfIntersectionError(GeometryError):
    """Polygon failed the simplicity check while validation was requested."""


@dataclass(frozen=True)
class Polygon:
    """Closed ring of planar points, normalized image coordinates.

    Text instances carry 2K points: the first K trace the top boundary left
    to right, the last K the bottom boundary right to left.
    """

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(p[0]), float(p[1])) for p in self.points)
        if len(pts) < 3:
            raise GeometryError(f"polygon needs at least 3 points, got {len(pts)}")
        if not all(math.isfinite(x) and math.isfinite(y) for x, y in pts):
            raise GeometryError("polygon has non-finite coordinates")
        object.__setattr__(self, "points", pts)

    @property
    def k(self) -> int:
        """Number of top/bottom vertex pairs; requires an even point count."""
        if len(self.points) % 2 != 0:
            raise GeometryError(
                f"paired-boundary polygon needs an even point count, got {len(self.points)}"
            )
        return len(self.points) // 2

    @property
    def degenerate(self) -> bool:
        """True when the enclosed area vanishes (collinear or repeated points)."""
        return polygon_area(self) <= DEGENERATE_AREA_EPS

    def as_array(self) -> np.ndarray:
        return np.array(self.points, dtype=float)

    def translated(self, dx: float, dy: float) -> "Polygon":
        return Polygon(tuple((x + dx, y + dy) for x, y in self.points))


@dataclass(frozen=True)
class CenterLine:
    """K center points, midpoints of corresponding top/bottom boundary vertices."""

    centers: tuple[tuple[float, float], ...]

    def as_array(self) -> np.ndarray:
        return np.array(self.centers, dtype=float)


def signed_area(poly: Polygon) -> float:
    """Shoelace area; positive for counterclockwise rings."""
    pts = poly.as_array()
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_area(poly: Polygon) -> float:
    """Absolute enclosed area; 0.0 for degenerate (collinear) rings."""
    return abs(signed_area(poly))


def is_simple(poly: Polygon) -> bool:
    """True when no two non-adjacent edges intersect or touch."""
    pts = poly.as_array()
    n = len(pts)
    for i in range(n):
        a0, a1 = pts[i], pts[(i + 1) % n]
        for j in range(i + 1, n):
            # adjacent edges share a vertex by construction
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b0, b1 = pts[j], pts[(j + 1) % n]
            if _segments_intersect(a0, a1, b0, b1):
                return False
    return True


def _orient(p, q, r) -> float:
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _on_segment(p, q, r) -> bool:
    # r collinear with p-q assumed; check r within the bounding box of p-q
    return (
        min(p[0], q[0]) <= r[0] <= max(p[0], q[0])
        and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])
    )


def _segments_intersect(a0, a1, b0, b1) -> bool:
    d1 = _orient(b0, b1, a0)
    d2 = _orient(b0, b1, a1)
    d3 = _orient(a0, a1, b0)
    d4 = _orient(a0, a1, b1)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0:
        return True
    if d1 == 0 and _on_segment(b0, b1, a0):
        return True
    if d2 == 0 and _on_segment(b0, b1, a1):
        return True
    if d3 == 0 and _on_segment(a0, a1, b0):
        return True
    if d4 == 0 and _on_segment(a0, a1, b1):
        return True
    return False


def center_points(poly: Polygon) -> CenterLine:
    """Midpoints of boundary pairs: center k pairs vertex k with vertex 2K-1-k."""
    k = poly.k
    pts = poly.points
    centers = tuple(
        (
            0.5 * (pts[i][0] + pts[2 * k - 1 - i][0]),
            0.5 * (pts[i][1] + pts[2 * k - 1 - i][1]),
        )
        for i in range(k)
    )
    return CenterLine(centers)


def _ring_edges(ring: np.ndarray):
    x0 = ring[:, 0]
    y0 = ring[:, 1]
    x1 = np.concatenate((x0[1:], x0[:1]))
    y1 = np.concatenate((y0[1:], y0[:1]))
    return x0, y0, x1, y1


def _points_inside(points: np.ndarray, ring: np.ndarray) -> np.ndarray:
    """Crossing-number containment test for each query point against a ring."""
    x0, y0, x1, y1 = _ring_edges(ring)
    return _inside(points[:, 0], points[:, 1], x0, y0, x1, y1)


def _inside(xs, ys, ex0, ey0, ex1, ey1) -> np.ndarray:
    straddles = (ey0[None, :] > ys[:, None]) != (ey1[None, :] > ys[:, None])
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = ex0[None, :] + (ys[:, None] - ey0[None, :]) * (ex1 - ex0)[None, :] / (
            ey1 - ey0
        )[None, :]
    hits = straddles & (xs[:, None] < xc)
    return hits.sum(axis=1) % 2 == 1


def _ccw(ring: np.ndarray) -> np.ndarray:
    x, y = ring[:, 0], ring[:, 1]
    if np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y) < 0:
        return ring[::-1].copy()
    return ring


def _boundary_contribution(p: np.ndarray, q: np.ndarray) -> float:
    """Integral of x dy over the parts of CCW ring p that lie inside ring q.

    Each edge of p is split at its crossings with q's edges; a sub-segment
    contributes (x0+x1)/2 * (y1-y0) when its midpoint falls inside q.
    Horizontal edges carry dy = 0 and are skipped, which also sidesteps
    containment tests on shared horizontal boundary segments.
    """
    px0, py0, px1, py1 = _ring_edges(p)
    qx0, qy0, qx1, qy1 = _ring_edges(q)
    pdx = px1 - px0
    pdy = py1 - py0
    qdx = qx1 - qx0
    qdy = qy1 - qy0
    denom = pdx[:, None] * qdy[None, :] - pdy[:, None] * qdx[None, :]
    rx = qx0[None, :] - px0[:, None]
    ry = qy0[None, :] - py0[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (rx * qdy[None, :] - ry * qdx[None, :]) / denom
        u = (rx * pdy[:, None] - ry * pdx[:, None]) / denom
    valid = (denom != 0.0) & (t > 0.0) & (t < 1.0) & (u >= 0.0) & (u <= 1.0)
    seg_t0 = []
    seg_t1 = []
    seg_edge = []
    for i in np.nonzero(pdy != 0.0)[0]:
        cuts = np.sort(t[i][valid[i]])
        ts = np.concatenate(([0.0], cuts, [1.0]))
        seg_t0.append(ts[:-1])
        seg_t1.append(ts[1:])
        seg_edge.append(np.full(len(ts) - 1, i, dtype=int))
    if not seg_edge:
        return 0.0
    t0 = np.concatenate(seg_t0)
    t1 = np.concatenate(seg_t1)
    edge = np.concatenate(seg_edge)
    mid = 0.5 * (t0 + t1)
    keep = _inside(
        px0[edge] + mid * pdx[edge], py0[edge] + mid * pdy[edge], qx0, qy0, qx1, qy1
    )
    if not keep.any():
        return 0.0
    t0 = t0[keep]
    t1 = t1[keep]
    edge = edge[keep]
    xa = px0[edge] + t0 * pdx[edge]
    xb = px0[edge] + t1 * pdx[edge]
    ya = py0[edge] + t0 * pdy[edge]
    yb = py0[edge] + t1 * pdy[edge]
    return float(np.sum(0.5 * (xa + xb) * (yb - ya)))


def _intersection_area(a: np.ndarray, b: np.ndarray) -> float:
    pa = _ccw(a)
    pb = _ccw(b)
    return _boundary_contribution(pa, pb) + _boundary_contribution(pb, pa)


def _same_ring(a: Polygon, b: Polygon) -> bool:
    """True when both rings list the same vertex cycle (any rotation/direction)."""
    pa, pb = a.points, b.points
    if len(pa) != len(pb):
        return False
    n = len(pa)
    for seq in (pb, pb[::-1]):
        for shift in range(n):
            if all(pa[i] == seq[(i + shift) % n] for i in range(n)):
                return True
    return False


def polygon_iou(a: Polygon, b: Polygon, validate: bool = False) -> float:
    """Intersection-over-union of two simple polygons, in [0, 1].

    Degenerate input yields 0.0 (check ``Polygon.degenerate`` to distinguish
    it from honest disjointness). Arguments are ordered canonically before
    clipping so the result is bit-symmetric.
    """
    if validate:
        for poly in (a, b):
            if not is_simple(poly):
                raise SelfIntersectionError("polygon is self-intersecting")
    area_a = polygon_area(a)
    area_b = polygon_area(b)
    if area_a <= DEGENERATE_AREA_EPS or area_b <= DEGENERATE_AREA_EPS:
        return 0.0
    if _same_ring(a, b):
        return 1.0
    first, second = sorted((a.points, b.points))
    inter = _intersection_area(
        np.array(first, dtype=float), np.array(second, dtype=float)
    )
    inter = min(max(inter, 0.0), min(area_a, area_b))
    union = area_a + area_b - inter
    return min(max(inter / union, 0.0), 1.0)


def polygon_diou(a: Polygon, b: Polygon, validate: bool = False) -> float:
    """Distance-IoU for paired-boundary polygons, in [-1, 1].

    IoU minus the mean center-point distance normalized by the largest
    cross distance between the two boundary point sets. A near-zero
    normalizer (coincident degenerate clouds) makes the penalty 0.
    """
    if a.k != b.k:
        raise GeometryError(f"K mismatch: {a.k} vs {b.k}")
    iou = polygon_iou(a, b, validate=validate)
    ca = center_points(a).as_array()
    cb = center_points(b).as_array()
    mean_center_dist = float(np.mean(np.hypot(*(ca - cb).T)))
    pa = a.as_array()
    pb = b.as_array()
    diff = pa[:, None, :] - pb[None, :, :]
    max_cross = float(np.sqrt((diff * diff).sum(axis=2)).max())
    if max_cross < DIOU_DENOM_EPS:
        penalty = 0.0
    else:
        penalty = mean_center_dist / max_cross
    return iou - penalty
