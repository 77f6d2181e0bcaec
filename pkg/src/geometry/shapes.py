import logging
import math
from dataclasses import dataclass, field
import numpy as np
import shapely
from scipy.spatial import ConvexHull, Delaunay, QhullError
from shapely.geometry import LinearRing
from shapely.geometry import Polygon as ShapelyPolygon
from shapely.geometry.polygon import orient
from sklearn.cluster import DBSCAN
from src.utils.errors import DegenerateHull, NotSimple

logger = logging.getLogger(__name__)

NOISE = -1


# region polygon
@dataclass(frozen=True)
class Polygon:
    """counterclockwise vertex ring, closed implicitly, with optional clockwise holes"""
    vertices: np.ndarray
    holes: list[np.ndarray] = field(default_factory=list)

    def to_shapely(self) -> ShapelyPolygon:
        return ShapelyPolygon(self.vertices, [h for h in self.holes])

    @classmethod
    def from_shapely(cls, poly: ShapelyPolygon) -> 'Polygon':
        poly = orient(poly, sign=1.0)
        return cls(
            vertices=np.asarray(poly.exterior.coords)[:-1],
            holes=[np.asarray(ring.coords)[:-1] for ring in poly.interiors],
        )

    def to_dict(self) -> dict:
        return {
            'vertices': self.vertices.tolist(),
            'holes': [h.tolist() for h in self.holes],
        }

    @classmethod
    def from_dict(cls, d: dict) -> 'Polygon':
        return cls(
            vertices=np.asarray(d['vertices'], dtype=float).reshape(-1, 2),
            holes=[np.asarray(h, dtype=float).reshape(-1, 2) for h in d.get('holes', [])],
        )


def _shoelace(ring: np.ndarray) -> float:
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_area(polygon: Polygon) -> float:
    """|shoelace| of the outer ring minus the holes"""
    for ring in [polygon.vertices, *polygon.holes]:
        if len(ring) < 3:
            raise NotSimple(f'a polygon ring needs 3 vertices, got {len(ring)}')
        if not LinearRing(ring).is_simple:
            raise NotSimple('polygon ring intersects itself')
    return abs(_shoelace(polygon.vertices)) - sum(abs(_shoelace(h)) for h in polygon.holes)
# endregion


def convex_hull(points) -> Polygon:
    """counterclockwise hull starting at the lexicographically smallest vertex, collinear points left out"""
    points = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(points) < 3:
        raise DegenerateHull(f'hull needs 3 distinct points, got {len(points)}')
    try:
        hull = ConvexHull(points)
    except QhullError:
        raise DegenerateHull('points are collinear')

    # qhull lists 2d hull vertices counterclockwise
    ring = points[hull.vertices]
    start = min(range(len(ring)), key=lambda i: (ring[i, 0], ring[i, 1]))
    return Polygon(vertices=np.roll(ring, -start, axis=0))


# region dbscan
def dbscan_params(r: int, range_z1: float, range_z2: float) -> tuple[int, float]:
    """minimum points k and radius eps from the instance count and the extent of the space"""
    k = max(min(math.ceil(r / 20), 50), 3)
    eps = k * math.gamma(2) / math.sqrt(r * math.pi) * (range_z1 * range_z2)
    return k, eps


def dbscan(points, k: int, eps: float) -> np.ndarray:
    """cluster id per point, NOISE for noise; a core point has k points (itself included) within eps"""
    points = np.asarray(points, dtype=float)
    return DBSCAN(eps=eps, min_samples=k, metric='euclidean', algorithm='kd_tree').fit_predict(points)
# endregion


# region alpha shape
@dataclass(frozen=True)
class AlphaShape:
    polygons: list[Polygon]
    alpha: float
    degenerate: bool = False

    @property
    def area(self) -> float:
        return float(sum(polygon_area(p) for p in self.polygons))

    def to_shapely(self):
        if not self.polygons:
            return ShapelyPolygon()
        return shapely.union_all([p.to_shapely() for p in self.polygons])


def circumradii(points: np.ndarray, simplices: np.ndarray) -> np.ndarray:
    a = points[simplices[:, 0]]
    b = points[simplices[:, 1]]
    c = points[simplices[:, 2]]
    ab = np.linalg.norm(b - a, axis=1)
    bc = np.linalg.norm(c - b, axis=1)
    ca = np.linalg.norm(a - c, axis=1)
    cross = np.abs((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
    with np.errstate(divide='ignore', invalid='ignore'):
        radii = ab * bc * ca / (2.0 * cross)
    return np.where(cross > 0, radii, np.inf)


def _single_region(points: np.ndarray, triangles: np.ndarray, n_points: int):
    """union of the triangles when it is one hole-free polygon touching every point, else None"""
    if len(np.unique(triangles)) < n_points:
        return None
    union = shapely.union_all(shapely.polygons(points[triangles]))
    if union.geom_type != 'Polygon' or union.is_empty or len(union.interiors) > 0:
        return None
    return union


def alpha_shape(points) -> AlphaShape:
    """
    tightest alpha shape that is still one region holding every point

    alpha runs over the sorted triangle circumradii and a binary search finds
    the smallest one whose kept triangles form a single polygon without holes
    """
    points = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(points) < 3:
        logger.warning(f'alpha shape of {len(points)} points is empty')
        return AlphaShape(polygons=[], alpha=0.0, degenerate=True)
    try:
        tri = Delaunay(points)
    except QhullError:
        logger.warning(f'alpha shape of {len(points)} collinear points is empty')
        return AlphaShape(polygons=[], alpha=0.0, degenerate=True)

    radii = circumradii(points, tri.simplices)
    finite = np.isfinite(radii)
    simplices, radii = tri.simplices[finite], radii[finite]
    if len(simplices) == 0:
        return AlphaShape(polygons=[], alpha=0.0, degenerate=True)
    candidates = np.unique(radii)

    lo, hi = 0, len(candidates) - 1
    # best always holds the region for candidates[hi]
    best = _single_region(points, simplices, len(points))
    if best is None:
        # every triangle together still leaves a point out or splits, use the hull
        logger.warning('full triangulation is not a single region, falling back to the convex hull')
        hull = convex_hull(points)
        return AlphaShape(polygons=[hull], alpha=float(candidates[-1]), degenerate=True)
    while lo < hi:
        mid = (lo + hi) // 2
        region = _single_region(points, simplices[radii <= candidates[mid]], len(points))
        if region is not None:
            hi, best = mid, region
        else:
            lo = mid + 1

    return AlphaShape(polygons=[Polygon.from_shapely(best)], alpha=float(candidates[lo]))
# endregion
