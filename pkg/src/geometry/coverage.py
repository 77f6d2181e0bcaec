import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
import numpy as np
import shapely
from src.consts import THETA_STRONG
from src.geometry.boundary import BoundaryVertexSet, build_boundary, feature_bounds
from src.geometry.shapes import NOISE, AlphaShape, Polygon, alpha_shape, convex_hull, dbscan, dbscan_params, polygon_area
from src.preprocess.preprocess import CorrelationMatrix
from src.projection.pilot import InstanceSpace, ProjectionModel, project
from src.utils.errors import DegenerateBoundary, DegenerateHull
from src.utils.utils import write_json

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Footprint:
    cluster: int
    size: int
    shape: AlphaShape


@dataclass(frozen=True)
class CoverageReport:
    area_is: float
    area_bound: float
    coverage_percent: float
    boundary: Polygon
    footprints: list[Footprint]
    k: int
    eps: float
    noise_count: int
    boundary_vertices: int = 0
    eliminated_vertices: int = 0
    union: list[Polygon] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            'area_IS': self.area_is,
            'area_bound': self.area_bound,
            'coverage_percent': self.coverage_percent,
            'dbscan': {'k': self.k, 'eps': self.eps, 'noise': self.noise_count},
            'boundary': {
                'polygon': self.boundary.to_dict(),
                'surviving_vertices': self.boundary_vertices,
                'eliminated_vertices': self.eliminated_vertices,
            },
            'footprints': [
                {
                    'cluster': f.cluster,
                    'size': f.size,
                    'alpha': f.shape.alpha,
                    'degenerate': f.shape.degenerate,
                    'area': f.shape.area,
                    'polygons': [p.to_dict() for p in f.shape.polygons],
                }
                for f in self.footprints
            ],
        }

    def save(self, path: str | Path) -> None:
        write_json(path, self.to_dict())


def coverage_percent(area_is: float, area_bound: float) -> float:
    """share of the possible scenario space covered by footprints, in percent"""
    if not area_bound > 0:
        raise DegenerateBoundary(f'boundary area is {area_bound}')
    return 100.0 * area_is / area_bound


def _polygons_of(geometry) -> list[Polygon]:
    if geometry.is_empty:
        return []
    if geometry.geom_type == 'Polygon':
        return [Polygon.from_shapely(geometry)]
    return [Polygon.from_shapely(g) for g in geometry.geoms if g.geom_type == 'Polygon' and not g.is_empty]


def boundary_polygon(model: ProjectionModel, boundary: BoundaryVertexSet) -> Polygon:
    """hull of the projected surviving vertices; the projection is linear so edges need no projecting"""
    vertices = boundary.vertices
    if len(vertices) == 0:
        raise DegenerateBoundary('every boundary vertex was eliminated')
    try:
        return convex_hull(project(model, vertices.T).T)
    except DegenerateHull as e:
        raise DegenerateBoundary(f'projected boundary is degenerate: {e}')


def compute_coverage(space: InstanceSpace, model: ProjectionModel, bounds: tuple[np.ndarray, np.ndarray] | None = None,
                     rho: CorrelationMatrix | np.ndarray | None = None, theta_strong: float = THETA_STRONG,
                     k: int | None = None, eps: float | None = None, workers: int = 4) -> CoverageReport:
    """
    coverage of the instance space: footprint area over the area of the
    projected feature hypercube

    (k, eps) default to the automatic rule; passing them pins the density scale
    """
    start_time = time.time()
    coords = space.coords
    r = len(coords)
    if r < 3:
        raise DegenerateBoundary(f'coverage needs at least 3 instances, got {r}')

    upper, lower = bounds if bounds is not None else feature_bounds(space.features)
    if rho is None:
        rho_matrix = np.eye(model.n)
    elif isinstance(rho, CorrelationMatrix):
        rho_matrix = rho.select(model.feature_names).rho
    else:
        rho_matrix = np.asarray(rho, dtype=float)

    boundary = build_boundary(upper, lower, rho_matrix, theta_strong, feature_names=model.feature_names)
    hull = boundary_polygon(model, boundary)
    area_bound = polygon_area(hull)
    if not area_bound > 0:
        raise DegenerateBoundary('projected boundary has zero area')

    if k is None or eps is None:
        ranges = np.ptp(coords, axis=0)
        if not np.all(ranges > 0):
            raise DegenerateBoundary('instances do not spread over both axes')
        auto_k, auto_eps = dbscan_params(r, float(ranges[0]), float(ranges[1]))
        k = auto_k if k is None else k
        eps = auto_eps if eps is None else eps

    labels = dbscan(coords, k, eps)
    cluster_ids = sorted(int(c) for c in np.unique(labels) if c != NOISE)
    noise = int(np.sum(labels == NOISE))
    logger.info(f'dbscan with k={k}, eps={eps:.6g} found {len(cluster_ids)} clusters and {noise} noise points')

    shapes: dict[int, AlphaShape] = {}
    with ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_cluster = {executor.submit(alpha_shape, coords[labels == c]): c for c in cluster_ids}
        for future in as_completed(future_to_cluster):
            shapes[future_to_cluster[future]] = future.result()

    footprints = [Footprint(cluster=c, size=int(np.sum(labels == c)), shape=shapes[c]) for c in cluster_ids]
    pieces = [f.shape.to_shapely() for f in footprints if f.shape.polygons]
    union = shapely.union_all(pieces) if pieces else shapely.Polygon()
    area_is = float(union.area)

    percent = coverage_percent(area_is, area_bound)
    logger.info(f'coverage {percent:.2f}% (area_IS {area_is:.4f}, area_bound {area_bound:.4f}) '
                f'in {time.time() - start_time:.2f}s')
    return CoverageReport(
        area_is=area_is,
        area_bound=area_bound,
        coverage_percent=percent,
        boundary=hull,
        footprints=footprints,
        k=int(k),
        eps=float(eps),
        noise_count=noise,
        boundary_vertices=int(boundary.survives.sum()),
        eliminated_vertices=len(boundary.eliminated_index),
        union=_polygons_of(union),
    )
