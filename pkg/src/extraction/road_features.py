import logging
from dataclasses import dataclass
import numpy as np
from src.consts import ROAD_FEATURES, STRAIGHT_ANGLE_DEG
from src.extraction.encoding import FeatureVector
from src.extraction.scenario_parser import RoadTest

logger = logging.getLogger(__name__)

# below this a per-vertex heading change counts as no turn at all
SIGN_EPS_DEG = 1e-6


@dataclass(frozen=True)
class RoadSegment:
    kind: str  # 'left' | 'right' | 'straight'
    vertices: list[int]
    angle: float = 0.0
    pivot_off: float = np.nan


def turn_angles(points: np.ndarray) -> np.ndarray:
    """signed heading change in degrees at every interior vertex, counterclockwise positive"""
    d = np.diff(points, axis=0)
    headings = np.arctan2(d[:, 1], d[:, 0])
    delta = np.diff(headings)
    delta = (delta + np.pi) % (2 * np.pi) - np.pi
    return np.degrees(delta)


def circumradius(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    ab = np.linalg.norm(b - a)
    bc = np.linalg.norm(c - b)
    ca = np.linalg.norm(a - c)
    cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    area = abs(cross) / 2.0
    if area <= 1e-12 * max(ab * bc, 1e-300):
        return np.inf
    return float(ab * bc * ca / (4.0 * area))


def segment_road(points: np.ndarray, straight_threshold: float = STRAIGHT_ANGLE_DEG) -> list[RoadSegment]:
    """
    split a road into turns and straights

    a maximal run of same-sign heading changes is a turn when its summed angle
    reaches straight_threshold; everything else is straight and adjacent
    straight pieces merge
    """
    angles = turn_angles(points)
    signs = np.where(np.abs(angles) < SIGN_EPS_DEG, 0, np.sign(angles)).astype(int)

    # runs over interior vertices 1..m-2
    runs: list[tuple[int, list[int]]] = []
    for i, s in enumerate(signs):
        vertex = i + 1
        if runs and runs[-1][0] == s:
            runs[-1][1].append(vertex)
        else:
            runs.append((s, [vertex]))

    segments: list[RoadSegment] = []
    for s, vertices in runs:
        total = float(np.sum(np.abs(angles[np.array(vertices) - 1])))
        if s != 0 and total >= straight_threshold:
            radii = [circumradius(points[v - 1], points[v], points[v + 1]) for v in vertices]
            radii = [r for r in radii if np.isfinite(r)]
            segments.append(RoadSegment(
                kind='left' if s > 0 else 'right',
                vertices=vertices,
                angle=total,
                pivot_off=float(np.mean(radii)) if radii else np.nan,
            ))
        elif segments and segments[-1].kind == 'straight':
            segments[-1].vertices.extend(vertices)
        else:
            segments.append(RoadSegment(kind='straight', vertices=list(vertices)))

    if not segments:
        # two points, one straight segment
        segments.append(RoadSegment(kind='straight', vertices=[]))
    return segments


def _stats(values: list[float], prefix: str) -> dict[str, float]:
    if not values:
        return {f'{s}_{prefix}': np.nan for s in ('min', 'max', 'mean', 'median', 'std')}
    arr = np.asarray(values, dtype=float)
    return {
        f'min_{prefix}': float(arr.min()),
        f'max_{prefix}': float(arr.max()),
        f'mean_{prefix}': float(arr.mean()),
        f'median_{prefix}': float(np.median(arr)),
        f'std_{prefix}': float(arr.std(ddof=0)),
    }


def extract_road_features(road: RoadTest, straight_threshold: float = STRAIGHT_ANGLE_DEG) -> FeatureVector:
    """15 structural features of a virtual road, angles in degrees and radii in meters"""
    points = np.asarray(road.road_points, dtype=float)
    segments = segment_road(points, straight_threshold)
    turns = [s for s in segments if s.kind != 'straight']

    features = {}
    features.update(_stats([s.angle for s in turns], 'angle'))
    features['total_angle'] = float(sum(s.angle for s in turns))
    features.update(_stats([s.pivot_off for s in turns if np.isfinite(s.pivot_off)], 'pivot_off'))
    features['num_l_turns'] = float(sum(1 for s in turns if s.kind == 'left'))
    features['num_r_turns'] = float(sum(1 for s in turns if s.kind == 'right'))
    features['num_straights'] = float(sum(1 for s in segments if s.kind == 'straight'))
    features['road_distance'] = float(np.sum(np.linalg.norm(np.diff(points, axis=0), axis=1)))

    return FeatureVector(
        names=list(ROAD_FEATURES),
        values=np.array([features[name] for name in ROAD_FEATURES], dtype=float),
        outcome=road.outcome,
        instance_id=road.test_id,
    )
