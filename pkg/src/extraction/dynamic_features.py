import logging
import math
from dataclasses import dataclass
import numpy as np
from src.consts import DYNAMIC_FEATURES
from src.extraction.encoding import EncodingTables, FeatureVector
from src.extraction.scenario_parser import ObstacleKind, ScenarioTimeline
from src.utils.errors import EmptyTimeline

logger = logging.getLogger(__name__)

POOLING_RULE = 'obstacle statistics pooled over every (timestep, obstacle) pair; ties -> earliest timestep, lowest key'


@dataclass(frozen=True)
class PoolEntry:
    """one obstacle as seen at one timestep, categories already encoded"""
    timestep: int
    key: str
    kind: float
    operation: float
    volume: float
    speed: float
    distance: float
    velocity: float
    acceleration: float

    def get(self, attribute: str) -> float:
        return getattr(self, attribute)


def _norm(values) -> float:
    if values is None or any(v is None for v in values):
        return np.nan
    return math.hypot(*values)


def _distance(ego_position, obstacle_position) -> float:
    ex, ey, ez = ego_position
    ox, oy, oz = obstacle_position
    if ez is None or oz is None:
        return math.hypot(ox - ex, oy - ey)
    return math.hypot(ox - ex, oy - ey, oz - ez)


def _optional(value: float | None) -> float:
    return np.nan if value is None else float(value)


def build_pool(timeline: ScenarioTimeline, enc: EncodingTables, source: str | None = None) -> list[PoolEntry]:
    pool = []
    for t in timeline.timesteps:
        for o in t.obstacles:
            distance = o.distance_temp if o.distance_temp is not None else _distance(t.ego.position, o.position)
            pool.append(PoolEntry(
                timestep=t.index,
                key=o.key,
                kind=float(o.kind),
                operation=enc.encode('operations', o.operation, source),
                volume=enc.encode('volume', o.volume, source),
                speed=enc.encode('speed', o.speed, source),
                distance=float(distance),
                velocity=_optional(o.velocity),
                acceleration=_optional(o.acceleration),
            ))
    return pool


class PoolStats:
    """min / max / mean of one attribute over the pool plus the extreme entries"""

    def __init__(self, pool: list[PoolEntry], attribute: str):
        self.entries = [e for e in pool if not np.isnan(e.get(attribute))]
        self.attribute = attribute
        if self.entries:
            self.min_entry = min(self.entries, key=lambda e: (e.get(attribute), e.timestep, e.key))
            self.max_entry = min(self.entries, key=lambda e: (-e.get(attribute), e.timestep, e.key))
        else:
            self.min_entry = self.max_entry = None

    def mean(self) -> float:
        if not self.entries:
            return np.nan
        return float(np.mean([e.get(self.attribute) for e in self.entries]))

    def of_min(self, attribute: str) -> float:
        return np.nan if self.min_entry is None else self.min_entry.get(attribute)

    def of_max(self, attribute: str) -> float:
        return np.nan if self.max_entry is None else self.max_entry.get(attribute)


def _obstacle_features(pool: list[PoolEntry]) -> dict[str, float]:
    dist = PoolStats(pool, 'distance')
    speed = PoolStats(pool, 'speed')
    vel = PoolStats(pool, 'velocity')
    acc = PoolStats(pool, 'acceleration')
    vol = PoolStats(pool, 'volume')

    return {
        # region distance
        'avg_obsDist': dist.mean(),
        'max_obsDist': dist.of_max('distance'),
        'min_obsDist': dist.of_min('distance'),
        'type_maxDistObs': dist.of_max('kind'),
        'type_minDistObs': dist.of_min('kind'),
        'op_maxDistObs': dist.of_max('operation'),
        'op_minDistObs': dist.of_min('operation'),
        'vol_minDistObs': dist.of_min('volume'),
        'speed_minDistObs': dist.of_min('speed'),
        'dist_minDistObs': dist.of_min('distance'),
        # endregion
        # region speed category
        'avg_obsSpeed': speed.mean(),
        'max_obsSpeed': speed.of_max('speed'),
        'min_obsSpeed': speed.of_min('speed'),
        'type_maxSpeedObs': speed.of_max('kind'),
        'type_minSpeedObs': speed.of_min('kind'),
        'op_maxSpeedObs': speed.of_max('operation'),
        'op_minSpeedObs': speed.of_min('operation'),
        'vol_minSpeedObs': speed.of_min('volume'),
        'speed_minSpeedObs': speed.of_min('speed'),
        'dist_maxSpeedObs': speed.of_max('distance'),
        # endregion
        # region velocity
        'avg_obsVel': vel.mean(),
        'max_obsVel': vel.of_max('velocity'),
        'min_obsVel': vel.of_min('velocity'),
        'type_maxVelObs': vel.of_max('kind'),
        'type_minVelObs': vel.of_min('kind'),
        'op_maxVelObs': vel.of_max('operation'),
        'op_minVelObs': vel.of_min('operation'),
        'vol_minVelObs': vel.of_min('volume'),
        # endregion
        # region acceleration
        'avg_obsAcc': acc.mean(),
        'min_obsAcc': acc.of_min('acceleration'),
        'max_obsAcc': acc.of_max('acceleration'),
        'type_maxAccObs': acc.of_max('kind'),
        'type_minAccObs': acc.of_min('kind'),
        'op_maxAccObs': acc.of_max('operation'),
        'op_minAccObs': acc.of_min('operation'),
        'vol_maxAccObs': acc.of_max('volume'),
        # endregion
        # region volume
        'avg_obsVol': vol.mean(),
        'max_obsVol': vol.of_max('volume'),
        'min_obsVol': vol.of_min('volume'),
        'type_maxVolObs': vol.of_max('kind'),
        'type_minVolObs': vol.of_min('kind'),
        'op_maxVolObs': vol.of_max('operation'),
        'op_minVolObs': vol.of_min('operation'),
        # endregion
    }


def extract_dynamic_features(timeline: ScenarioTimeline, enc: EncodingTables,
                             source: str | None = None) -> FeatureVector:
    """
    61 scenario features from a time-series log

    ego state, weather, light and traffic rules come from the first timestep;
    participant counts are the largest simultaneous count over the timeline
    """
    if not timeline.timesteps:
        raise EmptyTimeline('scenario has no timesteps', source=source)

    first = timeline.timesteps[0]
    ego = first.ego

    num_peds = max(t.count(ObstacleKind.PEDESTRIAN) for t in timeline.timesteps)
    num_npcs = max(t.count(ObstacleKind.NPC_VEHICLE) for t in timeline.timesteps)
    num_static = max(t.count(ObstacleKind.STATIC) for t in timeline.timesteps)
    tot_obs = num_peds + num_npcs + num_static

    sidewalk = first.sidewalk
    has_sidewalk = 0.0 if sidewalk is None or sidewalk.lower() in ('', 'none') else 1.0

    features: dict[str, float] = {
        'AV_acceleration': _norm(ego.acceleration),
        'AV_throttle': _optional(ego.throttle),
        'AV_brake': _optional(ego.brake),
        'AV_steeringRate': _optional(ego.steering_rate),
        'AV_speed': enc.encode('speed', ego.speed, source),
        'AV_velocity': _norm(ego.velocity),
        'AV_position': _norm([c for c in ego.position if c is not None]),
        'num_peds': float(num_peds),
        'num_NPCs': float(num_npcs),
        'num_statObs': float(num_static),
        'tot_obs': float(tot_obs),
        'is_ped': 1.0 if num_peds > 0 and tot_obs > 1 else 0.0,
        'traffic_light': enc.encode('traffic_light', first.traffic_light or 'none', source),
        'Sidewalk': has_sidewalk,
        'rain': enc.encode('weather', first.rain, source),
        'fog': enc.encode('weather', first.fog, source),
        'wetness': enc.encode('weather', first.wetness, source),
        'time_of_day': enc.encode('time_of_day', first.time_of_day, source),
    }
    features.update(_obstacle_features(build_pool(timeline, enc, source)))

    # every timestep's categories must be known, not only the first
    for t in timeline.timesteps[1:]:
        enc.encode('speed', t.ego.speed, source)
        enc.encode('traffic_light', t.traffic_light or 'none', source)
        for weather in (t.rain, t.fog, t.wetness):
            enc.encode('weather', weather, source)
        enc.encode('time_of_day', t.time_of_day, source)

    return FeatureVector(
        names=list(DYNAMIC_FEATURES),
        values=np.array([features[name] for name in DYNAMIC_FEATURES], dtype=float),
        outcome=timeline.outcome,
        instance_id=timeline.scenario_id,
    )
