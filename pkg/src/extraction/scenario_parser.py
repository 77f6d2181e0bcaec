import json
import logging
import math
import re
from dataclasses import dataclass, field
from enum import IntEnum
from src.metadata.metadata_table import OutcomeLabel
from src.utils.errors import (
    EmptyTimeline, MalformedPoint, MalformedScenario, MissingEgoPosition, TooFewPoints, UnsortableTimestep,
)

logger = logging.getLogger(__name__)

TIMESTEP_KEY = re.compile(r'^TimeStep(\d+)$')
NO_COLLISION = 'NotOccurred'

# scenario json section -> obstacle class
OBSTACLE_SECTIONS = {
    'Pedestrian': 'pedestrian',
    'NPC': 'npc_vehicle',
    'Static obstacle': 'static',
}


class ObstacleKind(IntEnum):
    PEDESTRIAN = 0
    NPC_VEHICLE = 1
    STATIC = 2


@dataclass(frozen=True)
class EgoState:
    position: tuple[float, float, float | None]
    velocity: tuple[float, float] | None
    acceleration: tuple[float, float, float] | None
    operation: str | None
    speed: str | None
    throttle: float | None = None
    brake: float | None = None
    steering_rate: float | None = None


@dataclass(frozen=True)
class Obstacle:
    key: str
    kind: ObstacleKind
    position: tuple[float, float, float | None]
    volume: str | None = None
    operation: str | None = None
    speed: str | None = None
    distance_temp: float | None = None
    velocity: float | None = None
    acceleration: float | None = None


@dataclass(frozen=True)
class Timestep:
    index: int
    ego: EgoState
    rain: str | None
    fog: str | None
    wetness: str | None
    time_of_day: str | None
    traffic_light: str | None
    sidewalk: str | None
    obstacles: list[Obstacle]
    collision: str

    def count(self, kind: ObstacleKind) -> int:
        return sum(1 for o in self.obstacles if o.kind == kind)


@dataclass(frozen=True)
class ScenarioTimeline:
    timesteps: list[Timestep]
    scenario_id: str = ''

    @property
    def outcome(self) -> OutcomeLabel:
        if any(t.collision != NO_COLLISION for t in self.timesteps):
            return OutcomeLabel.UNSAFE
        return OutcomeLabel.SAFE


@dataclass(frozen=True)
class RoadTest:
    test_id: str
    road_points: list[tuple[float, float]]
    outcome: OutcomeLabel
    is_valid: bool = True
    extra: dict = field(default_factory=dict)


# region helpers
def _load_json(document: bytes | str, source: str | None):
    try:
        return json.loads(document)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise MalformedScenario(f'malformed json: {e}', source=source)


def _number(value, what: str, source: str | None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedScenario(f'{what} is not a number: {value!r}', source=source)
    return float(value)


def _optional_number(value, what: str, source: str | None) -> float | None:
    return None if value is None else _number(value, what, source)


def _magnitude(value, what: str, source: str | None) -> float | None:
    """numeric field or {x, y[, z]} vector -> magnitude"""
    if value is None:
        return None
    if isinstance(value, dict):
        parts = [_number(v, f'{what}.{k}', source) for k, v in sorted(value.items())]
        return math.hypot(*parts)
    return abs(_number(value, what, source))


def _text(value) -> str | None:
    if value is None:
        return None
    return str(value).strip()
# endregion


def _parse_ego(raw: dict, index: int, source: str | None) -> EgoState:
    position = raw.get('Ego_Position')
    if not isinstance(position, dict) or 'px' not in position or 'py' not in position:
        raise MissingEgoPosition(f'timestep {index} has no Ego_Position', source=source)

    def pick(*keys: str) -> tuple | None:
        if not all(k in position for k in keys):
            return None
        return tuple(_number(position[k], f'Ego_Position.{k}', source) for k in keys)

    px, py = pick('px', 'py')  # type: ignore[misc]
    pz = _optional_number(position.get('pz'), 'Ego_Position.pz', source)
    return EgoState(
        position=(px, py, pz),
        velocity=pick('vx', 'vy'),
        acceleration=pick('ax', 'ay', 'az'),
        operation=_text(raw.get('Ego_Operation')),
        speed=_text(raw.get('Ego_Speed')),
        throttle=_optional_number(raw.get('Ego_Throttle'), 'Ego_Throttle', source),
        brake=_optional_number(raw.get('Ego_Brake'), 'Ego_Brake', source),
        steering_rate=_optional_number(raw.get('Ego_SteeringRate'), 'Ego_SteeringRate', source),
    )


def _parse_obstacles(raw: dict, index: int, source: str | None) -> list[Obstacle]:
    obstacles = []
    for section, kind_name in OBSTACLE_SECTIONS.items():
        entries = raw.get(section)
        if entries is None or isinstance(entries, str):
            # the logs write the literal string "None" for an empty section
            continue
        if not isinstance(entries, dict):
            raise MalformedScenario(f'timestep {index} section {section!r} is not an object', source=source)

        for key, obs in sorted(entries.items()):
            if not isinstance(obs, dict) or not isinstance(obs.get('position'), dict):
                raise MalformedScenario(f'timestep {index} obstacle {key!r} has no position', source=source)
            pos = obs['position']
            if 'x' not in pos or 'y' not in pos:
                raise MalformedScenario(f'timestep {index} obstacle {key!r} position lacks x/y', source=source)
            obstacles.append(Obstacle(
                key=str(key),
                kind=ObstacleKind[kind_name.upper()],
                position=(
                    _number(pos['x'], f'{key}.position.x', source),
                    _number(pos['y'], f'{key}.position.y', source),
                    _optional_number(pos.get('z'), f'{key}.position.z', source),
                ),
                volume=_text(obs.get('volume')),
                operation=_text(obs.get('operation')),
                speed=_text(obs.get('speed')),
                distance_temp=_optional_number(obs.get('distance_temp'), f'{key}.distance_temp', source),
                velocity=_magnitude(obs.get('velocity'), f'{key}.velocity', source),
                acceleration=_magnitude(obs.get('acceleration'), f'{key}.acceleration', source),
            ))
    return obstacles


def parse_scenario_ts(document: bytes | str, scenario_id: str = '', source: str | None = None) -> ScenarioTimeline:
    """parse a time-series scenario log: {"TimeStep<k>": {...}, ...}"""
    raw = _load_json(document, source)
    if not isinstance(raw, dict):
        raise MalformedScenario('top level is not an object', source=source)
    if not raw:
        raise EmptyTimeline('scenario has no timesteps', source=source)

    keyed: dict[int, dict] = {}
    for key, value in raw.items():
        match = TIMESTEP_KEY.match(key)
        if match is None:
            raise UnsortableTimestep(f'unsortable timestep key {key!r}', source=source)
        k = int(match.group(1))
        if k in keyed:
            raise UnsortableTimestep(f'timestep {k} appears twice', source=source)
        if not isinstance(value, dict):
            raise MalformedScenario(f'{key} is not an object', source=source)
        keyed[k] = value

    timesteps = []
    for k in sorted(keyed):
        t = keyed[k]
        timesteps.append(Timestep(
            index=k,
            ego=_parse_ego(t, k, source),
            rain=_text(t.get('Weather[rain]')),
            fog=_text(t.get('Weather[fog]')),
            wetness=_text(t.get('Weather[wetness]')),
            time_of_day=_text(t.get('TimeofDay')),
            traffic_light=_text(t.get('TrafficRule[Traffic light]')),
            sidewalk=_text(t.get('TrafficRule[Sidewalk]')),
            obstacles=_parse_obstacles(t, k, source),
            collision=_text(t.get('CollisionInfoAtTimeStep')) or NO_COLLISION,
        ))

    return ScenarioTimeline(timesteps=timesteps, scenario_id=scenario_id)


def parse_road(document: bytes | str, source: str | None = None) -> RoadTest:
    """parse a road test: {"road_points": [[x, y], ...], "test_outcome": "FAIL" | "PASS", ...}"""
    raw = _load_json(document, source)
    if not isinstance(raw, dict):
        raise MalformedScenario('top level is not an object', source=source)

    points_raw = raw.get('road_points')
    if not isinstance(points_raw, list):
        raise TooFewPoints('no road_points array', source=source)

    points: list[tuple[float, float]] = []
    for i, p in enumerate(points_raw):
        if (not isinstance(p, (list, tuple)) or len(p) != 2
                or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in p)
                or not all(math.isfinite(c) for c in p)):
            raise MalformedPoint(f'road point {i} is not an [x, y] pair: {p!r}', source=source, row=i + 1)
        point = (float(p[0]), float(p[1]))
        if points and points[-1] == point:
            logger.warning(f'dropping repeated road point {i} in {source or "road"}')
            continue
        points.append(point)

    if len(points) < 2:
        raise TooFewPoints(f'road has {len(points)} distinct points, need at least 2', source=source)

    verdict = str(raw.get('test_outcome', '')).strip().upper()
    if verdict == 'FAIL':
        outcome = OutcomeLabel.UNSAFE
    elif verdict == 'PASS':
        outcome = OutcomeLabel.SAFE
    else:
        raise MalformedScenario(f'test_outcome {raw.get("test_outcome")!r} is not FAIL/PASS', source=source)

    is_valid = raw.get('is_valid', True)
    return RoadTest(
        test_id=str(raw.get('test_id', '')),
        road_points=points,
        outcome=outcome,
        is_valid=bool(is_valid) if is_valid is not None else True,
        extra={k: v for k, v in raw.items() if k in ('test_duration', 'predicted_test_outcome')},
    )
