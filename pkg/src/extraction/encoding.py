from dataclasses import dataclass, field
import numpy as np
from src.consts import OBSTACLE_TYPE, SPEED_CATEGORY, TIME_OF_DAY, TRAFFIC_LIGHT, VOLUME, WEATHER_INTENSITY
from src.metadata.metadata_table import OutcomeLabel
from src.utils.errors import UnknownCategory


def category_key(text: str) -> str:
    """'Slow (0.01 < speed (m/s) <= 5)' -> 'slow'"""
    parts = text.strip().split()
    return parts[0].lower() if parts else ''


@dataclass(frozen=True)
class EncodingTables:
    """ordinal encodings of the categorical scenario fields"""
    operations: dict[str, int] = field(default_factory=dict)
    traffic_light: dict[str, int] = field(default_factory=lambda: dict(TRAFFIC_LIGHT))
    volume: dict[str, int] = field(default_factory=lambda: dict(VOLUME))
    obstacle_type: dict[str, int] = field(default_factory=lambda: dict(OBSTACLE_TYPE))
    time_of_day: dict[str, int] = field(default_factory=lambda: dict(TIME_OF_DAY))
    weather: dict[str, int] = field(default_factory=lambda: dict(WEATHER_INTENSITY))
    speed: dict[str, int] = field(default_factory=lambda: dict(SPEED_CATEGORY))

    @classmethod
    def from_timelines(cls, timelines) -> 'EncodingTables':
        """operation vocabulary = every ego / obstacle operation seen in the suite, alphabetical"""
        seen: set[str] = set()
        for timeline in timelines:
            for t in timeline.timesteps:
                if t.ego.operation:
                    seen.add(t.ego.operation)
                seen.update(o.operation for o in t.obstacles if o.operation)
        return cls(operations={op: i for i, op in enumerate(sorted(seen))})

    def encode(self, table: str, text: str | None, source: str | None = None) -> float:
        """text category -> code; None stays missing (NaN)"""
        if text is None:
            return np.nan
        if table == 'operations':
            mapping, key = self.operations, text.strip()
        else:
            mapping, key = getattr(self, table), category_key(text)
        if key not in mapping:
            raise UnknownCategory(f'unknown {table} category {text!r}', source=source)
        return float(mapping[key])

    def to_dict(self) -> dict[str, dict[str, int]]:
        return {
            'operations': self.operations,
            'traffic_light': self.traffic_light,
            'volume': self.volume,
            'obstacle_type': self.obstacle_type,
            'time_of_day': self.time_of_day,
            'weather': self.weather,
            'speed': self.speed,
        }


@dataclass(frozen=True)
class FeatureVector:
    """one scenario's features, NaN marks a value that is undefined for it"""
    names: list[str]
    values: np.ndarray
    outcome: OutcomeLabel
    instance_id: str = ''

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values.tolist()))
