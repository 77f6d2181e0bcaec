import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from dotenv import dotenv_values
from src.consts import (
    CLUSTERING_RESTARTS, COMBINATION_BUDGET, CV_FOLDS, DEFAULT_OUTPUT_DIR, MAX_K, OUTPUT_DIR_ENV, PILOT_RESTARTS,
    REPETITIONS, SELECTION_TREES, STRAIGHT_ANGLE_DEG, THETA_REDUNDANT, THETA_STRONG, THETA_WEAK, TRAIN_FRACTION,
)
from src.prediction.classifiers import ClassifierKind
from src.utils.errors import MissingInput, UsageError

DATASET_KINDS = ('timeseries', 'road', 'metadata')


@dataclass
class RunConfig:
    seed: int | None = None
    input: str | None = None
    kind: str = 'metadata'
    theta_redundant: float = THETA_REDUNDANT
    theta_weak: float = THETA_WEAK
    theta_strong: float = THETA_STRONG
    straight_angle: float = STRAIGHT_ANGLE_DEG
    k_range: tuple[int, int] = (2, MAX_K)
    budget: int = COMBINATION_BUDGET
    restarts: int = PILOT_RESTARTS
    repetitions: int = REPETITIONS
    output_dir: str = field(default_factory=lambda: os.getenv(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)
    workers: int = 4
    train_fraction: float = TRAIN_FRACTION
    classifier_kinds: list[str] = field(default_factory=lambda: [k.value for k in ClassifierKind])
    test_metadata: str | None = None
    clustering_restarts: int = CLUSTERING_RESTARTS
    selection_trees: int = SELECTION_TREES
    cv_folds: int = CV_FOLDS

    @property
    def kinds(self) -> list[ClassifierKind]:
        return [ClassifierKind.parse(k) for k in self.classifier_kinds]

    @property
    def run_dir(self) -> Path:
        return Path(self.output_dir)

    def update(self, values: dict[str, object]) -> 'RunConfig':
        """apply raw text / typed overrides by field name, None means not given"""
        types = {f.name: f for f in fields(self)}
        for key, value in values.items():
            if value is None:
                continue
            if key not in types:
                raise UsageError(f'unknown config key {key!r}')
            setattr(self, key, _coerce(key, value))
        return self

    def validate(self) -> 'RunConfig':
        checks = [
            (self.seed is not None, 'a seed is required'),
            (self.kind in DATASET_KINDS, f'kind must be one of {DATASET_KINDS}'),
            (0.0 < self.theta_redundant <= 1.0, 'theta_redundant must be in (0, 1]'),
            (0.0 <= self.theta_weak < 1.0, 'theta_weak must be in [0, 1)'),
            (0.0 < self.theta_strong <= 1.0, 'theta_strong must be in (0, 1]'),
            (self.straight_angle > 0, 'straight_angle must be > 0'),
            (2 <= self.k_range[0] <= self.k_range[1], 'k_range must satisfy 2 <= lo <= hi'),
            (self.budget >= 1, 'budget must be >= 1'),
            (self.restarts >= 1, 'restarts must be >= 1'),
            (self.repetitions >= 5, 'repetitions must be >= 5'),
            (0.0 < self.train_fraction < 1.0, 'train_fraction must be in (0, 1)'),
            (self.workers >= 1, 'workers must be >= 1'),
            (self.clustering_restarts >= 1, 'clustering_restarts must be >= 1'),
            (self.selection_trees >= 1, 'selection_trees must be >= 1'),
            (self.cv_folds >= 2, 'cv_folds must be >= 2'),
        ]
        for ok, message in checks:
            if not ok:
                raise UsageError(message)
        try:
            self.kinds
        except ValueError as e:
            raise UsageError(str(e))
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d['k_range'] = list(self.k_range)
        return d


def _split(value) -> list[str]:
    if isinstance(value, (list, tuple)):
        return [str(v).strip() for v in value]
    return [v.strip() for v in str(value).split(',') if v.strip()]


def _coerce(key: str, value):
    try:
        if key in ('seed', 'budget', 'restarts', 'repetitions', 'workers', 'clustering_restarts',
                   'selection_trees', 'cv_folds'):
            return int(value)
        if key in ('theta_redundant', 'theta_weak', 'theta_strong', 'straight_angle', 'train_fraction'):
            return float(value)
        if key == 'k_range':
            lo, hi = (int(v) for v in _split(value))
            return lo, hi
        if key == 'classifier_kinds':
            return _split(value)
    except (TypeError, ValueError):
        raise UsageError(f'bad value for {key}: {value!r}')
    return str(value)


def load_config(path: str | Path | None = None, overrides: dict[str, object] | None = None) -> RunConfig:
    """defaults < key=value config file < command line overrides"""
    config = RunConfig()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise MissingInput(f'config file not found: {path}', source=str(path))
        config.update(dict(dotenv_values(path)))
    if overrides:
        config.update(overrides)
    return config.validate()
