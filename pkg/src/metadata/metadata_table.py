import logging
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
import numpy as np
import pandas as pd
from src.consts import FEATURE_PREFIX, ID_COLUMN, OUTCOME_COLUMN
from src.utils.errors import (
    DuplicateIds, MissingInput, MissingOutcome, NoDataRows, NoFeatureColumns, NoIdColumn, NonNumericCell,
)

logger = logging.getLogger(__name__)


class OutcomeLabel(IntEnum):
    """Unsafe is the positive class everywhere downstream"""
    SAFE = 0
    UNSAFE = 1

    @classmethod
    def parse(cls, value: str) -> 'OutcomeLabel':
        v = value.strip().lower()
        if v in ('unsafe', '1', 'fail'):
            return cls.UNSAFE
        if v in ('safe', '0', 'pass'):
            return cls.SAFE
        raise ValueError(f'not an outcome label: {value!r}')


@dataclass(frozen=True)
class MetadataSchema:
    """column naming convention of a metadata csv"""
    id_column: str = ID_COLUMN
    feature_prefix: str = FEATURE_PREFIX
    outcome_column: str = OUTCOME_COLUMN


@dataclass(frozen=True, eq=False)
class MetadataTable:
    """
    feature / outcome table, one row per scenario

    values holds NaN where missing is True; the mask survives imputation so
    reports can still tell which cells were filled in
    """
    instance_ids: list[str]
    feature_names: list[str]
    values: np.ndarray
    outcomes: np.ndarray
    missing: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True).reshape(len(self.instance_ids), len(self.feature_names))
        outcomes = np.array(self.outcomes, dtype=int, copy=True).reshape(-1)
        if self.missing is None:
            missing = np.isnan(values)
        else:
            missing = np.array(self.missing, dtype=bool, copy=True).reshape(values.shape)

        if len(outcomes) != len(self.instance_ids):
            raise ValueError(f'{len(outcomes)} outcomes for {len(self.instance_ids)} instances')
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError('feature names must be unique')
        if len(set(self.instance_ids)) != len(self.instance_ids):
            raise DuplicateIds('instance ids must be unique')
        if not np.isin(outcomes, (OutcomeLabel.SAFE, OutcomeLabel.UNSAFE)).all():
            raise ValueError('outcomes must be 0 (safe) or 1 (unsafe)')
        if not np.isfinite(values[~np.isnan(values)]).all():
            raise ValueError('feature values must be finite or missing')

        for arr in (values, outcomes, missing):
            arr.setflags(write=False)

        object.__setattr__(self, 'instance_ids', list(self.instance_ids))
        object.__setattr__(self, 'feature_names', list(self.feature_names))
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'outcomes', outcomes)
        object.__setattr__(self, 'missing', missing)

    @property
    def n_instances(self) -> int:
        return len(self.instance_ids)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.feature_names.index(name)]

    def select(self, names: list[str]) -> 'MetadataTable':
        idx = [self.feature_names.index(n) for n in names]
        return MetadataTable(
            instance_ids=self.instance_ids,
            feature_names=list(names),
            values=self.values[:, idx],
            outcomes=self.outcomes,
            missing=self.missing[:, idx],
        )

    def subset(self, rows) -> 'MetadataTable':
        rows = np.asarray(rows)
        return MetadataTable(
            instance_ids=[self.instance_ids[i] for i in rows],
            feature_names=self.feature_names,
            values=self.values[rows],
            outcomes=self.outcomes[rows],
            missing=self.missing[rows],
        )

    def with_values(self, values: np.ndarray, feature_names: list[str] | None = None,
                    missing: np.ndarray | None = None) -> 'MetadataTable':
        return MetadataTable(
            instance_ids=self.instance_ids,
            feature_names=self.feature_names if feature_names is None else feature_names,
            values=values,
            outcomes=self.outcomes,
            missing=self.missing if missing is None else missing,
        )

    def filled(self) -> 'MetadataTable':
        """same table with the missing mask cleared, for writing imputed values out"""
        if np.isnan(self.values).any():
            raise ValueError('table still has missing values')
        return self.with_values(self.values, missing=np.zeros(self.values.shape, dtype=bool))

    def to_frame(self, schema: MetadataSchema = MetadataSchema()) -> pd.DataFrame:
        df = pd.DataFrame(
            np.where(self.missing, np.nan, self.values),
            columns=[f'{schema.feature_prefix}{n}' for n in self.feature_names],
        )
        df.insert(0, schema.id_column, self.instance_ids)
        df[schema.outcome_column] = ['unsafe' if o == OutcomeLabel.UNSAFE else 'safe' for o in self.outcomes]
        return df

    def equals(self, other: 'MetadataTable', rtol: float = 1e-9) -> bool:
        return (
            self.instance_ids == other.instance_ids
            and self.feature_names == other.feature_names
            and np.array_equal(self.outcomes, other.outcomes)
            and np.array_equal(self.missing, other.missing)
            and np.allclose(self.values, other.values, rtol=rtol, atol=0.0, equal_nan=True)
        )


def _parse_float(cell: str) -> float:
    """python float parsing, exact for the %.17g text save_metadata writes; blanks and junk become NaN"""
    if not cell:
        return np.nan
    try:
        return float(cell)
    except ValueError:
        return np.nan


def _parse_outcome(raw: str, source: str, row: int) -> int:
    try:
        return int(OutcomeLabel.parse(raw))
    except ValueError:
        raise MissingOutcome(f'outcome {raw!r} is not one of safe/unsafe/0/1', source=source, row=row)


def load_metadata(path: str | Path, schema: MetadataSchema = MetadataSchema()) -> MetadataTable:
    path = Path(path)
    source = str(path)
    if not path.is_file():
        raise MissingInput(f'metadata file not found: {path}', source=source)

    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
    except pd.errors.EmptyDataError:
        raise NoDataRows('metadata file is empty', source=source)

    if schema.outcome_column not in df.columns:
        raise MissingOutcome(f'no {schema.outcome_column!r} column', source=source)
    if df.empty:
        raise NoDataRows('metadata has a header but no data rows', source=source)

    feature_columns = [c for c in df.columns if c.startswith(schema.feature_prefix)]
    if not feature_columns:
        raise NoFeatureColumns(f'no columns prefixed {schema.feature_prefix!r}', source=source)

    if schema.id_column in df.columns:
        id_column = schema.id_column
    else:
        # fall back to the first column that is neither a feature nor the outcome
        others = [c for c in df.columns if c not in feature_columns and c != schema.outcome_column]
        if not others:
            raise NoIdColumn('no id column', source=source)
        id_column = others[0]

    ids = df[id_column].str.strip().tolist()
    seen: set[str] = set()
    for i, instance_id in enumerate(ids):
        if instance_id in seen:
            raise DuplicateIds(f'duplicate id {instance_id!r}', source=source, row=i + 1)
        seen.add(instance_id)

    raw = df[feature_columns].apply(lambda col: col.str.strip())
    missing = (raw == '').to_numpy()
    values = raw.apply(lambda col: col.map(_parse_float)).to_numpy(dtype=float)

    bad = np.isnan(values) & ~missing | (~np.isnan(values) & ~np.isfinite(values))
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise NonNumericCell(
            f'non-numeric value {raw.iat[r, c]!r} in column {feature_columns[c]}', source=source, row=int(r) + 1,
        )

    outcomes = [_parse_outcome(v, source, i + 1) for i, v in enumerate(df[schema.outcome_column])]

    table = MetadataTable(
        instance_ids=ids,
        feature_names=[c[len(schema.feature_prefix):] for c in feature_columns],
        values=values,
        outcomes=np.array(outcomes),
        missing=missing,
    )
    logger.info(f'loaded {table.n_instances} instances with {table.n_features} features from {path}, '
                f'{int(table.outcomes.sum())} unsafe, {int(missing.sum())} missing cells')
    return table


def save_metadata(table: MetadataTable, path: str | Path, schema: MetadataSchema = MetadataSchema()) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_frame(schema).to_csv(
        path,
        index=False,
        float_format='%.17g',
        na_rep='',
        lineterminator='\n',
        encoding='utf-8',
    )
    logger.info(f'saved {table.n_instances} instances to {path}')
