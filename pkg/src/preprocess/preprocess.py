import logging
from dataclasses import dataclass, field
import numpy as np
import pandas as pd
from scipy.stats import rankdata
from src.consts import THETA_REDUNDANT, THETA_WEAK, PruneRow
from src.metadata.metadata_table import MetadataTable
from src.utils.errors import AllMissing, NothingLeft, UnknownFeature, UsageError

logger = logging.getLogger(__name__)

ZERO_STD = 1e-12


# region types
@dataclass(frozen=True)
class NormalizationParams:
    """per-feature mean and sample (n-1) standard deviation"""
    feature_names: list[str]
    mean: np.ndarray
    std: np.ndarray
    zero_variance: list[str] = field(default_factory=list)

    def select(self, names: list[str]) -> 'NormalizationParams':
        idx = [self.feature_names.index(n) for n in names]
        return NormalizationParams(list(names), self.mean[idx], self.std[idx])

    def apply(self, table: MetadataTable) -> MetadataTable:
        """standardize the matching columns of a raw table, in this feature order"""
        unknown = [n for n in self.feature_names if n not in table.feature_names]
        if unknown:
            raise UnknownFeature(f'table lacks features {unknown}')
        sub = table.select(self.feature_names)
        # a missing cell lands on the training mean
        values = np.where(sub.missing, self.mean, sub.values)
        return sub.with_values((values - self.mean) / self.std)

    def to_dict(self) -> dict:
        return {
            'feature_names': self.feature_names,
            'mean': self.mean.tolist(),
            'std': self.std.tolist(),
            'zero_variance': self.zero_variance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> 'NormalizationParams':
        return cls(
            feature_names=list(d['feature_names']),
            mean=np.asarray(d['mean'], dtype=float),
            std=np.asarray(d['std'], dtype=float),
            zero_variance=list(d.get('zero_variance', [])),
        )


@dataclass(frozen=True)
class CorrelationMatrix:
    """spearman rho among features, and of every feature against the outcome"""
    feature_names: list[str]
    rho: np.ndarray
    rho_y: np.ndarray
    degenerate: list[str] = field(default_factory=list)

    def select(self, names: list[str]) -> 'CorrelationMatrix':
        idx = [self.feature_names.index(n) for n in names]
        return CorrelationMatrix(
            feature_names=list(names),
            rho=self.rho[np.ix_(idx, idx)],
            rho_y=self.rho_y[idx],
            degenerate=[n for n in self.degenerate if n in names],
        )

    def dissimilarity(self) -> np.ndarray:
        d = 1.0 - np.abs(self.rho)
        np.fill_diagonal(d, 0.0)
        return np.clip(d, 0.0, 1.0)

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.rho, index=self.feature_names, columns=self.feature_names)
        df['outcome'] = self.rho_y
        return df

    def to_dict(self) -> dict:
        return {
            'feature_names': self.feature_names,
            'rho': self.rho.tolist(),
            'rho_y': self.rho_y.tolist(),
            'degenerate': self.degenerate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> 'CorrelationMatrix':
        return cls(
            feature_names=list(d['feature_names']),
            rho=np.asarray(d['rho'], dtype=float),
            rho_y=np.asarray(d['rho_y'], dtype=float),
            degenerate=list(d.get('degenerate', [])),
        )


@dataclass
class PruneReport:
    all_missing: list[str] = field(default_factory=list)
    zero_variance: list[str] = field(default_factory=list)
    redundant: list[tuple[str, str, float]] = field(default_factory=list)  # kept, dropped, rho
    weak: list[tuple[str, float]] = field(default_factory=list)
    imputed: dict[str, int] = field(default_factory=dict)

    @property
    def dropped(self) -> list[str]:
        return (self.all_missing + self.zero_variance
                + [d for _, d, _ in self.redundant] + [w for w, _ in self.weak])

    def rows(self) -> list[PruneRow]:
        rows: list[PruneRow] = []
        rows += [{'feature': f, 'action': 'all_missing'} for f in self.all_missing]
        rows += [{'feature': f, 'action': 'zero_variance'} for f in self.zero_variance]
        rows += [{'feature': d, 'action': 'redundant', 'partner': k, 'rho': r} for k, d, r in self.redundant]
        rows += [{'feature': f, 'action': 'weak', 'rho': r} for f, r in self.weak]
        rows += [{'feature': f, 'action': 'imputed', 'cells': c} for f, c in self.imputed.items()]
        return rows

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows(), columns=['feature', 'action', 'partner', 'rho', 'cells'])

    def to_text(self) -> str:
        lines = [f'dropped {len(self.dropped)} features']
        if self.all_missing:
            lines.append(f'all missing: {", ".join(self.all_missing)}')
        if self.zero_variance:
            lines.append(f'zero variance: {", ".join(self.zero_variance)}')
        for kept, dropped, rho in self.redundant:
            lines.append(f'redundant: dropped {dropped}, kept {kept} (rho={rho:.4f})')
        for feature, rho_y in self.weak:
            lines.append(f'weak: dropped {feature} (rho_y={rho_y:.4f})')
        for feature, count in self.imputed.items():
            lines.append(f'imputed: {feature} ({count} cells)')
        return '\n'.join(lines) + '\n'


@dataclass(frozen=True)
class PreprocessResult:
    table: MetadataTable
    normalization: NormalizationParams
    correlation: CorrelationMatrix
    report: PruneReport
# endregion


def drop_all_missing(table: MetadataTable) -> tuple[MetadataTable, list[str]]:
    all_missing = table.missing.all(axis=0)
    dropped = [n for n, m in zip(table.feature_names, all_missing) if m]
    if dropped:
        logger.info(f'dropping {len(dropped)} features missing in every row: {dropped}')
    return table.select([n for n in table.feature_names if n not in dropped]), dropped


def impute_missing(table: MetadataTable) -> MetadataTable:
    """missing cell -> column median of the present cells; the mask stays for reports"""
    values = np.array(table.values, dtype=float)
    for j, name in enumerate(table.feature_names):
        col_missing = table.missing[:, j]
        if not col_missing.any():
            continue
        if col_missing.all():
            raise AllMissing(f'feature {name} is missing in every row')
        values[col_missing, j] = np.median(values[~col_missing, j])
    return table.with_values(values)


def zscore(table: MetadataTable) -> tuple[MetadataTable, NormalizationParams]:
    if np.isnan(table.values).any():
        raise ValueError('zscore needs a table without missing values, impute first')

    mean = table.values.mean(axis=0)
    std = table.values.std(axis=0, ddof=1) if table.n_instances > 1 else np.zeros(table.n_features)
    keep = np.nan_to_num(std) > ZERO_STD
    zero_variance = [n for n, k in zip(table.feature_names, keep) if not k]
    if zero_variance:
        logger.info(f'dropping {len(zero_variance)} zero-variance features: {zero_variance}')

    names = [n for n, k in zip(table.feature_names, keep) if k]
    values = (table.values[:, keep] - mean[keep]) / std[keep]
    params = NormalizationParams(names, mean[keep], std[keep], zero_variance)
    return table.with_values(values, feature_names=names, missing=table.missing[:, keep]), params


def spearman(x, y) -> tuple[float, bool]:
    """pearson correlation of average-tie ranks; (0, True) when either side has no rank variance"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError('spearman needs two equal-length vectors of length >= 2')
    rx, ry = rankdata(x), rankdata(y)
    if np.ptp(rx) == 0 or np.ptp(ry) == 0:
        return 0.0, True
    rho = float(np.corrcoef(rx, ry)[0, 1])
    return float(np.clip(rho, -1.0, 1.0)), False


def correlation_matrix(table: MetadataTable) -> CorrelationMatrix:
    ranks = rankdata(table.values, axis=0)
    y_ranks = rankdata(table.outcomes)
    flat = np.ptp(ranks, axis=0) == 0
    degenerate = [n for n, f in zip(table.feature_names, flat) if f]
    if degenerate:
        logger.warning(f'features without rank variance get rho 0: {degenerate}')

    centered = ranks - ranks.mean(axis=0)
    norms = np.sqrt((centered ** 2).sum(axis=0))
    norms[flat] = 1.0
    unit = centered / norms
    unit[:, flat] = 0.0
    rho = unit.T @ unit
    rho = (rho + rho.T) / 2.0
    np.fill_diagonal(rho, 1.0)

    y_centered = y_ranks - y_ranks.mean()
    y_norm = np.sqrt((y_centered ** 2).sum())
    rho_y = unit.T @ (y_centered / y_norm) if y_norm > 0 else np.zeros(table.n_features)

    return CorrelationMatrix(
        feature_names=list(table.feature_names),
        rho=np.clip(rho, -1.0, 1.0),
        rho_y=np.clip(rho_y, -1.0, 1.0),
        degenerate=degenerate,
    )


def prune_features(table: MetadataTable, corr: CorrelationMatrix, theta_redundant: float = THETA_REDUNDANT,
                   theta_weak: float = THETA_WEAK) -> tuple[MetadataTable, PruneReport]:
    """
    drop the outcome-weaker member of every strongly correlated pair, then every
    feature whose outcome correlation is below theta_weak
    """
    if not 0.0 < theta_redundant <= 1.0:
        raise UsageError(f'theta_redundant {theta_redundant} not in (0, 1]')
    if not 0.0 <= theta_weak < 1.0:
        raise UsageError(f'theta_weak {theta_weak} not in [0, 1)')

    p = len(corr.feature_names)
    strength = np.abs(corr.rho_y)
    report = PruneReport()

    iu, ju = np.triu_indices(p, k=1)
    abs_rho = np.abs(corr.rho[iu, ju])
    # descending |rho|, ties in (i, j) order
    order = np.lexsort((ju, iu, -abs_rho))

    alive = np.ones(p, dtype=bool)
    # a feature that already stands in for a dropped partner is never dropped as redundant
    representative = np.zeros(p, dtype=bool)
    for idx in order:
        if abs_rho[idx] < theta_redundant:
            break
        i, j = iu[idx], ju[idx]
        if not (alive[i] and alive[j]):
            continue
        if representative[i] and representative[j]:
            continue
        if representative[i] != representative[j]:
            kept, dropped = (i, j) if representative[i] else (j, i)
        elif strength[i] > strength[j]:
            kept, dropped = i, j
        elif strength[j] > strength[i]:
            kept, dropped = j, i
        else:
            kept, dropped = i, j
        alive[dropped] = False
        representative[kept] = True
        report.redundant.append((corr.feature_names[kept], corr.feature_names[dropped], float(corr.rho[i, j])))

    for i in range(p):
        if alive[i] and strength[i] < theta_weak:
            alive[i] = False
            report.weak.append((corr.feature_names[i], float(corr.rho_y[i])))

    if not alive.any():
        raise NothingLeft(f'every one of {p} features was pruned')

    kept_names = [n for n, a in zip(corr.feature_names, alive) if a]
    logger.info(f'pruning kept {len(kept_names)} of {p} features '
                f'({len(report.redundant)} redundant, {len(report.weak)} weak)')
    return table.select(kept_names), report


def preprocess_table(table: MetadataTable, theta_redundant: float = THETA_REDUNDANT,
                     theta_weak: float = THETA_WEAK) -> PreprocessResult:
    """drop all-missing columns, impute, standardize, correlate and prune"""
    table, all_missing = drop_all_missing(table)
    if table.n_features == 0:
        raise NothingLeft('every feature is missing in every row')

    imputed = impute_missing(table)
    standardized, params = zscore(imputed)
    if standardized.n_features == 0:
        raise NothingLeft('every feature has zero variance')

    corr = correlation_matrix(standardized)
    pruned, report = prune_features(standardized, corr, theta_redundant, theta_weak)

    report.all_missing = all_missing
    report.zero_variance = list(params.zero_variance)
    report.imputed = {n: int(c) for n, c in zip(table.feature_names, table.missing.sum(axis=0)) if c}

    return PreprocessResult(
        table=pruned,
        normalization=params.select(pruned.feature_names),
        correlation=corr.select(pruned.feature_names),
        report=report,
    )
