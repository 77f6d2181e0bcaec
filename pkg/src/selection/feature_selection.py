import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
import numpy as np
import pandas as pd
from sklearn.ensemble import RandomForestClassifier
from sklearn.model_selection import StratifiedKFold, cross_val_score
from src.consts import COMBINATION_BUDGET, CV_FOLDS, SELECTION_TREES
from src.metadata.metadata_table import MetadataTable
from src.selection.clustering import FeatureClustering
from src.utils.errors import TooFewFeatures, TooFewPerClass, UsageError

logger = logging.getLogger(__name__)


# region types
@dataclass(frozen=True)
class Pca2Result:
    coords: np.ndarray
    loadings: np.ndarray
    explained: np.ndarray
    degenerate: bool = False


@dataclass(frozen=True)
class CombinationScore:
    features: tuple[int, ...]
    error: float
    loadings: np.ndarray | None = None


@dataclass(frozen=True)
class SelectedFeatures:
    names: list[str]
    winner: CombinationScore
    evaluated: int
    product_size: int
    sampled: bool
    scores: list[CombinationScore] = field(default_factory=list)

    def to_frame(self, feature_names: list[str]) -> pd.DataFrame:
        return pd.DataFrame({
            'features': [';'.join(feature_names[i] for i in s.features) for s in self.scores],
            'error': [s.error for s in self.scores],
        })

    def to_dict(self) -> dict:
        return {
            'selected': self.names,
            'error': self.winner.error,
            'evaluated': self.evaluated,
            'product_size': self.product_size,
            'sampled': self.sampled,
        }
# endregion


def pca2(X: np.ndarray) -> Pca2Result:
    """
    top two principal axes of a column-standardized matrix

    each loading is signed so its largest-magnitude entry is positive
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise TooFewFeatures('pca2 needs at least 2 columns')

    eigenvalues, eigenvectors = np.linalg.eigh(np.cov(X, rowvar=False))
    order = np.argsort(eigenvalues)[::-1][:2]
    explained = np.clip(eigenvalues[order], 0.0, None)
    loadings = eigenvectors[:, order]

    for c in range(2):
        pivot = np.argmax(np.abs(loadings[:, c]))
        if loadings[pivot, c] < 0:
            loadings[:, c] = -loadings[:, c]

    degenerate = bool(explained[1] <= 1e-12 * max(explained[0], 1.0))
    if degenerate:
        logger.debug('second principal component has zero variance')
    return Pca2Result(coords=X @ loadings, loadings=loadings, explained=explained, degenerate=degenerate)


def _canonical_order(table: MetadataTable) -> np.ndarray:
    # folds follow instance ids, not file order
    ids = table.instance_ids
    return np.array(sorted(range(len(ids)), key=ids.__getitem__), dtype=int)


def evaluate_combination(combo, table: MetadataTable, seed: int, trees: int = SELECTION_TREES,
                         folds: int = CV_FOLDS) -> CombinationScore:
    """cross-validated random forest error on the 2d pca projection of the combination's columns"""
    combo = tuple(sorted(int(i) for i in combo))
    counts = np.bincount(table.outcomes, minlength=2)
    if counts.min() < folds:
        raise TooFewPerClass(f'{folds}-fold stratification needs {folds} instances per class, got {counts.tolist()}')

    order = _canonical_order(table)
    X = table.values[order][:, combo]
    y = table.outcomes[order]
    if X.shape[1] == 1:
        X = np.hstack([X, np.zeros_like(X)])

    projection = pca2(X)
    cv_seed, rf_seed = np.random.SeedSequence([seed, *combo]).generate_state(2)

    forest = RandomForestClassifier(
        n_estimators=trees,
        criterion='gini',
        bootstrap=True,
        max_features=1,
        random_state=int(rf_seed),
        n_jobs=1,
    )
    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=int(cv_seed))
    accuracy = cross_val_score(forest, projection.coords, y, cv=splitter, scoring='accuracy')
    error = float(np.clip(1.0 - accuracy.mean(), 0.0, 1.0))
    return CombinationScore(features=combo, error=error, loadings=projection.loadings)


def sample_combinations(clusters: list[list[int]], budget: int, seed: int) -> tuple[list[tuple[int, ...]], bool]:
    """one feature per cluster; every combination when they fit the budget, else a seeded uniform sample"""
    if budget < 1:
        raise UsageError(f'combination budget must be >= 1, got {budget}')
    sizes = [len(c) for c in clusters]
    total = math.prod(sizes)

    if total <= budget:
        return [tuple(sorted(c)) for c in itertools.product(*clusters)], False

    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    if total < 2 ** 62:
        flat = [int(i) for i in rng.choice(total, size=budget, replace=False)]
    else:
        picked: set[int] = set()
        while len(picked) < budget:
            picked.add(int(sum(int(rng.integers(s)) * math.prod(sizes[j + 1:]) for j, s in enumerate(sizes))))
        flat = sorted(picked)

    combos = []
    for index in flat:
        chosen = []
        for members, size in zip(reversed(clusters), reversed(sizes)):
            index, digit = divmod(index, size)
            chosen.append(members[digit])
        combos.append(tuple(sorted(chosen)))
    return combos, True


def select_features(table: MetadataTable, clustering: FeatureClustering, budget: int = COMBINATION_BUDGET,
                    seed: int = 0, workers: int = 4, trees: int = SELECTION_TREES,
                    folds: int = CV_FOLDS) -> SelectedFeatures:
    if table.feature_names != clustering.feature_names:
        raise UsageError('clustering and table disagree on the feature list')

    start_time = time.time()
    clusters = clustering.clusters
    combos, sampled = sample_combinations(clusters, budget, seed)
    total = math.prod(len(c) for c in clusters)
    logger.info(f'scoring {len(combos)} of {total} feature combinations with {workers} workers')

    scores: dict[tuple[int, ...], CombinationScore] = {}
    with ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_combo = {
            executor.submit(evaluate_combination, combo, table, seed, trees, folds): combo
            for combo in combos
        }
        for future in as_completed(future_to_combo):
            scores[future_to_combo[future]] = future.result()

    ordered = [scores[c] for c in sorted(scores)]
    winner = min(ordered, key=lambda s: (s.error, s.features))
    names = [table.feature_names[i] for i in winner.features]
    logger.info(f'selected {names} with cv error {winner.error:.4f} in {time.time() - start_time:.2f}s')

    return SelectedFeatures(
        names=names,
        winner=winner,
        evaluated=len(scores),
        product_size=total,
        sampled=sampled,
        scores=ordered,
    )
