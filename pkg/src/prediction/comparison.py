import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split
from src.consts import REPETITIONS, SIGNIFICANCE, TRAIN_FRACTION, ComparisonRow
from src.metadata.metadata_table import MetadataTable
from src.prediction.classifiers import ClassifierKind, ClassifierSpec, predict, train
from src.prediction.metrics import EvalReport, evaluate, wilcoxon_signed_rank
from src.utils.errors import ClassTooSmall, PoolTooSmall, UnknownFeature, UsageError

logger = logging.getLogger(__name__)

METRICS = ['precision', 'recall', 'f1', 'macro_precision', 'macro_recall', 'macro_f1']
ARMS = ('isa', 'random')


def split_train_test(table: MetadataTable, fraction: float = TRAIN_FRACTION,
                     seed: int = 0) -> tuple[MetadataTable, MetadataTable]:
    """stratified seeded split, class shares kept within one instance"""
    if not 0.0 < fraction < 1.0:
        raise UsageError(f'train fraction {fraction} not in (0, 1)')
    counts = np.bincount(table.outcomes, minlength=2)
    if counts.min() < 2:
        raise ClassTooSmall(f'stratified split needs 2 instances per class, got {counts.tolist()}')

    try:
        train_idx, test_idx = train_test_split(
            np.arange(table.n_instances),
            train_size=fraction,
            stratify=table.outcomes,
            random_state=seed,
        )
    except ValueError as e:
        raise ClassTooSmall(f'cannot stratify {counts.tolist()} at fraction {fraction}: {e}')
    return table.subset(np.sort(train_idx)), table.subset(np.sort(test_idx))


@dataclass(frozen=True)
class MetricSummary:
    kind: str
    metric: str
    isa_mean: float
    random_mean: float
    p_value: float
    significant: bool


@dataclass
class ComparisonReport:
    rows: list[ComparisonRow] = field(default_factory=list)
    summary: list[MetricSummary] = field(default_factory=list)
    repetitions: int = 0
    selected: list[str] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=list(ComparisonRow.__annotations__))

    def summary_frame(self) -> pd.DataFrame:
        return pd.DataFrame([s.__dict__ for s in self.summary],
                            columns=['kind', 'metric', 'isa_mean', 'random_mean', 'p_value', 'significant'])

    def paired(self, kind: str, metric: str) -> tuple[list[float], list[float]]:
        by_arm: dict[str, dict[int, float]] = {arm: {} for arm in ARMS}
        for row in self.rows:
            if row['kind'] == kind:
                by_arm[row['arm']][row['repetition']] = float(row[metric])  # type: ignore[literal-required]
        reps = sorted(by_arm['isa'])
        return [by_arm['isa'][r] for r in reps], [by_arm['random'][r] for r in reps]

    def to_dict(self) -> dict:
        return {
            'repetitions': self.repetitions,
            'selected': self.selected,
            'summary': [s.__dict__ for s in self.summary],
        }


def _task_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence([seed, *key]).generate_state(1)[0])


def _row(kind: ClassifierKind, repetition: int, arm: str, features: list[str], report: EvalReport) -> ComparisonRow:
    return {
        'kind': kind.value,
        'repetition': repetition,
        'arm': arm,
        'features': ';'.join(features),
        'precision': report.precision,
        'recall': report.recall,
        'f1': report.f1,
        'macro_precision': report.macro_precision,
        'macro_recall': report.macro_recall,
        'macro_f1': report.macro_f1,
    }


def _fit_and_score(kind: ClassifierKind, classifier_seed: int, features: list[str],
                   train_table: MetadataTable, test_table: MetadataTable) -> EvalReport:
    model = train(ClassifierSpec(kind=kind, seed=classifier_seed), train_table.select(features).values,
                  train_table.outcomes, feature_names=features)
    return evaluate(predict(model, test_table.select(features).values), test_table.outcomes)


def compare_isa_vs_random(table: MetadataTable, selected: list[str], repetitions: int = REPETITIONS, seed: int = 0,
                          kinds: list[ClassifierKind] | None = None, train_fraction: float = TRAIN_FRACTION,
                          test_table: MetadataTable | None = None, workers: int = 4) -> ComparisonReport:
    """
    classifiers on the selected features against classifiers on random
    features of the same count drawn from the pool, paired per repetition

    both arms of a repetition share the split and the classifier seed; with
    test_table every repetition trains on the whole table and scores on it
    """
    kinds = list(kinds) if kinds is not None else list(ClassifierKind)
    pool = list(table.feature_names)
    unknown = [f for f in selected if f not in pool]
    if unknown:
        raise UnknownFeature(f'selected features {unknown} are not in the pool')
    if len(pool) < len(selected):
        raise PoolTooSmall(f'pool of {len(pool)} features is smaller than {len(selected)} selected')
    if repetitions < 1:
        raise UsageError('repetitions must be >= 1')
    if test_table is not None:
        unknown = [f for f in pool if f not in test_table.feature_names]
        if unknown:
            raise UnknownFeature(f'test table lacks features {unknown}')

    start_time = time.time()
    plans = {}
    for r in range(repetitions):
        if test_table is None:
            train_part, test_part = split_train_test(table, train_fraction, _task_seed(seed, r))
        else:
            train_part, test_part = table, test_table
        rng = np.random.default_rng(np.random.SeedSequence([seed, r]))
        drawn = sorted(rng.choice(len(pool), size=len(selected), replace=False))
        plans[r] = (train_part, test_part, [pool[i] for i in drawn])

    logger.info(f'comparing selected vs random features: {repetitions} repetitions x {len(kinds)} classifiers')
    results: dict[tuple[str, int, str], EvalReport] = {}
    with ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_key = {}
        for r, (train_part, test_part, random_features) in plans.items():
            for k_index, kind in enumerate(kinds):
                classifier_seed = _task_seed(seed, r, k_index)
                for arm, features in (('isa', list(selected)), ('random', random_features)):
                    future = executor.submit(_fit_and_score, kind, classifier_seed, features, train_part, test_part)
                    future_to_key[future] = (kind.value, r, arm)
        for future in as_completed(future_to_key):
            results[future_to_key[future]] = future.result()

    report = ComparisonReport(repetitions=repetitions, selected=list(selected))
    for kind in kinds:
        for r in range(repetitions):
            report.rows.append(_row(kind, r, 'isa', list(selected), results[(kind.value, r, 'isa')]))
            report.rows.append(_row(kind, r, 'random', plans[r][2], results[(kind.value, r, 'random')]))

    for kind in kinds:
        for metric in METRICS:
            isa, rand = report.paired(kind.value, metric)
            p = wilcoxon_signed_rank(isa, rand)
            report.summary.append(MetricSummary(
                kind=kind.value,
                metric=metric,
                isa_mean=float(np.mean(isa)),
                random_mean=float(np.mean(rand)),
                p_value=p,
                significant=bool(p <= SIGNIFICANCE),
            ))

    logger.info(f'comparison finished in {time.time() - start_time:.2f}s')
    return report
