import logging
from dataclasses import dataclass, field
import numpy as np
from sklearn.metrics import silhouette_samples
from sklearn_extra.cluster import KMedoids
from src.consts import CLUSTERING_RESTARTS, MAX_K, PAM_MAX_ITER
from src.preprocess.preprocess import CorrelationMatrix
from src.utils.errors import AllIdentical, TooFewFeatures, UsageError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeatureClustering:
    """
    features grouped by correlation dissimilarity 1 - |rho|

    cluster ids are ordered by the smallest feature index they contain
    """
    feature_names: list[str]
    k: int
    assignment: np.ndarray
    medoids: list[int]
    silhouettes: dict[int, float] = field(default_factory=dict)

    @property
    def clusters(self) -> list[list[int]]:
        return [np.flatnonzero(self.assignment == c).tolist() for c in range(self.k)]

    def named_clusters(self) -> list[list[str]]:
        return [[self.feature_names[i] for i in members] for members in self.clusters]

    def to_dict(self) -> dict:
        return {
            'k': self.k,
            'clusters': self.named_clusters(),
            'medoids': [self.feature_names[m] for m in self.medoids],
            'silhouettes': {str(k): s for k, s in self.silhouettes.items()},
        }


def _assign(d: np.ndarray, medoids: np.ndarray) -> np.ndarray:
    labels = np.argmin(d[:, medoids], axis=1)
    # a medoid always belongs to its own cluster, even at zero distance to another one
    labels[medoids] = np.arange(len(medoids))
    return labels


def pam(d: np.ndarray, k: int, random_state: int) -> tuple[np.ndarray, float]:
    """one k-medoids run on the precomputed dissimilarity, swap phase until no swap lowers the cost"""
    model = KMedoids(n_clusters=k, metric='precomputed', method='pam', init='k-medoids++',
                     max_iter=PAM_MAX_ITER, random_state=random_state).fit(d)
    return np.sort(model.medoid_indices_), float(model.inertia_)


def _canonical(labels: np.ndarray, medoids: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """relabel clusters in order of their smallest member"""
    order = sorted(range(len(medoids)), key=lambda c: int(np.flatnonzero(labels == c).min()))
    remap = np.empty(len(medoids), dtype=int)
    remap[order] = np.arange(len(medoids))
    return remap[labels], [int(medoids[c]) for c in order]


def silhouette(assignment, d: np.ndarray) -> float:
    """mean silhouette on a precomputed dissimilarity; singleton clusters score 0"""
    assignment = np.asarray(assignment)
    return float(np.mean(silhouette_samples(d, assignment, metric='precomputed')))


def cluster_features(corr: CorrelationMatrix, k_range: tuple[int, int] | None = None, seed: int = 0,
                     restarts: int = CLUSTERING_RESTARTS) -> FeatureClustering:
    p = len(corr.feature_names)
    if p < 3:
        raise TooFewFeatures(f'clustering needs at least 3 features, got {p}')

    d = corr.dissimilarity()
    if np.allclose(d, 0.0):
        raise AllIdentical('every feature pair has |rho| = 1')

    lo, hi = k_range if k_range is not None else (2, min(MAX_K, p - 1))
    if lo < 2 or lo > hi:
        raise UsageError(f'k_range {lo},{hi} must satisfy 2 <= lo <= hi')
    if hi > p - 1:
        logger.warning(f'clipping k_range upper end {hi} to {p - 1} for {p} features')
        hi = p - 1
        lo = min(lo, hi)

    best: tuple[float, np.ndarray, np.ndarray] | None = None
    silhouettes: dict[int, float] = {}
    for k in range(lo, hi + 1):
        run_best: tuple[float, np.ndarray] | None = None
        for r in range(restarts):
            random_state = int(np.random.SeedSequence([seed, k, r]).generate_state(1)[0])
            medoids, cost = pam(d, k, random_state)
            if run_best is None or cost < run_best[0] - 1e-12:
                run_best = (cost, medoids)
        assert run_best is not None
        medoids = run_best[1]
        labels = _assign(d, medoids)
        score = silhouette(labels, d)
        silhouettes[k] = score
        logger.info(f'k={k}: pam cost {run_best[0]:.4f}, silhouette {score:.4f}')
        if best is None or score > best[0] + 1e-12:
            best = (score, labels, medoids)

    assert best is not None
    labels, medoids = _canonical(best[1], best[2])
    k = len(medoids)
    logger.info(f'chose k={k} feature clusters (silhouette {best[0]:.4f})')
    return FeatureClustering(
        feature_names=list(corr.feature_names),
        k=k,
        assignment=labels,
        medoids=medoids,
        silhouettes=silhouettes,
    )
