import logging
from dataclasses import dataclass
import numpy as np
from src.consts import MAX_BOUNDARY_FEATURES, THETA_STRONG
from src.utils.errors import DimensionMismatch, TooManyFeatures, UsageError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoundaryVertexSet:
    """
    corners of the feature hypercube, U/L per feature, minus the corners that
    contradict a strong correlation

    pattern[v, j] is True when vertex v takes the upper bound of feature j
    """
    upper: np.ndarray
    lower: np.ndarray
    pattern: np.ndarray
    survives: np.ndarray
    # per eliminated vertex: first violated pair and its rho
    eliminated_index: np.ndarray
    eliminated_pair: np.ndarray
    eliminated_rho: np.ndarray
    feature_names: list[str] | None = None

    @property
    def n(self) -> int:
        return len(self.upper)

    @property
    def vertices(self) -> np.ndarray:
        """surviving vertices as coordinates, q' x n"""
        kept = self.pattern[self.survives]
        return np.where(kept, self.upper, self.lower)

    @property
    def eliminated(self) -> list[tuple[int, tuple[int, int], float]]:
        return [
            (int(v), (int(p[0]), int(p[1])), float(r))
            for v, p, r in zip(self.eliminated_index, self.eliminated_pair, self.eliminated_rho)
        ]

    def label(self, vertex: int) -> str:
        names = self.feature_names or [f'f{j + 1}' for j in range(self.n)]
        return ','.join(('U' if u else 'L') + '_' + name for u, name in zip(self.pattern[vertex], names))


def feature_bounds(features) -> tuple[np.ndarray, np.ndarray]:
    """per-feature (upper, lower) over the standardized instances, instances x n"""
    features = np.asarray(features, dtype=float)
    return features.max(axis=0), features.min(axis=0)


def build_boundary(upper, lower, rho, theta_strong: float = THETA_STRONG,
                   feature_names: list[str] | None = None) -> BoundaryVertexSet:
    upper = np.asarray(upper, dtype=float)
    lower = np.asarray(lower, dtype=float)
    rho = np.asarray(rho, dtype=float)
    n = len(upper)
    if n > MAX_BOUNDARY_FEATURES:
        raise TooManyFeatures(f'{n} features give 2^{n} boundary vertices, select at most {MAX_BOUNDARY_FEATURES}')
    if len(lower) != n or rho.shape != (n, n):
        raise DimensionMismatch(f'bounds and correlations disagree on the feature count {n}')
    if not 0.0 < theta_strong <= 1.0:
        raise UsageError(f'theta_strong {theta_strong} not in (0, 1]')

    q = 2 ** n
    pattern = ((np.arange(q)[:, None] >> np.arange(n)) & 1).astype(bool)
    survives = np.ones(q, dtype=bool)
    first_pair = np.full((q, 2), -1, dtype=int)
    first_rho = np.zeros(q)

    for i in range(n):
        for j in range(i + 1, n):
            r = rho[i, j]
            if r >= theta_strong:
                # positively tied features move together
                violates = pattern[:, i] != pattern[:, j]
            elif r <= -theta_strong:
                violates = pattern[:, i] == pattern[:, j]
            else:
                continue
            fresh = violates & survives
            first_pair[fresh] = (i, j)
            first_rho[fresh] = r
            survives &= ~violates

    dropped = np.flatnonzero(~survives)
    logger.info(f'boundary keeps {int(survives.sum())} of {q} hypercube vertices')
    return BoundaryVertexSet(
        upper=upper,
        lower=lower,
        pattern=pattern,
        survives=survives,
        eliminated_index=dropped,
        eliminated_pair=first_pair[dropped],
        eliminated_rho=first_rho[dropped],
        feature_names=feature_names,
    )
