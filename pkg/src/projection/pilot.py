import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple
import numpy as np
import pandas as pd
from scipy.optimize import minimize
from src.consts import PILOT_FTOL, PILOT_MAX_ITER, PILOT_PERTURBATION, PILOT_RESTARTS, PILOT_RIDGE
from src.metadata.metadata_table import MetadataTable, OutcomeLabel
from src.preprocess.preprocess import NormalizationParams
from src.selection.feature_selection import pca2
from src.utils.errors import (
    DimensionMismatch, MissingInput, NonFiniteInput, OneClass, OptimizerDiverged, TooFewFeatures, UnknownFeature,
)
from src.utils.utils import read_json, write_json

logger = logging.getLogger(__name__)

ORIENTATION_TIE = 1e-6


class PilotObjective(NamedTuple):
    value: float
    B: np.ndarray
    C: np.ndarray
    ridge: bool


@dataclass
class ProjectionModel:
    """
    linear projection Z = A F of standardized features onto the plane

    B and C rebuild the features and the outcome from Z by least squares
    """
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    objective: float
    feature_names: list[str]
    normalization: NormalizationParams | None = None
    seed: int = 0
    ridge: bool = False
    outcome_mean: float = 0.0
    outcome_std: float = 1.0
    runs: list[dict] = field(default_factory=list)
    history: list[float] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def to_dict(self) -> dict:
        return {
            'A': self.A.tolist(),
            'B': self.B.tolist(),
            'C': self.C.tolist(),
            'objective': self.objective,
            'feature_names': self.feature_names,
            'normalization': self.normalization.to_dict() if self.normalization is not None else None,
            'seed': self.seed,
            'ridge': self.ridge,
            'outcome_mean': self.outcome_mean,
            'outcome_std': self.outcome_std,
            'runs': self.runs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> 'ProjectionModel':
        return cls(
            A=np.asarray(d['A'], dtype=float),
            B=np.asarray(d['B'], dtype=float),
            C=np.asarray(d['C'], dtype=float).reshape(1, 2),
            objective=float(d['objective']),
            feature_names=list(d['feature_names']),
            normalization=NormalizationParams.from_dict(d['normalization']) if d.get('normalization') else None,
            seed=int(d.get('seed', 0)),
            ridge=bool(d.get('ridge', False)),
            outcome_mean=float(d.get('outcome_mean', 0.0)),
            outcome_std=float(d.get('outcome_std', 1.0)),
            runs=list(d.get('runs', [])),
        )

    def save(self, path: str | Path) -> None:
        write_json(path, self.to_dict())

    @classmethod
    def load(cls, path: str | Path) -> 'ProjectionModel':
        path = Path(path)
        if not path.is_file():
            raise MissingInput(f'projection model not found: {path}', source=str(path))
        return cls.from_dict(read_json(path))


@dataclass(frozen=True)
class InstanceSpace:
    """scenarios placed on the (z1, z2) plane"""
    instance_ids: list[str]
    coords: np.ndarray  # instances x 2
    outcomes: np.ndarray
    model: ProjectionModel
    features: np.ndarray  # instances x n, standardized

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'id': self.instance_ids,
            'z1': self.coords[:, 0],
            'z2': self.coords[:, 1],
            'outcome': ['unsafe' if o == OutcomeLabel.UNSAFE else 'safe' for o in self.outcomes],
        })

    def save(self, path: str | Path) -> None:
        self.to_frame().to_csv(path, index=False, float_format='%.17g', lineterminator='\n')

    def feature(self, name: str) -> np.ndarray:
        return self.features[:, self.model.feature_names.index(name)]


def _as_row(Y) -> np.ndarray:
    return np.asarray(Y, dtype=float).reshape(1, -1)


def pilot_objective(A, F, Y) -> PilotObjective:
    """reconstruction error of features and outcome from Z = A F, with B and C solved by least squares"""
    A = np.asarray(A, dtype=float)
    F = np.asarray(F, dtype=float)
    Y = _as_row(Y)
    Z = A @ F
    G = Z @ Z.T

    ridge = bool(not np.all(np.isfinite(G)) or np.linalg.matrix_rank(G) < 2)
    if ridge:
        G = G + PILOT_RIDGE * np.eye(2)
    G_inv = np.linalg.inv(G)

    B = F @ Z.T @ G_inv
    C = Y @ Z.T @ G_inv
    value = float(np.sum((F - B @ Z) ** 2) + np.sum((Y - C @ Z) ** 2))
    return PilotObjective(value, B, C, ridge)


def pilot_gradient(A, F, Y) -> np.ndarray:
    """d objective / d A with B, C held at their least-squares optimum"""
    A = np.asarray(A, dtype=float)
    F = np.asarray(F, dtype=float)
    Y = _as_row(Y)
    result = pilot_objective(A, F, Y)
    Z = A @ F
    R_F = F - result.B @ Z
    R_Y = Y - result.C @ Z
    return -2.0 * (result.B.T @ R_F + result.C.T @ R_Y) @ F.T


def _orient(A: np.ndarray, B: np.ndarray, C: np.ndarray, F: np.ndarray, Y: np.ndarray) -> None:
    """fix the sign of every axis in place: z_r rises with the outcome"""
    Z = A @ F
    for r in range(2):
        if np.std(Z[r]) > 0:
            corr = float(np.corrcoef(Z[r], Y.ravel())[0, 1])
        else:
            corr = 0.0
        if abs(corr) < ORIENTATION_TIE or not np.isfinite(corr):
            flip = A[r, np.argmax(np.abs(A[r]))] < 0
        else:
            flip = corr < 0
        if flip:
            A[r] = -A[r]
            B[:, r] = -B[:, r]
            C[:, r] = -C[:, r]


def _run(A0: np.ndarray, F: np.ndarray, Y: np.ndarray, ftol: float, max_iter: int) -> tuple[np.ndarray, float, int, list[float]]:
    shape = A0.shape

    def fun(a: np.ndarray) -> tuple[float, np.ndarray]:
        A = a.reshape(shape)
        return pilot_objective(A, F, Y).value, pilot_gradient(A, F, Y).ravel()

    history = [fun(A0.ravel())[0]]

    def record(a: np.ndarray) -> None:
        history.append(pilot_objective(a.reshape(shape), F, Y).value)

    result = minimize(fun, A0.ravel(), jac=True, method='L-BFGS-B', callback=record,
                      options={'ftol': ftol, 'gtol': 1e-10, 'maxiter': max_iter})
    return result.x.reshape(shape), float(result.fun), int(result.nit), history


def fit_pilot(F, Y, restarts: int = PILOT_RESTARTS, seed: int = 0, workers: int = 4,
              perturbation: float = PILOT_PERTURBATION, ftol: float = PILOT_FTOL,
              max_iter: int = PILOT_MAX_ITER, feature_names: list[str] | None = None) -> ProjectionModel:
    """
    fit the projection by quasi-newton descent over A from the pca start plus
    seeded perturbations of it; the outcome is standardized before fitting
    """
    F = np.asarray(F, dtype=float)
    n, i = F.shape
    if n < 2:
        raise TooFewFeatures(f'projection needs at least 2 features, got {n}')
    if i <= n:
        raise DimensionMismatch(f'projection needs more instances ({i}) than features ({n})')
    if restarts < 1:
        raise ValueError('restarts must be >= 1')

    y_raw = np.asarray(Y, dtype=float).ravel()
    if len(y_raw) != i:
        raise DimensionMismatch(f'{len(y_raw)} outcomes for {i} instances')
    y_mean, y_std = float(y_raw.mean()), float(y_raw.std(ddof=1))
    if not y_std > 0:
        raise OneClass('outcome is constant, nothing to project against')
    Y = _as_row((y_raw - y_mean) / y_std)

    start_time = time.time()
    A_pca = pca2(F.T).loadings.T.copy()
    starts = {0: A_pca}
    for r in range(1, restarts):
        rng = np.random.default_rng(np.random.SeedSequence([seed, r]))
        starts[r] = A_pca + perturbation * rng.standard_normal(A_pca.shape)

    logger.info(f'fitting pilot projection of {n} features, {i} instances with {restarts} restarts')
    results: dict[int, tuple[np.ndarray, float, int, list[float]]] = {}
    with ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_restart = {executor.submit(_run, A0, F, Y, ftol, max_iter): r for r, A0 in starts.items()}
        for future in as_completed(future_to_restart):
            results[future_to_restart[future]] = future.result()

    runs = []
    best = None
    for r in sorted(results):
        A, value, iterations, history = results[r]
        finite = np.isfinite(value) and np.all(np.isfinite(A))
        runs.append({'restart': r, 'objective': value if finite else None, 'iterations': iterations})
        if not finite:
            logger.warning(f'discarding pilot restart {r}, objective is not finite')
            continue
        if best is None or value < best[1]:
            best = (r, value, A, history)

    if best is None:
        raise OptimizerDiverged(f'all {restarts} pilot restarts diverged')

    r, _, A, history = best
    A = A.copy()
    final = pilot_objective(A, F, Y)
    B, C = final.B.copy(), final.C.copy()
    _orient(A, B, C, F, Y)
    if final.ridge:
        logger.warning('pilot fit needed the ridge fallback, Z Z^T is singular')

    logger.info(f'pilot objective {final.value:.6g} from restart {r} in {time.time() - start_time:.2f}s')
    return ProjectionModel(
        A=A,
        B=B,
        C=C,
        objective=final.value,
        feature_names=list(feature_names) if feature_names is not None else [f'f{j}' for j in range(n)],
        seed=seed,
        ridge=final.ridge,
        outcome_mean=y_mean,
        outcome_std=y_std,
        runs=runs,
        history=history,
    )


def project(model: ProjectionModel, F_new) -> np.ndarray:
    """Z = A F_new for features standardized with the model's parameters; n x j -> 2 x j"""
    F_new = np.asarray(F_new, dtype=float)
    vector = F_new.ndim == 1
    if vector:
        F_new = F_new.reshape(-1, 1)
    if F_new.ndim != 2 or F_new.shape[0] != model.n:
        raise DimensionMismatch(f'expected {model.n} feature rows, got shape {F_new.shape}')
    Z = model.A @ F_new
    return Z[:, 0] if vector else Z


def build_instance_space(table: MetadataTable, restarts: int = PILOT_RESTARTS, seed: int = 0, workers: int = 4,
                         normalization: NormalizationParams | None = None) -> InstanceSpace:
    """fit the projection on a standardized table of selected features and place every instance"""
    F = table.values.T
    model = fit_pilot(F, table.outcomes, restarts=restarts, seed=seed, workers=workers,
                      feature_names=table.feature_names)
    model.normalization = normalization
    return space_from_model(table, model)


def space_from_model(table: MetadataTable, model: ProjectionModel) -> InstanceSpace:
    unknown = [n for n in model.feature_names if n not in table.feature_names]
    if unknown:
        raise UnknownFeature(f'table lacks projection features {unknown}')
    sub = table.select(model.feature_names)
    coords = project(model, sub.values.T).T
    if not np.all(np.isfinite(coords)):
        raise NonFiniteInput('projected coordinates are not finite')
    return InstanceSpace(
        instance_ids=list(table.instance_ids),
        coords=coords,
        outcomes=table.outcomes,
        model=model,
        features=sub.values,
    )
