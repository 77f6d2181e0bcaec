import logging
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
import numpy as np
from scipy.spatial.distance import cdist
from sklearn.exceptions import ConvergenceWarning
from sklearn.naive_bayes import GaussianNB
from sklearn.neural_network import MLPClassifier
from sklearn.preprocessing import StandardScaler
from sklearn.tree import DecisionTreeClassifier
from src.metadata.metadata_table import MetadataTable, OutcomeLabel
from src.preprocess.preprocess import NormalizationParams
from src.utils.errors import DimensionMismatch, MissingInput, NonFiniteInput, OneClass, UnknownFeature
from src.utils.utils import read_json, write_json

logger = logging.getLogger(__name__)

KNN_NEIGHBORS = 5


class ClassifierKind(str, Enum):
    RANDOM_FOREST = 'RandomForest'
    DECISION_TREE = 'DecisionTree'
    KNN = 'KNN'
    MLP = 'MLP'
    NAIVE_BAYES = 'NaiveBayes'

    @classmethod
    def parse(cls, value: str) -> 'ClassifierKind':
        aliases = {'rf': cls.RANDOM_FOREST, 'dt': cls.DECISION_TREE, 'nb': cls.NAIVE_BAYES}
        key = value.strip()
        for kind in cls:
            if kind.value.lower() == key.lower():
                return kind
        if key.lower() in aliases:
            return aliases[key.lower()]
        raise ValueError(f'unknown classifier kind {value!r}')


# distance and gradient based learners see standardized inputs
SCALED_KINDS = {ClassifierKind.KNN, ClassifierKind.MLP}


@dataclass(frozen=True)
class ClassifierSpec:
    kind: ClassifierKind
    seed: int = 0
    params: dict = field(default_factory=dict)
    standardize: bool | None = None

    @property
    def scaled(self) -> bool:
        return self.kind in SCALED_KINDS if self.standardize is None else self.standardize


@dataclass
class TrainedModel:
    """learned parameters as plain arrays, enough to predict without the training library"""
    kind: ClassifierKind
    params: dict
    feature_names: list[str]
    seed: int = 0
    scale_mean: np.ndarray | None = None
    scale_std: np.ndarray | None = None
    normalization: NormalizationParams | None = None

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def to_dict(self) -> dict:
        return {
            'kind': self.kind.value,
            'seed': self.seed,
            'feature_names': self.feature_names,
            'scale_mean': None if self.scale_mean is None else self.scale_mean.tolist(),
            'scale_std': None if self.scale_std is None else self.scale_std.tolist(),
            'normalization': None if self.normalization is None else self.normalization.to_dict(),
            'params': _jsonable(self.params),
        }

    @classmethod
    def from_dict(cls, d: dict) -> 'TrainedModel':
        return cls(
            kind=ClassifierKind(d['kind']),
            params=_arrays(d['params']),
            feature_names=list(d['feature_names']),
            seed=int(d.get('seed', 0)),
            scale_mean=None if d.get('scale_mean') is None else np.asarray(d['scale_mean'], dtype=float),
            scale_std=None if d.get('scale_std') is None else np.asarray(d['scale_std'], dtype=float),
            normalization=NormalizationParams.from_dict(d['normalization']) if d.get('normalization') else None,
        )

    def save(self, path: str | Path) -> None:
        write_json(path, self.to_dict())

    @classmethod
    def load(cls, path: str | Path) -> 'TrainedModel':
        path = Path(path)
        if not path.is_file():
            raise MissingInput(f'model not found: {path}', source=str(path))
        return cls.from_dict(read_json(path))


# region serialization helpers
def _jsonable(value):
    if isinstance(value, np.ndarray):
        return {'__array__': value.tolist(), 'dtype': str(value.dtype)}
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def _arrays(value):
    if isinstance(value, dict) and '__array__' in value:
        return np.asarray(value['__array__'], dtype=value['dtype'])
    if isinstance(value, dict):
        return {k: _arrays(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_arrays(v) for v in value]
    return value
# endregion


# region export of fitted estimators
def _export_tree(estimator: DecisionTreeClassifier) -> dict:
    tree = estimator.tree_
    value = tree.value[:, 0, :].astype(float)
    totals = value.sum(axis=1, keepdims=True)
    totals[totals == 0] = 1.0
    # map the estimator's class order onto (safe, unsafe)
    proba = np.zeros((tree.node_count, 2))
    for column, label in enumerate(estimator.classes_):
        proba[:, int(label)] = value[:, column] / totals[:, 0]
    return {
        'left': tree.children_left.astype(np.int64),
        'right': tree.children_right.astype(np.int64),
        'feature': tree.feature.astype(np.int64),
        'threshold': tree.threshold.astype(float),
        'proba': proba,
    }


def _fit_forest(X: np.ndarray, y: np.ndarray, seed: int, n_estimators: int = 100, bootstrap: bool = True,
                **tree_params) -> list[DecisionTreeClassifier]:
    """
    bagged trees; tree t grows with random_state seed + t, so a single tree
    without bootstrap is the plain decision tree
    """
    trees = []
    for t in range(n_estimators):
        weights = None
        if bootstrap:
            rng = np.random.default_rng(np.random.SeedSequence([seed, t]))
            weights = np.bincount(rng.integers(0, len(X), len(X)), minlength=len(X)).astype(float)
        tree = DecisionTreeClassifier(random_state=seed + t, **tree_params)
        trees.append(tree.fit(X, y, sample_weight=weights))
    return trees


def _fit(spec: ClassifierSpec, X: np.ndarray, y: np.ndarray) -> dict:
    if spec.kind == ClassifierKind.RANDOM_FOREST:
        params = {'n_estimators': 100, 'criterion': 'gini', 'bootstrap': True, 'max_features': 'sqrt'}
        params.update(spec.params)
        return {'trees': [_export_tree(t) for t in _fit_forest(X, y, spec.seed, **params)]}

    if spec.kind == ClassifierKind.DECISION_TREE:
        params = {'criterion': 'gini', 'max_depth': None, 'min_samples_split': 2}
        params.update(spec.params)
        return {'trees': [_export_tree(DecisionTreeClassifier(random_state=spec.seed, **params).fit(X, y))]}

    if spec.kind == ClassifierKind.MLP:
        params = {
            'hidden_layer_sizes': (100,), 'activation': 'relu', 'solver': 'adam', 'learning_rate_init': 1e-3,
            'beta_1': 0.9, 'beta_2': 0.999, 'batch_size': 32, 'max_iter': 200, 'tol': 1e-4,
        }
        params.update(spec.params)
        with warnings.catch_warnings():
            warnings.simplefilter('ignore', category=ConvergenceWarning)
            mlp = MLPClassifier(random_state=spec.seed, **params).fit(X, y)
        return {
            'activation': mlp.activation,
            'coefs': [c.astype(float) for c in mlp.coefs_],
            'intercepts': [b.astype(float) for b in mlp.intercepts_],
        }

    if spec.kind == ClassifierKind.NAIVE_BAYES:
        params = {'var_smoothing': 1e-9}
        params.update(spec.params)
        nb = GaussianNB(**params).fit(X, y)
        return {
            'classes': nb.classes_.astype(np.int64),
            'theta': nb.theta_.astype(float),
            'var': nb.var_.astype(float),
            'prior': nb.class_prior_.astype(float),
        }

    if spec.kind == ClassifierKind.KNN:
        return {'k': int(spec.params.get('k', KNN_NEIGHBORS)), 'X': X.astype(float), 'y': y.astype(np.int64)}

    raise ValueError(f'unsupported classifier kind {spec.kind}')
# endregion


# region evaluators
def _tree_proba(tree: dict, X32: np.ndarray) -> np.ndarray:
    node = np.zeros(len(X32), dtype=np.int64)
    left, right, feature, threshold = tree['left'], tree['right'], tree['feature'], tree['threshold']
    active = left[node] != -1
    while active.any():
        rows = np.flatnonzero(active)
        current = node[rows]
        go_left = X32[rows, feature[current]].astype(float) <= threshold[current]
        node[rows] = np.where(go_left, left[current], right[current])
        active = left[node] != -1
    return tree['proba'][node, 1]


def _mlp_proba(params: dict, X: np.ndarray) -> np.ndarray:
    h = X
    coefs, intercepts = params['coefs'], params['intercepts']
    for W, b in zip(coefs[:-1], intercepts[:-1]):
        h = h @ W + b
        if params['activation'] == 'relu':
            h = np.maximum(h, 0.0)
        elif params['activation'] == 'tanh':
            h = np.tanh(h)
        elif params['activation'] == 'logistic':
            h = 1.0 / (1.0 + np.exp(-h))
    out = (h @ coefs[-1] + intercepts[-1]).ravel()
    return 1.0 / (1.0 + np.exp(-np.clip(out, -500, 500)))


def _nb_log_likelihood(params: dict, X: np.ndarray) -> np.ndarray:
    """joint log likelihood per (row, class) in the stored class order"""
    theta, var, prior = params['theta'], params['var'], params['prior']
    jll = []
    for c in range(len(prior)):
        log_norm = -0.5 * np.sum(np.log(2.0 * np.pi * var[c]))
        jll.append(np.log(prior[c]) + log_norm - 0.5 * np.sum((X - theta[c]) ** 2 / var[c], axis=1))
    return np.column_stack(jll)


def _knn_predict(params: dict, X: np.ndarray) -> np.ndarray:
    train_X, train_y = params['X'], params['y']
    k = min(params['k'], len(train_y))
    distances = cdist(X, train_X)
    nearest = np.argsort(distances, axis=1, kind='stable')[:, :k]

    labels = np.empty(len(X), dtype=int)
    for row, idx in enumerate(nearest):
        votes = train_y[idx]
        unsafe = int(np.sum(votes == OutcomeLabel.UNSAFE))
        safe = k - unsafe
        if unsafe != safe:
            labels[row] = OutcomeLabel.UNSAFE if unsafe > safe else OutcomeLabel.SAFE
            continue
        d = distances[row, idx]
        mean_unsafe = d[votes == OutcomeLabel.UNSAFE].mean()
        mean_safe = d[votes == OutcomeLabel.SAFE].mean()
        labels[row] = OutcomeLabel.UNSAFE if mean_unsafe < mean_safe else OutcomeLabel.SAFE
    return labels
# endregion


def _check(X, n_features: int | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if n_features is not None and X.shape[1] != n_features:
        raise DimensionMismatch(f'model expects {n_features} features, got {X.shape[1]}')
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput('feature matrix has non-finite values')
    return X


def train(spec: ClassifierSpec, X, y, feature_names: list[str] | None = None,
          normalization: NormalizationParams | None = None) -> TrainedModel:
    X = _check(X)
    y = np.asarray(y, dtype=int).ravel()
    if len(y) != len(X):
        raise DimensionMismatch(f'{len(y)} labels for {len(X)} rows')
    if len(np.unique(y)) < 2:
        raise OneClass(f'{spec.kind.value} needs both outcomes in the training set')

    scale_mean = scale_std = None
    if spec.scaled:
        scaler = StandardScaler().fit(X)
        scale_mean, scale_std = scaler.mean_.astype(float), scaler.scale_.astype(float)
        X = (X - scale_mean) / scale_std

    logger.debug(f'training {spec.kind.value} on {X.shape[0]} rows, {X.shape[1]} features')
    return TrainedModel(
        kind=spec.kind,
        params=_fit(spec, X, y),
        feature_names=list(feature_names) if feature_names is not None else [f'f{j}' for j in range(X.shape[1])],
        seed=spec.seed,
        scale_mean=scale_mean,
        scale_std=scale_std,
        normalization=normalization,
    )


def predict_proba(model: TrainedModel, X) -> np.ndarray:
    """probability of Unsafe; KNN reports its vote share"""
    X = _check(X, model.n_features)
    if model.scale_mean is not None:
        X = (X - model.scale_mean) / model.scale_std

    if model.kind in (ClassifierKind.RANDOM_FOREST, ClassifierKind.DECISION_TREE):
        X32 = X.astype(np.float32)
        return np.mean([_tree_proba(t, X32) for t in model.params['trees']], axis=0)
    if model.kind == ClassifierKind.MLP:
        return _mlp_proba(model.params, X)
    if model.kind == ClassifierKind.NAIVE_BAYES:
        jll = _nb_log_likelihood(model.params, X)
        jll = jll - jll.max(axis=1, keepdims=True)
        proba = np.exp(jll) / np.exp(jll).sum(axis=1, keepdims=True)
        return proba[:, list(model.params['classes']).index(OutcomeLabel.UNSAFE)]
    if model.kind == ClassifierKind.KNN:
        return _knn_predict(model.params, X).astype(float)
    raise ValueError(f'unsupported classifier kind {model.kind}')


def predict(model: TrainedModel, X) -> np.ndarray:
    """one label per row, Unsafe when its probability is above one half"""
    X = _check(X, model.n_features)
    if model.kind == ClassifierKind.KNN:
        if model.scale_mean is not None:
            X = (X - model.scale_mean) / model.scale_std
        return _knn_predict(model.params, X)
    if model.kind == ClassifierKind.NAIVE_BAYES:
        if model.scale_mean is not None:
            X = (X - model.scale_mean) / model.scale_std
        jll = _nb_log_likelihood(model.params, X)
        unsafe = list(model.params['classes']).index(OutcomeLabel.UNSAFE)
        return (jll[:, unsafe] > jll[:, 1 - unsafe]).astype(int)
    return (predict_proba(model, X) > 0.5).astype(int)


def predict_table(model: TrainedModel, table: MetadataTable) -> np.ndarray:
    """predict raw scenarios: pick the model's columns by name and standardize them as in training"""
    missing = [n for n in model.feature_names if n not in table.feature_names]
    if missing:
        raise UnknownFeature(f'table lacks model features {missing}')
    if model.normalization is not None:
        prepared = model.normalization.select(model.feature_names).apply(table)
    else:
        prepared = table.select(model.feature_names)
    return predict(model, prepared.values)
