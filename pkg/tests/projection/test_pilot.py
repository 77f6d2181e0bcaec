import numpy as np
import pytest
from scipy.spatial.distance import pdist
from scipy.stats import spearmanr
from src.preprocess.preprocess import NormalizationParams
from src.projection.pilot import (
    ProjectionModel, build_instance_space, fit_pilot, pilot_gradient, pilot_objective, project,
)
from src.selection.feature_selection import pca2
from src.utils.errors import DimensionMismatch, MissingInput, OneClass
from tests.conftest import make_table, two_factor

SPOT_A = np.array([
    [0.3726, -0.2019, 0.614],
    [-0.4046, 0.7063, 0.5738],
])


def spot_model() -> ProjectionModel:
    return ProjectionModel(A=SPOT_A.copy(), B=np.zeros((3, 2)), C=np.zeros((1, 2)), objective=0.0,
                           feature_names=['x', 'y', 'w'])


def standardized(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return (y - y.mean()) / y.std(ddof=1)


@pytest.mark.parametrize('seed', range(20))
def test_gradient_matches_central_differences(seed):
    rng = np.random.default_rng(seed)
    F = rng.standard_normal((4, 50))
    Y = rng.standard_normal(50)
    A = rng.standard_normal((2, 4))
    h = 1e-6

    analytic = pilot_gradient(A, F, Y)
    numeric = np.zeros_like(A)
    for idx in np.ndindex(*A.shape):
        up, down = A.copy(), A.copy()
        up[idx] += h
        down[idx] -= h
        numeric[idx] = (pilot_objective(up, F, Y).value - pilot_objective(down, F, Y).value) / (2 * h)

    np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-5)


def test_least_squares_matches_pseudo_inverse():
    rng = np.random.default_rng(1)
    F = rng.standard_normal((5, 40))
    Y = rng.standard_normal(40)
    A = rng.standard_normal((2, 5))
    Z = A @ F

    result = pilot_objective(A, F, Y)

    np.testing.assert_allclose(result.B, F @ np.linalg.pinv(Z), atol=1e-9)
    np.testing.assert_allclose(result.C, Y.reshape(1, -1) @ np.linalg.pinv(Z), atol=1e-9)
    assert not result.ridge


def test_rank_deficient_projection_uses_ridge():
    F = np.random.default_rng(2).standard_normal((3, 20))
    A = np.array([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    result = pilot_objective(A, F, np.ones(20))
    assert result.ridge
    assert np.isfinite(result.value)


def test_noiseless_two_factor_data_is_reconstructed():
    F, Y = two_factor()
    model = fit_pilot(F, Y, restarts=3, seed=0, workers=1)
    assert model.objective < 1e-6


def test_fit_is_no_worse_than_the_pca_start_and_oriented():
    rng = np.random.default_rng(3)
    F = rng.standard_normal((5, 120))
    Y = F[0] - 0.5 * F[2] + 0.3 * rng.standard_normal(120)

    model = fit_pilot(F, Y, restarts=4, seed=7, workers=2)

    start = pilot_objective(pca2(F.T).loadings.T, F, standardized(Y)).value
    assert model.objective <= start + 1e-9
    assert len(model.runs) == 4
    Z = model.A @ F
    for r in range(2):
        assert np.corrcoef(Z[r], Y)[0, 1] >= 0


def test_fit_is_deterministic():
    F, Y = two_factor(i=120, n=4, seed=5)
    Y = Y + np.random.default_rng(6).standard_normal(120)
    a = fit_pilot(F, Y, restarts=3, seed=1, workers=3)
    b = fit_pilot(F, Y, restarts=3, seed=1, workers=1)
    np.testing.assert_array_equal(a.A, b.A)


def test_projection_spot_check():
    model = spot_model()
    np.testing.assert_allclose(project(model, [1.0, 0.0, 0.0]), [0.3726, -0.4046])
    np.testing.assert_allclose(project(model, [0.0, 1.0, 0.0]), [-0.2019, 0.7063])
    np.testing.assert_allclose(project(model, [0.0, 0.0, 1.0]), [0.614, 0.5738])
    np.testing.assert_allclose(project(model, np.eye(3)), SPOT_A)


def test_projection_shape_errors():
    with pytest.raises(DimensionMismatch):
        project(spot_model(), np.zeros((2, 4)))
    with pytest.raises(DimensionMismatch):
        fit_pilot(np.zeros((3, 3)), np.zeros(3))
    with pytest.raises(OneClass):
        fit_pilot(np.random.default_rng(0).standard_normal((2, 10)), np.ones(10))


def test_model_save_and_load(tmp_path):
    model = spot_model()
    model.normalization = NormalizationParams(['x', 'y', 'w'], np.array([1.0, 2.0, 3.0]), np.array([1.0, 1.0, 2.0]))
    model.save(tmp_path / 'model.json')

    loaded = ProjectionModel.load(tmp_path / 'model.json')

    np.testing.assert_array_equal(loaded.A, model.A)
    assert loaded.feature_names == ['x', 'y', 'w']
    assert loaded.normalization.mean.tolist() == [1.0, 2.0, 3.0]
    with pytest.raises(MissingInput):
        ProjectionModel.load(tmp_path / 'absent.json')


def test_build_instance_space_places_every_instance():
    rng = np.random.default_rng(9)
    values = rng.standard_normal((80, 3))
    table = make_table(values, (values[:, 0] > 0).astype(int), names=['x', 'y', 'w'])

    space = build_instance_space(table, restarts=2, seed=0, workers=1)

    assert space.coords.shape == (80, 2)
    np.testing.assert_allclose(space.coords, (space.model.A @ values.T).T)
    frame = space.to_frame()
    assert list(frame.columns) == ['id', 'z1', 'z2', 'outcome']
    assert set(frame['outcome']) == {'safe', 'unsafe'}
    np.testing.assert_array_equal(space.feature('y'), values[:, 1])


def test_fitted_model_survives_save_and_load(tmp_path):
    rng = np.random.default_rng(10)
    F = rng.standard_normal((4, 40))
    Y = F[1] + 0.5 * rng.standard_normal(40)
    model = fit_pilot(F, Y, restarts=2, seed=0, workers=1, feature_names=['a', 'b', 'c', 'd'])

    model.save(tmp_path / 'model.json')
    loaded = ProjectionModel.load(tmp_path / 'model.json')

    assert isinstance(model.ridge, bool)
    assert loaded.ridge == model.ridge
    assert loaded.objective == model.objective
    np.testing.assert_array_equal(loaded.A, model.A)
    np.testing.assert_array_equal(loaded.C, model.C)
    assert loaded.runs == model.runs


def test_objective_never_rises_along_a_run():
    rng = np.random.default_rng(11)
    F = rng.standard_normal((6, 150))
    Y = F[0] - F[3] + rng.standard_normal(150)

    model = fit_pilot(F, Y, restarts=3, seed=2, workers=1)

    history = np.asarray(model.history)
    assert len(history) >= 2
    assert np.all(np.diff(history) <= 1e-12 * np.maximum(1.0, np.abs(history[:-1])))


def test_blob_neighbourhoods_are_preserved():
    rng = np.random.default_rng(12)
    centers = rng.normal(0.0, 10.0, (3, 6))
    blob = np.repeat([0, 1, 2], [167, 167, 166])
    X = centers[blob] + rng.standard_normal((500, 6))
    X = (X - X.mean(axis=0)) / X.std(axis=0, ddof=1)
    F = X.T

    model = fit_pilot(F, (blob == 0).astype(float), restarts=3, seed=0, workers=1)

    rho = spearmanr(pdist(X), pdist((model.A @ F).T)).statistic
    assert rho >= 0.8
