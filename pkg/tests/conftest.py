import json
import numpy as np
import pytest
from src.metadata.metadata_table import MetadataTable

# region scenario documents
SCENARIO_TS = {
    "TimeStep1": {
        "Ego_Position": {"vx": 1.28, "ay": -0.48, "az": 9.81, "ax": -0.37, "pz": 10.13, "vy": 1.28,
                         "px": 552874.26, "py": 4182784.82},
        "Ego_Operation": "SpeedCut",
        "Ego_Speed": "Slow (0.01 < speed (m/s) <= 5)",
        "Weather[rain]": "Light rain (0<rain_level<=0.2)",
        "Weather[fog]": "None fog (fog_level==0)",
        "Weather[wetness]": "Light wetness (0<wetness_level<=0.2)",
        "TimeofDay": "Noon (12pm)",
        "NPC": "None",
        "Pedestrian": "None",
        "Static obstacle": "None",
        "TrafficRule[Traffic light]": "Green (Allow to pass but slow at intersection)",
        "TrafficRule[Sidewalk]": "None",
        "CollisionInfoAtTimeStep": "NotOccurred",
    },
    "TimeStep2": {
        "Ego_Position": {"vx": 4.95, "ay": -0.75, "az": 9.81, "ax": -0.57, "pz": 10.13, "vy": 4.95,
                         "px": 552882.81, "py": 4182778.27},
        "Ego_Operation": "EmergencyBrake",
        "Ego_Speed": "Fast (speed (m/s) > 8)",
        "Weather[rain]": "Light rain (0<rain_level<=0.2)",
        "Weather[fog]": "None fog (fog_level==0)",
        "Weather[wetness]": "Light wetness (0<wetness_level<=0.2)",
        "TimeofDay": "Noon (12pm)",
        "NPC": {
            "NPC1": {
                "position": {"y": 4182794.42, "x": 552891.13, "z": 10.34},
                "volume": "large",
                "operation": "SwitchLane (RightToLeft)",
                "speed": "Stop (0 < speed (m/s) <= 0.01)",
                "distance_temp": 18.17,
                "relativeDistance": "Far(18<distance<=28)",
            }
        },
        "Pedestrian": "None",
        "Static obstacle": "None",
        "TrafficRule[Traffic light]": "Green (Allow to pass but slow at intersection)",
        "TrafficRule[Sidewalk]": "None",
        "CollisionInfoAtTimeStep": "NotOccurred",
    },
    "TimeStep3": {
        "Ego_Position": {"vx": 4.45, "ay": -2.28, "az": 9.84, "ax": -1.75, "pz": 10.13, "vy": 4.45,
                         "px": 552880.72, "py": 4182779.87},
        "Ego_Operation": "EmergencyBrake",
        "Ego_Speed": "Moderate (5 < speed (m/s) <= 8)",
        "Weather[rain]": "Light rain (0<rain_level<=0.2)",
        "Weather[fog]": "None fog (fog_level==0)",
        "Weather[wetness]": "Light wetness (0<wetness_level<=0.2)",
        "TimeofDay": "Noon (12pm)",
        "NPC": {
            "NPC1": {
                "position": {"y": 4182794.38, "x": 552891.17, "z": 10.28},
                "volume": "large",
                "operation": "SwitchLane (RightToLeft)",
                "speed": "Stop (0 < speed (m/s) <= 0.01)",
                "distance_temp": 17.88,
                "relativeDistance": "Near(8<distance<=18)",
            }
        },
        "Pedestrian": "None",
        "Static obstacle": "None",
        "TrafficRule[Traffic light]": "Yellow (Stop for a while)",
        "TrafficRule[Sidewalk]": "None",
        "CollisionInfoAtTimeStep": "NotOccurred",
    },
}

ROAD_TEST = {
    "test_id": "test.0001.json",
    "is_valid": True,
    "test_outcome": "FAIL",
    "predicted_test_outcome": None,
    "test_duration": 3.875001907348633,
    "road_points": [[100.0, 100.0], [99.927, 100.998], [99.825, 101.993], [99.695, 102.985], [99.54, 103.973]],
}
# endregion


@pytest.fixture
def scenario_ts() -> dict:
    return json.loads(json.dumps(SCENARIO_TS))


@pytest.fixture
def scenario_ts_document(scenario_ts) -> str:
    return json.dumps(scenario_ts)


@pytest.fixture
def road_test() -> dict:
    return json.loads(json.dumps(ROAD_TEST))


def arc_road(radius: float, degrees: float, step: float, start=(0.0, 0.0), left: bool = True) -> list[list[float]]:
    """points on a circular arc starting east-bound at start, sampled every step degrees"""
    sign = 1.0 if left else -1.0
    cx, cy = start[0], start[1] + sign * radius
    points = []
    for a in np.arange(0.0, degrees + 1e-9, step):
        t = np.radians(a)
        points.append([cx + radius * np.sin(t), cy - sign * radius * np.cos(t)])
    return points


def make_table(values, outcomes, names=None, ids=None) -> MetadataTable:
    values = np.asarray(values, dtype=float)
    n, p = values.shape
    return MetadataTable(
        instance_ids=ids if ids is not None else [f's{i:04d}' for i in range(n)],
        feature_names=names if names is not None else [f'f{j}' for j in range(p)],
        values=values,
        outcomes=np.asarray(outcomes, dtype=int),
    )


def planted_table(n: int = 1000, seed: int = 0) -> MetadataTable:
    """
    9 features in 3 correlated groups of 3; the outcome depends only on
    informative_a (group 0) and informative_b (group 1), whose groups are
    moderately correlated so their sum is the leading principal axis
    """
    rng = np.random.default_rng(seed)
    base = rng.standard_normal((n, 3))
    base[:, 1] = 0.5 * base[:, 0] + np.sqrt(0.75) * base[:, 1]
    columns, names = [], []
    for g in range(3):
        for m in range(3):
            columns.append(base[:, g] + 0.35 * rng.standard_normal(n))
            names.append(f'g{g}_m{m}')
    values = np.column_stack(columns)
    # the informative members carry the group signal without noise
    values[:, 0] = base[:, 0]
    values[:, 3] = base[:, 1]
    names[0], names[3] = 'informative_a', 'informative_b'
    outcomes = (base[:, 0] + base[:, 1] > 0).astype(int)
    return make_table(values, outcomes, names=names)


def two_gaussians(n: int = 400, p: int = 4, separation: float = 6.0, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], n // 2)
    X = rng.standard_normal((n, p))
    X[y == 1, 0] += separation
    order = rng.permutation(n)
    return X[order], y[order]


def two_factor(i: int = 300, n: int = 6, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """noiseless features and outcome spanned by two latent factors, features x instances"""
    rng = np.random.default_rng(seed)
    latent = rng.standard_normal((2, i))
    latent = latent - latent.mean(axis=1, keepdims=True)
    F = rng.standard_normal((n, 2)) @ latent
    Y = rng.standard_normal((1, 2)) @ latent
    return F, Y.ravel()


@pytest.fixture
def small_table() -> MetadataTable:
    return make_table(
        [[1.0, 10.0, 0.5], [2.0, 20.0, np.nan], [3.0, 30.0, 0.1], [4.0, 40.0, 0.7]],
        [0, 0, 1, 1],
        names=['a', 'b', 'c'],
    )
