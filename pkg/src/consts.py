# defaults below are decisions where the source method names no number
import sys

if sys.version_info >= (3, 11):
    from typing import TypedDict, NotRequired
else:
    from typing_extensions import TypedDict, NotRequired


TOOL_VERSION = '1.0.0'

# region preprocess / selection / geometry defaults
THETA_REDUNDANT = 0.95
THETA_WEAK = 0.10
THETA_STRONG = 0.7
STRAIGHT_ANGLE_DEG = 5.0

MAX_K = 15
CLUSTERING_RESTARTS = 10
PAM_MAX_ITER = 300
COMBINATION_BUDGET = 20_000
SELECTION_TREES = 50
CV_FOLDS = 5

PILOT_RESTARTS = 30
PILOT_PERTURBATION = 0.3
PILOT_FTOL = 1e-8
PILOT_MAX_ITER = 1000
PILOT_RIDGE = 1e-10

MAX_BOUNDARY_FEATURES = 20

REPETITIONS = 10
TRAIN_FRACTION = 0.8
SIGNIFICANCE = 0.05
EXACT_WILCOXON_MAX = 25
# endregion

# region file layout
FEATURE_PREFIX = 'feature_'
ID_COLUMN = 'id'
OUTCOME_COLUMN = 'outcome'

DEFAULT_OUTPUT_DIR = './isa_run'
OUTPUT_DIR_ENV = 'ISA_OUTPUT_DIR'
# endregion

# region encoding tables
# category strings in the scenario logs carry a description after the first word,
# e.g. "Slow (0.01 < speed (m/s) <= 5)", so lookups use the lowercased first word
TRAFFIC_LIGHT = {'none': 0, 'green': 1, 'yellow': 2, 'orange': 2, 'red': 3}
VOLUME = {'small': 0, 'medium': 1, 'large': 2}
OBSTACLE_TYPE = {'pedestrian': 0, 'npc_vehicle': 1, 'static': 2}
TIME_OF_DAY = {'morning': 0, 'noon': 1, 'night': 2}
WEATHER_INTENSITY = {'none': 0, 'light': 1, 'moderate': 2, 'heavy': 3}
SPEED_CATEGORY = {'stop': 0, 'slow': 1, 'moderate': 2, 'fast': 3}
# endregion

# region feature names
# scenario time series, 61 features
DYNAMIC_FEATURES = [
    'AV_acceleration', 'AV_throttle', 'AV_brake', 'AV_steeringRate', 'AV_speed', 'AV_velocity', 'AV_position',
    'num_peds', 'num_NPCs', 'num_statObs', 'tot_obs', 'is_ped', 'traffic_light', 'Sidewalk',
    'rain', 'fog', 'wetness', 'time_of_day',
    'avg_obsDist', 'max_obsDist', 'min_obsDist', 'type_maxDistObs', 'type_minDistObs',
    'op_maxDistObs', 'op_minDistObs', 'vol_minDistObs', 'speed_minDistObs', 'dist_minDistObs',
    'avg_obsSpeed', 'max_obsSpeed', 'min_obsSpeed', 'type_maxSpeedObs', 'type_minSpeedObs',
    'op_maxSpeedObs', 'op_minSpeedObs', 'vol_minSpeedObs', 'speed_minSpeedObs', 'dist_maxSpeedObs',
    'avg_obsVel', 'max_obsVel', 'min_obsVel', 'type_maxVelObs', 'type_minVelObs',
    'op_maxVelObs', 'op_minVelObs', 'vol_minVelObs',
    'avg_obsAcc', 'min_obsAcc', 'max_obsAcc', 'type_maxAccObs', 'type_minAccObs',
    'op_maxAccObs', 'op_minAccObs', 'vol_maxAccObs',
    'avg_obsVol', 'max_obsVol', 'min_obsVol', 'type_maxVolObs', 'type_minVolObs',
    'op_maxVolObs', 'op_minVolObs',
]

# virtual roads, 15 features
ROAD_FEATURES = [
    'min_angle', 'max_angle', 'mean_angle', 'median_angle', 'std_angle', 'total_angle',
    'min_pivot_off', 'max_pivot_off', 'mean_pivot_off', 'median_pivot_off', 'std_pivot_off',
    'num_l_turns', 'num_r_turns', 'num_straights', 'road_distance',
]
# endregion


PruneRow = TypedDict('PruneRow', {
    'feature': str,
    'action': str,
    'partner': NotRequired[str],
    'rho': NotRequired[float],
    'cells': NotRequired[int],
})

ComparisonRow = TypedDict('ComparisonRow', {
    'kind': str,
    'repetition': int,
    'arm': str,
    'features': str,
    'precision': float,
    'recall': float,
    'f1': float,
    'macro_precision': float,
    'macro_recall': float,
    'macro_f1': float,
})
