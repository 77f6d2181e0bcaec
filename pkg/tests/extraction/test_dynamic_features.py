import json
import math
import numpy as np
import pytest
from src.consts import DYNAMIC_FEATURES
from src.extraction.dynamic_features import extract_dynamic_features
from src.extraction.encoding import EncodingTables, category_key
from src.extraction.scenario_parser import parse_scenario_ts
from src.metadata.metadata_table import OutcomeLabel
from src.utils.errors import UnknownCategory


def extract(document: dict):
    timeline = parse_scenario_ts(json.dumps(document))
    return extract_dynamic_features(timeline, EncodingTables.from_timelines([timeline]))


def test_appendix_counts_and_outcome(scenario_ts):
    v = extract(scenario_ts)

    assert len(v.names) == 61
    assert v.names == DYNAMIC_FEATURES
    assert v['num_NPCs'] == 1
    assert v['num_peds'] == 0
    assert v['num_statObs'] == 0
    assert v['tot_obs'] == 1
    assert v['is_ped'] == 0
    assert v['traffic_light'] == 1
    assert v.outcome == OutcomeLabel.SAFE


def test_appendix_distances(scenario_ts):
    v = extract(scenario_ts)
    assert v['min_obsDist'] == 17.88
    assert v['max_obsDist'] == 18.17
    assert v['avg_obsDist'] == pytest.approx((18.17 + 17.88) / 2)
    assert v['min_obsDist'] <= v['avg_obsDist'] <= v['max_obsDist']
    assert v['vol_minDistObs'] == 2
    assert v['speed_minDistObs'] == 0
    assert v['type_minDistObs'] == 1


def test_appendix_initial_ego_and_background(scenario_ts):
    v = extract(scenario_ts)
    assert v['AV_velocity'] == pytest.approx(math.hypot(1.28, 1.28))
    assert v['AV_acceleration'] == pytest.approx(math.sqrt(0.37 ** 2 + 0.48 ** 2 + 9.81 ** 2))
    assert v['AV_speed'] == 1
    assert v['rain'] == 1
    assert v['fog'] == 0
    assert v['time_of_day'] == 1
    assert v['Sidewalk'] == 0
    for name in ('AV_throttle', 'AV_brake', 'AV_steeringRate', 'avg_obsVel', 'min_obsAcc'):
        assert np.isnan(v[name])


def test_no_obstacles_marks_obstacle_features_missing(scenario_ts):
    v = extract({'TimeStep1': scenario_ts['TimeStep1']})
    assert v['tot_obs'] == 0
    assert np.isnan(v['min_obsDist'])
    assert np.isnan(v['avg_obsVol'])


def test_pedestrian_with_other_obstacle_sets_is_ped(scenario_ts):
    scenario_ts['TimeStep2']['Pedestrian'] = {
        'Pedestrian1': {'position': {'x': 552880.0, 'y': 4182780.0}, 'speed': 'Slow (walk)',
                        'volume': 'small', 'operation': 'Cross'},
    }
    v = extract(scenario_ts)
    assert v['num_peds'] == 1
    assert v['tot_obs'] == 2
    assert v['is_ped'] == 1
    # no distance_temp on the pedestrian, so its distance is measured from the ego position
    expected = math.hypot(552880.0 - 552882.81, 4182780.0 - 4182778.27)
    assert v['min_obsDist'] == pytest.approx(expected)
    assert v['type_minDistObs'] == 0


def test_min_distance_ties_go_to_earliest_timestep(scenario_ts):
    scenario_ts['TimeStep2']['NPC']['NPC1']['distance_temp'] = 17.88
    scenario_ts['TimeStep2']['NPC']['NPC1']['volume'] = 'small'
    v = extract(scenario_ts)
    assert v['vol_minDistObs'] == 0


def test_unknown_category_is_an_error(scenario_ts):
    scenario_ts['TimeStep1']['TrafficRule[Traffic light]'] = 'Blinking purple'
    with pytest.raises(UnknownCategory):
        extract(scenario_ts)


@pytest.mark.parametrize('field, text', [
    ('Weather[rain]', 'Torrential rain'),
    ('Weather[fog]', 'Purple fog'),
    ('Weather[wetness]', 'Soaked wetness'),
    ('TimeofDay', 'Dusk (7pm)'),
])
def test_unknown_category_in_a_later_timestep_is_an_error(scenario_ts, field, text):
    scenario_ts['TimeStep3'][field] = text
    with pytest.raises(UnknownCategory):
        extract(scenario_ts)


def test_operation_vocabulary_is_alphabetical(scenario_ts):
    timeline = parse_scenario_ts(json.dumps(scenario_ts))
    enc = EncodingTables.from_timelines([timeline])
    assert enc.operations == {'EmergencyBrake': 0, 'SpeedCut': 1, 'SwitchLane (RightToLeft)': 2}


def test_category_key():
    assert category_key('Slow (0.01 < speed (m/s) <= 5)') == 'slow'
    assert category_key('  Orange light') == 'orange'
