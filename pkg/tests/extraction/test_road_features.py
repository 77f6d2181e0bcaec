import math
import numpy as np
import pytest
from src.consts import ROAD_FEATURES
from src.extraction.road_features import extract_road_features, segment_road, turn_angles
from src.extraction.scenario_parser import RoadTest
from src.metadata.metadata_table import OutcomeLabel
from tests.conftest import ROAD_TEST, arc_road


def road(points) -> RoadTest:
    return RoadTest(test_id='r', road_points=[tuple(p) for p in points], outcome=OutcomeLabel.SAFE)


def s_curve() -> np.ndarray:
    left = arc_road(30.0, 60.0, 4.0)
    end = left[-1]
    heading = math.radians(60.0)
    straight = [[end[0] + d * math.cos(heading), end[1] + d * math.sin(heading)] for d in (10.0, 20.0, 30.0)]
    # right arc continuing from the straight, built in a local frame then rotated into place
    local = np.array(arc_road(40.0, 90.0, 5.0, left=False))
    c, s = math.cos(heading), math.sin(heading)
    rotated = local @ np.array([[c, s], [-s, c]]) + straight[-1]
    return np.vstack([left, straight, rotated[1:]])


def test_collinear_road_is_one_straight():
    v = extract_road_features(road([[0, 0], [5, 0], [10, 0]]))
    assert v.names == ROAD_FEATURES
    assert v['num_straights'] == 1
    assert v['num_l_turns'] == 0
    assert v['num_r_turns'] == 0
    assert v['road_distance'] == 10
    assert v['total_angle'] == 0
    for name in ('min_angle', 'max_angle', 'mean_angle', 'median_angle', 'std_angle', 'mean_pivot_off'):
        assert np.isnan(v[name])


def test_two_point_road_is_one_segment():
    segments = segment_road(np.array([[0.0, 0.0], [3.0, 4.0]]))
    assert len(segments) == 1
    assert segments[0].kind == 'straight'


def test_quarter_circle_is_one_left_turn():
    v = extract_road_features(road(arc_road(50.0, 90.0, 3.0)))
    assert v['num_l_turns'] == 1
    assert v['num_r_turns'] == 0
    # chord headings run from 1.5 to 88.5 degrees, one sampling step short of 90
    assert v['total_angle'] == pytest.approx(87.0, abs=1e-6)
    assert v['mean_pivot_off'] == pytest.approx(50.0, rel=0.01)
    assert v['std_angle'] == 0


def test_right_turn_sign():
    angles = turn_angles(np.array(arc_road(20.0, 30.0, 10.0, left=False)))
    assert np.all(angles < 0)
    v = extract_road_features(road(arc_road(20.0, 30.0, 10.0, left=False)))
    assert v['num_r_turns'] == 1


def test_small_wiggle_stays_straight():
    v = extract_road_features(road([[0, 0], [10, 0], [20, 0.2], [30, 0.2]]))
    assert v['num_l_turns'] + v['num_r_turns'] == 0
    assert v['num_straights'] == 1


def test_s_curve_has_left_and_right_turns():
    v = extract_road_features(road(s_curve()))
    assert v['num_l_turns'] == 1
    assert v['num_r_turns'] == 1
    assert v['num_straights'] >= 1
    assert v['max_angle'] >= v['min_angle']


def test_appendix_road_distance_prefix():
    points = ROAD_TEST['road_points']
    expected = sum(math.dist(a, b) for a, b in zip(points, points[1:]))
    v = extract_road_features(road(points))
    assert v['road_distance'] == pytest.approx(expected, rel=1e-12)
    assert 3.9 < v['road_distance'] < 4.1


def test_rotation_and_translation_invariance():
    points = s_curve()
    theta = 0.7
    rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    moved = points @ rot.T + np.array([1234.5, -987.6])

    a = extract_road_features(road(points)).values
    b = extract_road_features(road(moved)).values
    np.testing.assert_allclose(a, b, rtol=1e-6, atol=1e-6)


def test_reversal_swaps_turn_directions():
    points = s_curve()
    forward = extract_road_features(road(points))
    backward = extract_road_features(road(points[::-1]))
    assert forward['num_l_turns'] == backward['num_r_turns']
    assert forward['num_r_turns'] == backward['num_l_turns']
    assert forward['road_distance'] == pytest.approx(backward['road_distance'])
    assert forward['total_angle'] == pytest.approx(backward['total_angle'])
