import json
import pytest
from src.extraction.suite import extract_directory
from src.utils.errors import MissingInput, MalformedScenario, NoDataRows, UsageError
from tests.conftest import arc_road


def write_roads(directory, roads: dict[str, dict]) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for name, doc in roads.items():
        (directory / name).write_text(json.dumps(doc), encoding='utf-8')


def test_extract_road_directory_in_file_order(tmp_path):
    write_roads(tmp_path / 'roads', {
        'b.json': {'road_points': arc_road(30.0, 45.0, 5.0), 'test_outcome': 'FAIL'},
        'a.json': {'road_points': [[0, 0], [10, 0]], 'test_outcome': 'PASS'},
        'c.json': {'road_points': [[0, 0], [5, 5]], 'test_outcome': 'PASS', 'is_valid': False},
    })

    table, report = extract_directory(tmp_path / 'roads', 'road', workers=2)

    assert table.instance_ids == ['a', 'b']
    assert table.outcomes.tolist() == [0, 1]
    assert table.n_features == 15
    assert report.skipped == ['c.json']
    assert report.to_dict()['angle_unit'] == 'degrees'
    assert report.to_dict()['straight_threshold'] == 5.0


def test_extract_timeseries_directory(tmp_path, scenario_ts):
    directory = tmp_path / 'ts'
    directory.mkdir()
    (directory / 'scenario_1.json').write_text(json.dumps(scenario_ts), encoding='utf-8')
    scenario_ts['TimeStep2']['CollisionInfoAtTimeStep'] = 'Occurred'
    (directory / 'scenario_2.json').write_text(json.dumps(scenario_ts), encoding='utf-8')

    table, report = extract_directory(directory, 'timeseries')

    assert table.instance_ids == ['scenario_1', 'scenario_2']
    assert table.outcomes.tolist() == [0, 1]
    assert table.n_features == 61
    assert 'SpeedCut' in report.encodings['operations']
    assert report.missing_counts['AV_brake'] == 2


def test_extract_directory_errors(tmp_path):
    with pytest.raises(MissingInput):
        extract_directory(tmp_path / 'missing', 'road')
    with pytest.raises(UsageError):
        extract_directory(tmp_path, 'lidar')
    with pytest.raises(NoDataRows):
        extract_directory(tmp_path, 'road')


def test_bad_file_names_its_source(tmp_path):
    write_roads(tmp_path, {'ok.json': {'road_points': [[0, 0], [1, 0]], 'test_outcome': 'PASS'}})
    (tmp_path / 'broken.json').write_text('{', encoding='utf-8')
    with pytest.raises(MalformedScenario, match='broken.json'):
        extract_directory(tmp_path, 'road')
