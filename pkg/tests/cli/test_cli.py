import logging
import numpy as np
import pandas as pd
import pytest
from src.cli.cli import run
from src.utils.utils import read_json


def write_suite(path, n: int = 150, seed: int = 0) -> None:
    rng = np.random.default_rng(seed)
    base = rng.standard_normal((n, 2))
    columns = {'id': [f'scenario_{i:03d}' for i in range(n)]}
    for g in range(2):
        for m in range(3):
            columns[f'feature_g{g}_m{m}'] = base[:, g] + 0.6 * rng.standard_normal(n)
    columns['feature_noise'] = rng.standard_normal(n)
    columns['outcome'] = np.where(base[:, 0] + base[:, 1] > 0, 'unsafe', 'safe')
    pd.DataFrame(columns).to_csv(path, index=False)


def pipeline_args(csv, out) -> list[str]:
    return [
        'pipeline', '--input', str(csv), '--kind', 'metadata', '--seed', '1', '--output-dir', str(out),
        '--restarts', '3', '--repetitions', '5', '--classifiers', 'DecisionTree,NaiveBayes', '--workers', '2',
    ]


@pytest.mark.slow
def test_pipeline_is_reproducible(tmp_path):
    csv = tmp_path / 'suite.csv'
    write_suite(csv)

    assert run(pipeline_args(csv, tmp_path / 'a')) == 0
    assert run(pipeline_args(csv, tmp_path / 'b')) == 0

    first = read_json(tmp_path / 'a' / 'manifest.json')
    second = read_json(tmp_path / 'b' / 'manifest.json')
    assert first['digests'] == second['digests']
    assert 'manifest.json' not in first['digests']
    assert {'space.csv', 'model.json', 'coverage.json', 'predictions.csv', 'plots/outcome.svg'} <= set(first['digests'])
    assert first['selected_features'] == second['selected_features']

    coverage = read_json(tmp_path / 'a' / 'coverage.json')
    assert {'area_IS', 'area_bound', 'coverage_percent'} <= set(coverage)
    assert 0.0 <= coverage['coverage_percent'] <= 100.0
    assert first['coverage']['coverage_percent'] == coverage['coverage_percent']

    predictions = pd.read_csv(tmp_path / 'a' / 'predictions.csv')
    assert list(predictions.columns) == ['id', 'DecisionTree', 'NaiveBayes', 'outcome']


def test_missing_input_is_a_data_error(tmp_path, caplog):
    missing = tmp_path / 'nope.csv'
    with caplog.at_level(logging.ERROR):
        code = run(['project', '--seed', '1', '--output-dir', str(tmp_path / 'run'), '--input', str(missing)])
    assert code == 2
    assert 'nope.csv' in caplog.text


def test_stage_without_upstream_artifact_is_a_data_error(tmp_path, caplog):
    with caplog.at_level(logging.ERROR):
        code = run(['select', '--seed', '1', '--output-dir', str(tmp_path)])
    assert code == 2
    assert 'processed.csv' in caplog.text


@pytest.mark.parametrize('argv', [
    ['project', '--bogus'],
    ['preprocess'],
    ['teleport', '--seed', '1'],
    ['coverage', '--seed', '1', '--k', 'many'],
])
def test_usage_errors(argv, tmp_path, monkeypatch):
    monkeypatch.setenv('ISA_OUTPUT_DIR', str(tmp_path))
    assert run(argv) == 1


def test_help_exits_cleanly(capsys):
    assert run(['--help']) == 0
    assert 'pipeline' in capsys.readouterr().out


def test_extract_then_preprocess_writes_artifacts(tmp_path):
    csv = tmp_path / 'suite.csv'
    write_suite(csv, n=60)
    out = tmp_path / 'run'

    assert run(['extract', '--input', str(csv), '--seed', '0', '--output-dir', str(out)]) == 0
    assert run(['preprocess', '--seed', '0', '--output-dir', str(out)]) == 0

    for name in ('metadata.csv', 'processed.csv', 'normalization.json', 'correlation.json', 'prune_report.txt'):
        assert (out / name).is_file()
    manifest = read_json(out / 'manifest.json')
    assert manifest['command'] == 'preprocess'
    assert 'preprocess' in manifest['timings']
    processed = pd.read_csv(out / 'processed.csv')
    assert not processed.isna().any().any()
