import argparse
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
import numpy as np
import pandas as pd
from src.cli.config import DATASET_KINDS, RunConfig, load_config
from src.consts import TOOL_VERSION
from src.extraction.suite import extract_directory
from src.geometry.coverage import compute_coverage
from src.geometry.shapes import Polygon
from src.metadata.metadata_table import MetadataTable, load_metadata, save_metadata
from src.prediction.classifiers import ClassifierKind, ClassifierSpec, TrainedModel, predict, predict_table, train
from src.prediction.comparison import compare_isa_vs_random, split_train_test
from src.prediction.metrics import EvalReport, evaluate
from src.preprocess.preprocess import CorrelationMatrix, NormalizationParams, preprocess_table
from src.projection.pilot import ProjectionModel, build_instance_space, space_from_model
from src.selection.clustering import cluster_features
from src.selection.feature_selection import select_features
from src.utils.errors import DataError, MissingInput, UsageError
from src.utils.render_utils import OUTCOME, render_svg
from src.utils.utils import digest_tree, get_current_timestamp, read_json, timed, write_json, write_text_atomic

logger = logging.getLogger(__name__)

MANIFEST = 'manifest.json'

# region run directory layout
METADATA_CSV = 'metadata.csv'
EXTRACTION_JSON = 'extraction.json'
PROCESSED_CSV = 'processed.csv'
NORMALIZATION_JSON = 'normalization.json'
CORRELATION_JSON = 'correlation.json'
PRUNE_CSV = 'prune_report.csv'
PRUNE_TXT = 'prune_report.txt'
SELECTED_JSON = 'selected.json'
SELECTION_CSV = 'selection.csv'
MODEL_JSON = 'model.json'
SPACE_CSV = 'space.csv'
COVERAGE_JSON = 'coverage.json'
MODELS_DIR = 'models'
EVALUATION_CSV = 'evaluation.csv'
PREDICTIONS_CSV = 'predictions.csv'
COMPARISON_CSV = 'comparison.csv'
COMPARISON_JSON = 'comparison.json'
COMPARISON_SUMMARY_CSV = 'comparison_summary.csv'
PLOTS_DIR = 'plots'
# endregion


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _csv(df: pd.DataFrame, path: Path) -> None:
    write_text_atomic(path, df.to_csv(index=False, float_format='%.17g', lineterminator='\n'))


def _require(path: Path, what: str) -> Path:
    if not path.is_file():
        raise MissingInput(f'{what} not found: {path}, run the earlier stage first', source=str(path))
    return path


def _selected(run_dir: Path) -> list[str]:
    return list(read_json(_require(run_dir / SELECTED_JSON, 'feature selection'))['selected'])


def _normalization(run_dir: Path) -> NormalizationParams:
    return NormalizationParams.from_dict(read_json(_require(run_dir / NORMALIZATION_JSON, 'normalization')))


def _processed(run_dir: Path, source: str | None) -> MetadataTable:
    return load_metadata(source if source is not None else run_dir / PROCESSED_CSV)


def _test_table(config: RunConfig, normalization: NormalizationParams) -> MetadataTable | None:
    """external suite, standardized with the training parameters"""
    if config.test_metadata is None:
        return None
    return normalization.apply(load_metadata(config.test_metadata))


# region stages
def stage_extract(config: RunConfig, source: str | None) -> None:
    run_dir = config.run_dir
    source = source if source is not None else config.input
    if source is None:
        raise UsageError('extract needs --input')
    if config.kind == 'metadata':
        table = load_metadata(source)
        report = {'kind': 'metadata', 'files': 1, 'skipped': [],
                  'missing_counts': {n: int(c) for n, c in zip(table.feature_names, table.missing.sum(axis=0)) if c}}
    else:
        table, extraction = extract_directory(source, config.kind, config.straight_angle, config.workers)
        report = extraction.to_dict()
    save_metadata(table, run_dir / METADATA_CSV)
    write_json(run_dir / EXTRACTION_JSON, report)


def stage_preprocess(config: RunConfig, source: str | None) -> None:
    run_dir = config.run_dir
    table = load_metadata(source if source is not None else _require(run_dir / METADATA_CSV, 'metadata'))
    result = preprocess_table(table, config.theta_redundant, config.theta_weak)
    save_metadata(result.table.filled(), run_dir / PROCESSED_CSV)
    write_json(run_dir / NORMALIZATION_JSON, result.normalization.to_dict())
    write_json(run_dir / CORRELATION_JSON, result.correlation.to_dict())
    _csv(result.report.to_frame(), run_dir / PRUNE_CSV)
    write_text_atomic(run_dir / PRUNE_TXT, result.report.to_text())
    logger.info(f'kept {result.table.n_features} features: {result.table.feature_names}')


def stage_select(config: RunConfig, source: str | None) -> None:
    run_dir = config.run_dir
    table = _processed(run_dir, source)
    corr = CorrelationMatrix.from_dict(read_json(_require(run_dir / CORRELATION_JSON, 'correlation matrix')))
    corr = corr.select(table.feature_names)

    clustering = cluster_features(corr, config.k_range, seed=config.seed, restarts=config.clustering_restarts)
    selection = select_features(table, clustering, budget=config.budget, seed=config.seed, workers=config.workers,
                                trees=config.selection_trees, folds=config.cv_folds)
    write_json(run_dir / SELECTED_JSON, {**selection.to_dict(), 'clustering': clustering.to_dict()})
    _csv(selection.to_frame(table.feature_names), run_dir / SELECTION_CSV)


def stage_project(config: RunConfig, source: str | None) -> None:
    run_dir = config.run_dir
    table = _processed(run_dir, source)
    selected = _selected(run_dir)
    space = build_instance_space(table.select(selected), restarts=config.restarts, seed=config.seed,
                                 workers=config.workers, normalization=_normalization(run_dir).select(selected))
    space.model.save(run_dir / MODEL_JSON)
    space.save(run_dir / SPACE_CSV)


def stage_coverage(config: RunConfig, source: str | None, k: int | None = None, eps: float | None = None) -> None:
    run_dir = config.run_dir
    model = ProjectionModel.load(run_dir / MODEL_JSON)
    space = space_from_model(_processed(run_dir, source), model)
    corr = CorrelationMatrix.from_dict(read_json(_require(run_dir / CORRELATION_JSON, 'correlation matrix')))
    report = compute_coverage(space, model, rho=corr, theta_strong=config.theta_strong, k=k, eps=eps,
                              workers=config.workers)
    report.save(run_dir / COVERAGE_JSON)


def _train_one(kind: ClassifierKind, seed: int, train_part: MetadataTable, test_part: MetadataTable,
               normalization: NormalizationParams) -> tuple[TrainedModel, EvalReport]:
    model = train(ClassifierSpec(kind=kind, seed=seed), train_part.values, train_part.outcomes,
                  feature_names=train_part.feature_names, normalization=normalization)
    return model, evaluate(predict(model, test_part.values), test_part.outcomes)


def stage_train(config: RunConfig, source: str | None) -> None:
    run_dir = config.run_dir
    selected = _selected(run_dir)
    normalization = _normalization(run_dir)
    table = _processed(run_dir, source).select(selected)
    test_table = _test_table(config, normalization)
    if test_table is None:
        train_part, test_part = split_train_test(table, config.train_fraction, config.seed)
    else:
        train_part, test_part = table, test_table.select(selected)

    results: dict[ClassifierKind, tuple[TrainedModel, EvalReport]] = {}
    with ThreadPoolExecutor(max_workers=config.workers) as executor:
        future_to_kind = {
            executor.submit(_train_one, kind, config.seed, train_part, test_part, normalization.select(selected)): kind
            for kind in config.kinds
        }
        for future in as_completed(future_to_kind):
            results[future_to_kind[future]] = future.result()

    rows = []
    for kind in config.kinds:
        model, evaluation = results[kind]
        model.save(run_dir / MODELS_DIR / f'{kind.value}.json')
        rows.append({'kind': kind.value, **evaluation.to_dict()})
        logger.info(f'{kind.value}: precision {evaluation.precision:.3f}, recall {evaluation.recall:.3f}, '
                    f'f1 {evaluation.f1:.3f}')
    _csv(pd.DataFrame(rows), run_dir / EVALUATION_CSV)


def stage_predict(config: RunConfig, source: str | None) -> None:
    """label raw scenarios with every trained model"""
    run_dir = config.run_dir
    table = load_metadata(source if source is not None else _require(run_dir / METADATA_CSV, 'metadata'))
    paths = sorted((run_dir / MODELS_DIR).glob('*.json'))
    if not paths:
        raise MissingInput(f'no trained models in {run_dir / MODELS_DIR}', source=str(run_dir / MODELS_DIR))

    df = pd.DataFrame({'id': table.instance_ids})
    for path in paths:
        model = TrainedModel.load(path)
        labels = predict_table(model, table)
        df[model.kind.value] = np.where(labels == 1, 'unsafe', 'safe')
    df['outcome'] = np.where(table.outcomes == 1, 'unsafe', 'safe')
    _csv(df, run_dir / PREDICTIONS_CSV)


def stage_compare(config: RunConfig, source: str | None) -> None:
    run_dir = config.run_dir
    table = _processed(run_dir, source)
    test_table = _test_table(config, _normalization(run_dir))
    if test_table is not None:
        test_table = test_table.select(table.feature_names)
    report = compare_isa_vs_random(table, _selected(run_dir), repetitions=config.repetitions, seed=config.seed,
                                   kinds=config.kinds, train_fraction=config.train_fraction,
                                   test_table=test_table, workers=config.workers)
    _csv(report.to_frame(), run_dir / COMPARISON_CSV)
    _csv(report.summary_frame(), run_dir / COMPARISON_SUMMARY_CSV)
    write_json(run_dir / COMPARISON_JSON, report.to_dict())


def stage_plot(config: RunConfig, source: str | None, colour_by: list[str] | None = None) -> None:
    run_dir = config.run_dir
    model = ProjectionModel.load(run_dir / MODEL_JSON)
    space = space_from_model(_processed(run_dir, source), model)
    plots = run_dir / PLOTS_DIR

    for name in colour_by or [*model.feature_names, OUTCOME]:
        render_svg(space, name, plots / f'{name}.svg')

    coverage_path = run_dir / COVERAGE_JSON
    if coverage_path.is_file():
        coverage = read_json(coverage_path)
        boundary = Polygon.from_dict(coverage['boundary']['polygon'])
        footprints = [Polygon.from_dict(p) for f in coverage['footprints'] for p in f['polygons']]
        render_svg(space, OUTCOME, plots / 'coverage.svg', boundary=boundary, footprints=footprints)
    else:
        logger.info('no coverage.json yet, skipping the coverage plot')
# endregion


def write_manifest(config: RunConfig, command: str, timings: dict[str, float]) -> dict:
    run_dir = config.run_dir
    manifest: dict = {
        'tool_version': TOOL_VERSION,
        'command': command,
        'created': get_current_timestamp(),
        'config': config.to_dict(),
        'timings': timings,
        'selected_features': None,
        'pilot_objective': None,
        'coverage': None,
    }
    if (run_dir / SELECTED_JSON).is_file():
        manifest['selected_features'] = read_json(run_dir / SELECTED_JSON)['selected']
    if (run_dir / MODEL_JSON).is_file():
        manifest['pilot_objective'] = read_json(run_dir / MODEL_JSON)['objective']
    if (run_dir / COVERAGE_JSON).is_file():
        coverage = read_json(run_dir / COVERAGE_JSON)
        manifest['coverage'] = {k: coverage[k] for k in ('area_IS', 'area_bound', 'coverage_percent')}
    manifest['digests'] = digest_tree(run_dir, exclude={MANIFEST})
    write_json(run_dir / MANIFEST, manifest)
    return manifest


PIPELINE = ['extract', 'preprocess', 'select', 'project', 'coverage', 'train', 'predict', 'compare', 'plot']


def _dispatch(command: str, config: RunConfig, args: argparse.Namespace, timings: dict[str, float]) -> None:
    # a stage's --input replaces its usual upstream artifact; in the pipeline it only feeds extract
    source = None if command == 'pipeline' else args.input
    stages = PIPELINE if command == 'pipeline' else [command]
    for stage in stages:
        with timed(stage, timings, logger):
            if stage == 'extract':
                stage_extract(config, args.input)
            elif stage == 'preprocess':
                stage_preprocess(config, source)
            elif stage == 'select':
                stage_select(config, source)
            elif stage == 'project':
                stage_project(config, source)
            elif stage == 'coverage':
                stage_coverage(config, source, getattr(args, 'k', None), getattr(args, 'eps', None))
            elif stage == 'train':
                stage_train(config, source)
            elif stage == 'predict':
                stage_predict(config, source)
            elif stage == 'compare':
                stage_compare(config, source)
            elif stage == 'plot':
                stage_plot(config, source, getattr(args, 'colour_by', None))


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument('--config', help='key=value config file')
    common.add_argument('--seed')
    common.add_argument('--input', help='stage input; scenario directory or metadata csv for extract')
    common.add_argument('--kind', choices=DATASET_KINDS)
    common.add_argument('--output-dir', dest='output_dir')
    common.add_argument('--workers')
    common.add_argument('--theta-redundant', dest='theta_redundant')
    common.add_argument('--theta-weak', dest='theta_weak')
    common.add_argument('--theta-strong', dest='theta_strong')
    common.add_argument('--straight-angle', dest='straight_angle')
    common.add_argument('--k-range', dest='k_range', help='lo,hi')
    common.add_argument('--budget')
    common.add_argument('--restarts')
    common.add_argument('--repetitions')
    common.add_argument('--train-fraction', dest='train_fraction')
    common.add_argument('--classifiers', dest='classifier_kinds', help='comma separated classifier kinds')
    common.add_argument('--test-metadata', dest='test_metadata', help='external suite to evaluate on')

    parser = _Parser(prog='isa', description='instance space analysis of autonomous vehicle test suites')
    commands = parser.add_subparsers(dest='command', required=True)
    for name in ['extract', 'preprocess', 'select', 'project', 'train', 'predict', 'compare', 'pipeline']:
        commands.add_parser(name, parents=[common])
    coverage = commands.add_parser('coverage', parents=[common])
    coverage.add_argument('--k', type=int, help='dbscan min points, overrides the automatic rule')
    coverage.add_argument('--eps', type=float, help='dbscan radius, overrides the automatic rule')
    plot = commands.add_parser('plot', parents=[common])
    plot.add_argument('--colour-by', dest='colour_by', action='append', help='feature name or "outcome", repeatable')
    return parser


CONFIG_KEYS = ['seed', 'input', 'kind', 'output_dir', 'workers', 'theta_redundant', 'theta_weak', 'theta_strong',
               'straight_angle', 'k_range', 'budget', 'restarts', 'repetitions', 'train_fraction',
               'classifier_kinds', 'test_metadata']


def run(argv: list[str] | None = None) -> int:
    """0 on success, 1 on a usage error, 2 on a data error"""
    try:
        args = build_parser().parse_args(argv)
        config = load_config(args.config, overrides={k: getattr(args, k) for k in CONFIG_KEYS})
        config.run_dir.mkdir(parents=True, exist_ok=True)

        timings: dict[str, float] = {}
        _dispatch(args.command, config, args, timings)
        manifest = write_manifest(config, args.command, timings)
        logger.info(f'{args.command} done, {len(manifest["digests"])} artifacts in {config.run_dir}')
    except UsageError as e:
        logger.error(f'usage error: {e}')
        return 1
    except DataError as e:
        logger.error(f'data error: {e}')
        return 2
    except SystemExit as e:
        # --help
        return int(e.code or 0)
    return 0
