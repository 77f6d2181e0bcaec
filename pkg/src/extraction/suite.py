import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
import numpy as np
from src.consts import STRAIGHT_ANGLE_DEG
from src.extraction.dynamic_features import POOLING_RULE, extract_dynamic_features
from src.extraction.encoding import EncodingTables, FeatureVector
from src.extraction.road_features import extract_road_features
from src.extraction.scenario_parser import RoadTest, ScenarioTimeline, parse_road, parse_scenario_ts
from src.metadata.metadata_table import MetadataTable
from src.utils.errors import MissingInput, NoDataRows, UsageError

logger = logging.getLogger(__name__)

SCENARIO_KINDS = ('timeseries', 'road')


@dataclass
class ExtractionReport:
    kind: str
    straight_threshold: float
    angle_unit: str = 'degrees'
    pooling_rule: str = POOLING_RULE
    files: int = 0
    skipped: list[str] = field(default_factory=list)
    missing_counts: dict[str, int] = field(default_factory=dict)
    encodings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            'kind': self.kind,
            'angle_unit': self.angle_unit,
            'straight_threshold': self.straight_threshold,
            'pooling_rule': self.pooling_rule,
            'files': self.files,
            'skipped': self.skipped,
            'missing_counts': self.missing_counts,
            'encodings': self.encodings,
        }


def _parse_all(files: list[Path], parse, workers: int) -> dict[Path, object]:
    parsed = {}
    with ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_file = {executor.submit(parse, f): f for f in files}
        for future in as_completed(future_to_file):
            # a bad file fails the whole suite, the error names it
            parsed[future_to_file[future]] = future.result()
    return parsed


def _to_table(vectors: list[FeatureVector]) -> MetadataTable:
    return MetadataTable(
        instance_ids=[v.instance_id for v in vectors],
        feature_names=list(vectors[0].names),
        values=np.vstack([v.values for v in vectors]),
        outcomes=np.array([int(v.outcome) for v in vectors]),
    )


def extract_directory(path: str | Path, kind: str, straight_threshold: float = STRAIGHT_ANGLE_DEG,
                      workers: int = 4) -> tuple[MetadataTable, ExtractionReport]:
    """extract every *.json scenario of a directory, in lexicographic file order"""
    if kind not in SCENARIO_KINDS:
        raise UsageError(f'unknown scenario kind {kind!r}, expected one of {SCENARIO_KINDS}')
    path = Path(path)
    if not path.is_dir():
        raise MissingInput(f'scenario directory not found: {path}', source=str(path))

    files = sorted(path.glob('*.json'), key=lambda p: p.name)
    if not files:
        raise NoDataRows('no *.json scenarios in directory', source=str(path))

    start_time = time.time()
    logger.info(f'extracting {len(files)} {kind} scenarios from {path} with {workers} workers')
    report = ExtractionReport(kind=kind, straight_threshold=straight_threshold, files=len(files))

    if kind == 'timeseries':
        timelines: dict[Path, ScenarioTimeline] = _parse_all(
            files, lambda f: parse_scenario_ts(f.read_bytes(), scenario_id=f.stem, source=str(f)), workers,
        )  # type: ignore[assignment]
        enc = EncodingTables.from_timelines(timelines[f] for f in files)
        report.encodings = enc.to_dict()
        vectors = [extract_dynamic_features(timelines[f], enc, source=str(f)) for f in files]
    else:
        report.pooling_rule = ''
        roads: dict[Path, RoadTest] = _parse_all(
            files, lambda f: parse_road(f.read_bytes(), source=str(f)), workers,
        )  # type: ignore[assignment]
        vectors = []
        for f in files:
            road = roads[f]
            if not road.is_valid:
                logger.warning(f'skipping invalid road {f.name}')
                report.skipped.append(f.name)
                continue
            v = extract_road_features(road, straight_threshold)
            # file names are unique where test ids often are not
            vectors.append(FeatureVector(names=v.names, values=v.values, outcome=v.outcome, instance_id=f.stem))

    if not vectors:
        raise NoDataRows('every scenario was skipped', source=str(path))

    table = _to_table(vectors)
    report.missing_counts = {n: int(c) for n, c in zip(table.feature_names, table.missing.sum(axis=0)) if c}
    logger.info(f'extracted {table.n_instances} scenarios ({len(report.skipped)} skipped) '
                f'in {time.time() - start_time:.2f}s')
    return table, report
