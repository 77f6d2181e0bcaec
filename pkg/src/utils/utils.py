import hashlib
import json
import os
import tempfile
import time
from contextlib import contextmanager
from datetime import datetime, timezone
from logging import Logger
from pathlib import Path


DATE_FORMAT = '%Y-%m-%d %H:%M:%S UTC'


def get_current_timestamp() -> str:
    return datetime.now(timezone.utc).strftime(DATE_FORMAT)


def file_digest(path: str | Path) -> str:
    sha = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 16), b''):
            sha.update(chunk)
    return sha.hexdigest()


def digest_tree(root: str | Path, exclude: set[str] | None = None) -> dict[str, str]:
    """sha256 of every file under root, keyed by posix relative path"""
    root = Path(root)
    exclude = exclude or set()
    return {
        p.relative_to(root).as_posix(): file_digest(p)
        for p in sorted(root.rglob('*'))
        if p.is_file() and p.relative_to(root).as_posix() not in exclude
    }


def write_text_atomic(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f'.{path.name}.', suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def write_json(path: str | Path, payload) -> None:
    write_text_atomic(path, json.dumps(payload, indent=2, sort_keys=True) + '\n')


def read_json(path: str | Path):
    return json.loads(Path(path).read_text(encoding='utf-8'))


# stage timings only ever go to the manifest, never into a digested artifact
@contextmanager
def timed(stage: str, timings: dict[str, float], logger: Logger):
    start_time = time.time()
    logger.info(f'starting {stage}')
    yield
    timings[stage] = round(time.time() - start_time, 3)
    logger.info(f'finished {stage} in {timings[stage]:.2f}s')
