"""CSV and JSON artifacts with provenance headers, written atomically."""

import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence

from src.core.config import get_config

logger = logging.getLogger(__name__)


def provenance_lines(command: str, params: Mapping[str, Any], extra: Optional[Mapping[str, Any]] = None) -> list:
    version = get_config().output.version
    pairs = ",".join(f"{k}={params[k]}" for k in sorted(params))
    lines = [f"# provenance: command={command} version={version} params={pairs}"]
    for key, value in (extra or {}).items():
        lines.append(f"# {key}={value}")
    return lines


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=path.stem + ".", suffix=".tmp", dir=str(path.parent))
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp_path, str(path))
    except Exception:
        try:
            os.remove(tmp_path)
        except OSError:
            pass
        raise


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]], command: str,
              params: Mapping[str, Any], extra: Optional[Mapping[str, Any]] = None) -> Path:
    """Comment header, column row and data rows; floats written with repr for bit-identical output."""
    buffer = io.StringIO()
    for line in provenance_lines(command, params, extra):
        buffer.write(line + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    path = Path(path)
    _atomic_write(path, buffer.getvalue())
    logger.info(f"📊 Wrote {path}")
    return path


def write_json(path: Path, payload: Any) -> Path:
    path = Path(path)
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")
    logger.info(f"📊 Wrote {path}")
    return path


def read_csv(path: Path) -> Dict[str, Any]:
    """Comment lines, header and rows of a file written by write_csv."""
    comments, rows = [], []
    with open(path, newline="") as handle:
        lines = handle.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            comments.append(line)
        else:
            body.append(line)
    reader = csv.reader(body)
    header = next(reader, [])
    rows = [row for row in reader]
    return {"comments": comments, "header": header, "rows": rows}
