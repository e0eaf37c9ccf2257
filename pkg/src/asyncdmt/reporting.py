"""CSV tables with ``#``-prefixed provenance headers."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from pathlib import Path

from .errors import ValidationError

OUT_ENV = "ASYNCDMT_OUT_DIR"


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _cell(x):
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def render(columns, rows, meta) -> str:
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def output_dir(explicit=None, create=True) -> Path:
    d = Path(explicit or os.environ.get(OUT_ENV) or ".")
    if not d.is_dir():
        if not create:
            raise ValidationError(f"output directory {d} does not exist (creation disabled)")
        d.mkdir(parents=True, exist_ok=True)
    return d


def write_table(path, columns, rows, meta, create=True) -> Path:
    path = Path(path)
    parent = path.parent if str(path.parent) else Path(".")
    if not parent.is_dir():
        if not create:
            raise ValidationError(f"output directory {parent} does not exist (creation disabled)")
        parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render(columns, rows, meta))
    return path


def read_table(path):
    """(meta, header, rows) back from a file written by ``write_table``."""
    meta, lines = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition(": ")
            meta[k] = v
        else:
            lines.append(line)
    reader = csv.reader(lines)
    header = next(reader)
    return meta, header, list(reader)
