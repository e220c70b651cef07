"""Schema-stable JSON/CSV emission with atomic writes.

JSON documents have the top-level keys ``tool``, ``version``, ``scenario``,
``config``, ``status``, ``results`` and ``checks``.  Complex numbers are
written as ``[re, im]`` pairs and arrays as nested lists.

CSV files start with ``#`` comment lines carrying the tool version, the
resolved configuration (as compact JSON) and the checks, followed by one
header line and the data rows.  Floats use 17 significant digits, ``.`` as
decimal mark, ``,`` as delimiter and LF line endings.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile

import numpy as np

from .errors import PrefBasisError

TOOL = "prefbasis"


class IoFailure(PrefBasisError, OSError):
    pass


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def render_json(doc: dict) -> str:
    return json.dumps(to_jsonable(doc), sort_keys=True, indent=2, allow_nan=True) + "\n"


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def render_csv(doc: dict, header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# tool: {doc['tool']} {doc['version']}\n")
    buf.write(f"# scenario: {doc['scenario']}\n")
    buf.write(f"# status: {doc['status']}\n")
    buf.write("# config: " + json.dumps(to_jsonable(doc["config"]), sort_keys=True,
                                         separators=(",", ":")) + "\n")
    for chk in doc["checks"]:
        buf.write(f"# check: {chk['name']} value={_cell(chk['value'])} "
                  f"tolerance={_cell(chk['tolerance'])} passed={_cell(chk['passed'])}\n")
    writer = csv.writer(buf, delimiter=",", lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to a temp file next to ``path`` and rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def emit_report(doc: dict, table, path: str | None, fmt: str = "json") -> str:
    """Render ``doc`` as JSON or ``table = (header, rows)`` as CSV; write it if ``path`` is set."""
    if fmt == "json":
        text = render_json(doc)
    elif fmt == "csv":
        text = render_csv(doc, *table)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path:
        write_atomic(path, text)
    return text
