"""Result tables and atomic file output."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field


def atomic_write(path: str, text: str) -> str:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = os.path.abspath(path)
    folder = os.path.dirname(path)
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def _json_safe(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    return v


@dataclass
class ResultRecord:
    """Rows of one table; every row carries ``config_hash`` as its first column.

    ``summary`` holds study-level assertions (deterministic), ``meta`` holds
    things that legitimately vary between reruns such as wall-clock time.
    Only ``rows`` go into the CSV.
    """

    name: str
    config_hash: str
    columns: list
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def add(self, **row):
        missing = set(self.columns) - set(row) - {"config_hash"}
        if missing:
            raise KeyError(f"row lacks columns {sorted(missing)}")
        self.rows.append({"config_hash": self.config_hash, **row})

    def column(self, name):
        return [r[name] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["config_hash"] + [c for c in self.columns if c != "config_hash"]
        w.writerow(cols)
        for r in self.rows:
            w.writerow([_cell(r.get(c)) for c in cols])
        return buf.getvalue()

    def sidecar(self, config: dict) -> str:
        return json.dumps(_json_safe({
            "table": self.name,
            "config_hash": self.config_hash,
            "config": config,
            "summary": self.summary,
            "meta": self.meta,
        }), indent=2, sort_keys=True)
