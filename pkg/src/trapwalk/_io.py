"""Table and config-file I/O shared by the CLI."""

import csv
import io
import json
import math
import sys

import numpy as np

from .errors import ConfigError


def format_value(v):
    """Text for one CSV cell; floats keep 17 significant digits."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else format_value(v)
    return v


def render_table(columns, rows, fmt="csv"):
    """CSV with a header row, or JSON ``{"columns": [...], "rows": [[...]]}``."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_value(v) for v in row])
        return buf.getvalue()
    if fmt == "json":
        doc = {"columns": list(columns), "rows": [[_json_value(v) for v in row] for row in rows]}
        return json.dumps(doc, allow_nan=False) + "\n"
    raise ConfigError(f"unknown output format {fmt!r}")


def write_text(text, path=None):
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


def read_table(path):
    """Read a CSV with a header row into ``{column: float array}``."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ConfigError(f"cannot read {path!r}: {exc}") from exc
    with fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ConfigError(f"{path}: empty file")
    header = [c.strip() for c in rows[0]]
    cols = {h: [] for h in header}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ConfigError(f"{path}:{lineno}: expected {len(header)} columns")
        for h, cell in zip(header, row):
            try:
                cols[h].append(float(cell))
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: bad number {cell!r}") from None
    return {h: np.array(v) for h, v in cols.items()}


def read_config(path):
    """Flat ``key=value`` file; blank lines and ``#`` comments are ignored."""
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    out = {}
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key = key.strip().replace("-", "_")
            if key in out:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = value.strip()
    return out


def render_config(items):
    return "".join(f"{k}={v}\n" for k, v in items)
