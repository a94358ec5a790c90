# cli_app/output.py
"""CSV, JSON and JSON-lines writers.

CSV cells carry 17 significant digits; JSON uses Python's shortest
round-trip float repr. Non-finite floats become null in JSON.
"""
import contextlib
import csv
import json
import math
import sys

import numpy as np

from common.errors import ConfigError
from common.protocol import (
    BRANCH_FIELDS, FLOAT_FORMAT, KERNEL_FIELDS, PROBE_FIELDS, RAYS_CSV_HEADER,
    SCAN_CSV_HEADER,
)


@contextlib.contextmanager
def open_output(path):
    """Yield a text stream for `path`; None or '-' means stdout."""
    if path in (None, "-"):
        yield sys.stdout
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8", newline="") as f:
            yield f


def format_float(value):
    return format(float(value), FLOAT_FORMAT)


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_csv(rows, header, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])


def plain(value):
    """Convert numpy scalars/arrays and non-finite floats into JSON-ready values."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dumps(value):
    return json.dumps(plain(value), allow_nan=False)


def write_json(value, stream):
    stream.write(dumps(value))
    stream.write("\n")


def _ordered(record, fields):
    return {name: record[name] for name in fields}


def kernel_record(report):
    return _ordered(report.to_record(), KERNEL_FIELDS)


def probe_record(report):
    return _ordered(report.to_record(), PROBE_FIELDS)


def write_scan_csv(scan, stream):
    write_csv(scan.rows(), SCAN_CSV_HEADER, stream)


def write_scan_json(scan, stream):
    write_json([dict(zip(SCAN_CSV_HEADER, row)) for row in scan.rows()], stream)


def write_rays_csv(rows, stream):
    write_csv(rows, RAYS_CSV_HEADER, stream)


def branch_records(branch, downsample=1):
    if isinstance(downsample, bool) or int(downsample) != downsample or downsample < 1:
        raise ConfigError(f"downsample must be an integer >= 1, got {downsample}", field="downsample")
    step = int(downsample)
    for pt in branch.points:
        x = pt.x.values[::step]
        if (len(pt.x.values) - 1) % step:
            x = np.append(x, pt.x.values[-1])
        yield _ordered({
            "t": pt.t,
            "param_name": branch.free_parameter,
            "param_value": pt.param,
            "residual_norm": pt.residual_norm,
            "x": x,
        }, BRANCH_FIELDS)


def write_branch_jsonl(branch, stream, downsample=1):
    for record in branch_records(branch, downsample):
        stream.write(dumps(record))
        stream.write("\n")
