# tests/test_output.py
import io
import json
import math

import numpy as np
import pytest

from analysis_app.continuation import Branch, BranchPoint
from cli_app.output import (
    branch_records, dumps, format_float, plain, write_branch_jsonl, write_csv,
    write_scan_csv,
)
from common.errors import ConfigError
from common.protocol import BRANCH_FIELDS, SCAN_CSV_HEADER
from conftest import R
from rod_app.core_model import Mode, Params
from rod_app.discretization import build_grid, sample_eigenfunction


def test_format_float_keeps_17_digits():
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(0.625) == "0.625"
    assert float(format_float(math.pi)) == math.pi


def test_write_csv_cells():
    stream = io.StringIO()
    write_csv([(True, None, np.int64(3), np.float64(0.5), "ray")], ["a", "b", "c", "d", "e"], stream)
    assert stream.getvalue() == "a,b,c,d,e\ntrue,,3,0.5,ray\n"


def test_plain_json_values():
    assert plain({"a": np.array([1.0, np.nan]), "b": np.bool_(True), 3: np.int32(2)}) == {
        "a": [1.0, None], "b": True, "3": 2}
    assert dumps(float("inf")) == "null"
    assert json.loads(dumps([0.1])) == [0.1]


def _branch(n=11):
    grid = build_grid(n, R)
    e = sample_eigenfunction(1, grid)
    points = (BranchPoint(t=0.0, param=1.0, x=e * 0.0), BranchPoint(t=0.01, param=0.998, x=e * 0.01))
    fixed = Params(alpha=1.0, beta=0.05859375, gamma=1.0, r=R)
    return Branch(points=points, free_parameter="alpha", fixed=fixed, mode=Mode.of(1, R), direction=1)


@pytest.mark.parametrize("downsample, length", [(1, 11), (3, 5), (5, 3)])
def test_branch_records_downsample(downsample, length):
    records = list(branch_records(_branch(), downsample))
    assert len(records) == 2
    assert list(records[0]) == BRANCH_FIELDS
    assert len(records[1]["x"]) == length
    assert records[1]["x"][-1] == 0.0
    assert records[1]["param_name"] == "alpha"


def test_branch_records_reject_bad_downsample():
    with pytest.raises(ConfigError):
        list(branch_records(_branch(), 0))


def test_write_branch_jsonl():
    stream = io.StringIO()
    write_branch_jsonl(_branch(), stream)
    lines = stream.getvalue().splitlines()
    assert len(lines) == 2
    assert json.loads(lines[1])["t"] == 0.01


def test_write_scan_csv_header():
    class FakeScan:
        def rows(self):
            yield (0.5, 0.1, 1e-3, 2e-3, 1)

    stream = io.StringIO()
    write_scan_csv(FakeScan(), stream)
    header, row = stream.getvalue().splitlines()
    assert header.split(",") == SCAN_CSV_HEADER
    assert row == "0.5,0.10000000000000001,0.001,0.002,1"
