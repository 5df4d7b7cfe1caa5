"""test functions in report_file.py"""

import numpy as np
import pytest
from netCDF4 import Dataset

from src.report_file import (
    ReportFile,
    read_csv,
    read_json,
    read_report,
    write_csv,
    write_json,
    write_phase_diagram_nc,
)


def test_report_file(tmp_path):
    """records are validated against the declared keys"""
    fname = str(tmp_path / "sub" / "report.jsonl")
    report = ReportFile(fname, ["name", "passed"])
    report.write({"name": "a", "passed": np.bool_(True)})
    report.write({"passed": False, "name": "b"})
    with pytest.raises(RuntimeError):
        report.write({"name": "c"})
    with pytest.raises(RuntimeError):
        report.write({"name": "c", "passed": True, "extra": 1})
    assert report.record_cnt == 2
    assert read_report(fname) == [
        {"name": "a", "passed": True},
        {"name": "b", "passed": False},
    ]
    with open(fname) as fptr:
        assert fptr.readline() == '{"name": "a", "passed": true}\n'


def test_write_csv(tmp_path):
    """reals use 9 significant digits and -0 is written as 0"""
    fname = str(tmp_path / "vals.csv")
    write_csv(fname, ["x", "label", "cnt"], [[1.0 / 3.0, "FM", 2], [-0.0, "AFM", 0]])
    with open(fname, newline="") as fptr:
        assert fptr.read() == "x,label,cnt\n0.333333333,FM,2\n0,AFM,0\n"
    header, rows = read_csv(fname)
    assert header == ["x", "label", "cnt"]
    assert rows[1] == ["0", "AFM", "0"]
    with pytest.raises(RuntimeError):
        write_csv(fname, ["x"], [[1.0, 2.0]])


def test_write_csv_header_schema(tmp_path):
    """dict rows must carry exactly the header columns, and names must be valid"""
    fname = str(tmp_path / "curve.csv")
    write_csv(fname, ["epoch", "loss"], [{"loss": 0.5, "epoch": 0}])
    assert read_csv(fname) == (["epoch", "loss"], [["0", "0.5"]])
    with pytest.raises(RuntimeError):
        write_csv(fname, ["epoch", "loss"], [{"epoch": 0, "energy": 0.5}])
    with pytest.raises(RuntimeError):
        write_csv(fname, ["epoch", "loss"], [{"epoch": 0}])
    for header in [["epoch", "epoch"], ["epoch", ""], ["a,b"]]:
        with pytest.raises(RuntimeError):
            write_csv(fname, header, [])


def test_write_json(tmp_path):
    """arrays survive a write and reread"""
    fname = str(tmp_path / "obj.json")
    obj = {"a": np.arange(3.0), "b": np.zeros(()), "c": None, "d": [np.int64(2)]}
    write_json(fname, obj)
    contents = read_json(fname)
    assert np.array_equal(contents["a"], obj["a"])
    assert contents["b"].shape == ()
    assert contents["c"] is None
    assert contents["d"] == [2]


def test_write_phase_diagram_nc(tmp_path):
    """gridded fields and phase names are written"""
    fname = str(tmp_path / "phase.nc")
    jy_vals, h_vals = np.array([-1.0, 1.0]), np.array([0.0, 0.5, 1.0])
    fields = {
        "phase": np.array([[0, 1, 2], [3, 4, 0]]),
        "o_fm": np.full((2, 3), 0.5),
    }
    write_phase_diagram_nc(fname, jy_vals, h_vals, fields, ["FM", "AFM", "X"])
    with Dataset(fname, mode="r") as fptr:
        assert fptr.phase_names == "FM,AFM,X"
        assert np.array_equal(fptr.variables["phase"][:], fields["phase"])
        assert np.array_equal(fptr.variables["h"][:], h_vals)
