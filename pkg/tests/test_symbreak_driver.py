"""test functions in symbreak_driver.py"""

import os

import pytest

from src.baseline_cmp import files_agree
from src.report_file import read_csv, read_json, read_report
from src.symbreak_driver import EXIT_FAIL, EXIT_PASS, EXIT_USAGE, main, parse_args


def _run(command, workdir, args_list=()):
    """run command with outputs in workdir, returning the exit status"""
    args = parse_args([command, "--out", str(workdir)] + list(args_list))
    return main(args)


def test_parse_args():
    """command overrides and usage errors"""
    args = parse_args(["graph_demo", "--count", "0"])
    assert args.command == "graph_demo"
    assert args.count == "0"
    with pytest.raises(SystemExit):
        parse_args(["graph_demo", "--bogus"])
    with pytest.raises(SystemExit):
        parse_args(["bogus"])


def test_phase_diagram_deterministic(tmp_path):
    """reruns write identical phase diagram files"""
    for run in ["a", "b"]:
        assert _run("phase_diagram", tmp_path / run) == EXIT_PASS
    for fname in ["phase_diagram.csv", "phase_diagram.nc"]:
        assert files_agree(
            str(tmp_path / "a" / fname), str(tmp_path / "b" / fname), 0.0, 0.0
        )
    header, rows = read_csv(str(tmp_path / "a" / "phase_diagram.csv"))
    assert header == ["jy", "h", "phase", "o_fm", "o_afm", "o_sx", "energy_per_site"]
    assert len(rows) == 61 * 41


def test_phase_diagram_bad_resolution(tmp_path):
    """a resolution below 2 is a usage error"""
    assert _run("phase_diagram", tmp_path, ["--resolution", "1"]) == EXIT_USAGE
    assert not os.path.exists(tmp_path / "phase_diagram.csv")


def test_graph_demo(tmp_path):
    """records and summary of a short demo"""
    assert _run("graph_demo", tmp_path, ["--count", "5"]) == EXIT_PASS
    records = read_report(str(tmp_path / "graph_demo.jsonl"))
    assert len(records) == 5
    summary = read_json(str(tmp_path / "graph_demo_summary.json"))
    assert summary["count"] == 5
    named = {record["graph"]: record for record in summary["named_graphs"]}
    assert named["C4"]["err_equivariant"] == pytest.approx(1.0 / 3.0)
    assert named["C4"]["err_sympe"] == 0.0


def test_graph_demo_empty(tmp_path):
    """count 0 gives an empty report and null means"""
    assert _run("graph_demo", tmp_path, ["--count", "0"]) == EXIT_PASS
    assert read_report(str(tmp_path / "graph_demo.jsonl")) == []
    summary = read_json(str(tmp_path / "graph_demo_summary.json"))
    assert summary["mean_err_sympe"] is None


def test_graph_demo_too_many_nodes(tmp_path):
    """more than 8 nodes is a usage error"""
    assert _run("graph_demo", tmp_path, ["--n", "9"]) == EXIT_USAGE
    assert not os.path.exists(tmp_path / "graph_demo.jsonl")


def test_ising_train_deterministic(tmp_path):
    """reruns of a short training write identical results"""
    args_list = ["--l", "4", "--epochs", "3"]
    for run in ["a", "b"]:
        assert _run("ising_train", tmp_path / run, args_list) == EXIT_PASS
    for fname in [
        "ising_train_results.json",
        "ising_train_curve.csv",
        "ising_train_state.json",
    ]:
        assert files_agree(
            str(tmp_path / "a" / fname), str(tmp_path / "b" / fname), 0.0, 0.0
        )
    results = read_json(str(tmp_path / "a" / "ising_train_results.json"))
    assert results["epochs"] == 3
    assert results["variant"] == "sympe"


def test_ising_train_bad_variant(tmp_path):
    """an unknown variant is a usage error"""
    assert _run("ising_train", tmp_path, ["--variant", "bogus"]) == EXIT_USAGE


def test_verify_break_kernel(tmp_path):
    """the negative control makes verify exit with a failure"""
    status = _run("verify", tmp_path, ["--break-kernel", "--samples", "200"])
    assert status == EXIT_FAIL
    records = read_report(str(tmp_path / "verify.jsonl"))
    failed = [record["name"] for record in records if not record["passed"]]
    assert failed == ["sympe_equivariance[S4]"]
