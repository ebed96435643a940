import json

import pytest
from click.testing import CliRunner

from entrolab.cli import main

IDENTITY = {
    "system": {"kind": "identity", "space": {"kind": "circle"}},
    "eps": [0.25],
    "n_max": 4,
    "sample": {"kind": "grid", "size": 64},
}


def _write(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def test_estimate_identity(tmp_path):
    config = _write(tmp_path, IDENTITY)
    result = CliRunner().invoke(main, ["estimate", config, "--out", str(tmp_path / "out")])
    assert result.exit_code == 0, result.output
    assert "d_entropy[circle]: 0.000000" in result.output
    assert (tmp_path / "out" / "report.json").exists()


@pytest.mark.slow
def test_estimate_doubling_defaults(tmp_path):
    config = _write(tmp_path, {"system": {"kind": "circle_affine", "m": 2}})
    result = CliRunner().invoke(main, ["estimate", config, "-o", str(tmp_path / "out")])
    assert result.exit_code == 0, result.output
    line = next(row for row in result.output.splitlines() if row.startswith("d_entropy[circle]:"))
    assert 0.62 <= float(line.split(":")[1]) <= 0.77


def test_estimate_missing_system(tmp_path):
    config = _write(tmp_path, {"n_max": 8})
    result = CliRunner().invoke(main, ["estimate", config, "-o", str(tmp_path / "out")])
    assert result.exit_code == 2
    assert "/system" in result.output


def test_estimate_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{", encoding="utf-8")
    result = CliRunner().invoke(main, ["estimate", str(path)])
    assert result.exit_code == 2


def test_verify_unknown_suite():
    result = CliRunner().invoke(main, ["verify", "bogus"])
    assert result.exit_code == 2
    assert "Unknown suite" in result.output


def test_verify_measures():
    result = CliRunner().invoke(main, ["verify", "measures"])
    assert result.exit_code == 0, result.output
    assert "measures:" in result.output
    assert "0 failures" in result.output


def test_compare_metrics_needs_two_metrics(tmp_path):
    config = _write(tmp_path, {**IDENTITY, "metrics": [{"kind": "circle"}]})
    result = CliRunner().invoke(main, ["compare-metrics", config, "-o", str(tmp_path / "out")])
    assert result.exit_code == 2
    assert "/metrics" in result.output


def test_compare_metrics_identity(tmp_path):
    config = _write(
        tmp_path, {**IDENTITY, "metrics": [{"kind": "circle"}, {"kind": "compactified"}]}
    )
    result = CliRunner().invoke(main, ["compare-metrics", config, "-o", str(tmp_path / "out")])
    assert result.exit_code == 0, result.output
    assert "compactified metric attains the minimum" in result.output
    assert (tmp_path / "out" / "comparison.csv").exists()


def test_version():
    result = CliRunner().invoke(main, ["--version"])
    assert result.exit_code == 0
