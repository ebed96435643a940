import json

import pytest

from entrolab.config import ExperimentConfig, load_config, parse_config
from entrolab.errors import ConfigError
from entrolab.metrics import CircleArc, Compactified, EuclideanMetric
from entrolab.systems import CircleAffine

DOUBLING = {"kind": "circle_affine", "m": 2}


def _message(data) -> str:
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    return str(info.value)


def test_defaults():
    config = parse_config({"system": DOUBLING})
    assert config.system == CircleAffine(m=2)
    assert config.estimators == ["d_entropy"]
    assert config.n_max == 12
    assert config.metric_list() == [CircleArc()]


def test_missing_system_is_reported_by_pointer():
    assert _message({}).startswith("/system:")


def test_unknown_key_is_rejected():
    assert "/bogus:" in _message({"system": DOUBLING, "bogus": 1})


def test_n_max_lower_bound():
    assert "/n_max:" in _message({"system": DOUBLING, "n_max": 3})


def test_nonpositive_eps():
    assert "positive" in _message({"system": DOUBLING, "eps": [0.25, 0.0]})


def test_window_must_fit_n_max():
    assert "window" in _message({"system": DOUBLING, "n_max": 6, "window": [2, 9]})


def test_single_metric_is_a_list_of_one():
    config = parse_config({"system": DOUBLING, "metric": {"kind": "circle"}})
    assert config.metrics == [CircleArc()]


def test_metric_and_metrics_together():
    with pytest.raises(ConfigError):
        parse_config({"system": DOUBLING, "metric": {"kind": "circle"}, "metrics": []})


def test_metric_must_fit_space():
    with pytest.raises(ConfigError):
        parse_config({"system": DOUBLING, "metrics": [{"kind": "euclidean"}]})


def test_jobs_run_metric_free_estimators_once():
    config = parse_config(
        {
            "system": {"kind": "linear", "matrix": [[2.0]]},
            "metrics": [{"kind": "euclidean"}, {"kind": "compactified"}],
            "estimators": ["bowen", "topological"],
        }
    )
    assert config.jobs() == [
        ("bowen", EuclideanMetric()),
        ("bowen", Compactified()),
        ("topological", None),
    ]


def test_symbolic_config_builds_cylinders():
    config = parse_config(
        {"system": {"kind": "sft", "adjacency": [[1, 1], [1, 0]]}, "covers": {"depths": [1, 2]}}
    )
    assert [len(c) for c in config.build_covers()] == [2, 3]
    assert config.build_sample().space.symbolic


def test_load_config(tmp_path):
    path = tmp_path / "doubling.json"
    path.write_text(json.dumps({"system": DOUBLING, "n_max": 8}), encoding="utf-8")
    assert isinstance(load_config(path), ExperimentConfig)
    assert load_config(path).n_max == 8


def test_load_config_rejects_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(path)


def test_load_config_needs_an_object(tmp_path):
    path = tmp_path / "list.json"
    path.write_text("[]", encoding="utf-8")
    with pytest.raises(ConfigError, match="must be a JSON object"):
        load_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.json")


def test_default_sample_keeps_closed_grid():
    sample = parse_config({"system": DOUBLING}).build_sample()
    assert len(sample) == 4096
    assert sample.provenance == "grid+orbit"


def test_default_sample_adds_orbit_points():
    rotation = {"kind": "circle_affine", "m": 1, "alpha": 0.6180339887498949}
    config = parse_config({"system": rotation, "n_max": 4, "sample": {"size": 64}})
    sample = config.build_sample()
    assert len(sample) == 64 * 4
    assert sample.points[:64, 0].tolist() == [i / 64 for i in range(64)]
    plain = parse_config({"system": rotation, "n_max": 4, "sample": {"size": 64, "orbits": False}})
    assert len(plain.build_sample()) == 64


def test_orbit_sample_from_start():
    config = parse_config(
        {"system": DOUBLING, "sample": {"kind": "orbit", "size": 10, "start": [0.25]}}
    )
    sample = config.build_sample()
    assert sample.provenance == "orbit"
    assert sample.points[:, 0].tolist() == [0.25, 0.5, 0.0]


def test_orbit_start_must_match_dimension():
    assert "start" in _message(
        {"system": DOUBLING, "sample": {"kind": "orbit", "start": [0.1, 0.2]}}
    )
