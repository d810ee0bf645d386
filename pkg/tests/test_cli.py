import csv
import json
import os

import numpy as np
import pytest

from geosandwich import cli
from geosandwich.cli import dumps, list_catalog, main

from support import BANANA_TOML, BROKEN_TOML, FAILING_TOML, UNKNOWN_CHECK_TOML

SMALL_TOML = """
[scenario]
name = "small"
seed = 3

[manifold]
kind = "euclidean"
dim = 1

[fields.f]
kind = "perturbed_lower"
base = { kind = "quadratic_distance", center = [0.0], scale = 1.0 }
slack = 0.5

[fields.h]
kind = "perturbed_upper"
base = { kind = "quadratic_distance", center = [0.0], scale = 1.0 }
slack = 0.5

[domain]
kind = "ball"
center = [0.0]
radius = 1.0

[[checks]]
name = "check_property_star"
pair_count = 200

[[checks]]
name = "sandwich"
sample_count = 200

[[checks]]
name = "check_geodesic_convex"
pair_count = 200
"""


def _write(tmp_path, text, name="scenario.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _run(tmp_path, text, *extra):
    out = tmp_path / "out"
    code = main(["run", "--scenario", _write(tmp_path, text), "--out", str(out), *extra])
    return code, out


def test_small_scenario_passes_and_is_deterministic(tmp_path):
    code, out = _run(tmp_path, SMALL_TOML, "--no-timings")
    assert code == 0
    first = (out / "small.json").read_bytes()
    assert main(["run", "--scenario", str(tmp_path / "scenario.toml"), "--out", str(out),
                 "--no-timings"]) == 0
    assert (out / "small.json").read_bytes() == first
    report = json.loads(first)
    assert report["overall_pass"] is True
    assert [r["name"] for r in report["checks"]][0] == "check_property_star"
    assert all("duration_ms" not in r for r in report["checks"])
    assert report["versions"]["kernels"] in ("compiled", "python")


def test_parallel_matches_sequential(tmp_path):
    _run(tmp_path, SMALL_TOML, "--no-timings")
    seq = json.loads((tmp_path / "out" / "small.json").read_text())
    _run(tmp_path, SMALL_TOML, "--no-timings", "--parallel")
    par = json.loads((tmp_path / "out" / "small.json").read_text())
    assert seq["checks"] == par["checks"]


def test_seed_override_reaches_every_check(tmp_path):
    _run(tmp_path, SMALL_TOML, "--seed", "99")
    report = json.loads((tmp_path / "out" / "small.json").read_text())
    assert report["scenario"]["seed"] == 99
    assert all(r["seed"] == 99 for r in report["checks"])


def test_csv_run_output(tmp_path):
    code, out = _run(tmp_path, SMALL_TOML, "--format", "csv")
    assert code == 0
    rows = list(csv.reader(open(out / "small_checks.csv")))
    assert rows[0][:3] == ["name", "label", "passed"] and len(rows) == 4


@pytest.mark.parametrize("text, want", [
    (BANANA_TOML, 2), (BROKEN_TOML, 2), (UNKNOWN_CHECK_TOML, 2), (FAILING_TOML, 1),
])
def test_exit_codes(tmp_path, text, want):
    assert _run(tmp_path, text)[0] == want


def test_config_errors_name_the_problem(tmp_path, capsys):
    _run(tmp_path, BANANA_TOML)
    assert "manifold.kind" in capsys.readouterr().err
    _run(tmp_path, SMALL_TOML.replace('dim = 1', 'dim = 1\ncolour = "red"'))
    assert "manifold.colour" in capsys.readouterr().err
    assert main(["run", "--scenario", str(tmp_path / "missing.toml")]) == 2


def test_empty_directory_is_a_config_error(tmp_path):
    (tmp_path / "empty").mkdir()
    assert main(["run", "--scenario", str(tmp_path / "empty")]) == 2


def test_open_question_is_informational(tmp_path):
    text = """
[scenario]
name = "oq"

[manifold]
kind = "sphere"

[fields.f]
kind = "constant"
value = 0.5

[fields.h]
kind = "constant"
value = 1.0

[[checks]]
name = "check_along_closed_geodesic"
start = [1.0, 0.0, 0.0]
velocity = [0.0, 6.283185307179586, 0.0]
expected_open_question = true
"""
    code, out = _run(tmp_path, text)
    assert code == 0
    report = json.loads((out / "oq.json").read_text())
    assert report["overall_pass"] is True
    info = [r for r in report["checks"] if r["informational"]]
    assert info and all(r["falsification_candidate"] for r in info)


def test_list_text_and_json(capsys):
    assert main(["list"]) == 0
    text = capsys.readouterr().out
    for name in ("sphere", "flat_torus", "quadratic_distance", "check_property_star"):
        assert name in text
    assert main(["list", "--format", "json"]) == 0
    inv = json.loads(capsys.readouterr().out)
    assert set(inv) == {"checks", "fields", "manifolds"}
    assert list(inv["manifolds"]) == sorted(inv["manifolds"])


def test_list_catalog_with_empty_registry():
    assert list_catalog(registry={}) == {"checks": {}, "fields": {}, "manifolds": {}}
    assert cli.format_catalog(list_catalog(registry={})) == "checks:\nfields:\nmanifolds:\n"


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_dump_separator(tmp_path, capsys, fmt):
    path = _write(tmp_path, SMALL_TOML)
    out = tmp_path / "dump"
    assert main(["dump-separator", "--scenario", path, "--out", str(out), "--format", fmt]) == 0
    written = capsys.readouterr().out.strip()
    assert os.path.exists(written)
    if fmt == "json":
        doc = json.loads(open(written).read())
        assert len(doc["points"]) == len(doc["k_value"]) > 0
    else:
        rows = list(csv.reader(open(written)))
        assert len(rows) > 2


def test_dump_separator_config_error(tmp_path):
    assert main(["dump-separator", "--scenario", _write(tmp_path, BANANA_TOML)]) == 2


def test_dumps_writes_non_finite_as_strings():
    doc = json.loads(dumps({"a": np.inf, "b": -np.inf, "c": np.nan, "d": np.float32(1.5),
                            "e": np.arange(3), "f": np.bool_(True)}))
    assert doc == {"a": "inf", "b": "-inf", "c": "nan", "d": 1.5, "e": [0, 1, 2], "f": True}
