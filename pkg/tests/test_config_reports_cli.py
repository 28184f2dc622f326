import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from holopart.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main, run
from holopart.config import ConfigError, ExperimentConfig
from holopart.presets import PRESETS
from holopart.reports import (
    Goldens,
    SchemaMismatch,
    _round_up,
    calibrate,
    compare_goldens,
    failures,
    load_report,
    prop,
    strip_timestamp,
)

SMALL = dict(paths=4000, bins=32, deltas=(0.5,), partition_presets=("uniform",), preset="uniform")


# -- config --------------------------------------------------------------------------


@given(
    st.sampled_from(PRESETS),
    st.lists(st.floats(0.01, 0.99), min_size=1, max_size=3),
    st.lists(st.floats(2.1, 8.0), min_size=1, max_size=3),
    st.integers(0, 2**40),
    st.sampled_from(["hl", "nt"]),
)
def test_config_text_round_trip(preset, deltas, qs, seed, maximal):
    cfg = ExperimentConfig(preset=preset, deltas=tuple(deltas), qs=tuple(qs), seed=seed, maximal=maximal,
                           partition_presets=(preset, "uniform"))
    assert ExperimentConfig.from_text(cfg.to_text()) == cfg


@pytest.mark.parametrize("kw", [
    {"n": 1000},
    {"preset": "nope"},
    {"partition_presets": ()},
    {"deltas": (1.5,)},
    {"qs": (2.0,)},
    {"maximal": "max"},
    {"paths": 500},
    {"bins": 100},
    {"paths": 2000, "bins": 64},
    {"rounds": 0},
    {"power_a": 0.7},
])
def test_invalid_configs_are_rejected(kw):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kw)


def test_config_text_errors():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("[other]\nn = 4096\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("[experiment]\ncolour = red\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("[experiment]\npaths = many\n")


def test_config_file_round_trip(tmp_path):
    cfg = ExperimentConfig(**SMALL)
    cfg.save(tmp_path / "c.ini")
    assert ExperimentConfig.load(tmp_path / "c.ini") == cfg
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "missing.ini")


# -- reports and goldens ----------------------------------------------------------------


def test_prop_relations():
    assert prop("a", 1.0, 2.0)["passed"]
    assert not prop("a", 3.0, 2.0)["passed"]
    assert prop("a", 3.0, 2.0, ">=")["passed"]
    assert prop("a", 0, 0, "==")["passed"]
    assert prop("a", 0.5, [0, 1], "in")["passed"]
    row = prop("a", 5.0, None)
    assert row["passed"] and row["note"] == "missing golden"
    with pytest.raises(ValueError):
        prop("a", 1.0, 1.0, "<")


@pytest.mark.parametrize("x,expected", [(1.0, 1.0), (1.01, 1.1), (0.0123, 0.013), (7.66, 7.7), (123.0, 130.0),
                                        (0.0, 0.0)])
def test_round_up(x, expected):
    assert _round_up(x) == pytest.approx(expected, rel=1e-12)


@given(st.floats(1e-6, 1e6))
def test_round_up_never_rounds_down(x):
    # products like 1.25 * 1.04 carry float noise; rounding absorbs 1e-12 relative of it
    assert x * (1 - 1e-11) <= _round_up(x) <= x * 1.1 * (1 + 1e-11)


def test_calibrate_and_compare():
    rep = {"golden_measurements": {"a": 1.0, "b": 0.2}}
    g = calibrate(rep["golden_measurements"])
    assert g.constants["a"]["value"] == 1.3 and g.constants["a"]["calibrated_from"] == 1.0
    assert g.constants["b"]["value"] == 0.25
    diff = compare_goldens(rep, g)
    assert diff["regressions"] == [] and diff["missing"] == [] and diff["checked"] == ["a", "b"]
    worse = {"golden_measurements": {"a": 2.0, "b": 0.2, "c": 1.0}}
    diff = compare_goldens(worse, g)
    assert [r["name"] for r in diff["regressions"]] == ["a"]
    assert diff["missing"] == ["c"]


def test_calibrate_keeps_previous_constants():
    prev = Goldens({"old": {"value": 3.0, "tol": 0.0}})
    g = calibrate({"new": 1.0}, previous=prev)
    assert set(g.constants) == {"old", "new"}


def test_packaged_goldens_load():
    g = Goldens.load()
    assert g.get("summing.certified_ratio") > 0
    assert g.get("no.such.constant") is None


def test_schema_mismatch(tmp_path):
    with pytest.raises(SchemaMismatch):
        Goldens.from_dict({"schema_version": 99, "constants": {}})
    (tmp_path / "r.json").write_text(json.dumps({"schema_version": 99}))
    with pytest.raises(SchemaMismatch):
        load_report(tmp_path / "r.json")


# -- command line ------------------------------------------------------------------------


def test_write_config(tmp_path):
    assert main(["write-config", str(tmp_path / "d.ini")]) == EXIT_OK
    assert ExperimentConfig.load(tmp_path / "d.ini") == ExperimentConfig()


def test_bad_config_exit_code(tmp_path):
    (tmp_path / "bad.ini").write_text("[experiment]\ndeltas = 2.0\n")
    assert main(["havin", "--config", str(tmp_path / "bad.ini"), "--output", str(tmp_path / "o")]) == EXIT_CONFIG
    assert main(["havin", "--preset", "nope", "--output", str(tmp_path / "o")]) == EXIT_CONFIG
    assert main(["no-such-command"]) == EXIT_CONFIG


def test_havin_command_writes_report(tmp_path):
    out = tmp_path / "h"
    assert main(["havin", "--output", str(out), "--no-plots"]) == EXIT_OK
    rep = load_report(out / "report.json")
    assert rep["passed"] and rep["command"] == "havin"
    assert set(rep["timestamp"]) >= {"utc", "workers", "wall_clock_s"}
    assert (out / "config.ini").exists()
    assert main(["compare", str(out / "report.json")]) == EXIT_OK


def test_compare_reports_regressions(tmp_path):
    out = tmp_path / "h"
    main(["havin", "--output", str(out), "--no-plots"])
    rep = load_report(out / "report.json")
    name = sorted(rep["golden_measurements"])[0]
    tight = {"schema_version": 1, "constants": {name: {"value": 0.0, "tol": 0.0}}}
    (tmp_path / "g.json").write_text(json.dumps(tight))
    assert main(["compare", str(out / "report.json"), "--goldens", str(tmp_path / "g.json")]) == EXIT_FAIL
    assert main(["compare", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_calibrate_writes_goldens(tmp_path):
    out = tmp_path / "c"
    assert main(["havin", "--output", str(out), "--no-plots", "--calibrate"]) == EXIT_OK
    g = Goldens.load(out / "goldens.json")
    assert all("calibrated_from" in c for c in g.constants.values())


def test_uniform_partition_passes_with_plots(tmp_path):
    cfg = ExperimentConfig(**SMALL, output=str(tmp_path / "p"))
    rep = run("partition", cfg, Goldens.load(), tmp_path / "p")
    assert failures(rep) == []
    assert any(p.suffix == ".png" for p in (tmp_path / "p").iterdir())
    assert any(p.suffix == ".csv" for p in (tmp_path / "p").iterdir())


def test_same_config_same_report(tmp_path):
    cfg = ExperimentConfig(**SMALL)
    a = run("partition", cfg, Goldens.load(), None, plots=False)
    b = run("partition", cfg, Goldens.load(), None, plots=False)
    assert strip_timestamp(a) == strip_timestamp(b)
