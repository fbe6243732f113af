"""Tests for scenario configs, pipelines, sweeps, calibration and plot data."""

import json

import pytest

from afc_memory.errors import InfeasibleError
from afc_memory.harness import (
    BUNDLED_CONFIGS,
    MissingArtifactError,
    PathNotFoundError,
    RunManifest,
    ScenarioConfig,
    SchemaError,
    StageFailure,
    bundled_config,
    calibrate_dark_rate,
    dump_config,
    emit_plotdata,
    load_config,
    resolve_config,
    run_scenario,
    stage_seed,
    sweep,
)
from afc_memory.harness.artifacts import artifact_config_hash, read_csv, read_csv_header
from afc_memory.harness.config import with_parameter
from afc_memory.propagation import afc_efficiency_analytic

QUICK = {"n_trials": 1_000_000, "workers": 1}


def read_json(path):
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


# ---------------------------------------------------------------- configs


@pytest.mark.parametrize("name", BUNDLED_CONFIGS)
def test_bundled_configs_round_trip(name, tmp_path):
    config = bundled_config(name)
    assert config.name == name
    assert ScenarioConfig.from_dict(config.to_dict()).to_dict() == config.to_dict()

    path = tmp_path / f"{name}.json"
    path.write_text(dump_config(config))
    assert load_config(path).config_hash == config.config_hash


@pytest.mark.parametrize("name", ["fig3b", "fig3c", "fig4a", "fig4d"])
def test_storage_configs_keep_measured_comb_geometry(name):
    comb = bundled_config(name).comb
    assert (comb.tooth_spacing_mhz, comb.tooth_fwhm_mhz) == (2.5, 1.03)
    assert comb.finesse is None
    assert (comb.comb_depth, comb.background_depth) == (1.65, 1.36)
    assert afc_efficiency_analytic(comb.comb_depth, 2.5 / 1.03, comb.background_depth) == pytest.approx(0.0183, abs=5e-4)


def test_empty_document_rejected(tmp_path):
    with pytest.raises(SchemaError) as excinfo:
        ScenarioConfig.from_dict({})
    assert excinfo.value.path == "/name"

    empty = tmp_path / "empty.json"
    empty.write_text("")
    with pytest.raises(SchemaError):
        load_config(empty)


@pytest.mark.parametrize(
    "document, pointer",
    [
        ({"name": "x", "scenario": "storage", "comb": {"depth": 1.0}}, "/comb/depth"),
        ({"name": "x", "scenario": "storage", "pulse": {"modes": "two"}}, "/pulse/modes"),
        ({"name": "x", "scenario": "storage", "comb": {"finesse": 0.5}}, "/comb/finesse"),
        ({"name": "x", "scenario": "teleport"}, "/scenario"),
        ({"name": "x", "scenario": "storage", "detector": {"quantum_efficiency": 1.2}}, "/detector/quantum_efficiency"),
        ({"name": "x", "scenario": "storage", "interferometer": {"splitter_ratios": [0.5]}}, "/interferometer/splitter_ratios"),
    ],
)
def test_schema_errors_name_the_offending_key(document, pointer):
    with pytest.raises(SchemaError) as excinfo:
        ScenarioConfig.from_dict(document)
    assert excinfo.value.path == pointer
    assert str(excinfo.value).startswith(f"{pointer}: ")


def test_with_parameter():
    config = bundled_config("fig4a")
    changed = with_parameter(config, "/pulse/mean_photon_number", 0.578)
    assert changed.pulse.mean_photon_number == 0.578
    assert config.pulse.mean_photon_number == 1.61
    assert changed.config_hash != config.config_hash

    with pytest.raises(PathNotFoundError):
        with_parameter(config, "/pulse/photon_number", 1.0)
    with pytest.raises(PathNotFoundError):
        with_parameter(config, "", 1.0)
    with pytest.raises(SchemaError):
        with_parameter(config, "/pulse/mean_photon_number", -1.0)


def test_resolve_config(tmp_path):
    assert resolve_config("fig3b").name == "fig3b"
    path = tmp_path / "custom.json"
    path.write_text(json.dumps({"name": "custom", "scenario": "delay_line"}))
    assert resolve_config(path).name == "custom"
    with pytest.raises(SchemaError):
        resolve_config(tmp_path / "missing.json")


def test_output_root_override(output_root):
    assert bundled_config("fig3b").output_directory() == output_root / "fig3b"


def test_stage_seeds_are_stable_and_distinct():
    assert stage_seed(2024, "detect_output") == stage_seed(2024, "detect_output")
    assert stage_seed(2024, "detect_output") != stage_seed(2024, "detect_input")
    assert stage_seed(2024, "detect_output") != stage_seed(2025, "detect_output")
    assert 0 <= stage_seed(7, "x") < 2**32


# ---------------------------------------------------------------- storage runs


def test_storage_run_matches_measured_memory(tmp_path):
    manifest = run_scenario(bundled_config("fig3b"), tmp_path / "fig3b")
    summary = manifest.summary
    assert 0.018 <= summary["efficiency"] <= 0.021
    assert summary["echo_time_ns"] == pytest.approx(400.0, abs=2.0)
    assert summary["finesse"] == pytest.approx(2.5 / 1.03)
    assert 40.0 < summary["snr"] < 75.0

    memory = read_json(tmp_path / "fig3b" / "memory.json")
    assert memory["efficiency_db"] < 0
    header = read_csv_header(tmp_path / "fig3b" / "histogram.csv")
    assert header["n_trials"] == "100000000"


def test_manifest_lists_every_artifact_with_its_hash(tmp_path, make_config):
    config = make_config("fig3b", trials=QUICK)
    manifest = run_scenario(config, tmp_path / "run")
    assert set(manifest.outputs) == {
        "config.json",
        "comb.csv",
        "waveform.csv",
        "memory.json",
        "histogram.csv",
        "snr.json",
    }
    for path in manifest.output_paths():
        assert artifact_config_hash(path) == config.config_hash
    assert set(manifest.stage_timings_s) == {"comb", "propagate", "analyze", "detect", "snr"}

    reloaded = RunManifest.from_json(manifest.path)
    assert reloaded.to_dict() == manifest.to_dict()
    assert read_json(tmp_path / "run" / "config.json")["config"] == config.to_dict()


def test_runs_are_reproducible(tmp_path, make_config):
    config = make_config("fig3b", trials=QUICK)
    run_scenario(config, tmp_path / "first")
    run_scenario(config, tmp_path / "second")
    for name in ("memory.json", "snr.json", "histogram.csv", "waveform.csv"):
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()


def test_multimode_run(tmp_path, make_config):
    manifest = run_scenario(make_config("fig3c", trials=QUICK), tmp_path / "fig3c")
    assert manifest.summary["capacity"] == 4
    assert manifest.summary["first_in_first_out"]
    assert manifest.summary["max_relative_deviation"] < 0.05
    modes = read_csv(tmp_path / "fig3c" / "modes.csv")
    assert list(modes["mode"]) == [0, 1, 2, 3]


def test_too_many_modes_fail_in_their_stage(tmp_path, make_config):
    config = make_config("fig3c", pulse={"modes": 5}, trials=QUICK)
    with pytest.raises(StageFailure) as excinfo:
        run_scenario(config, tmp_path / "overfull")
    assert excinfo.value.stage == "propagate"
    assert isinstance(excinfo.value.cause, ValueError)


def test_delay_line_run(tmp_path):
    manifest = run_scenario(bundled_config("delayline"), tmp_path / "delayline")
    assert manifest.summary["delay_line_loss_db"] == pytest.approx(78.0, abs=0.1)
    assert manifest.summary["group_index"] == pytest.approx(1.9986, abs=1e-3)
    assert manifest.summary["memory_efficiency"] == pytest.approx(afc_efficiency_analytic(1.61, 2.5 / 1.03, 1.36))


# ---------------------------------------------------------------- spectroscopy and comb runs


def test_fluorescence_run(tmp_path):
    manifest = run_scenario(bundled_config("fig2b"), tmp_path / "fig2b")
    assert manifest.summary["parameters"]["lifetime"] == pytest.approx(2.78, rel=0.05)
    assert read_csv_header(tmp_path / "fig2b" / "trace.csv")["time_unit"] == "ms"
    fit = read_json(tmp_path / "fig2b" / "fit.json")
    assert fit["true_parameters"]["lifetime"] == 2.78


def test_photon_echo_run(tmp_path):
    manifest = run_scenario(bundled_config("fig2c"), tmp_path / "fig2c")
    assert manifest.summary["time_unit"] == "us"
    assert manifest.summary["parameters"]["t2"] == pytest.approx(17.48, rel=0.05)


def test_hole_decay_run(tmp_path):
    manifest = run_scenario(bundled_config("fig2d"), tmp_path / "fig2d")
    parameters = manifest.summary["parameters"]
    assert parameters["tau1"] == pytest.approx(1.95, rel=0.15)
    assert parameters["tau1"] < parameters["tau2"] < parameters["tau3"]


def test_comb_preparation_run(tmp_path):
    manifest = run_scenario(bundled_config("fig3a"), tmp_path / "fig3a")
    assert manifest.summary["fitted"]["tooth_spacing_mhz"] == pytest.approx(2.5, rel=0.05)
    comb = read_csv(tmp_path / "fig3a" / "comb.csv")
    assert "pump_rate_per_s" in comb.columns


# ---------------------------------------------------------------- qubit runs


def test_qubit_fidelity_beats_classical_bound(tmp_path, make_config):
    manifest = run_scenario(make_config("fig4a", trials={"workers": 1}), tmp_path / "fig4a")
    summary = manifest.summary
    assert summary["f_el"] > 0.9
    assert summary["f_total"] > summary["classical_bound"]
    assert summary["beats_classical"]
    report = read_json(tmp_path / "fig4a" / "fidelity.json")
    assert report["classical_bound"] == summary["classical_bound"]


def test_fringe_run(tmp_path, make_config):
    manifest = run_scenario(make_config("fig4d", trials={"workers": 1}), tmp_path / "fig4d")
    assert 0.9 < manifest.summary["visibility"] < 0.99
    assert manifest.summary["fidelity"] == pytest.approx(0.5 * (1 + manifest.summary["visibility"]))
    fringe = read_csv(tmp_path / "fig4d" / "fringe.csv")
    assert len(fringe) == 12


# ---------------------------------------------------------------- sweeps


def test_sweep_over_photon_number(tmp_path, make_config):
    config = make_config("fig4a", trials=QUICK)
    frame = sweep(config, "/pulse/mean_photon_number", [0.578, 1.61], workers=2, output_dir=tmp_path / "sweep")
    assert list(frame["value"]) == [0.578, 1.61]
    assert (frame["parameter"] == "/pulse/mean_photon_number").all()
    assert frame["classical_bound"].iloc[0] < frame["classical_bound"].iloc[1]
    assert (tmp_path / "sweep" / "point_000" / "manifest.json").exists()
    assert read_csv_header(tmp_path / "sweep" / "sweep.csv")["parameter"] == "/pulse/mean_photon_number"


def test_sweep_over_finesse_tracks_formula(tmp_path, make_config):
    config = make_config("fig3b", trials=QUICK)
    frame = sweep(config, "/comb/finesse", [2.0, 3.0, 4.0], output_dir=tmp_path / "finesse")
    for finesse, analytic in zip(frame["value"], frame["analytic_efficiency"]):
        assert analytic == pytest.approx(afc_efficiency_analytic(1.65, finesse, 1.36))
    assert frame["efficiency"].to_numpy() == pytest.approx(frame["analytic_efficiency"].to_numpy(), rel=0.15)


def test_empty_sweep(tmp_path):
    frame = sweep(bundled_config("delayline"), "/delay_line/length_m", [], output_dir=tmp_path / "empty")
    assert frame.empty
    assert list(frame.columns) == ["parameter", "value"]
    assert (tmp_path / "empty" / "sweep.csv").exists()


def test_sweep_validates_before_running(tmp_path):
    with pytest.raises(PathNotFoundError):
        sweep(bundled_config("delayline"), "/delay_line/width", [1.0], output_dir=tmp_path / "bad")
    with pytest.raises(SchemaError):
        sweep(bundled_config("delayline"), "/delay_line/length_m", [10.0, -1.0], output_dir=tmp_path / "bad")
    assert not (tmp_path / "bad" / "point_000").exists()


# ---------------------------------------------------------------- calibration


def test_dark_rate_calibration_reproduces_snr(tmp_path, make_config):
    result = calibrate_dark_rate(bundled_config("fig3b"), target_snr=56.3, tolerance=0.5, seed=1)
    assert abs(result.snr - 56.3) <= 0.5
    assert result.history[-1] == (result.dark_rate_per_s, result.snr)

    held_out = make_config("fig3b", seed=99, detector={"dark_rate_per_s": result.dark_rate_per_s})
    manifest = run_scenario(held_out, tmp_path / "held_out")
    assert 49.3 <= manifest.summary["snr"] <= 63.3


def test_calibration_argument_checks():
    config = bundled_config("fig3b")
    with pytest.raises(ValueError):
        calibrate_dark_rate(config, tolerance=0.0)
    with pytest.raises(InfeasibleError):
        calibrate_dark_rate(config, target_snr=-1.0)
    with pytest.raises(ValueError):
        calibrate_dark_rate(config, scan_range=(10.0, 1.0))


def test_unreachable_snr_is_infeasible():
    with pytest.raises(InfeasibleError):
        calibrate_dark_rate(bundled_config("fig3b"), target_snr=1e9, n_trials=1_000_000)


# ---------------------------------------------------------------- plot data


def test_emit_plotdata_for_decay_run(tmp_path):
    manifest = run_scenario(bundled_config("fig2b"), tmp_path / "fig2b")
    written = emit_plotdata(tmp_path / "fig2b")
    assert {path.name for path in written} == {"trace.dat", "fit_curve.dat"}
    for path in written:
        assert path.parent == tmp_path / "fig2b" / "plots"
        lines = path.read_text().splitlines()
        assert lines[2] == f"# config_hash: {manifest.config_hash}"
        assert not lines[4].startswith("#")


def test_emit_plotdata_for_storage_run(tmp_path, make_config):
    manifest = run_scenario(make_config("fig3b", trials=QUICK), tmp_path / "fig3b")
    written = emit_plotdata(manifest, tmp_path / "plots")
    assert {path.name for path in written} == {"comb.dat", "waveform.dat", "histogram.dat"}


def test_emit_plotdata_without_plots(tmp_path):
    run_scenario(bundled_config("delayline"), tmp_path / "delayline")
    assert emit_plotdata(tmp_path / "delayline" / "manifest.json") == []


def test_emit_plotdata_missing_artifacts(tmp_path):
    run_scenario(bundled_config("fig2b"), tmp_path / "fig2b")
    (tmp_path / "fig2b" / "trace.csv").unlink()
    with pytest.raises(MissingArtifactError):
        emit_plotdata(tmp_path / "fig2b")
    with pytest.raises(MissingArtifactError):
        emit_plotdata(tmp_path / "nowhere")
