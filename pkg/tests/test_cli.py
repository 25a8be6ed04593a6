import json
import sys
from pathlib import Path

import pytest

from meshcal.cli import (
    CSV_HEADER,
    PRESETS,
    ExperimentConfig,
    build_grid,
    config_to_dict,
    main,
    parse_config,
)
from meshcal.errors import ReconstructionError, ValidationError
from meshcal.tomography import TomographyMode

TINY = {
    "N": 4,
    "K": 3,
    "M": 4,
    "epsilons": [1e-3],
    "modes": ["full"],
    "trials": 2,
    "fidelity_samples": 20,
    "sizes": [],
    "seed": 5,
}


# --- config parsing ---------------------------------------------------------

def test_parse_empty_document_gives_defaults():
    config = parse_config({})
    assert config.n_modes == 10
    assert config.n_layers == 10
    assert config.resolved_block_size() == 10
    assert config.gamma == 0.1
    assert config.trials == 100
    assert config.fidelity_samples == 1000
    assert set(config.modes) == {TomographyMode.FULL, TomographyMode.INTENSITY}


def test_parse_rejects_block_larger_than_modes():
    with pytest.raises(ValidationError, match="M"):
        parse_config({"M": 20, "N": 10})


def test_parse_rejects_unknown_field():
    with pytest.raises(ValidationError, match="bogus"):
        parse_config({"bogus": 1})


def test_parse_rejects_bad_modes():
    with pytest.raises(ValidationError, match="modes"):
        parse_config({"modes": ["sideways"]})


def test_parse_rejects_negative_epsilon():
    with pytest.raises(ValidationError, match="epsilons"):
        parse_config({"epsilons": [-1e-3]})


def test_config_round_trip():
    config = parse_config(TINY)
    assert parse_config(config_to_dict(config)) == config


def test_paper_preset_parameters():
    preset = PRESETS["paper"]
    assert preset["gamma"] == 0.1
    assert preset["trials"] == 100
    assert preset["fidelity_samples"] == 1000
    parse_config(preset)  # must validate


def test_build_grid_structure():
    config = parse_config({"epsilons": [1e-2, 1e-4], "modes": ["full"], "sizes": [8, 4]})
    grid = build_grid(config)
    error_points = [p for p in grid if p.tag == "error"]
    timing_points = [p for p in grid if p.tag == "timing"]
    assert [p.epsilon for p in error_points] == [1e-4, 1e-2]
    assert [p.n_modes for p in timing_points] == [4, 8]
    assert all(p.n_modes == p.n_layers == p.block_size for p in timing_points)


# --- run command ------------------------------------------------------------

def _run(tmp_path, document, extra=()):
    tmp_path.mkdir(parents=True, exist_ok=True)
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(document))
    outdir = tmp_path / "out"
    return (
        main(["run", "--config", str(config_path), "--output-dir", str(outdir), *extra]),
        outdir,
    )


def test_run_writes_outputs(tmp_path):
    code, outdir = _run(tmp_path, TINY)
    assert code == 0
    csv = (outdir / "report.csv").read_text().splitlines()
    assert csv[0] == CSV_HEADER
    assert len(csv) == 3  # header + 2 metrics for the single grid point
    doc = json.loads((outdir / "report.json").read_text())
    assert doc["config"]["gamma"] == 0.1
    assert doc["metadata"]["seed"] == 5
    assert doc["metadata"]["mixer"]["4"] == "sylvester-hadamard"
    assert (outdir / "plotdata" / "delta_t_max_full.dat").exists()


def test_run_deterministic_csv(tmp_path):
    code_a, out_a = _run(tmp_path / "a", TINY)
    code_b, out_b = _run(tmp_path / "b", TINY)
    assert code_a == code_b == 0
    assert (out_a / "report.csv").read_bytes() == (out_b / "report.csv").read_bytes()


def test_run_seed_override_changes_results(tmp_path):
    _, out_a = _run(tmp_path / "a", TINY)
    _, out_b = _run(tmp_path / "b", TINY, extra=("--seed", "6"))
    assert (out_a / "report.csv").read_text() != (out_b / "report.csv").read_text()


def test_run_malformed_config(tmp_path):
    config_path = tmp_path / "config.json"
    config_path.write_text("{not json")
    assert main(["run", "--config", str(config_path)]) == 2


def test_run_invalid_config(tmp_path):
    code, _ = _run(tmp_path, {**TINY, "M": 9})
    assert code == 2


def test_run_excessive_failures_exit_code(tmp_path, monkeypatch):
    bench_mod = sys.modules["meshcal.bench"]

    def always_fail(records, plan):
        raise ReconstructionError("synthetic failure")

    monkeypatch.setattr(bench_mod, "reconstruct", always_fail)
    code, outdir = _run(tmp_path, TINY)
    assert code == 3
    assert (outdir / "report.csv").exists()  # outputs still written


def test_plotdata_round_trip(tmp_path):
    document = {**TINY, "epsilons": [1e-2, 1e-3, 1e-4]}
    code, outdir = _run(tmp_path, document)
    assert code == 0
    lines = (outdir / "plotdata" / "delta_t_max_full.dat").read_text().splitlines()
    assert lines[0].startswith("#")
    rows = [[float(x) for x in ln.split()] for ln in lines[1:]]
    assert [r[0] for r in rows] == sorted(r[0] for r in rows)
    doc = json.loads((outdir / "report.json").read_text())
    by_eps = {
        p["epsilon"]: p["stats"]["delta_t_max"]
        for p in doc["points"]
        if p["mode"] == "full" and p["tag"] == "error"
    }
    for x, median, q25, q75 in rows:
        assert q25 <= median <= q75
        stats = by_eps[x]
        assert abs(median - stats["median"]) <= 1e-12 * max(1.0, abs(median))
