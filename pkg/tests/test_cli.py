import json
from pathlib import Path

import numpy as np
import pytest

from adiabatic_lab import cli, models


def write_config(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


SMALL_DEPHASING = {
    "experiment": "tunnel-dephasing",
    "model": {"kind": "qubit_dephasing", "gamma": 0.5},
    "schedule": {"kind": "linear"},
    "epsilons": [0.1, 0.05],
    "grid_size": 48,
    "seed": 3,
}


def test_bundled_fixtures_parse_and_validate():
    for name in cli.FIXTURE_NAMES:
        cfg = cli.load_config(cli.fixture_path(name))
        assert cfg["experiment"] in cli.EXPERIMENTS


def test_list_fixtures(capsys):
    names = cli.list_fixtures()
    out = capsys.readouterr().out.strip().splitlines()
    assert out == list(names)
    assert set(names) == {"qubit-unitary", "qubit-dephasing",
                          "3-level-dephasing", "3-state-pump"}


def test_unknown_key_rejected(tmp_path):
    cfg = dict(SMALL_DEPHASING)
    cfg["typo_field"] = 1
    p = write_config(tmp_path, cfg)
    assert cli.main(["run", str(p), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG


def test_unknown_model_key_rejected(tmp_path):
    cfg = json.loads(json.dumps(SMALL_DEPHASING))
    cfg["model"]["bogus"] = 2.0
    p = write_config(tmp_path, cfg)
    assert cli.main(["run", str(p), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG


def test_missing_config_is_config_error(tmp_path):
    assert cli.main(["run", str(tmp_path / "absent.json"),
                     "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG


def test_run_writes_results_and_manifest(tmp_path):
    p = write_config(tmp_path, SMALL_DEPHASING)
    out = tmp_path / "out"
    assert cli.main(["run", str(p), "--out", str(out)]) == 0
    lines = (out / "results.csv").read_text().splitlines()
    assert lines[0] == "experiment,epsilon,measured,predicted,ratio"
    assert len(lines) == 3
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"] == SMALL_DEPHASING
    assert "fitted_slopes" in manifest
    assert manifest["version"]


def test_run_deterministic_byte_identical(tmp_path):
    p = write_config(tmp_path, SMALL_DEPHASING)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", str(p), "--out", str(out1)]) == 0
    assert cli.main(["run", str(p), "--out", str(out2)]) == 0
    assert (out1 / "results.csv").read_bytes() == (out2 / "results.csv").read_bytes()


def test_check_command_passes_on_valid_model(tmp_path):
    p = write_config(tmp_path, SMALL_DEPHASING)
    out = tmp_path / "chk"
    assert cli.main(["check", str(p), "--out", str(out)]) == 0
    rows = (out / "results.csv").read_text().splitlines()
    assert rows[0] == "experiment,s,check,value,passed"
    assert all(line.endswith(",1") for line in rows[1:])


def test_check_detects_bad_generator(tmp_path, monkeypatch):
    p = write_config(tmp_path, SMALL_DEPHASING)
    real_build = models.build_model

    def sabotaged(model_cfg, schedule_cfg=None, grid_size=96):
        bundle = real_build(model_cfg, schedule_cfg, grid_size)
        # destroy trace preservation of the sampled generators
        bundle.generator.L_values = (bundle.generator.L_values
                                     + 0.05 * np.eye(4)[None])
        return bundle

    monkeypatch.setattr(cli.models, "build_model", sabotaged)
    assert cli.main(["check", str(p), "--out",
                     str(tmp_path / "bad")]) == cli.EXIT_HYPOTHESIS


def test_bloch_csv_schema(tmp_path):
    cfg = {
        "experiment": "bloch",
        "model": {"kind": "bloch_cone", "polar": 0.6, "turns": 0.35,
                  "b_mag": 2.0, "gamma": 1.0},
        "schedule": {"kind": "bump"},
        "epsilons": [0.1, 0.05],
        "grid_size": 48,
        "seed": 3,
    }
    p = write_config(tmp_path, cfg)
    out = tmp_path / "bloch"
    assert cli.main(["run", str(p), "--out", str(out)]) == 0
    header = (out / "results.csv").read_text().splitlines()[0].split(",")
    for col in ("s", "n_x", "n_y", "n_z", "n1_friction_x", "n1_geom_x",
                "n1_tunnel_x", "epsilon"):
        assert col in header


def test_expand_csv_rows(tmp_path):
    cfg = {
        "experiment": "expand",
        "model": {"kind": "qubit_dephasing", "gamma": 0.5},
        "schedule": {"kind": "linear"},
        "order": 1,
        "grid_size": 32,
        "initial": {"kind": "kernel-vertices"},
        "seed": 3,
    }
    p = write_config(tmp_path, cfg)
    out = tmp_path / "exp"
    assert cli.main(["run", str(p), "--out", str(out)]) == 0
    lines = (out / "results.csv").read_text().splitlines()
    assert lines[0] == "experiment,init,order,part,s,comp,re,im,norm"
    # 2 vertices x 2 orders x 2 parts x 33 nodes x 4 components
    assert len(lines) - 1 == 2 * 2 * 2 * 33 * 4


def test_no_nan_in_csv(tmp_path):
    with pytest.raises(FloatingPointError):
        cli.write_csv(tmp_path / "x.csv", ["a"], [(np.nan,)])


def test_decouple_and_evolve_run(tmp_path):
    cfg = {
        "experiment": "decouple",
        "model": {"kind": "markov_two_state"},
        "schedule": {"kind": "linear"},
        "epsilons": [0.1, 0.05],
        "grid_size": 32,
        "initial": {"kind": "vector", "re": [0.9, 0.1]},
        "seed": 3,
    }
    p = write_config(tmp_path, cfg)
    assert cli.main(["run", str(p), "--out", str(tmp_path / "d")]) == 0
    manifest = json.loads((tmp_path / "d" / "manifest.json").read_text())
    assert manifest["fitted_slopes"]["floor_dominated"] is True

    cfg2 = {
        "experiment": "evolve",
        "model": {"kind": "markov_two_state"},
        "epsilons": [0.1],
        "grid_size": 32,
        "initial": {"kind": "vector", "re": [0.5, 0.5]},
        "seed": 3,
    }
    p2 = write_config(tmp_path, cfg2, "e.json")
    assert cli.main(["run", str(p2), "--out", str(tmp_path / "e")]) == 0
    header = (tmp_path / "e" / "results.csv").read_text().splitlines()[0]
    assert header == "experiment,epsilon,s,norm,x0_re,x0_im,x1_re,x1_im"


def test_fixture_name_resolution(tmp_path):
    # bundled names work directly as the config argument
    code = cli.main(["run", "qubit-dephasing", "--out", str(tmp_path / "f")])
    assert code == 0


def test_jobs_flag_matches_serial(tmp_path):
    p = write_config(tmp_path, SMALL_DEPHASING)
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    assert cli.main(["run", str(p), "--out", str(out1), "--jobs", "1"]) == 0
    assert cli.main(["run", str(p), "--out", str(out2), "--jobs", "2"]) == 0
    assert (out1 / "results.csv").read_bytes() == (out2 / "results.csv").read_bytes()
