"""Command-line entry point.

``adiabatic-lab run config.json --out DIR`` validates the configuration,
runs the requested experiment, and writes results.csv plus manifest.json.
``check`` runs only the hypothesis checks; ``list-fixtures`` prints the
bundled example configurations.

Exit codes: 0 success, 2 invalid configuration, 3 hypothesis-check
failure, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import os
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, experiments, models
from .errors import AdiabaticLabError, ConfigInvalid
from .operator_core import check_contraction_generator, unvec, vec
from .slow_manifold import decoupling_error, expand

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_HYPOTHESIS = 3
EXIT_NUMERICAL = 4

EXPERIMENTS = ("check", "expand", "evolve", "tunnel-unitary",
               "tunnel-dephasing", "bloch", "pump", "decouple", "gap-sweep")

FIXTURE_NAMES = ("qubit-unitary", "qubit-dephasing", "3-level-dephasing",
                 "3-state-pump")

_NUMBER = {"type": "number"}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment", "model"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": list(models.MODEL_KINDS)},
                "b_mag": _NUMBER, "angle": _NUMBER, "power": _NUMBER,
                "gamma": _NUMBER, "phi_max": _NUMBER,
                "energies": {"type": "array", "items": _NUMBER},
                "f_values": {"type": "array", "items": _NUMBER},
                "polar": _NUMBER, "turns": _NUMBER,
                "a_base": _NUMBER, "a_amp": _NUMBER,
                "b_base": _NUMBER, "b_amp": _NUMBER,
                "m_base": {"type": "array", "items": _NUMBER},
                "m_amp": {"type": "array", "items": _NUMBER},
                "m_phase": {"type": "array", "items": _NUMBER},
                "pi_amp": {"type": "array", "items": _NUMBER},
                "pi_phase": {"type": "array", "items": _NUMBER},
                "pi_constant": {"type": "boolean"},
            },
        },
        "schedule": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["linear", "bump"]},
                "flat_endpoints": {"type": "boolean"},
            },
        },
        "epsilons": {"type": "array", "items": {"type": "number",
                                                "exclusiveMinimum": 0},
                     "minItems": 1},
        "order": {"type": "integer", "minimum": 0, "maximum": 4},
        "grid_size": {"type": "integer", "minimum": 16, "maximum": 512},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"rtol": _NUMBER, "atol": _NUMBER,
                           "tol_kernel": _NUMBER, "gap_min": _NUMBER},
        },
        "seed": {"type": "integer"},
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["kernel-vertex", "kernel-vertices",
                                  "matrix", "vector"]},
                "index": {"type": "integer", "minimum": 0},
                "re": {"type": "array"},
                "im": {"type": "array"},
            },
        },
        "link": {"type": "array", "items": {"type": "integer"},
                 "minItems": 2, "maxItems": 2},
        "gaps": {"type": "array", "items": {"type": "number",
                                            "exclusiveMinimum": 0}},
    },
}


def load_config(path: str | Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    import jsonschema
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigInvalid(f"config rejected: {exc.message}") from exc
    return cfg


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    v = float(value)
    if not np.isfinite(v):
        raise FloatingPointError(f"non-finite value {v!r} in results")
    return format(v, ".17g")


def write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _tolerances(cfg: dict) -> dict:
    tol = {"rtol": 1e-11, "atol": 1e-13, "tol_kernel": 1e-9, "gap_min": 1e-6}
    tol.update(cfg.get("tolerances", {}))
    return tol


def _initial_state(cfg: dict, bundle: models.ModelBundle) -> np.ndarray:
    init = cfg.get("initial", {"kind": "kernel-vertex", "index": 0})
    kind = init.get("kind", "kernel-vertex")
    if kind in ("matrix", "vector"):
        re = np.asarray(init["re"], dtype=float)
        im = np.asarray(init.get("im", np.zeros_like(re)), dtype=float)
        value = re + 1j * im
        return vec(value) if kind == "matrix" else value
    index = init.get("index", 0)
    if bundle.lindblad is not None:
        tables = models.dephasing_tables(bundle.lindblad, bundle.generator.grid)
        return vec(tables.projs[0, index])
    if bundle.markov is not None:
        _, pi = models.markov_generator(bundle.markov, 0.0)
        return pi.astype(complex)
    if bundle.hamiltonian is not None:
        section = models.eigenvector_section(
            lambda s: bundle.hamiltonian.H(s), bundle.generator.grid, index)
        return section[0]
    if bundle.bloch is not None:
        b = bundle.bloch.b(0.0)
        return (-b / np.linalg.norm(b)).astype(complex)
    raise ConfigInvalid("no default initial state for this model")


# -- experiment runners ---------------------------------------------------------

def _run_check(cfg: dict, bundle: models.ModelBundle, tol: dict, seed: int):
    path = bundle.generator
    stride = max(1, (path.grid.size - 1) // 12)
    rows = []
    all_ok = True
    for k in range(0, path.grid.size, stride):
        s = path.grid.nodes[k]
        report = check_contraction_generator(path.L_values[k],
                                             model_class=path.model_class,
                                             seed=seed,
                                             tol_kernel=tol["tol_kernel"],
                                             gap_min=tol["gap_min"])
        for name, (passed, value) in report.checks.items():
            rows.append(("check", s, name,
                         value if not isinstance(value, str) else np.nan,
                         passed))
            all_ok = all_ok and passed
        rows.append(("check", s, "gap", report.gap, report.gap >= tol["gap_min"]))
        all_ok = all_ok and report.gap >= tol["gap_min"]
    header = ["experiment", "s", "check", "value", "passed"]
    slopes = {"all_passed": bool(all_ok)}
    return header, rows, slopes, all_ok


def _run_expand(cfg: dict, bundle: models.ModelBundle, tol: dict):
    path = bundle.generator
    order = cfg.get("order", 2)
    init = cfg.get("initial", {"kind": "kernel-vertex", "index": 0})
    split0 = path.splits()[0]
    labels_vectors = []
    if init.get("kind") == "kernel-vertices":
        if bundle.lindblad is None:
            raise ConfigInvalid("kernel-vertices initial data needs a "
                                "dephasing model")
        tables = models.dephasing_tables(bundle.lindblad, path.grid)
        for i in range(tables.projs.shape[1]):
            labels_vectors.append((f"vertex{i}", vec(tables.projs[0, i])))
    else:
        labels_vectors.append(("init0", _initial_state(cfg, bundle)))
        leak = np.linalg.norm(split0.Q @ labels_vectors[0][1])
        if leak > 1e-8:
            raise ConfigInvalid("initial datum is not in ker L(0)")
    rows = []
    for label, a0 in labels_vectors:
        exp = expand(path, order, [a0], rtol=tol["rtol"], atol=tol["atol"])
        for n in range(order + 1):
            for part, table in (("a", exp.a[n]), ("b", exp.b[n])):
                for k, s in enumerate(path.grid.nodes):
                    nrm = path.norm_of(table[k])
                    for comp in range(path.dim):
                        rows.append(("expand", label, n, part, s, comp,
                                     table[k, comp].real, table[k, comp].imag,
                                     nrm))
    header = ["experiment", "init", "order", "part", "s", "comp", "re", "im",
              "norm"]
    return header, rows, {}, True


def _run_evolve(cfg: dict, bundle: models.ModelBundle, tol: dict):
    from .propagator import evolve
    path = bundle.generator
    eps_list = sorted(cfg.get("epsilons", [0.1]), reverse=True)
    x0 = _initial_state(cfg, bundle)
    rows = []
    for eps in eps_list:
        traj = evolve(path, eps, x0, rtol=tol["rtol"], atol=tol["atol"])
        for k, s in enumerate(traj.s_nodes):
            row = ["evolve", eps, s, traj.norms[k]]
            for comp in range(path.dim):
                row.extend([traj.x_values[k, comp].real,
                            traj.x_values[k, comp].imag])
            rows.append(tuple(row))
    header = ["experiment", "epsilon", "s", "norm"]
    for comp in range(bundle.generator.dim):
        header.extend([f"x{comp}_re", f"x{comp}_im"])
    return header, rows, {}, True


def _run_tunnel_unitary(cfg: dict, bundle: models.ModelBundle, tol: dict,
                        jobs: int):
    res = experiments.tunneling_unitary(bundle.hamiltonian, cfg["epsilons"],
                                        m=cfg.get("grid_size", 96),
                                        rtol=tol["rtol"], atol=tol["atol"],
                                        jobs=jobs)
    rows = [("tunnel-unitary", e, v) for e, v in zip(res.epsilons, res.values)]
    header = ["experiment", "epsilon", "T_end"]
    slopes = {"fitted_slope": res.slope, "floor_dominated": res.floor_dominated,
              "n_fit": res.n_fit}
    return header, rows, slopes, True


def _run_tunnel_dephasing(cfg: dict, bundle: models.ModelBundle, tol: dict,
                          jobs: int):
    res = experiments.tunneling_dephasing(bundle.lindblad, cfg["epsilons"],
                                          m=cfg.get("grid_size", 96),
                                          rtol=tol["rtol"], atol=tol["atol"],
                                          jobs=jobs)
    sweep = res.sweep
    rows = []
    for k, (e, v) in enumerate(zip(sweep.epsilons, sweep.values)):
        predicted = e * res.predicted_rate_integral
        ratio = res.ratios[::-1][k]
        rows.append(("tunnel-dephasing", e, v, predicted, ratio))
    header = ["experiment", "epsilon", "measured", "predicted", "ratio"]
    slopes = {"fitted_slope": sweep.slope,
              "rate_integral": res.predicted_rate_integral,
              "alpha_min": float(res.alphas.min())}
    ok = bool(res.alphas.min() >= -1e-12)
    return header, rows, slopes, ok


def _run_bloch(cfg: dict, bundle: models.ModelBundle, tol: dict, jobs: int):
    res = experiments.bloch_first_order_check(bundle.bloch, cfg["epsilons"],
                                              m=cfg.get("grid_size", 96),
                                              rtol=tol["rtol"],
                                              atol=tol["atol"], jobs=jobs)
    rows = []
    for eps in sorted(res.orbits):
        orbit = res.orbits[eps]
        for k, s in enumerate(res.s_nodes):
            rows.append(("bloch", eps, s,
                         orbit[k, 0], orbit[k, 1], orbit[k, 2],
                         res.stationary[k, 0], res.stationary[k, 1],
                         res.stationary[k, 2],
                         res.friction[k, 0], res.friction[k, 1],
                         res.friction[k, 2],
                         res.geometric[k, 0], res.geometric[k, 1],
                         res.geometric[k, 2],
                         res.tunneling[k, 0], res.tunneling[k, 1],
                         res.tunneling[k, 2]))
    header = ["experiment", "epsilon", "s", "n_x", "n_y", "n_z",
              "stat_x", "stat_y", "stat_z",
              "n1_friction_x", "n1_friction_y", "n1_friction_z",
              "n1_geom_x", "n1_geom_y", "n1_geom_z",
              "n1_tunnel_x", "n1_tunnel_y", "n1_tunnel_z"]
    slopes = {"fitted_slope": res.sweep.slope}
    return header, rows, slopes, True


def _run_pump(cfg: dict, bundle: models.ModelBundle, tol: dict, jobs: int):
    link = tuple(cfg.get("link", (0, 1)))
    res = experiments.pump_sweep(bundle.markov, link, cfg["epsilons"],
                                 m=cfg.get("grid_size", 96),
                                 rtol=tol["rtol"], atol=tol["atol"], jobs=jobs)
    rows = []
    geoms = res.metadata["T_geom"][::-1]
    sims = res.metadata["T_sim"][::-1]
    for k, (e, v) in enumerate(zip(res.epsilons, res.values)):
        rows.append(("pump", e, link[0], link[1], sims[k], geoms[k], v))
    header = ["experiment", "epsilon", "link_i", "link_j", "T_sim", "T_geom",
              "abs_diff"]
    slopes = {"fitted_slope": res.slope, "floor_dominated": res.floor_dominated}
    return header, rows, slopes, True


def _run_decouple(cfg: dict, bundle: models.ModelBundle, tol: dict, jobs: int):
    path = bundle.generator
    x0 = _initial_state(cfg, bundle)
    eps_sorted = np.array(sorted(cfg["epsilons"], reverse=True))
    values = experiments._map_sweep(
        lambda eps: decoupling_error(path, eps, x0, rtol=tol["rtol"],
                                     atol=tol["atol"]).sup_error,
        eps_sorted, jobs)
    sweep = experiments.fit_loglog_slope(eps_sorted, values, floor=1e-8)
    rows = [("decouple", e, v) for e, v in zip(sweep.epsilons, sweep.values)]
    header = ["experiment", "epsilon", "sup_error"]
    slopes = {"fitted_slope": sweep.slope,
              "floor_dominated": sweep.floor_dominated}
    return header, rows, slopes, True


def _run_gap_sweep(cfg: dict, bundle: models.ModelBundle, tol: dict):
    eps = cfg.get("epsilons", [0.01])[0]
    gaps = cfg.get("gaps", [1.0, 0.3, 0.1, 0.03])
    res = experiments.gap_shrink_sweep(gaps, eps,
                                       gamma=bundle.params.get("gamma", 0.5))
    rows = [("gap-sweep", g, e) for g, e in zip(res.gaps, res.errors)]
    header = ["experiment", "gap", "sup_error"]
    slopes = {"monotone": res.monotone_increasing_as_gap_shrinks,
              "trend_slope": res.trend_slope}
    return header, rows, slopes, True


def run_experiment(cfg: dict, out_dir: Path, jobs: int = 1,
                   seed: int | None = None) -> int:
    """Execute one validated configuration; returns the exit code."""
    t0 = time.time()
    tol = _tolerances(cfg)
    seed = cfg.get("seed", 0) if seed is None else seed
    bundle = models.build_model(cfg["model"], cfg.get("schedule"),
                                cfg.get("grid_size", 96))
    experiment = cfg["experiment"]
    if experiment == "check":
        header, rows, slopes, ok = _run_check(cfg, bundle, tol, seed)
    elif experiment == "expand":
        header, rows, slopes, ok = _run_expand(cfg, bundle, tol)
    elif experiment == "evolve":
        header, rows, slopes, ok = _run_evolve(cfg, bundle, tol)
    elif experiment == "tunnel-unitary":
        header, rows, slopes, ok = _run_tunnel_unitary(cfg, bundle, tol, jobs)
    elif experiment == "tunnel-dephasing":
        header, rows, slopes, ok = _run_tunnel_dephasing(cfg, bundle, tol, jobs)
    elif experiment == "bloch":
        header, rows, slopes, ok = _run_bloch(cfg, bundle, tol, jobs)
    elif experiment == "pump":
        header, rows, slopes, ok = _run_pump(cfg, bundle, tol, jobs)
    elif experiment == "decouple":
        header, rows, slopes, ok = _run_decouple(cfg, bundle, tol, jobs)
    elif experiment == "gap-sweep":
        header, rows, slopes, ok = _run_gap_sweep(cfg, bundle, tol)
    else:  # pragma: no cover - schema forbids
        raise ConfigInvalid(f"unknown experiment {experiment!r}")

    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(out_dir / "results.csv", header, rows)
    manifest = {
        "config": cfg,
        "experiment": experiment,
        "version": __version__,
        "library_versions": {"numpy": np.__version__,
                             "scipy": scipy.__version__},
        "tolerances": tol,
        "seed": seed,
        "jobs": jobs,
        "fitted_slopes": slopes,
        "wall_time_s": time.time() - t0,
        "outputs": ["results.csv"],
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    return EXIT_OK if ok else EXIT_HYPOTHESIS


def fixture_path(name: str) -> Path:
    res = importlib.resources.files("adiabatic_lab") / "fixtures" / f"{name}.json"
    return Path(str(res))


def list_fixtures() -> list[str]:
    for name in FIXTURE_NAMES:
        print(name)
    return list(FIXTURE_NAMES)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="adiabatic-lab",
        description="Numerical experiments for slowly driven contraction "
                    "semigroups")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("config", help="path to a JSON config or a bundled "
                                      "fixture name")
    check_p = sub.add_parser("check", help="run only the hypothesis checks")
    check_p.add_argument("config")
    sub.add_parser("list-fixtures", help="print bundled fixture names")

    for p in (run_p, check_p):
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--jobs", type=int,
                       default=int(os.environ.get("ADIABATIC_LAB_JOBS", "1")))
        p.add_argument("--seed", type=int, default=None)

    args = parser.parse_args(argv)

    if args.command == "list-fixtures":
        list_fixtures()
        return EXIT_OK

    config_arg = args.config
    if not Path(config_arg).exists() and config_arg in FIXTURE_NAMES:
        config_arg = fixture_path(config_arg)
    try:
        cfg = load_config(config_arg)
    except ConfigInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "check":
        cfg = dict(cfg)
        cfg["experiment"] = "check"

    try:
        code = run_experiment(cfg, Path(args.out), jobs=args.jobs,
                              seed=args.seed)
    except ConfigInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AdiabaticLabError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if code == EXIT_HYPOTHESIS:
        print("hypothesis checks failed", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
