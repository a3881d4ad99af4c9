"""Acceptance suite: one test per primary criterion, each printing a
PASS/FAIL line with the measured quantities at the pinned tolerances."""

import time

import numpy as np
import pytest

from adiabatic_lab import experiments, models
from adiabatic_lab.cheb import ChebGrid
from adiabatic_lab.operator_core import norm_value, unvec, vec
from adiabatic_lab.propagator import evolve
from adiabatic_lab.slow_manifold import decoupling_error, expand
from adiabatic_lab.transport import (ProjectionPath, check_rigid_transport,
                                     transport_discrete, transport_ode)

EPS_GRID = [0.2, 0.1, 0.05, 0.025]


def report(name: str, passed: bool, detail: str) -> None:
    print(f"ACCEPTANCE {name}: {'PASS' if passed else 'FAIL'} ({detail})")
    assert passed, f"{name}: {detail}"


def lstsq_slope(eps, vals):
    le, lv = np.log(eps), np.log(vals)
    a = np.vstack([le, np.ones_like(le)]).T
    return float(np.linalg.lstsq(a, lv, rcond=None)[0][0])


@pytest.fixture(scope="module")
def dephasing_fixture():
    b_of, bdot_of = models.rotating_field(1.0, np.pi / 2, 1.0)
    spec = models.dephasing_qubit(b_of, bdot_of, 0.5, models.Schedule("linear"))
    path = models.lindblad_generator(spec, 64)
    tables = models.dephasing_tables(spec, path.grid)
    return spec, path, tables


def test_expansion_order(dephasing_fixture):
    """Slow-manifold expansion: error slope >= N + 0.8 for N = 0, 1, 2."""
    t0 = time.monotonic()
    _, path, tables = dephasing_fixture
    a0 = vec(tables.projs[0, 0])
    slopes = {}
    for order in (0, 1, 2):
        exp = expand(path, order, [a0])
        errs = []
        for eps in EPS_GRID:
            x0 = exp.evaluate(eps, 0.0)
            traj = evolve(path, eps, x0, out_grid=np.array([0.0, 1.0]),
                          rtol=1e-11, atol=1e-13)
            errs.append(norm_value("trace", traj.final - exp.evaluate(eps, 1.0)))
        slopes[order] = lstsq_slope(EPS_GRID, errs)
    runtime = time.monotonic() - t0
    ok = all(slopes[n] >= n + 0.8 for n in slopes) and runtime < 60
    report("expansion-order", ok,
           f"slopes N=0,1,2: {slopes[0]:.2f}, {slopes[1]:.2f}, "
           f"{slopes[2]:.2f} (need >= N+0.8); runtime {runtime:.1f}s < 60s")


def test_decoupling_lindblad_and_markov():
    """sup_s ||P x - T P(0) x0|| is O(eps) for mixed initial data."""
    b_of, bdot_of = models.rotating_field(2.0, np.pi / 2, 1.0)
    spec = models.dephasing_qubit(b_of, bdot_of, 0.5, models.Schedule("linear"))
    lpath = models.lindblad_generator(spec, 64)
    rho0 = np.array([[0.7, 0.25], [0.25, 0.3]], dtype=complex)
    lerrs = [decoupling_error(lpath, eps, vec(rho0), rtol=1e-11,
                              atol=1e-13).sup_error for eps in EPS_GRID]
    lslope = lstsq_slope(EPS_GRID, lerrs)

    mpath = models.markov_generator_path(models.markov_two_state(), 64)
    x0 = np.array([0.9, 0.1], dtype=complex)
    merrs = [decoupling_error(mpath, eps, x0, rtol=1e-11, atol=1e-13).sup_error
             for eps in EPS_GRID]
    floor = 1e-8
    # the rank-1 Markov kernel has a fixed complement, so its transport is
    # exactly rigid and the errors sit at the integration floor: the O(eps)
    # bound holds with constant ~0; the slope criterion is satisfied
    # vacuously and is reported as floor-dominated
    markov_ok = max(merrs) <= floor or lstsq_slope(EPS_GRID, merrs) >= 0.9
    ok = lslope >= 0.9 and markov_ok
    report("decoupling", ok,
           f"lindblad slope {lslope:.3f} >= 0.9; markov errors max "
           f"{max(merrs):.1e} (floor {floor:.0e}, exact kernel rigidity)")


def test_unitary_tunneling_orders():
    """Flat schedule: slope >= 4; linear schedule: slope 2.0 +- 0.3."""
    t0 = time.monotonic()
    eps_grid = np.geomspace(0.3, 0.02, 10)
    h_flat = models.qubit_hamiltonian_path(1.0, np.pi / 2, 2.0,
                                           models.Schedule("bump"))
    h_lin = models.qubit_hamiltonian_path(1.0, np.pi / 2, 2.0,
                                          models.Schedule("linear"))
    res_flat = experiments.tunneling_unitary(h_flat, eps_grid, m=96)
    res_lin = experiments.tunneling_unitary(h_lin, eps_grid, m=96)
    runtime = time.monotonic() - t0
    ok = (res_flat.slope is not None and res_flat.slope >= 4.0
          and res_lin.slope is not None and 1.7 <= res_lin.slope <= 2.3
          and runtime < 120)
    report("unitary-tunneling", ok,
           f"flat slope {res_flat.slope:.2f} >= 4; linear slope "
           f"{res_lin.slope:.2f} in [1.7, 2.3]; runtime {runtime:.1f}s < 120s")


def test_dephasing_tunneling_rate(dephasing_fixture):
    """T_eps(1) / (eps int sum_j alpha_j) in [0.9, 1.1]; alpha_j >= 0;
    closed-form qubit rate matched through the Bloch correspondence."""
    spec, _, _ = dephasing_fixture
    res = experiments.tunneling_dephasing(spec, [0.04, 0.02, 0.01], m=96)
    ratios_small = res.ratios[-2:]          # two smallest eps (descending order)
    alpha_min = float(res.alphas.min())
    closed = experiments.qubit_closed_form_rate(1.0, np.pi / 2, 0.5)
    # the Bloch-axis rate constant equals twice the density-matrix
    # integral sum_j alpha_j (population = (1 - n . bhat)/2)
    closed_match = abs(2 * res.predicted_rate_integral - closed)
    ok = (np.all((ratios_small >= 0.9) & (ratios_small <= 1.1))
          and alpha_min >= -1e-12 and closed_match <= 1e-10)
    report("dephasing-tunneling", ok,
           f"ratios {ratios_small.round(4)} in [0.9, 1.1]; min alpha "
           f"{alpha_min:.1e} >= -1e-12; closed-form mismatch "
           f"{closed_match:.1e} <= 1e-10")


def test_bloch_first_order():
    """Residual slope >= 1.8; gamma = 0 term structure exact."""
    def cone(gamma):
        def b_of(u):
            az = 2 * np.pi * 0.35 * u
            return 2.0 * np.array([np.sin(0.6) * np.cos(az),
                                   np.sin(0.6) * np.sin(az), np.cos(0.6)])

        def bdot_of(u):
            az = 2 * np.pi * 0.35 * u
            return 2.0 * 2 * np.pi * 0.35 * np.array(
                [-np.sin(0.6) * np.sin(az), np.sin(0.6) * np.cos(az), 0.0])

        return models.BlochSpec(b_of=b_of, bdot_of=bdot_of, gamma=gamma,
                                schedule=models.Schedule("bump"))

    res = experiments.bloch_first_order_check(cone(1.0),
                                              [0.1, 0.07, 0.05, 0.035, 0.025],
                                              m=96)
    grid = ChebGrid(96)
    spec0 = cone(0.0)
    bhat, friction, geometric, _ = experiments.bloch_first_order_terms(spec0,
                                                                       grid)
    bdots = np.array([spec0.bdot(s) for s in grid.nodes])
    bvals = np.array([spec0.b(s) for s in grid.nodes])
    bn = np.linalg.norm(bvals, axis=1)
    bh = bvals / bn[:, None]
    bhd = (bdots - bh * np.einsum("ki,ki->k", bh, bdots)[:, None]) / bn[:, None]
    geom_ref = np.cross(bh, bhd) / bn[:, None]
    friction_max = float(np.abs(friction).max())
    geom_err = float(np.abs(geometric - geom_ref).max())
    ok = (res.sweep.slope is not None and res.sweep.slope >= 1.8
          and friction_max == 0.0 and geom_err <= 1e-10)
    report("bloch-first-order", ok,
           f"residual slope {res.sweep.slope:.2f} >= 1.8; gamma=0 friction "
           f"{friction_max:.1e} == 0; geometric term error {geom_err:.1e} "
           f"<= 1e-10")


def test_rigid_transport(dephasing_fixture):
    """Trace-norm distances constant and vertices tracked to 1e-8."""
    _, path, tables = dephasing_fixture
    proj = path.projection_path()
    interior = 0.55 * tables.projs[0, 0] + 0.45 * tables.projs[0, 1]
    rep = check_rigid_transport(proj,
                                [tables.projs[0, 0], tables.projs[0, 1],
                                 interior],
                                vertex_path=tables.projs,
                                rtol=1e-11, atol=1e-13)
    ok = rep.isometry_defect <= 1e-8 and rep.vertex_defect <= 1e-8
    report("rigid-transport", ok,
           f"trace-norm isometry defect {rep.isometry_defect:.1e} <= 1e-8; "
           f"vertex tracking {rep.vertex_defect:.1e} <= 1e-8")


def test_pump_transport():
    """|T_sim - T_geom| = O(eps); geometric invariances."""
    spec = models.markov_pump_ring(schedule=models.Schedule("bump"))
    sweep = experiments.pump_sweep(spec, (0, 1), [0.1, 0.05, 0.025, 0.0125],
                                   m=96)
    from adiabatic_lab.experiments import _geometric_transport
    from adiabatic_lab.models import markov_tables
    lin = models.markov_pump_ring(schedule=models.Schedule("linear"))
    g_bump, _ = _geometric_transport(markov_tables(spec, ChebGrid(96)))
    g_lin, _ = _geometric_transport(markov_tables(lin, ChebGrid(96)))
    reparam = float(np.abs(g_bump - g_lin).max())

    const = models.markov_pump_ring(pi_constant=True,
                                    schedule=models.Schedule("bump"))
    res_const = experiments.pump_transport(const, 0.05, m=96)
    tgeom_const = float(np.abs(res_const.T_geom).max())
    tsim_const = float(np.abs(res_const.T_sim).max())

    ok = (sweep.slope is not None and sweep.slope >= 0.9
          and reparam <= 1e-8 and tgeom_const <= 1e-12
          and tsim_const <= 10 * 0.05)
    report("pump-transport", ok,
           f"|T_sim-T_geom| slope {sweep.slope:.2f} >= 0.9; "
           f"reparametrization shift {reparam:.1e} <= 1e-8; pi-constant "
           f"T_geom {tgeom_const:.1e} <= 1e-12, T_sim {tsim_const:.1e} = O(eps)")


def test_contraction_and_positivity():
    """Declared-norm non-increase and state preservation on all fixtures."""
    rtol, atol = 1e-11, 1e-13
    failures = []

    # unitary qubit: l2 norm conserved
    h = models.qubit_hamiltonian_path(1.0, np.pi / 2, 2.0,
                                      models.Schedule("bump"))
    upath = models.schrodinger_generator(h, 64)
    psi0 = models.eigenvector_section(lambda s: h.H(s), upath.grid, 0)[0]
    traj = evolve(upath, 0.05, psi0, rtol=rtol, atol=atol)
    if np.diff(traj.norms).max() > 10 * (rtol + atol):
        failures.append("unitary l2 increase")

    # dephasing qubit and 3-level: trace norm, trace drift, positivity
    for name, spec in (
            ("qubit", models.dephasing_qubit(
                *models.rotating_field(1.0, np.pi / 2, 1.0), 0.5,
                models.Schedule("linear"))),
            ("3-level", models.three_level_dephasing(
                schedule=models.Schedule("linear")))):
        path = models.lindblad_generator(spec, 64)
        tables = models.dephasing_tables(spec, path.grid)
        traj = evolve(path, 0.04, vec(tables.projs[0, 0]), rtol=rtol, atol=atol)
        if np.diff(traj.norms).max() > 10 * (rtol + atol):
            failures.append(f"{name} trace-norm increase")
        traces = np.array([np.trace(unvec(x)).real for x in traj.x_values])
        if np.abs(traces - 1.0).max() > 1e-10:
            failures.append(f"{name} trace drift")
        mineig = min(np.linalg.eigvalsh(
            (unvec(x) + unvec(x).conj().T) / 2).min()
            for x in traj.x_values)
        if mineig < -1e-8:
            failures.append(f"{name} negativity {mineig:.1e}")

    # markov pump ring: l1 norm and simplex preservation
    mpath = models.markov_generator_path(
        models.markov_pump_ring(schedule=models.Schedule("bump")), 64)
    _, pi0 = models.markov_generator(mpath.meta["markov"], 0.0)
    traj = evolve(mpath, 0.05, pi0.astype(complex), rtol=rtol, atol=atol)
    if np.diff(traj.norms).max() > 10 * (rtol + atol):
        failures.append("markov l1 increase")
    p = traj.x_values.real
    if (np.abs(p.sum(axis=1) - 1.0).max() > 1e-10
            or p.min() < -1e-10 or p.max() > 1 + 1e-10):
        failures.append("markov simplex violation")

    report("contraction-positivity", not failures,
           "all fixtures contract in their declared norms and preserve "
           "states" if not failures else "; ".join(failures))


def test_oracle_independence():
    """ODE vs product-formula transport; propagator vs matrix exponential."""
    def P_of(s):
        th = 0.6 * s
        n = np.array([np.sin(th), 0.0, np.cos(th)])
        return 0.5 * (np.eye(2, dtype=complex)
                      + n[0] * models.SIGMA_X + n[2] * models.SIGMA_Z)

    proj = ProjectionPath.from_callable(P_of, 64)
    t_ode = transport_ode(proj, 0.0, 1.0, rtol=1e-12, atol=1e-14)
    t_disc = transport_discrete(proj, 0.0, 1.0, 100000)
    transport_gap = float(np.linalg.norm(t_ode.T - t_disc.T, 2))

    from scipy.linalg import expm
    from adiabatic_lab.generator_path import GeneratorPath
    L = np.array([[-1.0, 2.0], [1.0, -2.0]])
    cpath = GeneratorPath.from_callable(lambda s: L.astype(complex), 24,
                                        model_class="markov", norm="l1")
    x0 = np.array([0.25, 0.75])
    traj = evolve(cpath, 0.1, x0.astype(complex),
                  out_grid=np.array([0.0, 1.0]), rtol=1e-11, atol=1e-13)
    markov_gap = float(np.abs(traj.final - expm(L / 0.1) @ x0).max())

    ok = transport_gap <= 1e-6 and markov_gap <= 1e-10
    report("oracle-independence", ok,
           f"transport ODE vs product (N=1e5): {transport_gap:.2e} <= 1e-6; "
           f"markov evolve vs closed form: {markov_gap:.2e} <= 1e-10")
