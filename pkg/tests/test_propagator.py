import numpy as np
import pytest
from scipy.linalg import expm

from adiabatic_lab import models
from adiabatic_lab.generator_path import GeneratorPath
from adiabatic_lab.operator_core import vec
from adiabatic_lab.propagator import (evolve, evolve_backward_adjoint,
                                      evolve_forced)


def constant_path(L, norm="l2", model_class="generic", m=24):
    return GeneratorPath.from_callable(lambda s: np.asarray(L, dtype=complex),
                                       m, norm=norm, model_class=model_class)


def test_diagonal_exponential():
    path = constant_path(np.diag([0.0, -1.0]))
    traj = evolve(path, 0.1, np.array([1.0, 1.0], dtype=complex),
                  out_grid=np.array([0.0, 1.0]))
    assert np.allclose(traj.final, [1.0, np.exp(-10.0)], atol=1e-12)


def test_schrodinger_norm_conserved():
    h = models.qubit_hamiltonian_path(1.0, np.pi / 2, 1.0)
    path = models.schrodinger_generator(h, 48)
    psi0 = models.eigenvector_section(lambda s: h.H(s), path.grid, 0)[0]
    traj = evolve(path, 0.08, psi0, rtol=1e-11, atol=1e-13)
    assert np.abs(traj.norms - 1.0).max() < 1e-10


def test_markov_against_closed_form():
    L = np.array([[-1.0, 2.0], [1.0, -2.0]])
    path = constant_path(L, norm="l1", model_class="markov")
    x0 = np.array([0.25, 0.75])
    eps = 0.1
    traj = evolve(path, eps, x0.astype(complex), out_grid=np.array([0.0, 1.0]),
                  rtol=1e-11, atol=1e-13)
    assert np.abs(traj.final - expm(L / eps) @ x0).max() < 1e-10


def test_markov_simplex_preserved(markov_two_state_path):
    traj = evolve(markov_two_state_path, 0.1,
                  np.array([0.9, 0.1], dtype=complex), rtol=1e-11, atol=1e-13)
    sums = traj.x_values.real.sum(axis=1)
    assert np.abs(sums - 1.0).max() < 1e-10
    assert traj.x_values.real.min() > -1e-10
    assert traj.x_values.real.max() < 1 + 1e-10


def test_declared_norm_non_increasing(qubit_dephasing_path):
    rho0 = vec(np.diag([0.8, 0.2]).astype(complex))
    traj = evolve(qubit_dephasing_path, 0.1, rho0, rtol=1e-10, atol=1e-12)
    increments = np.diff(traj.norms)
    assert increments.max() <= 10 * (1e-10 + 1e-12)


def test_composition_half_intervals(qubit_dephasing_path):
    rho0 = vec(np.diag([0.6, 0.4]).astype(complex)) + 0.1
    one_shot = evolve(qubit_dephasing_path, 0.07, rho0,
                      out_grid=np.array([0.0, 1.0]), rtol=1e-11, atol=1e-13)
    first = evolve(qubit_dephasing_path, 0.07, rho0,
                   out_grid=np.array([0.0, 0.5]), rtol=1e-11, atol=1e-13)
    second = evolve(qubit_dephasing_path, 0.07, first.final,
                    out_grid=np.array([0.5, 1.0]), rtol=1e-11, atol=1e-13)
    assert np.linalg.norm(second.final - one_shot.final) < 1e-8


def test_backward_adjoint_pairing_constant():
    path = constant_path(np.diag([0.0, -2.0, -3.0]))
    phi = np.array([1.0, 0.5, -0.25], dtype=complex)
    x0 = np.array([0.3, 1.0, -0.7], dtype=complex)
    fwd = evolve(path, 0.2, x0, rtol=1e-11, atol=1e-13)
    bwd = evolve_backward_adjoint(path, 0.2, phi, rtol=1e-11, atol=1e-13)
    pairing = np.einsum("ki,ki->k", bwd.x_values.conj(), fwd.x_values)
    assert np.abs(pairing - pairing[0]).max() < 1e-9


def test_backward_adjoint_pairing_lindblad(rng, qubit_dephasing_path):
    phi = rng.normal(size=4) + 1j * rng.normal(size=4)
    x0 = rng.normal(size=4) + 1j * rng.normal(size=4)
    fwd = evolve(qubit_dephasing_path, 0.3, x0, rtol=1e-11, atol=1e-13)
    bwd = evolve_backward_adjoint(qubit_dephasing_path, 0.3, phi,
                                  rtol=1e-11, atol=1e-13)
    pairing = np.einsum("ki,ki->k", bwd.x_values.conj(), fwd.x_values)
    assert np.abs(pairing - pairing[0]).max() < 1e-8


def test_bounded_generator_eps_one(rng):
    # not a contraction generator, but the propagator exists and is bounded
    a = rng.normal(size=(3, 3))
    path = constant_path(a)
    x0 = rng.normal(size=3).astype(complex)
    traj = evolve(path, 1.0, x0)
    assert np.all(np.isfinite(traj.x_values))
    bound = np.exp(np.linalg.norm(a, 2)) * np.linalg.norm(x0)
    assert np.linalg.norm(traj.final) <= bound * (1 + 1e-8)


def test_stiff_regime_uses_implicit_method():
    path = constant_path(np.diag([0.0, -1.0]) * 50.0)
    traj = evolve(path, 1e-3, np.array([1.0, 1.0], dtype=complex),
                  out_grid=np.array([0.0, 1.0]), rtol=1e-8, atol=1e-10)
    assert traj.method == "Radau"
    assert np.allclose(traj.final.real, [1.0, 0.0], atol=1e-7)


def test_radau_complex_realification():
    L = np.array([[-2.0 + 1.5j, 0.4], [0.1j, -1.0 - 0.8j]])
    path = constant_path(L)
    x0 = np.array([1.0, 0.5 - 0.2j])
    eps = 0.2
    traj = evolve(path, eps, x0, out_grid=np.array([0.0, 1.0]),
                  method="Radau", rtol=1e-9, atol=1e-11)
    exact = expm(L / eps) @ x0
    assert np.linalg.norm(traj.final - exact) < 1e-7


def test_forced_evolution_duhamel():
    # dx/ds = L x / eps + g with constant g: closed form via variation of constants
    L = np.diag([-1.0, -3.0])
    path = constant_path(L)
    g = np.array([0.5, -0.2], dtype=complex)
    eps = 0.25
    traj = evolve_forced(path, eps, np.zeros(2, dtype=complex), lambda s: g,
                         out_grid=np.array([0.0, 1.0]))
    exact = np.linalg.inv(L / eps) @ (expm(L / eps) - np.eye(2)) @ g
    assert np.linalg.norm(traj.final - exact) < 1e-9
