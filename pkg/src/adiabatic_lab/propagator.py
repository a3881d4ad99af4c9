"""Ground-truth integrator for eps * dx/ds = L(s) x.

This is the brute-force oracle the rest of the package is tested
against.  It wraps an adaptive embedded Runge-Kutta 5(4) scheme and
switches to an L-stable implicit method when the fast rates outrun the
explicit stepper.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import StepUnderflow
from .generator_path import GeneratorPath

STIFF_SWITCH = 3e4  # fast rate per unit s above which Radau takes over


@dataclass
class Trajectory:
    epsilon: float
    s_nodes: np.ndarray
    x_values: np.ndarray          # shape (len(s_nodes), dim)
    norms: np.ndarray             # declared norm at each node
    norm_name: str
    method: str
    n_steps: int

    def at(self, index: int) -> np.ndarray:
        return self.x_values[index]

    @property
    def final(self) -> np.ndarray:
        return self.x_values[-1]


def _pick_method(path: GeneratorPath, eps: float, method: str | None) -> str:
    if method is not None:
        return method
    return "Radau" if path.max_norm / eps > STIFF_SWITCH else "RK45"


def _solve(rhs, s_span, y0, out_grid, method, rtol, atol, first_step):
    complex_input = np.iscomplexobj(y0)
    if complex_input and method == "Radau":
        # Radau does not integrate complex systems; realify.
        n = y0.size

        def rhs_real(s, yr):
            dy = rhs(s, yr[:n] + 1j * yr[n:])
            return np.concatenate([dy.real, dy.imag])

        y0r = np.concatenate([y0.real, y0.imag])
        sol = solve_ivp(rhs_real, s_span, y0r, method=method, t_eval=out_grid,
                        rtol=rtol, atol=atol, first_step=first_step)
        if not sol.success:
            raise StepUnderflow(sol.message)
        y = sol.y[:n] + 1j * sol.y[n:]
        return sol, y
    sol = solve_ivp(rhs, s_span, np.asarray(y0, dtype=complex if complex_input else float),
                    method=method, t_eval=out_grid, rtol=rtol, atol=atol,
                    first_step=first_step)
    if not sol.success:
        raise StepUnderflow(sol.message)
    return sol, sol.y


def evolve(path: GeneratorPath, eps: float, x0: np.ndarray,
           out_grid: np.ndarray | None = None,
           rtol: float = 1e-10, atol: float = 1e-12,
           method: str | None = None) -> Trajectory:
    """Integrate eps * dx/ds = L(s) x over [0, 1] with dense output."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if out_grid is None:
        out_grid = path.grid.nodes
    out_grid = np.asarray(out_grid, dtype=float)
    x0 = np.asarray(x0, dtype=complex)
    method = _pick_method(path, eps, method)

    def rhs(s, y):
        return (path.L(s) @ y) / eps

    l0 = max(np.linalg.norm(path.L(out_grid[0]), 2), 1e-300)
    first_step = min(eps / (10.0 * l0), 0.1)
    sol, y = _solve(rhs, (out_grid[0], out_grid[-1]), x0, out_grid,
                    method, rtol, atol, first_step)
    xs = y.T
    norms = np.array([path.norm_of(x) for x in xs])
    return Trajectory(epsilon=eps, s_nodes=out_grid, x_values=xs, norms=norms,
                      norm_name=path.norm, method=method, n_steps=sol.t.size)


def evolve_backward_adjoint(path: GeneratorPath, eps: float,
                            phi_end: np.ndarray, s_end: float = 1.0,
                            out_grid: np.ndarray | None = None,
                            rtol: float = 1e-10, atol: float = 1e-12,
                            method: str | None = None) -> Trajectory:
    """Integrate the dual equation eps * dphi/ds' = -L(s')^* phi backwards.

    The pairing <phi(s'), x(s')> of the result with any forward solution
    is constant in s'.
    """
    if out_grid is None:
        out_grid = path.grid.nodes
    out_grid = np.asarray(out_grid, dtype=float)
    phi_end = np.asarray(phi_end, dtype=complex)
    method = _pick_method(path, eps, method)

    def rhs(s, y):
        return -(path.L(s).conj().T @ y) / eps

    l0 = max(np.linalg.norm(path.L(s_end), 2), 1e-300)
    first_step = min(eps / (10.0 * l0), 0.1)
    t_eval = out_grid[::-1]
    sol, y = _solve(rhs, (s_end, out_grid[0]), phi_end, t_eval,
                    method, rtol, atol, first_step)
    xs = y.T[::-1]
    norms = np.array([path.norm_of(x) for x in xs])
    return Trajectory(epsilon=eps, s_nodes=out_grid, x_values=xs, norms=norms,
                      norm_name=path.norm, method=method, n_steps=sol.t.size)


def evolve_forced(path: GeneratorPath, eps: float, x0: np.ndarray,
                  source: Callable[[float], np.ndarray],
                  out_grid: np.ndarray | None = None,
                  rtol: float = 1e-10, atol: float = 1e-12,
                  method: str | None = None) -> Trajectory:
    """Integrate dx/ds = L(s) x / eps + source(s).

    Duhamel helper used for remainder bookkeeping; the inhomogeneity
    enters at order one, not 1/eps.
    """
    if out_grid is None:
        out_grid = path.grid.nodes
    out_grid = np.asarray(out_grid, dtype=float)
    x0 = np.asarray(x0, dtype=complex)
    method = _pick_method(path, eps, method)

    def rhs(s, y):
        return (path.L(s) @ y) / eps + source(s)

    l0 = max(np.linalg.norm(path.L(out_grid[0]), 2), 1e-300)
    first_step = min(eps / (10.0 * l0), 0.1)
    sol, y = _solve(rhs, (out_grid[0], out_grid[-1]), x0, out_grid,
                    method, rtol, atol, first_step)
    xs = y.T
    norms = np.array([path.norm_of(x) for x in xs])
    return Trajectory(epsilon=eps, s_nodes=out_grid, x_values=xs, norms=norms,
                      norm_name=path.norm, method=method, n_steps=sol.t.size)
