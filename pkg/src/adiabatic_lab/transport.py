"""Parallel transport along a projection path.

The transport T(s, s') solves dT/ds = [Pdot(s), P(s)] T with T(s', s') = 1.
It intertwines the projections, P(s) T(s, s') = T(s, s') P(s'), and moves
the kernel bundle without ever mixing it with the range bundle.  A
discrete-product form converges to the same operator at rate O(1/N) and
serves as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .cheb import ChebGrid
from .errors import OdeStepFailure
from .operator_core import norm_value, unvec

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12


@dataclass
class ProjectionPath:
    """Sampled projection family with its spectral derivative."""

    grid: ChebGrid
    P_values: np.ndarray      # (m+1, d, d)
    Pdot_values: np.ndarray

    @classmethod
    def from_values(cls, grid: ChebGrid, P_values: np.ndarray,
                    tol: float = 1e-8) -> "ProjectionPath":
        P_values = np.asarray(P_values, dtype=complex)
        path = cls(grid=grid, P_values=P_values,
                   Pdot_values=grid.differentiate(P_values))
        path.validate(tol)
        return path

    @classmethod
    def from_callable(cls, P_of, m: int = 64, tol: float = 1e-8) -> "ProjectionPath":
        grid = ChebGrid(m)
        values = np.array([P_of(s) for s in grid.nodes], dtype=complex)
        return cls.from_values(grid, values, tol=tol)

    def validate(self, tol: float = 1e-8) -> None:
        ranks = set()
        for p in self.P_values:
            if np.linalg.norm(p @ p - p, 2) > tol:
                raise ValueError("path values are not projections to tolerance")
            ranks.add(round(np.trace(p).real))
        if len(ranks) != 1:
            raise ValueError(f"projection rank changes along the path: {ranks}")

    @property
    def dim(self) -> int:
        return self.P_values.shape[1]

    @property
    def rank(self) -> int:
        return round(np.trace(self.P_values[0]).real)

    def P(self, s: float) -> np.ndarray:
        return self.grid.interpolate(self.P_values, s)

    def Pdot(self, s: float) -> np.ndarray:
        return self.grid.interpolate(self.Pdot_values, s)

    def Q(self, s: float) -> np.ndarray:
        return np.eye(self.dim) - self.P(s)


@dataclass
class TransportOperator:
    s_from: float
    s_to: float
    T: np.ndarray
    kind: str = "ode"

    @property
    def dim(self) -> int:
        return self.T.shape[0]


def _commutator_rhs(path: ProjectionPath):
    d = path.dim

    def rhs(s, y):
        p = path.P(s)
        pdot = path.Pdot(s)
        k = pdot @ p - p @ pdot
        return (k @ y.reshape(d, d)).reshape(-1)

    return rhs


def transport_ode(path: ProjectionPath, s_from: float, s_to: float,
                  rtol: float = DEFAULT_RTOL,
                  atol: float = DEFAULT_ATOL) -> TransportOperator:
    """Transport from s_from to s_to by integrating the commutator ODE."""
    d = path.dim
    if s_from == s_to:
        return TransportOperator(s_from, s_to, np.eye(d, dtype=complex))
    sol = solve_ivp(_commutator_rhs(path), (s_from, s_to),
                    np.eye(d, dtype=complex).reshape(-1),
                    method="RK45", rtol=rtol, atol=atol)
    if not sol.success:
        raise OdeStepFailure(sol.message)
    return TransportOperator(s_from, s_to, sol.y[:, -1].reshape(d, d))


def transport_at_nodes(path: ProjectionPath,
                       rtol: float = DEFAULT_RTOL,
                       atol: float = DEFAULT_ATOL) -> np.ndarray:
    """T(s_j, 0) at every grid node from a single ODE solve."""
    d = path.dim
    nodes = path.grid.nodes
    sol = solve_ivp(_commutator_rhs(path), (0.0, 1.0),
                    np.eye(d, dtype=complex).reshape(-1),
                    method="RK45", rtol=rtol, atol=atol, t_eval=nodes)
    if not sol.success:
        raise OdeStepFailure(sol.message)
    return sol.y.T.reshape(len(nodes), d, d)


def _ordered_product(factors: np.ndarray) -> np.ndarray:
    """Product factors[n-1] @ ... @ factors[0] by pairwise tree reduction."""
    while factors.shape[0] > 1:
        n = factors.shape[0]
        half = n // 2
        head = factors[1:2 * half:2] @ factors[0:2 * half:2]
        if n % 2:
            head = np.concatenate([head, factors[-1:]], axis=0)
        factors = head
    return factors[0]


def transport_discrete(path: ProjectionPath, s_from: float, s_to: float,
                       n: int) -> TransportOperator:
    """N-factor product of P(s_{i+1}) P(s_i) + Q(s_{i+1}) Q(s_i)."""
    if n < 1:
        raise ValueError("need at least one factor")
    d = path.dim
    s = np.linspace(s_from, s_to, n + 1)
    P = path.grid.interpolate(path.P_values, s)
    eye = np.eye(d, dtype=complex)
    Q = eye[None, :, :] - P
    factors = P[1:] @ P[:-1] + Q[1:] @ Q[:-1]
    return TransportOperator(s_from, s_to, _ordered_product(factors),
                             kind="discrete")


def dual_transport(path: ProjectionPath, transport: TransportOperator,
                   rtol: float = DEFAULT_RTOL,
                   atol: float = DEFAULT_ATOL) -> TransportOperator:
    """Dual transport T*(s, s') = (T(s', s))^*, recomputing the reverse leg."""
    reverse = transport_ode(path, transport.s_to, transport.s_from,
                            rtol=rtol, atol=atol)
    return TransportOperator(transport.s_from, transport.s_to,
                             reverse.T.conj().T, kind="dual")


def intertwining_defect(path: ProjectionPath, transport: TransportOperator) -> float:
    """||P(s_to) T - T P(s_from)|| in the operator 2-norm."""
    return float(np.linalg.norm(path.P(transport.s_to) @ transport.T
                                - transport.T @ path.P(transport.s_from), 2))


def transport_bound(path: ProjectionPath, transports: np.ndarray) -> float:
    """sup over supplied transports of the operator norm."""
    return float(max(np.linalg.norm(t, 2) for t in transports))


@dataclass
class RigidTransportReport:
    trace_drift: float
    positivity_floor: float
    isometry_defect: float
    vertex_defect: float
    barycentric_drift: float
    transport_sup_norm: float

    def passed(self, tol: float = 1e-8) -> bool:
        return (self.trace_drift <= tol and self.positivity_floor >= -tol
                and self.isometry_defect <= tol and self.vertex_defect <= tol
                and self.barycentric_drift <= tol)


def check_rigid_transport(path: ProjectionPath,
                          state_samples: list[np.ndarray],
                          vertex_path: np.ndarray | None = None,
                          rtol: float = DEFAULT_RTOL,
                          atol: float = DEFAULT_ATOL) -> RigidTransportReport:
    """Verify that transport acts on states as a rigid motion.

    The path must come from a state-preserving projection family acting on
    column-stacked density matrices.  ``state_samples`` are d x d density
    matrices in the range of P(0); ``vertex_path`` holds the extreme
    points P_i(s_j) at every grid node, shape (m+1, n_vertices, d, d).
    """
    transports = transport_at_nodes(path, rtol=rtol, atol=atol)
    dmat = round(np.sqrt(path.dim))

    trace_drift = 0.0
    positivity = np.inf
    isometry = 0.0
    bary_drift = 0.0
    vertex_defect = 0.0

    states = [np.asarray(r, dtype=complex) for r in state_samples]
    vecs = [r.reshape(-1, order="F") for r in states]

    for k, t in enumerate(transports):
        moved = [unvec(t @ v, dmat) for v in vecs]
        for rho in moved:
            trace_drift = max(trace_drift, abs(np.trace(rho).real - 1.0))
            positivity = min(positivity,
                             float(np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()))
        for i in range(len(moved)):
            for j in range(i + 1, len(moved)):
                d0 = norm_value("trace", (vecs[i] - vecs[j]))
                dk = norm_value("trace", (moved[i] - moved[j]).reshape(-1, order="F"))
                isometry = max(isometry, abs(dk - d0))
        if vertex_path is not None:
            for i, v0 in enumerate(vertex_path[0]):
                moved_vertex = unvec(t @ v0.reshape(-1, order="F"), dmat)
                defect = norm_value(
                    "trace", (moved_vertex - vertex_path[k][i]).reshape(-1, order="F"))
                vertex_defect = max(vertex_defect, defect)

    if vertex_path is not None:
        # barycentric coordinates in the instantaneous vertex basis must
        # match the s = 0 coordinates (rigid motion of the simplex)
        for v in vecs:
            lam0 = np.array([np.trace(unvec(v, dmat) @ vertex_path[0][i]).real
                             for i in range(vertex_path.shape[1])])
            for k, t in enumerate(transports):
                rho = unvec(t @ v, dmat)
                lam = np.array([np.trace(rho @ vertex_path[k][i]).real
                                for i in range(vertex_path.shape[1])])
                bary_drift = max(bary_drift, float(np.abs(lam - lam0).max()))

    return RigidTransportReport(trace_drift=trace_drift,
                                positivity_floor=float(positivity),
                                isometry_defect=isometry,
                                vertex_defect=float(vertex_defect),
                                barycentric_drift=bary_drift,
                                transport_sup_norm=transport_bound(path, transports))
