"""Order-N slow-manifold expansion for eps * dx/ds = L(s) x.

Solutions are organized as x(s) = sum_n eps^n (a_n(s) + b_n(s)) plus an
eps^(N+1) remainder, with a_n in the kernel and b_n in the range of L(s).
The coefficients follow the recursion

    b_0 = 0
    a_n(s) = T(s,0) a_n(0) + int_0^s T(s,s') Pdot(s') b_n(s') ds'
    b_{n+1}(s) = L(s)^[-1] ( Pdot(s) a_n(s) + Q(s) db_n/ds )

where T is parallel transport along the kernel projections.  The Duhamel
integral is evaluated by Clenshaw-Curtis quadrature on the collocation
grid, with T(s,s') factored as T(s,0) T(0,s') so that one transport solve
serves every pair of nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SmoothnessLoss
from .generator_path import GeneratorPath
from .propagator import evolve, evolve_forced
from .transport import ProjectionPath, transport_at_nodes


@dataclass
class Expansion:
    """Coefficient paths of the slow-manifold expansion.

    a has shape (N+1, m+1, d); b has shape (N+2, m+1, d) and carries one
    extra order because the remainder formula consumes b_{N+1}.
    """

    order: int
    path: GeneratorPath
    a: np.ndarray
    b: np.ndarray
    a_init: np.ndarray
    transports: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.path.grid

    def evaluate(self, eps: float, s: float | np.ndarray) -> np.ndarray:
        """Truncated sum over orders 0..N without the remainder term."""
        coeff = self.a + self.b[:-1]
        total = np.zeros_like(coeff[0])
        for n in range(self.order, -1, -1):
            total = coeff[n] + eps * total
        return self.grid.interpolate(total, s)

    def kernel_part(self, s: float | np.ndarray, eps: float) -> np.ndarray:
        total = np.zeros_like(self.a[0])
        for n in range(self.order, -1, -1):
            total = self.a[n] + eps * total
        return self.grid.interpolate(total, s)


@dataclass
class DualSection:
    """Dual-transported kernel form phi(s) with <phi(s), b> = 0 on ran L(s)."""

    grid: object
    phi_values: np.ndarray

    def phi(self, s: float) -> np.ndarray:
        return self.grid.interpolate(self.phi_values, s)


def expand(path: GeneratorPath, order: int, a_init: list[np.ndarray],
           rtol: float = 1e-11, atol: float = 1e-13,
           residual_tol: float = 1e-8,
           tail_tol: float = 1e-7) -> Expansion:
    """Compute the expansion coefficients through the given order.

    ``a_init[n]`` is the kernel component of the order-n initial datum;
    missing entries default to zero.  The path must be resolved by its
    grid; a non-decaying Chebyshev tail raises SmoothnessLoss.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    if order > 4:
        raise ValueError("orders above 4 amplify differentiation noise; "
                         "split the run or raise the grid size")
    path.check_resolution(tail_tol)
    grid = path.grid
    d = path.dim
    m1 = grid.size
    splits = path.splits()

    P = np.array([sp.P for sp in splits])
    Q = np.array([sp.Q for sp in splits])
    Linv = np.array([sp.L_inv for sp in splits])
    Pdot = grid.differentiate(P)
    proj_path = ProjectionPath(grid=grid, P_values=P, Pdot_values=Pdot)

    T = transport_at_nodes(proj_path, rtol=rtol, atol=atol)
    Tinv = np.linalg.inv(T)

    a_init_arr = np.zeros((order + 1, d), dtype=complex)
    for n, vec0 in enumerate(a_init[:order + 1]):
        v = np.asarray(vec0, dtype=complex)
        leak = np.linalg.norm(Q[0] @ v)
        if leak > 1e-8 * max(np.linalg.norm(v), 1e-300):
            raise ValueError(f"a_init[{n}] is not in ker L(0): |Q a| = {leak:.2e}")
        a_init_arr[n] = v

    a = np.zeros((order + 1, m1, d), dtype=complex)
    b = np.zeros((order + 2, m1, d), dtype=complex)

    for n in range(order + 1):
        # a_n from transport plus the Duhamel integral of Pdot b_n
        integrand = np.einsum("kij,kj->ki", Tinv, np.einsum("kij,kj->ki", Pdot, b[n]))
        cumulative = grid.cumulative_integral(integrand)
        a[n] = np.einsum("kij,kj->ki", T, a_init_arr[n][None, :] + cumulative)
        # b_{n+1} from the instantaneous inversion of the recursion
        bdot = grid.differentiate(b[n])
        rhs = (np.einsum("kij,kj->ki", Pdot, a[n])
               + np.einsum("kij,kj->ki", Q, bdot))
        b[n + 1] = np.einsum("kij,kj->ki", Linv, rhs)

    # diagnostics: recursion residual and bundle confinement
    L = path.L_values
    residual = 0.0
    confinement = 0.0
    scale = max(float(np.abs(a).max()), float(np.abs(b).max()), 1e-300)
    for n in range(order + 1):
        bdot = grid.differentiate(b[n])
        res = (np.einsum("kij,kj->ki", Pdot, a[n])
               + np.einsum("kij,kj->ki", Q, bdot)
               - np.einsum("kij,kj->ki", L, b[n + 1]))
        residual = max(residual, float(np.abs(res).max()))
        confinement = max(
            confinement,
            float(np.abs(np.einsum("kij,kj->ki", Q, a[n]) - 0.0).max()),
            float(np.abs(np.einsum("kij,kj->ki", P, b[n + 1])).max()))
    residual /= scale
    confinement /= scale
    if residual > residual_tol:
        raise SmoothnessLoss(
            f"recursion residual {residual:.2e} exceeds {residual_tol:.0e}; "
            "the grid does not resolve the coefficient derivatives")

    return Expansion(order=order, path=path, a=a, b=b, a_init=a_init_arr,
                     transports=T,
                     diagnostics={"recursion_residual": residual,
                                  "confinement": confinement,
                                  "transport_sup": float(
                                      max(np.linalg.norm(t, 2) for t in T))})


def evaluate(exp: Expansion, eps: float, s: float | np.ndarray) -> np.ndarray:
    return exp.evaluate(eps, s)


@dataclass
class RemainderReport:
    values: np.ndarray            # r_N at the grid nodes
    sup_norm: float
    empirical_constant: float     # sup ||r_N|| / (sum ||a_n(0)|| + ||r_N(0)||)


def remainder(path: GeneratorPath, exp: Expansion, eps: float,
              r_init: np.ndarray | None = None,
              rtol: float = 1e-10, atol: float = 1e-12) -> RemainderReport:
    """Remainder r_N(eps, s) via the Duhamel formula.

    r_N(eps, s) = U(s,0) r_N(eps,0) + b_{N+1}(s) - U(s,0) b_{N+1}(0)
                  - int_0^s U(s,s') db_{N+1}/ds (s') ds'.

    By default the initial remainder vanishes, i.e. the initial data sit
    exactly on the truncated slow manifold.
    """
    grid = path.grid
    d = path.dim
    b_top = exp.b[-1]
    b_top_dot = grid.differentiate(b_top)

    if r_init is None:
        r_init = np.zeros(d, dtype=complex)
    r_init = np.asarray(r_init, dtype=complex)

    homogeneous = evolve(path, eps, r_init - b_top[0],
                         out_grid=grid.nodes, rtol=rtol, atol=atol).x_values

    def source(s):
        return -grid.interpolate(b_top_dot, s)

    forced = evolve_forced(path, eps, np.zeros(d, dtype=complex), source,
                           out_grid=grid.nodes, rtol=rtol, atol=atol).x_values

    values = homogeneous + b_top + forced
    sup = max(path.norm_of(v) for v in values)
    denom = (sum(np.linalg.norm(v) for v in exp.a_init)
             + np.linalg.norm(r_init) + 1e-300)
    return RemainderReport(values=values, sup_norm=float(sup),
                           empirical_constant=float(sup / denom))


@dataclass
class DecouplingReport:
    sup_error: float
    errors: np.ndarray
    s_nodes: np.ndarray


def decoupling_error(path: GeneratorPath, eps: float, x0: np.ndarray,
                     rtol: float = 1e-10, atol: float = 1e-12,
                     transport_rtol: float = 1e-11,
                     transport_atol: float = 1e-13) -> DecouplingReport:
    """sup_s || P(s) x(s) - T(s,0) P(0) x0 || in the declared norm."""
    grid = path.grid
    proj = path.projection_path()
    T = transport_at_nodes(proj, rtol=transport_rtol, atol=transport_atol)
    traj = evolve(path, eps, x0, out_grid=grid.nodes, rtol=rtol, atol=atol)
    p0x0 = proj.P_values[0] @ np.asarray(x0, dtype=complex)
    errors = np.empty(grid.size)
    for k in range(grid.size):
        diff = proj.P_values[k] @ traj.x_values[k] - T[k] @ p0x0
        errors[k] = path.norm_of(diff)
    return DecouplingReport(sup_error=float(errors.max()), errors=errors,
                            s_nodes=grid.nodes)


@dataclass
class InvariantReport:
    defects: np.ndarray
    s_nodes: np.ndarray
    sup_defect: float
    empirical_constant: float     # sup |defect| / (eps ||phi|| ||x0||)
    dual_section: DualSection


def adiabatic_invariant_defect(path: GeneratorPath, phi0: np.ndarray,
                               eps: float, x0: np.ndarray,
                               rtol: float = 1e-10, atol: float = 1e-12,
                               transport_rtol: float = 1e-11,
                               transport_atol: float = 1e-13) -> InvariantReport:
    """Drift of <phi(s), x(s)> for a dual-transported kernel form phi.

    phi0 must annihilate ran L(0); the section phi(s) = T*(s,0) phi0 then
    lies in ker L*(s) with derivative in ran L*(s), so the pairing drifts
    by at most C eps.
    """
    grid = path.grid
    proj = path.projection_path()
    phi0 = np.asarray(phi0, dtype=complex)
    leak = np.linalg.norm(proj.Q(0.0).conj().T @ phi0)
    if leak > 1e-8 * max(np.linalg.norm(phi0), 1e-300):
        raise ValueError(f"phi0 does not annihilate ran L(0): |Q* phi| = {leak:.2e}")

    T = transport_at_nodes(proj, rtol=transport_rtol, atol=transport_atol)
    # T*(s,0) = (T(0,s))^* and T(0,s) = T(s,0)^'-1 by the group property
    phi_values = np.einsum("kij,j->ki", np.linalg.inv(T).conj().transpose(0, 2, 1),
                           phi0)
    traj = evolve(path, eps, x0, out_grid=grid.nodes, rtol=rtol, atol=atol)
    pairing = np.einsum("ki,ki->k", phi_values.conj(), traj.x_values)
    defects = pairing - pairing[0]
    sup = float(np.abs(defects).max())
    phi_sup = max(np.linalg.norm(p) for p in phi_values)
    denom = eps * phi_sup * max(np.linalg.norm(np.asarray(x0)), 1e-300)
    return InvariantReport(defects=defects, s_nodes=grid.nodes, sup_defect=sup,
                           empirical_constant=float(sup / denom),
                           dual_section=DualSection(grid=grid, phi_values=phi_values))
