"""Model zoo: Schrodinger, adjoint-action, Lindblad, Bloch and Markov paths.

Every constructor returns a GeneratorPath tagged with its model class and
declared norm, plus enough side information (eigenprojections, rate
tables, stationary states) for the experiments to verify the structural
claims.  Schedules reparametrize the physical control parameter:
L(s) = L_model(theta(s)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from scipy.fft import dct
from scipy.linalg import expm

from .cheb import ChebGrid
from .errors import (DegenerateHamiltonian, NoDetailedBalance, NoGap,
                     Reducible)
from .generator_path import GeneratorPath
from .operator_core import (match_by_overlap, spectral_split, super_left,
                            super_right, unvec, vec)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)


# -- schedules ----------------------------------------------------------------

# exp(-1/(u(1-u))) underflows to exactly zero here; clamping is lossless
_BUMP_CLAMP = 1.4449e-3
_BUMP_DEGREE = 256


def _bump(u: np.ndarray | float) -> np.ndarray | float:
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = (u > _BUMP_CLAMP) & (u < 1.0 - _BUMP_CLAMP)
    ui = u[inside]
    out[inside] = np.exp(-1.0 / (ui * (1.0 - ui)))
    return out


@lru_cache(maxsize=1)
def _bump_primitive_coefficients() -> tuple[np.ndarray, float]:
    """Chebyshev coefficients of the cumulative bump integral on [0, 1]."""
    m = _BUMP_DEGREE
    j = np.arange(m + 1)
    x = np.cos(np.pi * j / m)
    s = 0.5 * (1.0 - x)
    c = dct(_bump(s), type=1) / m
    c[0] /= 2.0
    c[-1] /= 2.0
    ci = npcheb.chebint(c)
    offset = npcheb.chebval(1.0, ci)
    total = -0.5 * (npcheb.chebval(-1.0, ci) - offset)
    return ci, float(total)


@dataclass(frozen=True)
class Schedule:
    """Monotone smooth reparametrization theta: [0,1] -> [0,1]."""

    kind: str = "linear"

    @property
    def flat_endpoints(self) -> bool:
        return self.kind == "bump"

    def theta(self, s: float | np.ndarray) -> float | np.ndarray:
        if self.kind == "linear":
            return s
        scalar = np.ndim(s) == 0
        sa = np.atleast_1d(np.asarray(s, dtype=float))
        ci, total = _bump_primitive_coefficients()
        offset = npcheb.chebval(1.0, ci)
        out = -0.5 * (npcheb.chebval(1.0 - 2.0 * sa, ci) - offset) / total
        out = np.clip(out, 0.0, 1.0)
        out[sa <= _BUMP_CLAMP] = 0.0
        out[sa >= 1.0 - _BUMP_CLAMP] = 1.0
        return float(out[0]) if scalar else out

    def theta_dot(self, s: float | np.ndarray) -> float | np.ndarray:
        if self.kind == "linear":
            return np.ones_like(np.asarray(s, dtype=float)) if np.ndim(s) else 1.0
        _, total = _bump_primitive_coefficients()
        out = _bump(s) / total
        return float(out) if np.ndim(s) == 0 else out


def schedule_from_config(cfg: dict | None) -> Schedule:
    if not cfg:
        return Schedule("linear")
    kind = cfg.get("kind", "linear")
    if cfg.get("flat_endpoints") and kind == "linear":
        kind = "bump"
    if kind not in ("linear", "bump"):
        raise ValueError(f"unknown schedule kind {kind!r}")
    return Schedule(kind)


# -- spec dataclasses ---------------------------------------------------------

@dataclass
class HamiltonianPath:
    """Slowly varying self-adjoint family with a distinguished eigenvalue."""

    d: int
    H_of: Callable[[float], np.ndarray]
    Hdot_of: Callable[[float], np.ndarray] | None = None
    e_index: int = 0
    schedule: Schedule = field(default_factory=Schedule)

    def H(self, s: float) -> np.ndarray:
        return np.asarray(self.H_of(self.schedule.theta(s)), dtype=complex)

    def Hdot(self, s: float) -> np.ndarray | None:
        if self.Hdot_of is None:
            return None
        u = self.schedule.theta(s)
        return np.asarray(self.Hdot_of(u), dtype=complex) * self.schedule.theta_dot(s)


@dataclass
class LindbladSpec:
    """GKS data H(u), Gamma_alpha(u); dephasing means Gamma_alpha = f_alpha(H)."""

    d: int
    H_of: Callable[[float], np.ndarray]
    jump_ops_of: Callable[[float], list[np.ndarray]]
    Hdot_of: Callable[[float], np.ndarray] | None = None
    jump_ops_dot_of: Callable[[float], list[np.ndarray]] | None = None
    dephasing: bool = False
    schedule: Schedule = field(default_factory=Schedule)

    def H(self, s: float) -> np.ndarray:
        return np.asarray(self.H_of(self.schedule.theta(s)), dtype=complex)

    def jump_ops(self, s: float) -> list[np.ndarray]:
        return [np.asarray(g, dtype=complex)
                for g in self.jump_ops_of(self.schedule.theta(s))]


@dataclass
class BlochSpec:
    """Driving field b(u) (energy units) and dimensionless dephasing gamma."""

    b_of: Callable[[float], np.ndarray]
    bdot_of: Callable[[float], np.ndarray]
    gamma: float = 0.0
    schedule: Schedule = field(default_factory=Schedule)

    def b(self, s: float) -> np.ndarray:
        return np.asarray(self.b_of(self.schedule.theta(s)), dtype=float)

    def bdot(self, s: float) -> np.ndarray:
        u = self.schedule.theta(s)
        return (np.asarray(self.bdot_of(u), dtype=float)
                * self.schedule.theta_dot(s))


@dataclass
class MarkovSpec:
    """Rate family, either raw rates or detailed-balance data (M, pi)."""

    d: int
    rates_of: Callable[[float], np.ndarray] | None = None
    M_of: Callable[[float], np.ndarray] | None = None
    pi_of: Callable[[float], np.ndarray] | None = None
    schedule: Schedule = field(default_factory=Schedule)

    def __post_init__(self):
        if self.rates_of is None and (self.M_of is None or self.pi_of is None):
            raise ValueError("need either rates_of or (M_of, pi_of)")

    @property
    def detailed_balance_form(self) -> bool:
        return self.M_of is not None


# -- eigenstructure helpers ---------------------------------------------------

def eigh_tables(H_s: Callable[[float], np.ndarray], grid: ChebGrid,
                gap_tol: float = 1e-8):
    """Eigenvalues and eigenprojections along the grid, continued by overlap.

    Returns (evals, projs) with shapes (m+1, d) and (m+1, d, d, d); level
    ordering is ascending at s = 0 and continued by maximal eigenvector
    overlap afterwards (a bijection at every step).
    """
    m1 = grid.size
    H0 = H_s(grid.nodes[0])
    d = H0.shape[0]
    evals = np.empty((m1, d))
    projs = np.empty((m1, d, d, d), dtype=complex)
    prev_vecs = None
    for k, s in enumerate(grid.nodes):
        w, v = np.linalg.eigh(H_s(s))
        if prev_vecs is not None:
            perm = match_by_overlap(prev_vecs, v)
            w, v = w[perm], v[:, perm]
        evals[k] = w
        for i in range(d):
            projs[k, i] = np.outer(v[:, i], v[:, i].conj())
        prev_vecs = v
    gaps = np.abs(evals[:, :, None] - evals[:, None, :])
    gaps[:, np.arange(d), np.arange(d)] = np.inf
    if gaps.min() < gap_tol:
        raise DegenerateHamiltonian(
            f"eigenvalue spacing {gaps.min():.2e} below {gap_tol:.0e}")
    return evals, projs


def eigenvector_section(H_s: Callable[[float], np.ndarray], grid: ChebGrid,
                        index: int) -> np.ndarray:
    """Continued, phase-aligned eigenvector path for one level."""
    vecs = []
    prev = None
    for s in grid.nodes:
        w, v = np.linalg.eigh(H_s(s))
        if prev is None:
            psi = v[:, index]
        else:
            overlaps = np.abs(prev.conj() @ v)
            psi = v[:, int(np.argmax(overlaps))]
            phase = prev.conj() @ psi
            psi = psi * (phase.conj() / abs(phase))
        vecs.append(psi)
        prev = psi
    return np.array(vecs)


# -- Schrodinger and adjoint generators ---------------------------------------

def schrodinger_generator(h: HamiltonianPath, m: int = 96,
                          gap_min: float = 1e-6) -> GeneratorPath:
    """L(s) = -i (H(s) - e(s)) with e(s) the tracked simple eigenvalue."""
    grid = ChebGrid(m)
    evals, projs = eigh_tables(h.H, grid)
    idx = h.e_index
    gap = np.inf
    for k in range(grid.size):
        others = np.delete(evals[k], idx)
        gap = min(gap, float(np.abs(others - evals[k, idx]).min()))
    if gap < gap_min:
        raise NoGap(f"distinguished eigenvalue gap {gap:.3e} below {gap_min:.0e}")

    def L_of(s):
        H = h.H(s)
        w = np.linalg.eigvalsh(H)
        return -1j * (H - w[idx] * np.eye(h.d))

    Ldot_of = None
    if h.Hdot_of is not None:
        def Ldot_of(s):
            H = h.H(s)
            Hdot = h.Hdot(s)
            w, v = np.linalg.eigh(H)
            edot = np.real(v[:, idx].conj() @ Hdot @ v[:, idx])
            return -1j * (Hdot - edot * np.eye(h.d))

    path = GeneratorPath.from_callable(L_of, m, Ldot_of=Ldot_of,
                                       model_class="hamiltonian", norm="l2",
                                       name="schrodinger")
    path.meta.update({"eigenvalues": evals, "projections": projs,
                      "e_index": idx, "hamiltonian": h})
    return path


def adjoint_generator(h: HamiltonianPath, m: int = 96) -> GeneratorPath:
    """Superoperator path of rho -> -i [H(s), rho] on column-stacked matrices."""

    def L_of(s):
        H = h.H(s)
        return -1j * (super_left(H) - super_right(H))

    Ldot_of = None
    if h.Hdot_of is not None:
        def Ldot_of(s):
            Hd = h.Hdot(s)
            return -1j * (super_left(Hd) - super_right(Hd))

    path = GeneratorPath.from_callable(L_of, m, Ldot_of=Ldot_of,
                                       model_class="adjoint", norm="trace",
                                       name="adjoint")
    path.meta["hamiltonian"] = h
    return path


# -- Lindblad -----------------------------------------------------------------

def lindblad_matrix(H: np.ndarray, jump_ops: list[np.ndarray]) -> np.ndarray:
    """GKS generator -i[H, .] + sum_a (G . G* - (1/2){G*G, .}) as a matrix."""
    d = H.shape[0]
    L = -1j * (super_left(H) - super_right(H))
    for g in jump_ops:
        gg = g.conj().T @ g
        L += (np.kron(g.conj(), g)
              - 0.5 * super_left(gg) - 0.5 * super_right(gg))
    return L


def lindblad_matrix_dot(H: np.ndarray, Hdot: np.ndarray,
                        jump_ops: list[np.ndarray],
                        jump_ops_dot: list[np.ndarray]) -> np.ndarray:
    Ld = -1j * (super_left(Hdot) - super_right(Hdot))
    for g, gd in zip(jump_ops, jump_ops_dot):
        ggd = gd.conj().T @ g + g.conj().T @ gd
        Ld += (np.kron(gd.conj(), g) + np.kron(g.conj(), gd)
               - 0.5 * super_left(ggd) - 0.5 * super_right(ggd))
    return Ld


def lindblad_superoperator(spec: LindbladSpec, s: float) -> np.ndarray:
    return lindblad_matrix(spec.H(s), spec.jump_ops(s))


def lindblad_generator(spec: LindbladSpec, m: int = 96) -> GeneratorPath:
    def L_of(s):
        return lindblad_superoperator(spec, s)

    Ldot_of = None
    if spec.Hdot_of is not None and spec.jump_ops_dot_of is not None:
        def Ldot_of(s):
            u = spec.schedule.theta(s)
            du = spec.schedule.theta_dot(s)
            return du * lindblad_matrix_dot(
                np.asarray(spec.H_of(u), dtype=complex),
                np.asarray(spec.Hdot_of(u), dtype=complex),
                [np.asarray(g, dtype=complex) for g in spec.jump_ops_of(u)],
                [np.asarray(g, dtype=complex) for g in spec.jump_ops_dot_of(u)])

    path = GeneratorPath.from_callable(L_of, m, Ldot_of=Ldot_of,
                                       model_class="lindblad", norm="trace",
                                       name="lindblad")
    path.meta["lindblad"] = spec
    return path


@dataclass
class DephasingEigenstructure:
    evals: np.ndarray               # Hamiltonian eigenvalues
    projs: np.ndarray               # eigenprojections P_i
    lambdas: np.ndarray             # d x d table, L E_ij = lambda_ij E_ij


def dephasing_eigenstructure(spec: LindbladSpec, s: float,
                             gap_tol: float = 1e-8) -> DephasingEigenstructure:
    """Eigenvalue table lambda_ij of a dephasing Lindbladian at fixed s.

    lambda_ij = -i(e_i - e_j) + sum_a [ f_a(e_i) conj(f_a(e_j))
                 - (|f_a(e_i)|^2 + |f_a(e_j)|^2) / 2 ].
    """
    if not spec.dephasing:
        raise ValueError("spec is not flagged as dephasing")
    H = spec.H(s)
    w, v = np.linalg.eigh(H)
    d = len(w)
    spacing = np.abs(w[:, None] - w[None, :])
    np.fill_diagonal(spacing, np.inf)
    if spacing.min() < gap_tol:
        raise DegenerateHamiltonian(
            f"eigenvalue spacing {spacing.min():.2e} at s={s}")
    projs = np.array([np.outer(v[:, i], v[:, i].conj()) for i in range(d)])
    lambdas = (-1j) * (w[:, None] - w[None, :]) * np.ones((d, d))
    for g in spec.jump_ops(s):
        gd = v.conj().T @ g @ v
        off = np.abs(gd - np.diag(np.diag(gd))).max()
        if off > 1e-10 * max(np.abs(gd).max(), 1e-300):
            raise ValueError("jump operator is not a function of H "
                             f"(off-diagonal weight {off:.2e})")
        f = np.diag(gd)
        lambdas = lambdas + (f[:, None] * f[None, :].conj()
                             - 0.5 * (np.abs(f[:, None]) ** 2
                                      + np.abs(f[None, :]) ** 2))
    return DephasingEigenstructure(evals=w, projs=projs, lambdas=lambdas)


@dataclass
class DephasingTables:
    """Grid-sampled eigenstructure of a dephasing family."""

    grid: ChebGrid
    evals: np.ndarray               # (m+1, d)
    projs: np.ndarray               # (m+1, d, d, d)
    projs_dot: np.ndarray
    lambdas: np.ndarray             # (m+1, d, d)


def dephasing_tables(spec: LindbladSpec, grid: ChebGrid) -> DephasingTables:
    evals, projs = eigh_tables(lambda s: spec.H(s), grid)
    m1, d = evals.shape
    lambdas = np.empty((m1, d, d), dtype=complex)
    for k, s in enumerate(grid.nodes):
        es = dephasing_eigenstructure(spec, s)
        # align the pointwise ascending order with the continued order
        perm = match_by_overlap(projs[k].reshape(d, -1).T,
                                es.projs.reshape(d, -1).T)
        lambdas[k] = es.lambdas[np.ix_(perm, perm)]
    projs_dot = grid.differentiate(projs)
    return DephasingTables(grid=grid, evals=evals, projs=projs,
                           projs_dot=projs_dot, lambdas=lambdas)


@dataclass
class DephasingKernelReport:
    kernel_dim: int
    commutant_dim: int
    subspace_distance: float

    @property
    def kernel_equals_commutant(self) -> bool:
        return (self.kernel_dim == self.commutant_dim
                and self.subspace_distance <= 1e-9)


def check_dephasing_kernel(spec: LindbladSpec, s: float) -> DephasingKernelReport:
    """Compare ker L(s) with the commutant of H(s) inside the matrices."""
    L = lindblad_superoperator(spec, s)
    split = spectral_split(L)
    # orthonormal kernel basis from the projection
    u, sv, _ = np.linalg.svd(split.P)
    kernel_basis = u[:, :split.kernel_dim]
    w, v = np.linalg.eigh(spec.H(s))
    d = len(w)
    comm = np.array([vec(np.outer(v[:, i], v[:, i].conj())) for i in range(d)]).T
    comm_basis = np.linalg.qr(comm)[0]
    pk = kernel_basis @ kernel_basis.conj().T
    pc = comm_basis @ comm_basis.conj().T
    return DephasingKernelReport(kernel_dim=split.kernel_dim,
                                 commutant_dim=d,
                                 subspace_distance=float(np.linalg.norm(pk - pc, 2)))


def dephasing_qubit(b_of: Callable[[float], np.ndarray],
                    bdot_of: Callable[[float], np.ndarray],
                    gamma: float,
                    schedule: Schedule | None = None) -> LindbladSpec:
    """Qubit dephasing family 2H = b . sigma with a single channel f(H).

    The channel sqrt(2 gamma / |b|) H reproduces the double-commutator
    form (gamma/|b|) [[H, rho], H].
    """
    schedule = schedule or Schedule()

    def H_of(u):
        b = np.asarray(b_of(u), dtype=float)
        return 0.5 * (b[0] * SIGMA_X + b[1] * SIGMA_Y + b[2] * SIGMA_Z)

    def Hdot_of(u):
        bd = np.asarray(bdot_of(u), dtype=float)
        return 0.5 * (bd[0] * SIGMA_X + bd[1] * SIGMA_Y + bd[2] * SIGMA_Z)

    def jump_ops_of(u):
        b = np.asarray(b_of(u), dtype=float)
        bn = np.linalg.norm(b)
        if bn <= 0:
            raise NoGap("qubit field |b| vanishes")
        return [np.sqrt(2.0 * gamma / bn) * H_of(u)] if gamma > 0 else []

    def jump_ops_dot_of(u):
        b = np.asarray(b_of(u), dtype=float)
        bd = np.asarray(bdot_of(u), dtype=float)
        bn = np.linalg.norm(b)
        if gamma <= 0:
            return []
        c = np.sqrt(2.0 * gamma / bn)
        cdot = -0.5 * c * (b @ bd) / bn ** 2
        return [cdot * H_of(u) + c * Hdot_of(u)]

    return LindbladSpec(d=2, H_of=H_of, Hdot_of=Hdot_of,
                        jump_ops_of=jump_ops_of,
                        jump_ops_dot_of=jump_ops_dot_of,
                        dephasing=True, schedule=schedule)


# -- Bloch --------------------------------------------------------------------

def cross_matrix(b: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -b[2], b[1]],
                     [b[2], 0.0, -b[0]],
                     [-b[1], b[0], 0.0]])


def bloch_generator(spec: BlochSpec, s: float) -> np.ndarray:
    """Real 3x3 generator of dn/ds = b x n + gamma bhat x (b x n)."""
    b = spec.b(s)
    bn = np.linalg.norm(b)
    if bn <= 0:
        raise NoGap("Bloch field vanishes")
    k = cross_matrix(b)
    return k + spec.gamma * cross_matrix(b / bn) @ k


def bloch_generator_path(spec: BlochSpec, m: int = 96) -> GeneratorPath:
    def L_of(s):
        return bloch_generator(spec, s).astype(complex)

    path = GeneratorPath.from_callable(L_of, m, model_class="generic",
                                       norm="l2", name="bloch")
    path.meta["bloch"] = spec
    return path


def bloch_map(rho: np.ndarray) -> np.ndarray:
    """n_k = tr(rho sigma_k) for a Hermitian trace-one matrix."""
    return np.array([np.trace(rho @ sig).real for sig in PAULI])


def bloch_map_inverse(n: np.ndarray) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    return 0.5 * (np.eye(2, dtype=complex)
                  + n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z)


def bloch_spec_of_lindblad(b_of, bdot_of, gamma, schedule=None):
    """Paired (LindbladSpec, BlochSpec) for the same physical qubit."""
    schedule = schedule or Schedule()
    lind = dephasing_qubit(b_of, bdot_of, gamma, schedule)
    bloch = BlochSpec(b_of=b_of, bdot_of=bdot_of, gamma=gamma, schedule=schedule)
    return lind, bloch


# -- Markov -------------------------------------------------------------------

def _rates_from_detailed_balance(M: np.ndarray, pi: np.ndarray) -> np.ndarray:
    d = len(pi)
    if np.any(pi <= 0):
        raise Reducible("stationary distribution must be strictly positive")
    if np.abs(M - M.T).max() > 1e-12 * max(np.abs(M).max(), 1e-300):
        raise NoDetailedBalance("M is not symmetric")
    L = M / pi[None, :]
    np.fill_diagonal(L, 0.0)
    np.fill_diagonal(L, -L.sum(axis=0))
    return L


def markov_generator(spec: MarkovSpec, s: float) -> tuple[np.ndarray, np.ndarray]:
    """Generator matrix and stationary distribution at parameter s."""
    u = spec.schedule.theta(s)
    if spec.detailed_balance_form:
        M = np.asarray(spec.M_of(u), dtype=float)
        pi = np.asarray(spec.pi_of(u), dtype=float)
        pi = pi / pi.sum()
        L = _rates_from_detailed_balance(M, pi)
        return L, pi
    L = np.asarray(spec.rates_of(u), dtype=float)
    off = L - np.diag(np.diag(L))
    if off.min() < -1e-12:
        raise ValueError("off-diagonal rates must be nonnegative")
    if np.abs(L.sum(axis=0)).max() > 1e-10 * max(np.abs(L).max(), 1.0):
        raise ValueError("columns of a Markov generator must sum to zero")
    split = spectral_split(L, gap_min=1e-12)
    if split.kernel_dim != 1:
        raise Reducible(f"kernel dimension {split.kernel_dim} != 1")
    pi = split.P[:, 0].real
    pi = pi / pi.sum()
    if np.any(pi <= 1e-12):
        raise Reducible("stationary distribution has non-positive entries")
    return L, pi


def markov_generator_path(spec: MarkovSpec, m: int = 96) -> GeneratorPath:
    def L_of(s):
        return markov_generator(spec, s)[0].astype(complex)

    path = GeneratorPath.from_callable(L_of, m, model_class="markov",
                                       norm="l1", name="markov")
    path.meta["markov"] = spec
    return path


def probability_current(L: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Link currents J_ij(p) = L_ij p_j - L_ji p_i."""
    return L * p[None, :] - (L * p[None, :]).T


def detailed_balance_matrix(L: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """M_ij = L_ij pi_j; symmetric exactly when detailed balance holds."""
    return L * pi[None, :]


@dataclass
class MarkovTables:
    grid: ChebGrid
    L: np.ndarray        # (m+1, d, d)
    M: np.ndarray
    pi: np.ndarray       # (m+1, d)
    pi_dot: np.ndarray


def markov_tables(spec: MarkovSpec, grid: ChebGrid) -> MarkovTables:
    m1 = grid.size
    d = spec.d
    L = np.empty((m1, d, d))
    M = np.empty((m1, d, d))
    pi = np.empty((m1, d))
    for k, s in enumerate(grid.nodes):
        Lk, pik = markov_generator(spec, s)
        L[k], pi[k] = Lk, pik
        M[k] = detailed_balance_matrix(Lk, pik)
    return MarkovTables(grid=grid, L=L, M=M, pi=pi,
                        pi_dot=grid.differentiate(pi))


# -- parametric families for the CLI ------------------------------------------

def rotating_field(b_mag: float, angle: float, power: float = 1.0):
    """Unit-speed-controllable field rotating in the x-z plane.

    bhat(u) = (sin(angle u^power), 0, cos(angle u^power)); power > 1 makes
    the angular speed vanish at u = 0, which removes the interference
    between endpoint mismatches in tunneling sweeps.
    """

    def b_of(u):
        phi = angle * u ** power
        return b_mag * np.array([np.sin(phi), 0.0, np.cos(phi)])

    def bdot_of(u):
        phi = angle * u ** power
        dphi = angle * power * u ** (power - 1.0) if power != 1.0 else angle
        return b_mag * dphi * np.array([np.cos(phi), 0.0, -np.sin(phi)])

    return b_of, bdot_of


def qubit_hamiltonian_path(b_mag: float, angle: float, power: float = 1.0,
                           schedule: Schedule | None = None) -> HamiltonianPath:
    b_of, bdot_of = rotating_field(b_mag, angle, power)

    def H_of(u):
        b = b_of(u)
        return 0.5 * (b[0] * SIGMA_X + b[1] * SIGMA_Y + b[2] * SIGMA_Z)

    def Hdot_of(u):
        bd = bdot_of(u)
        return 0.5 * (bd[0] * SIGMA_X + bd[1] * SIGMA_Y + bd[2] * SIGMA_Z)

    return HamiltonianPath(d=2, H_of=H_of, Hdot_of=Hdot_of, e_index=0,
                           schedule=schedule or Schedule())


def three_level_dephasing(phi_max: float = 0.9,
                          energies: tuple = (0.0, 1.0, 3.0),
                          f_values: tuple = (0.3, 0.9, 1.5),
                          schedule: Schedule | None = None) -> LindbladSpec:
    """Three-level dephasing family H(u) = V(u) E V(u)*, Gamma = f(H)."""
    schedule = schedule or Schedule()
    E = np.diag(np.asarray(energies, dtype=float)).astype(complex)
    F = np.diag(np.asarray(f_values, dtype=float)).astype(complex)
    # fixed rotation generator mixing all three levels
    G = np.array([[0.0, 1.0, 0.5j],
                  [1.0, 0.3, 1.0],
                  [-0.5j, 1.0, -0.2]], dtype=complex)
    G = (G + G.conj().T) / 2

    def V_of(u):
        return expm(-1j * phi_max * u * G)

    def H_of(u):
        V = V_of(u)
        return V @ E @ V.conj().T

    def Hdot_of(u):
        V = V_of(u)
        H = V @ E @ V.conj().T
        return -1j * phi_max * (G @ H - H @ G)

    def jump_ops_of(u):
        V = V_of(u)
        return [V @ F @ V.conj().T]

    def jump_ops_dot_of(u):
        V = V_of(u)
        Gm = V @ F @ V.conj().T
        return [-1j * phi_max * (G @ Gm - Gm @ G)]

    return LindbladSpec(d=3, H_of=H_of, Hdot_of=Hdot_of,
                        jump_ops_of=jump_ops_of,
                        jump_ops_dot_of=jump_ops_dot_of,
                        dephasing=True, schedule=schedule)


def markov_two_state(a_base: float = 1.0, a_amp: float = 0.5,
                     b_base: float = 2.0, b_amp: float = -0.8,
                     schedule: Schedule | None = None) -> MarkovSpec:
    """Two-state chain with rates a(u): 1 -> 2 and b(u): 2 -> 1."""

    def rates_of(u):
        a = a_base + a_amp * np.sin(np.pi * u)
        b = b_base + b_amp * u
        return np.array([[-a, b], [a, -b]])

    return MarkovSpec(d=2, rates_of=rates_of, schedule=schedule or Schedule())


def markov_pump_ring(m_base: tuple = (1.0, 1.2, 0.8),
                     m_amp: tuple = (0.5, 0.4, 0.3),
                     m_phase: tuple = (0.7, 0.0, 2.1),
                     pi_amp: tuple = (0.8, 0.5),
                     pi_phase: tuple = (0.0, 1.3),
                     pi_constant: bool = False,
                     schedule: Schedule | None = None) -> MarkovSpec:
    """Three-state detailed-balance ring with periodically driven (M, pi)."""

    links = [(0, 1), (1, 2), (2, 0)]

    def M_of(u):
        M = np.zeros((3, 3))
        for (i, j), base, amp, ph in zip(links, m_base, m_amp, m_phase):
            val = base + amp * np.sin(2 * np.pi * u + ph)
            M[i, j] = M[j, i] = val
        return M

    def pi_of(u):
        if pi_constant:
            q = np.zeros(3)
        else:
            q = np.array([pi_amp[0] * np.sin(2 * np.pi * u + pi_phase[0]),
                          pi_amp[1] * np.cos(2 * np.pi * u + pi_phase[1]),
                          0.0])
        w = np.exp(q)
        return w / w.sum()

    return MarkovSpec(d=3, M_of=M_of, pi_of=pi_of,
                      schedule=schedule or Schedule())


@dataclass
class ModelBundle:
    """Everything the CLI needs to run one experiment on one model."""

    kind: str
    params: dict
    schedule: Schedule
    generator: GeneratorPath
    hamiltonian: HamiltonianPath | None = None
    lindblad: LindbladSpec | None = None
    bloch: BlochSpec | None = None
    markov: MarkovSpec | None = None


def build_model(model_cfg: dict, schedule_cfg: dict | None = None,
                grid_size: int = 96) -> ModelBundle:
    """Instantiate a named model family from a JSON-style configuration."""
    cfg = dict(model_cfg)
    kind = cfg.pop("kind")
    schedule = schedule_from_config(schedule_cfg)

    if kind == "qubit_unitary":
        h = qubit_hamiltonian_path(cfg.get("b_mag", 1.0),
                                   cfg.get("angle", np.pi / 2),
                                   cfg.get("power", 2.0), schedule)
        gen = schrodinger_generator(h, grid_size)
        return ModelBundle(kind=kind, params=cfg, schedule=schedule,
                           generator=gen, hamiltonian=h)
    if kind == "qubit_dephasing":
        b_of, bdot_of = rotating_field(cfg.get("b_mag", 1.0),
                                       cfg.get("angle", np.pi / 2),
                                       cfg.get("power", 1.0))
        lind, bloch = bloch_spec_of_lindblad(b_of, bdot_of,
                                             cfg.get("gamma", 0.5), schedule)
        gen = lindblad_generator(lind, grid_size)
        return ModelBundle(kind=kind, params=cfg, schedule=schedule,
                           generator=gen, lindblad=lind, bloch=bloch)
    if kind == "three_level_dephasing":
        lind = three_level_dephasing(cfg.get("phi_max", 0.9),
                                     tuple(cfg.get("energies", (0.0, 1.0, 3.0))),
                                     tuple(cfg.get("f_values", (0.3, 0.9, 1.5))),
                                     schedule)
        gen = lindblad_generator(lind, grid_size)
        return ModelBundle(kind=kind, params=cfg, schedule=schedule,
                           generator=gen, lindblad=lind)
    if kind == "bloch_cone":
        polar = cfg.get("polar", 0.9)
        turns = cfg.get("turns", 1.0)
        b_mag = cfg.get("b_mag", 1.0)

        def b_of(u):
            az = 2 * np.pi * turns * u
            return b_mag * np.array([np.sin(polar) * np.cos(az),
                                     np.sin(polar) * np.sin(az),
                                     np.cos(polar)])

        def bdot_of(u):
            az = 2 * np.pi * turns * u
            daz = 2 * np.pi * turns
            return b_mag * daz * np.array([-np.sin(polar) * np.sin(az),
                                           np.sin(polar) * np.cos(az),
                                           0.0])

        bloch = BlochSpec(b_of=b_of, bdot_of=bdot_of,
                          gamma=cfg.get("gamma", 1.0), schedule=schedule)
        gen = bloch_generator_path(bloch, grid_size)
        return ModelBundle(kind=kind, params=cfg, schedule=schedule,
                           generator=gen, bloch=bloch)
    if kind == "markov_two_state":
        spec = markov_two_state(cfg.get("a_base", 1.0), cfg.get("a_amp", 0.5),
                                cfg.get("b_base", 2.0), cfg.get("b_amp", -0.8),
                                schedule)
        gen = markov_generator_path(spec, grid_size)
        return ModelBundle(kind=kind, params=cfg, schedule=schedule,
                           generator=gen, markov=spec)
    if kind == "markov_pump_ring":
        spec = markov_pump_ring(tuple(cfg.get("m_base", (1.0, 1.2, 0.8))),
                                tuple(cfg.get("m_amp", (0.5, 0.4, 0.3))),
                                tuple(cfg.get("m_phase", (0.7, 0.0, 2.1))),
                                tuple(cfg.get("pi_amp", (0.8, 0.5))),
                                tuple(cfg.get("pi_phase", (0.0, 1.3))),
                                bool(cfg.get("pi_constant", False)),
                                schedule)
        gen = markov_generator_path(spec, grid_size)
        return ModelBundle(kind=kind, params=cfg, schedule=schedule,
                           generator=gen, markov=spec)
    raise ValueError(f"unknown model kind {kind!r}")


MODEL_KINDS = ("qubit_unitary", "qubit_dephasing", "three_level_dephasing",
               "bloch_cone", "markov_two_state", "markov_pump_ring")
