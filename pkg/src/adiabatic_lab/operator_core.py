"""Dense complex matrix layer.

Spectral splitting of a generator into kernel and range, the reduced
inverse on the range, and structural checks that a matrix generates a
contraction semigroup.

Conventions fixed repo-wide:

* Superoperators are (d*d, d*d) matrices acting on column-stacked d x d
  matrices; ``vec``/``unvec`` below implement the column-major stacking,
  so vec(A X B) = kron(B.T, A) vec(X).
* Norms: the operator 2-norm for generic statements, the trace norm for
  density matrices, l1 for Markov probability vectors.  Every experiment
  declares which one it uses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur, solve_sylvester
from scipy.optimize import linear_sum_assignment

from .errors import IllConditioned, NoGap, NonSemisimpleKernel

MODEL_CLASSES = ("hamiltonian", "adjoint", "lindblad", "markov", "generic")

DEFAULT_TOL_KERNEL = 1e-9
DEFAULT_GAP_MIN = 1e-6
DEFAULT_COND_MAX = 1e10


# -- stacking -----------------------------------------------------------------

def vec(mat: np.ndarray) -> np.ndarray:
    """Column-major stacking of a square matrix."""
    return np.asarray(mat).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if d is None:
        d = round(np.sqrt(v.size))
    return v.reshape(d, d, order="F")


def super_left(a: np.ndarray) -> np.ndarray:
    """Superoperator of X -> A X."""
    d = a.shape[0]
    return np.kron(np.eye(d), a)


def super_right(b: np.ndarray) -> np.ndarray:
    """Superoperator of X -> X B."""
    d = b.shape[0]
    return np.kron(b.T, np.eye(d))


def choi_matrix(s: np.ndarray) -> np.ndarray:
    """Choi matrix of a superoperator in the column-stacking convention."""
    dsq = s.shape[0]
    d = round(np.sqrt(dsq))
    t = s.reshape(d, d, d, d)           # t[a, alpha, b, beta] = S[alpha d + a, beta d + b]
    c = t.transpose(1, 3, 0, 2)         # C[(i,j),(k,l)] = S[k d + i, l d + j]
    return np.ascontiguousarray(c.reshape(dsq, dsq))


# -- norms --------------------------------------------------------------------

def norm_value(name: str, x: np.ndarray) -> float:
    """Declared norm of a state vector; 'trace' unstacks to a matrix first."""
    x = np.asarray(x)
    if name == "l2":
        return float(np.linalg.norm(x))
    if name == "l1":
        return float(np.abs(x).sum())
    if name == "trace":
        return float(np.linalg.svd(unvec(x), compute_uv=False).sum())
    raise ValueError(f"unknown norm {name!r}")


# -- spectral split -----------------------------------------------------------

@dataclass
class SpectralSplit:
    """Kernel/range decomposition of a gapped generator.

    P projects onto ker L along ran L (the Riesz projection of the zero
    cluster), Q = 1 - P, and L_inv inverts L on its range while vanishing
    on the kernel.
    """

    P: np.ndarray
    Q: np.ndarray
    L_inv: np.ndarray
    gap: float
    kernel_dim: int
    transversality: float
    cond: float
    semisimple_residual: float

    @property
    def dim(self) -> int:
        return self.P.shape[0]


def spectral_split(L: np.ndarray,
                   tol_kernel: float = DEFAULT_TOL_KERNEL,
                   gap_min: float = DEFAULT_GAP_MIN,
                   cond_max: float = DEFAULT_COND_MAX) -> SpectralSplit:
    """Split a generator into its zero cluster and the rest of the spectrum.

    Eigenvalues with |lambda| < tol_kernel * ||L|| form the kernel cluster.
    The projection is computed from an ordered Schur form: the cluster is
    rotated into the leading block and decoupled by a Sylvester solve.
    This realizes the Riesz projection of the cluster exactly (up to
    rounding) for semisimple spectra, without inverting an eigenvector
    matrix.

    Raises NonSemisimpleKernel when the cluster carries a nilpotent part,
    NoGap when the remaining spectrum comes closer than gap_min, and
    IllConditioned when the kernel/range splitting is numerically wild.
    """
    L = np.asarray(L, dtype=complex)
    d = L.shape[0]
    if L.shape != (d, d):
        raise ValueError("generator must be square")
    if not np.all(np.isfinite(L)):
        raise ValueError("generator has non-finite entries")
    scale = max(np.linalg.norm(L, 2), 1e-300)
    cut = tol_kernel * scale

    T, U, k = schur(L, output="complex", sort=lambda lam: bool(abs(lam) < cut))

    if k == 0:
        gap = float(np.abs(np.diag(T)).min())
        if gap < gap_min:
            raise NoGap(f"no kernel cluster but spectrum reaches |lambda|={gap:.3e}")
        P = np.zeros((d, d), dtype=complex)
        return SpectralSplit(P=P, Q=np.eye(d, dtype=complex),
                             L_inv=np.linalg.inv(L), gap=gap, kernel_dim=0,
                             transversality=1.0, cond=1.0, semisimple_residual=0.0)

    T11, T12, T22 = T[:k, :k], T[:k, k:], T[k:, k:]
    nil = float(np.linalg.norm(T11, 2))
    if nil > cut:
        raise NonSemisimpleKernel(
            f"zero cluster has nilpotent part of norm {nil:.3e} (||L||={scale:.3e})")

    if k == d:
        # L is (numerically) zero: kernel is everything.
        return SpectralSplit(P=np.eye(d, dtype=complex),
                             Q=np.zeros((d, d), dtype=complex),
                             L_inv=np.zeros((d, d), dtype=complex),
                             gap=np.inf, kernel_dim=d,
                             transversality=1.0, cond=1.0, semisimple_residual=nil)

    gap = float(np.abs(np.diag(T22)).min())
    if gap < gap_min:
        raise NoGap(f"spectral gap {gap:.3e} below gap_min {gap_min:.3e}")

    # Y T22 - T11 Y = T12 decouples the two blocks.
    Y = solve_sylvester(-T11, T22, T12)
    cond = float((1.0 + np.linalg.norm(Y, 2)) ** 2)
    if cond > cond_max:
        raise IllConditioned(f"kernel/range similarity condition {cond:.3e}")

    blk = np.zeros((d, d), dtype=complex)
    blk[:k, :k] = np.eye(k)
    blk[:k, k:] = -Y
    P = U @ blk @ U.conj().T

    T22_inv = np.linalg.inv(T22)
    blk_inv = np.zeros((d, d), dtype=complex)
    blk_inv[:k, k:] = Y @ T22_inv
    blk_inv[k:, k:] = T22_inv
    L_inv = U @ blk_inv @ U.conj().T

    # Transversality of ker and ran: smallest singular value of the map
    # (a, b) -> a + b on orthonormal bases of the two subspaces.
    ker_basis = U[:, :k]
    ran_raw = U @ np.vstack([Y, np.eye(d - k)])
    ran_basis = np.linalg.qr(ran_raw)[0]
    sigma = np.linalg.svd(np.hstack([ker_basis, ran_basis]), compute_uv=False)
    transversality = float(sigma[-1])

    return SpectralSplit(P=P, Q=np.eye(d, dtype=complex) - P, L_inv=L_inv,
                         gap=gap, kernel_dim=int(k),
                         transversality=transversality, cond=cond,
                         semisimple_residual=nil)


def reduced_inverse_apply(split: SpectralSplit, y: np.ndarray) -> np.ndarray:
    """Apply the reduced inverse; the result lies in ran L."""
    return split.L_inv @ np.asarray(y, dtype=complex)


# -- hypothesis checks --------------------------------------------------------

@dataclass
class HypothesisReport:
    """Outcome of the structural checks for a claimed generator class."""

    model_class: str
    is_contraction_generator: bool
    transversal: bool
    semisimple_kernel: bool
    gap: float
    kernel_dim: int
    checks: dict = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return (self.is_contraction_generator and self.transversal
                and self.semisimple_kernel)


def check_contraction_generator(L: np.ndarray,
                                model_class: str = "generic",
                                tol: float = 1e-9,
                                seed: int = 0,
                                n_samples: int = 32,
                                tol_kernel: float = DEFAULT_TOL_KERNEL,
                                gap_min: float = DEFAULT_GAP_MIN) -> HypothesisReport:
    """Class-specific test that L generates a contraction semigroup.

    hamiltonian: skew-Hermitian test.  markov: sign pattern and column
    sums.  lindblad: trace preservation, Hermiticity preservation and
    conditional complete positivity of the generator.  adjoint: the
    superoperator is skew-Hermitian in the Hilbert-Schmidt sense.
    generic: spectrum in the closed left half-plane plus the sampled
    resolvent inequality ||(L - g) x|| >= g ||x|| in the 2-norm.
    """
    if model_class not in MODEL_CLASSES:
        raise ValueError(f"unknown model class {model_class!r}")
    L = np.asarray(L, dtype=complex)
    d = L.shape[0]
    scale = max(np.linalg.norm(L, 2), 1e-300)
    checks: dict = {}

    if model_class in ("hamiltonian", "adjoint"):
        residual = np.linalg.norm(L + L.conj().T, 2) / scale
        checks["skew_hermitian"] = (residual <= tol, residual)
        ok = residual <= tol
    elif model_class == "markov":
        off = L - np.diag(np.diag(L))
        min_off = float(np.min(off.real))
        imag = float(np.abs(L.imag).max())
        colsum = float(np.abs(L.sum(axis=0)).max())
        checks["off_diagonal_nonnegative"] = (min_off >= -tol * scale, min_off)
        checks["real_entries"] = (imag <= tol * scale, imag)
        checks["column_sums_zero"] = (colsum <= tol * scale, colsum)
        ok = all(passed for passed, _ in checks.values())
    elif model_class == "lindblad":
        dsq = d
        dd = round(np.sqrt(dsq))
        if dd * dd != dsq:
            raise ValueError("lindblad check expects a d^2 x d^2 superoperator")
        idv = vec(np.eye(dd))
        trace_res = float(np.linalg.norm(idv.conj() @ L) / scale)
        checks["trace_preserving"] = (trace_res <= tol, trace_res)
        # Hermiticity preservation: L(X^*) = (L X)^* on a basis.
        herm_res = 0.0
        for i in range(dd):
            for j in range(dd):
                e = np.zeros((dd, dd), dtype=complex)
                e[i, j] = 1.0
                lhs = unvec(L @ vec(e.conj().T), dd)
                rhs = unvec(L @ vec(e), dd).conj().T
                herm_res = max(herm_res, float(np.abs(lhs - rhs).max()))
        herm_res /= scale
        checks["hermiticity_preserving"] = (herm_res <= tol, herm_res)
        # Conditional complete positivity: the Choi matrix of L must be
        # positive semidefinite off the maximally entangled vector.
        c = choi_matrix(L)
        omega = vec(np.eye(dd)) / np.sqrt(dd)
        proj = np.eye(dsq, dtype=complex) - np.outer(omega, omega.conj())
        w = np.linalg.eigvalsh(proj @ c @ proj)
        ccp_min = float(w.min())
        checks["conditionally_completely_positive"] = (ccp_min >= -tol * scale, ccp_min)
        ok = all(passed for passed, _ in checks.values())
    else:
        eigs = np.linalg.eigvals(L)
        max_re = float(eigs.real.max())
        checks["spectrum_left_half_plane"] = (max_re <= tol * scale, max_re)
        lognorm = float(np.linalg.eigvalsh((L + L.conj().T) / 2).max())
        checks["lognorm_nonpositive"] = (lognorm <= tol * scale, lognorm)
        rng = np.random.default_rng(seed)
        worst = np.inf
        for gamma in np.geomspace(1e-3, 1e3, 7) * scale:
            sigma_min = np.linalg.svd(L - gamma * np.eye(d), compute_uv=False)[-1]
            worst = min(worst, (sigma_min - gamma) / gamma)
            for _ in range(max(1, n_samples // 7)):
                x = rng.normal(size=d) + 1j * rng.normal(size=d)
                x /= np.linalg.norm(x)
                margin = (np.linalg.norm((L - gamma * np.eye(d)) @ x) - gamma) / gamma
                worst = min(worst, margin)
        checks["hille_yosida_sampled"] = (worst >= -tol, worst)
        ok = all(passed for passed, _ in checks.values())

    transversal = False
    semisimple = False
    gap = 0.0
    kdim = 0
    try:
        split = spectral_split(L, tol_kernel=tol_kernel, gap_min=gap_min)
        gap = split.gap
        kdim = split.kernel_dim
        transversal = split.transversality > 1e-8
        semisimple = np.linalg.norm(L @ split.P, 2) <= 1e-9 * scale * 10
        checks["transversality_sigma_min"] = (transversal, split.transversality)
        checks["kernel_nilpotent_residual"] = (semisimple,
                                               np.linalg.norm(L @ split.P, 2) / scale)
    except NonSemisimpleKernel as exc:
        checks["kernel_nilpotent_residual"] = (False, str(exc))
    except (NoGap, IllConditioned) as exc:
        checks["spectral_split"] = (False, str(exc))

    return HypothesisReport(model_class=model_class,
                            is_contraction_generator=bool(ok),
                            transversal=bool(transversal),
                            semisimple_kernel=bool(semisimple),
                            gap=gap, kernel_dim=kdim, checks=checks)


# -- continuation -------------------------------------------------------------

def match_by_overlap(previous: np.ndarray, current: np.ndarray) -> np.ndarray:
    """Permutation matching columns of `current` to columns of `previous`.

    Maximizes total |<prev_i, cur_j>|; the assignment is a bijection.
    Returns perm with current[:, perm[i]] continuing previous[:, i].
    """
    overlap = np.abs(previous.conj().T @ current)
    row, col = linear_sum_assignment(-overlap)
    perm = np.empty(previous.shape[1], dtype=int)
    perm[row] = col
    return perm


def match_projections_by_overlap(previous: list[np.ndarray],
                                 current: list[np.ndarray]) -> np.ndarray:
    """Bijective cluster assignment by maximal eigenprojection overlap."""
    n = len(previous)
    overlap = np.empty((n, n))
    for i, p in enumerate(previous):
        for j, q in enumerate(current):
            overlap[i, j] = abs(np.trace(p.conj().T @ q))
    row, col = linear_sum_assignment(-overlap)
    perm = np.empty(n, dtype=int)
    perm[row] = col
    return perm
