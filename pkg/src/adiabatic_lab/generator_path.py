"""Sampled generator families s -> L(s) on a collocation grid."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cheb import ChebGrid
from .errors import SmoothnessLoss
from .operator_core import (DEFAULT_GAP_MIN, DEFAULT_TOL_KERNEL, SpectralSplit,
                            norm_value, spectral_split)


@dataclass
class GeneratorPath:
    """A smooth family of d x d generators with derivatives.

    L_of / Ldot_of are optional callables used for off-grid evaluation;
    when absent, the Chebyshev interpolant of the samples is used.  The
    declared norm and the model class travel with the path so that the
    propagator and the experiments know which contraction statement to
    check.
    """

    grid: ChebGrid
    L_values: np.ndarray
    Ldot_values: np.ndarray
    model_class: str = "generic"
    norm: str = "l2"
    L_of: Callable[[float], np.ndarray] | None = None
    Ldot_of: Callable[[float], np.ndarray] | None = None
    tol_kernel: float = DEFAULT_TOL_KERNEL
    gap_min: float = DEFAULT_GAP_MIN
    name: str = ""
    meta: dict = field(default_factory=dict)
    _splits: list[SpectralSplit] | None = field(default=None, repr=False)

    @classmethod
    def from_callable(cls, L_of: Callable[[float], np.ndarray], m: int = 64,
                      Ldot_of: Callable[[float], np.ndarray] | None = None,
                      **kwargs) -> "GeneratorPath":
        grid = ChebGrid(m)
        L_values = np.array([L_of(s) for s in grid.nodes], dtype=complex)
        if Ldot_of is not None:
            Ldot_values = np.array([Ldot_of(s) for s in grid.nodes], dtype=complex)
        else:
            Ldot_values = grid.differentiate(L_values)
        return cls(grid=grid, L_values=L_values, Ldot_values=Ldot_values,
                   L_of=L_of, Ldot_of=Ldot_of, **kwargs)

    @classmethod
    def from_samples(cls, grid: ChebGrid, L_values: np.ndarray,
                     **kwargs) -> "GeneratorPath":
        L_values = np.asarray(L_values, dtype=complex)
        return cls(grid=grid, L_values=L_values,
                   Ldot_values=grid.differentiate(L_values), **kwargs)

    @property
    def dim(self) -> int:
        return self.L_values.shape[1]

    def L(self, s: float) -> np.ndarray:
        if self.L_of is not None:
            return np.asarray(self.L_of(s), dtype=complex)
        return self.grid.interpolate(self.L_values, s)

    def Ldot(self, s: float) -> np.ndarray:
        if self.Ldot_of is not None:
            return np.asarray(self.Ldot_of(s), dtype=complex)
        return self.grid.interpolate(self.Ldot_values, s)

    def norm_of(self, x: np.ndarray) -> float:
        return norm_value(self.norm, x)

    @property
    def max_norm(self) -> float:
        return max(np.linalg.norm(Lk, 2) for Lk in self.L_values)

    def splits(self) -> list[SpectralSplit]:
        """Spectral split at every node (cached)."""
        if self._splits is None:
            self._splits = [spectral_split(Lk, tol_kernel=self.tol_kernel,
                                           gap_min=self.gap_min)
                            for Lk in self.L_values]
            dims = {sp.kernel_dim for sp in self._splits}
            if len(dims) != 1:
                raise SmoothnessLoss(f"kernel dimension changes along the path: {dims}")
        return self._splits

    @property
    def gap(self) -> float:
        return min(sp.gap for sp in self.splits())

    def kernel_projections(self) -> np.ndarray:
        return np.array([sp.P for sp in self.splits()])

    def projection_path(self):
        """Kernel projection path, ready for parallel transport."""
        from .transport import ProjectionPath
        return ProjectionPath.from_values(self.grid, self.kernel_projections())

    def check_resolution(self, tail_tol: float = 1e-8) -> float:
        """Raise SmoothnessLoss when the grid does not resolve the path."""
        tail = self.grid.coefficient_tail(self.L_values)
        if tail > tail_tol:
            raise SmoothnessLoss(
                f"coefficient tail {tail:.2e} exceeds {tail_tol:.0e}; "
                "increase the grid size or smooth the schedule")
        return tail

    def resample(self, m: int) -> "GeneratorPath":
        if self.L_of is not None:
            return GeneratorPath.from_callable(
                self.L_of, m, Ldot_of=self.Ldot_of,
                model_class=self.model_class, norm=self.norm,
                tol_kernel=self.tol_kernel, gap_min=self.gap_min,
                name=self.name, meta=dict(self.meta))
        grid = ChebGrid(m)
        values = self.grid.interpolate(self.L_values, grid.nodes)
        return GeneratorPath.from_samples(grid, values,
                                          model_class=self.model_class,
                                          norm=self.norm,
                                          tol_kernel=self.tol_kernel,
                                          gap_min=self.gap_min,
                                          name=self.name, meta=dict(self.meta))
