"""Chebyshev collocation on [0, 1].

Nodes are Chebyshev-Gauss-Lobatto points in ascending order,
s_j = (1 - cos(pi j / m)) / 2, so that s_0 = 0 and s_m = 1.  With this
ordering the node values are directly in the index order expected by the
type-I DCT, since s ascending corresponds to x = cos(pi j / m) descending.

Everything here acts along axis 0 of the value arrays, so paths of
matrices (shape (m+1, d, d)) can be differentiated and integrated without
reshaping.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from scipy.fft import dct


class ChebGrid:
    """Collocation grid with spectral differentiation and integration."""

    def __init__(self, m: int = 64):
        if m < 2:
            raise ValueError("need at least 3 collocation nodes")
        self.m = m
        j = np.arange(m + 1)
        self.x = np.cos(np.pi * j / m)        # descending, [-1, 1]
        self.nodes = 0.5 * (1.0 - self.x)     # ascending, [0, 1]

    @property
    def size(self) -> int:
        return self.m + 1

    def values_to_coefficients(self, values: np.ndarray) -> np.ndarray:
        """Chebyshev coefficients of the interpolant, along axis 0."""
        values = np.asarray(values)
        if np.iscomplexobj(values):
            return (self.values_to_coefficients(values.real)
                    + 1j * self.values_to_coefficients(values.imag))
        c = dct(values, type=1, axis=0) / self.m
        c[0] /= 2.0
        c[-1] /= 2.0
        return c

    @cached_property
    def differentiation_matrix(self) -> np.ndarray:
        """d/ds on node values; exact for the degree-m interpolant."""
        m = self.m
        c = np.ones(m + 1)
        c[0] = c[-1] = 2.0
        c *= (-1.0) ** np.arange(m + 1)
        dx = self.x[:, None] - self.x[None, :] + np.eye(m + 1)
        d = np.outer(c, 1.0 / c) / dx
        np.fill_diagonal(d, 0.0)
        np.fill_diagonal(d, -d.sum(axis=1))
        return -2.0 * d  # chain rule for s = (1 - x) / 2

    @cached_property
    def cumulative_integral_matrix(self) -> np.ndarray:
        """Maps node values of f to node values of s -> integral of f on [0, s]."""
        m = self.m
        k = np.zeros((m + 1, m + 1))
        for col in range(m + 1):
            e = np.zeros(m + 1)
            e[col] = 1.0
            ci = npcheb.chebint(self.values_to_coefficients(e))
            # ds = -dx/2 and s = 0 sits at x = 1
            k[:, col] = -0.5 * (npcheb.chebval(self.x, ci) - npcheb.chebval(1.0, ci))
        return k

    @cached_property
    def quadrature_weights(self) -> np.ndarray:
        """Clenshaw-Curtis weights for the full interval [0, 1]."""
        return self.cumulative_integral_matrix[-1]

    def differentiate(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values)
        return np.tensordot(self.differentiation_matrix, values, axes=(1, 0))

    def cumulative_integral(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values)
        return np.tensordot(self.cumulative_integral_matrix, values, axes=(1, 0))

    def integrate(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values)
        return np.tensordot(self.quadrature_weights, values, axes=(0, 0))

    @cached_property
    def barycentric_weights(self) -> np.ndarray:
        w = np.ones(self.m + 1)
        w[0] = w[-1] = 0.5
        return w * (-1.0) ** np.arange(self.m + 1)

    def interpolate(self, values: np.ndarray, s: float | np.ndarray) -> np.ndarray:
        """Barycentric evaluation of the interpolant at s (scalar or 1-d array)."""
        values = np.asarray(values)
        scalar = np.ndim(s) == 0
        sq = np.atleast_1d(np.asarray(s, dtype=float))
        diff = sq[:, None] - self.nodes[None, :]
        hit_rows, hit_cols = np.nonzero(np.abs(diff) < 1e-15)
        if hit_rows.size:
            diff[hit_rows] = 1.0        # placeholder, rows overwritten below
        t = self.barycentric_weights[None, :] / diff
        denom = t.sum(axis=1)
        if hit_rows.size:
            denom[hit_rows] = 1.0
        denom = denom.reshape((-1,) + (1,) * (values.ndim - 1))
        out = np.tensordot(t, values, axes=(1, 0)) / denom
        if hit_rows.size:
            out[hit_rows] = values[hit_cols]
        return out[0] if scalar else out

    def coefficient_tail(self, values: np.ndarray, n_tail: int = 4) -> float:
        """Relative magnitude of the trailing coefficients.

        A tail that does not decay signals that the sampled path is not
        smooth enough for spectral differentiation on this grid.
        """
        c = self.values_to_coefficients(values)
        flat = np.abs(c).reshape(c.shape[0], -1).max(axis=1)
        scale = flat.max()
        if scale == 0.0:
            return 0.0
        return float(flat[-n_tail:].max() / scale)
