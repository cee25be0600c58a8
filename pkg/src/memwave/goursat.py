"""Characteristic-grid solver for the kernel of the boundary-source wave.

The solution of the half-line problem with boundary control f admits the
representation u(x, t) = f(t - x) + int_x^t w(x, s) f(t - s) ds.  The kernel
w lives on the triangle {0 <= x <= t, x + t <= 2T} and solves a Goursat-type
problem there:

    w_tt - w_xx + q(x) w + int_x^t K(t - s) w(x, s) ds + K(t - x) = 0
    w(0, t) = 0,            (d/dx) w(x, x) = -q(x) / 2

with w extended by zero below the characteristic t = x, which turns the
memory integral from x into one from 0.

Discretization: unit-Courant diamond scheme on the (x, t) lattice.  For a
stencil centre strictly above the characteristic,

    w[i, j+1] + w[i, j-1] - w[i-1, j] - w[i+1, j] = -h^2 F(x_i, t_j),
    F = q w + (memory integral) + K(t - x),

marched row by row in t.  Points on the first superdiagonal have a stencil
arm below the characteristic; they are set from the half characteristic cell
between the two data lines instead,

    w[i, i+1] = w[i-1, i] - (h/2) q(x_i) - (h^2/2) (q(x_i) w[i, i] + K(0)),

which keeps the scheme second order up to the characteristic (the first two
terms are the exact transport of the diagonal data, the last is the forcing
integrated over the half cell).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalInstabilityError, UsageError
from .model import (
    CoefficientField,
    GridSpec,
    MemoryKernel,
    TriangularField,
    cumulative_trapezoid,
    trapz_weights,
)

__all__ = [
    "GoursatSolution",
    "ResponseData",
    "solve_goursat",
    "response_kernel",
    "diagonal_residual",
    "linearized_memory_field",
]


@dataclass(frozen=True)
class GoursatSolution:
    """Kernel w on the triangle plus the data that produced it.

    ``extended`` holds one extra diagonal strip (i + j <= 2N + 2, with the
    potential continued by its last sample) so that the boundary-derivative
    stencil stays second order up to t = 2T; only the response extraction
    reads it.
    """

    grid: GridSpec
    q: CoefficientField
    K: MemoryKernel
    w: TriangularField
    extended: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ResponseData:
    """Boundary response kernel samples r(t_j) on [0, 2T], r(0) = 0."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        if v.shape != (self.grid.N2 + 1,):
            raise UsageError(
                f"response data needs {self.grid.N2 + 1} samples on [0, 2T], got {v.shape}"
            )
        if v[0] != 0.0:
            raise UsageError("response data must start at r(0) = 0")
        if not np.all(np.isfinite(v)):
            raise UsageError("response data has non-finite samples")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


def _march(q_ext: np.ndarray, Kv: np.ndarray, diag: np.ndarray, grid: GridSpec,
           with_memory: bool) -> np.ndarray:
    """Shared diamond march on the extended triangle {i+j <= 2N+2, j <= 2N}.

    ``with_memory`` distinguishes the full scheme from the linearized one
    (forcing K(t - x) only, no q-coupling and no history integral).
    """
    N, N2, h = grid.N, grid.N2, grid.h
    w = np.zeros((N + 2, N2 + 1))
    rows = np.arange(N + 2)
    w[rows, np.minimum(rows, N2)] = diag  # characteristic data; w[0, :] stays 0

    for j in range(1, N2):
        # superdiagonal point (j, j+1) from the half characteristic cell
        if j <= N:
            forcing = q_ext[j] * w[j, j] + Kv[0] if with_memory else Kv[0]
            w[j, j + 1] = w[j - 1, j] - 0.5 * h * q_ext[j] - 0.5 * h * h * forcing
        # interior diamond centres (i, j), i = 1 .. i_max
        i_max = min(j - 1, 2 * N + 1 - j)
        if i_max >= 1:
            idx = np.arange(1, i_max + 1)
            kshift = Kv[j - idx]
            if with_memory:
                col = trapz_weights(j + 1, h) * Kv[j::-1]
                mem = w[idx, : j + 1] @ col - 0.5 * h * kshift * diag[idx]
                F = q_ext[idx] * w[idx, j] + mem + kshift
            else:
                F = kshift
            w[idx, j + 1] = w[idx - 1, j] + w[idx + 1, j] - w[idx, j - 1] - h * h * F
        row = w[: min(j + 2, N + 2), j + 1]
        if not np.all(np.isfinite(row)):
            i_bad = int(np.flatnonzero(~np.isfinite(row))[0])
            raise NumericalInstabilityError(
                f"kernel march blew up at grid node (i={i_bad}, j={j + 1})"
            )
    return w


def solve_goursat(q: CoefficientField, K: MemoryKernel, grid: GridSpec) -> GoursatSolution:
    """March the diamond scheme for the kernel w over the full triangle."""
    if q.grid != grid or K.grid != grid:
        raise UsageError("coefficient/kernel grids do not match the requested grid")
    N, N2 = grid.N, grid.N2
    # one extra sample past T (constant continuation) feeds the extended strip;
    # it cannot influence any node with i + j <= 2N (domain of dependence).
    q_ext = np.append(q.values, q.values[-1])
    diag = -0.5 * cumulative_trapezoid(q_ext, grid.h)
    w_ext = _march(q_ext, K.values, diag, grid, with_memory=True)

    dense = np.zeros((N2 + 1, N2 + 1))
    dense[: N + 2, :] = w_ext
    field_w = TriangularField(grid, dense)  # masks the extended strip away
    return GoursatSolution(grid=grid, q=q, K=K, w=field_w, extended=w_ext)


def linearized_memory_field(K: MemoryKernel, grid: GridSpec) -> TriangularField:
    """First-order-in-K kernel: the same march driven by K(t - x) alone.

    This is the derivative of the full scheme with respect to the kernel
    amplitude at q = 0, K = 0; useful as a linearization reference.
    """
    diag = np.zeros(grid.N + 2)
    w_ext = _march(np.zeros(grid.N + 2), K.values, diag, grid, with_memory=False)
    dense = np.zeros((grid.N2 + 1, grid.N2 + 1))
    dense[: grid.N + 2, :] = w_ext
    return TriangularField(grid, dense)


def response_kernel(sol: GoursatSolution) -> ResponseData:
    """Boundary derivative r(t) = w_x(0, t) of the kernel, on [0, 2T].

    One-sided second-order stencil in x; w(0, t) = 0 exactly.  r(0) = 0 by
    convention (the kernel vanishes on both boundary lines at the origin).
    At t = h only two x-samples exist and the two-point difference would be
    first order (the x-curvature of w on the boundary line does not vanish
    when a memory kernel is present), so that sample comes from quadratic
    extrapolation of the three second-order neighbours instead.
    """
    grid = sol.grid
    h, N2 = grid.h, grid.N2
    w = sol.extended
    r = np.zeros(N2 + 1)
    j = np.arange(2, N2 + 1)
    r[2:] = (4.0 * w[1, j] - w[2, j]) / (2.0 * h)
    r[1] = 3.0 * r[2] - 3.0 * r[3] + r[4]
    return ResponseData(grid=grid, values=r)


def diagonal_residual(sol: GoursatSolution) -> float:
    """Sup of |(d/dx) w(x, x) + q(x)/2| over interior nodes, central differences."""
    grid = sol.grid
    d = sol.extended[np.arange(grid.N + 1), np.arange(grid.N + 1)]
    if grid.N < 2:
        return 0.0
    slope = (d[2:] - d[:-2]) / (2.0 * grid.h)
    return float(np.max(np.abs(slope + 0.5 * sol.q.values[1:-1])))
