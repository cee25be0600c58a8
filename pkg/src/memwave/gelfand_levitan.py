"""Inverse step: from the connecting kernel to the potential.

The control map is I + W with an upper-triangular kernel w(x, t), x <= t;
its inverse is I + Z with z of the same shape.  Writing the connecting form
as (I + C)(f, g)-bilinear with the reduced kernel c(t, s), the factorization
C_full = (I + W)*(I + W) gives

    (I + C_int)(I + Z) = I + W*,

whose strictly-upper part is a family of linear integral equations: for each
fixed s, the column z(., s) on [0, s] solves

    z(t, s) + int_0^s c(t, tau) z(tau, s) dtau = -c(t, s),   0 <= t <= s,

where the t = s row is the continuous limit (this is why the assembled
kernel carries the continuity value on its diagonal).  The potential then
follows from the diagonal alone: q(x) = 2 (d/dx) z(x, x).

``z_from_w`` inverts the Volterra factor directly (no connecting kernel
involved) and is the oracle for everything here; ``operator_identity_residual``
checks the factorization itself in weighted matrix form, which is the
strongest data-consistency test the pipeline has.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .connecting import ConnectingKernel
from .errors import IllConditionedError, UsageError
from .goursat import GoursatSolution
from .model import CoefficientField, GridSpec, sampled_derivative, trapz_weights

__all__ = [
    "GLSolution",
    "solve_gl",
    "z_from_w",
    "gl_residual",
    "operator_identity_residual",
    "recover_potential",
    "reconstruction_errors",
]

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class GLSolution:
    """Inverse-factor kernel z[i, j] = z(x_i, t_j) on {j >= i}, zero below."""

    grid: GridSpec
    z: np.ndarray = field(repr=False)
    ridge: float = 0.0
    cond_estimate: float = 0.0

    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.z).copy()


def solve_gl(c: ConnectingKernel, ridge: float = 0.0) -> GLSolution:
    """Solve the column equations by Nystrom collocation on the grid nodes.

    ``ridge`` adds lambda*I to every collocation matrix (a regularization
    knob for noisy kernels; 0 for clean data).  Raises IllConditionedError
    when a cheap one-norm condition estimate exceeds 1e12.
    """
    grid = c.grid
    N, h = grid.N, grid.h
    C = c.values
    z = np.zeros((N + 1, N + 1))
    z[0, 0] = -C[0, 0]
    cond_max = 1.0
    for j in range(1, N + 1):
        n = j + 1
        w = trapz_weights(n, h)
        M = np.eye(n) + C[:n, :n] * w[None, :]
        if ridge:
            M += ridge * np.eye(n)
        # stack two probe columns to estimate ||M^-1||_1 from the same LU
        alt = np.ones(n)
        alt[1::2] = -1.0
        rhs = np.column_stack([-C[:n, j], alt, np.eye(n)[:, -1]])
        try:
            sol = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError as exc:
            raise IllConditionedError(
                f"collocation matrix singular at s = {j * h:.6g}"
            ) from exc
        inv_norm = max(
            float(np.abs(sol[:, 1]).sum()) / n, float(np.abs(sol[:, 2]).sum())
        )
        cond = float(np.abs(M).sum(axis=0).max()) * inv_norm
        cond_max = max(cond_max, cond)
        if cond > _COND_LIMIT:
            raise IllConditionedError(
                f"collocation matrix condition ~{cond:.2e} at s = {j * h:.6g}; "
                f"the data do not determine the kernel at this depth"
            )
        z[:n, j] = sol[:, 0]
    return GLSolution(grid=grid, z=z, ridge=ridge, cond_estimate=cond_max)


def z_from_w(sol: GoursatSolution) -> GLSolution:
    """Oracle: invert the Volterra factor I + W directly, row by row.

    From (I + Z)(I + W) = I:  z(x, t) = -w(x, t) - int_x^t z(x, s) w(s, t) ds,
    a forward substitution in t with the exact diagonal z(x, x) = -w(x, x).
    """
    grid = sol.grid
    N, h = grid.N, grid.h
    W = sol.w.values[: N + 1, : N + 1]
    z = np.zeros((N + 1, N + 1))
    for i in range(N + 1):
        z[i, i] = -W[i, i]
        for j in range(i + 1, N + 1):
            wts = trapz_weights(j - i + 1, h)
            s = z[i, i:j] @ (wts[:-1] * W[i:j, j])
            z[i, j] = -(W[i, j] + s) / (1.0 + 0.5 * h * W[j, j])
    return GLSolution(grid=grid, z=z)


def gl_residual(c: ConnectingKernel, gl: GLSolution) -> float:
    """Sup-norm residual of the column equations for a candidate z."""
    if c.grid != gl.grid:
        raise UsageError("connecting kernel and z-kernel live on different grids")
    N, h = gl.grid.N, gl.grid.h
    C, z = c.values, gl.z
    worst = abs(z[0, 0] + C[0, 0])
    for j in range(1, N + 1):
        n = j + 1
        w = trapz_weights(n, h)
        res = z[:n, j] + (C[:n, :n] * w[None, :]) @ z[:n, j] + C[:n, j]
        worst = max(worst, float(np.max(np.abs(res))))
    return worst


def operator_identity_residual(c: ConnectingKernel, gl: GLSolution) -> float:
    """Residual of (I + Z*D)(I + CD)(I + ZD) = I in weighted matrix form.

    D holds the trapezoid weights of [0, T]; the product telescopes to the
    identity exactly when c is the kernel of (I + W)*(I + W) and z inverts
    I + W.  The z-factor is triangular, so the global weight vector would
    give its support-edge node (the diagonal) a full interior weight h where
    the correct rule for the truncated interval wants h/2; halving the
    diagonal of z inside the products restores second-order quadrature.
    Measured over the rows/columns 0..N-1 (the last node of the data-driven
    kernel is extrapolated, not probed).
    """
    if c.grid != gl.grid:
        raise UsageError("connecting kernel and z-kernel live on different grids")
    N, h = gl.grid.N, gl.grid.h
    D = np.diag(trapz_weights(N + 1, h))
    I = np.eye(N + 1)
    zq = gl.z.copy()
    didx = np.arange(N + 1)
    zq[didx, didx] *= 0.5
    E = (I + zq.T @ D) @ (I + c.values @ D) @ (I + zq @ D) - I
    return float(np.max(np.abs(E[:N, :N])))


def recover_potential(gl: GLSolution) -> CoefficientField:
    """Potential from the inverse-factor diagonal: q(x) = 2 (d/dx) z(x, x).

    The x = 0 sample of the diagonal is pinned to its exact value while the
    rest may carry a small uniform offset from the data route, so the
    endpoint derivative uses samples h, 2h, 3h only: a one-sided stencil
    whose coefficients sum to zero cancels any constant offset and keeps the
    second-order truncation error.
    """
    diag = gl.diagonal()
    h = gl.grid.h
    values = 2.0 * sampled_derivative(diag, h)
    values[0] = (-5.0 * diag[1] + 8.0 * diag[2] - 3.0 * diag[3]) / h
    return CoefficientField(grid=gl.grid, values=values)


def reconstruction_errors(q_true: np.ndarray, q_hat: np.ndarray, grid: GridSpec,
                          window: tuple[float, float] = (0.1, 0.9)) -> dict:
    """Error summary of a recovered potential against the truth.

    ``interior_rel`` is the relative L2 error over the window (fractions of
    T); near the fold point x = T the data constrain q only weakly, so the
    headline metric excludes the edges.  Falls back to the absolute L2 when
    the truth is (numerically) zero.
    """
    qt = np.asarray(q_true, dtype=float)
    qh = np.asarray(q_hat, dtype=float)
    x = grid.times_half()
    lo, hi = window[0] * grid.T, window[1] * grid.T
    m = (x >= lo - 1e-12) & (x <= hi + 1e-12)
    diff = np.sqrt(np.mean((qh[m] - qt[m]) ** 2))
    base = np.sqrt(np.mean(qt[m] ** 2))
    return {
        "max_abs": float(np.max(np.abs(qh - qt))),
        "interior_rel": float(diff / base) if base > 1e-14 else float(diff),
        "interior_linf": float(np.max(np.abs(qh[m] - qt[m]))),
    }
