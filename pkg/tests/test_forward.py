"""Control/response maps and the finite-difference cross-check.

The leapfrog oracle at unit Courant number transports free waves exactly, so
the free catalogue problem gives machine-precision reference cases; the full
problem is checked by mutual convergence of the two independent routes.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

import memwave as mw
from memwave.model import causal_convolution, sampled_derivative


def _problem(name, n):
    grid = mw.GridSpec(1.0, n)
    q, K = mw.get_problem(name).fields(grid)
    return grid, q, K


# ------------------------------------------------------------ leapfrog oracle


def test_fd_free_wave_is_exact_transport():
    grid, q, K = _problem("free", 100)
    f = mw.control_from_family("smooth_bump_control", (0.4, 0.25), grid)
    fld = mw.fd_forward(q, K, f)
    fv = f.padded_full()
    nx = fld.values.shape[0]
    worst = 0.0
    for j in range(101):
        lag = j - np.arange(nx)
        exact = np.where(lag >= 0, fv[np.maximum(lag, 0)], 0.0)
        worst = max(worst, np.abs(fld.values[:, j] - exact).max())
    assert worst < 1e-12


def test_fd_zero_control_stays_at_rest():
    grid, q, K = _problem("full", 32)
    f = mw.control_from_family("zero", (), grid)
    assert np.abs(mw.fd_forward(q, K, f).values).max() == 0.0


def test_fd_rejects_offgrid_horizon():
    grid, q, K = _problem("free", 32)
    f = mw.control_from_family("zero", (), grid)
    with pytest.raises(mw.UsageError):
        mw.fd_forward(q, K, f, t_max=0.33)
    with pytest.raises(mw.UsageError):
        mw.fd_forward(q, K, f, t_max=3.0)


# ------------------------------------------------------------- control map


def test_control_map_free_is_pure_shift():
    grid, q, K = _problem("free", 64)
    sol = mw.solve_goursat(q, K, grid)
    f = mw.control_from_family("smooth_bump_control", (0.5, 0.3), grid)
    snap = mw.apply_control_operator(sol, f)
    x = grid.times_half()
    exact = np.interp(grid.T - x, x, f.values, left=0.0, right=0.0)
    assert_allclose(snap.values, exact, atol=1e-14)


def test_control_map_agrees_with_fd():
    diffs = []
    for n in (32, 64):
        grid, q, K = _problem("full", n)
        sol = mw.solve_goursat(q, K, grid)
        f = mw.control_from_family("smooth_bump_control", (0.4, 0.25), grid)
        snap = mw.apply_control_operator(sol, f)
        fd = mw.fd_forward(q, K, f)
        diffs.append(np.abs(snap.values - fd.values[: n + 1, -1]).max())
    assert diffs[0] < 5e-4
    assert diffs[0] / diffs[1] == pytest.approx(4.0, abs=1.0)


def test_duhamel_midtime_causality():
    grid, q, K = _problem("full", 64)
    sol = mw.solve_goursat(q, K, grid)
    f = mw.control_from_family("smooth_bump_control", (0.2, 0.15), grid)
    snap = mw.duhamel_eval(sol, f, 0.5)
    # finite speed: nothing beyond x = t_star
    assert np.abs(snap.values[33:]).max() == 0.0
    assert np.abs(snap.values[:32]).max() > 0.0


def test_duhamel_rejects_offgrid_time():
    grid, q, K = _problem("free", 32)
    sol = mw.solve_goursat(q, K, grid)
    f = mw.control_from_family("zero", (), grid)
    with pytest.raises(mw.UsageError):
        mw.duhamel_eval(sol, f, 0.7919)


# ----------------------------------------------------------- control solve


def test_solve_control_free_linear_target():
    grid, q, K = _problem("free", 64)
    sol = mw.solve_goursat(q, K, grid)
    t = grid.times_half()
    ctrl = mw.solve_control(sol, t.copy())
    # free problem: u(x, T) = f(T - x), so the control is the reversed ramp
    assert_allclose(ctrl.values, grid.T - t, atol=1e-13)
    assert not ctrl.admissible


def test_control_round_trip_is_exact():
    grid, q, K = _problem("full", 100)
    sol = mw.solve_goursat(q, K, grid)
    f = mw.control_from_family("smooth_bump_control", (0.5, 0.3), grid)
    state = mw.apply_control_operator(sol, f)
    back = mw.solve_control(sol, state.values)
    # back-substitution inverts the discrete triangular map to rounding error
    assert_allclose(back.values, f.values, atol=1e-12)


def test_state_round_trip_is_exact():
    grid, q, K = _problem("full", 200)
    sol = mw.solve_goursat(q, K, grid)
    target = np.sin(np.pi * grid.times_half()) ** 2
    ctrl = mw.solve_control(sol, target)
    fwd = mw.apply_control_operator(sol, ctrl)
    assert_allclose(fwd.values, target, atol=1e-12)


def test_solve_control_checks_target_length():
    grid, q, K = _problem("free", 32)
    sol = mw.solve_goursat(q, K, grid)
    with pytest.raises(mw.UsageError):
        mw.solve_control(sol, np.zeros(7))


# -------------------------------------------------------- boundary response


def test_response_map_free_is_minus_derivative():
    grid, q, K = _problem("free", 128)
    r = mw.response_kernel(mw.solve_goursat(q, K, grid))
    f = mw.control_from_family("smooth_bump_control", (0.5, 0.3), grid)
    out = mw.apply_response(r, f)
    assert_allclose(out, -sampled_derivative(f.values, grid.h), atol=1e-15)


def test_response_map_memory_closed_form():
    # constant kernel K0: (Rf)(t) ~ -f'(t) - (K0/2) (t * f)(t) + O(K0^2)
    grid, q, K = _problem("memory_only_small", 128)
    r = mw.response_kernel(mw.solve_goursat(q, K, grid))
    f = mw.control_from_family("smooth_bump_control", (0.5, 0.2), grid, full_window=True)
    out = mw.apply_response(r, f)
    t = grid.times_full()
    closed = -sampled_derivative(f.values, grid.h) - 0.005 * causal_convolution(
        t, f.values, grid.h
    )
    assert np.abs(out - closed).max() < 5e-6


def test_response_map_rejects_rough_control():
    grid, q, K = _problem("free", 32)
    r = mw.response_kernel(mw.solve_goursat(q, K, grid))
    sine = mw.control_from_family("sine", (1.0, 2.0), grid)
    with pytest.raises(mw.UsageError):
        mw.apply_response(r, sine)


def test_response_map_agrees_with_fd_trace():
    diffs = []
    for n in (64, 128):
        grid, q, K = _problem("full", n)
        r = mw.response_kernel(mw.solve_goursat(q, K, grid))
        f = mw.control_from_family("smooth_bump_control", (0.5, 0.25), grid, full_window=True)
        fd = mw.fd_forward(q, K, f, 2.0 * grid.T)
        diffs.append(np.abs(mw.fd_boundary_trace(fd) - mw.apply_response(r, f)).max())
    # scale of the trace itself is ~7, so 0.25 at N=64 is a few percent
    assert diffs[0] < 0.5
    assert diffs[0] / diffs[1] > 2.5
