"""Grid, quadrature, convolution and the sample coefficient families."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

import memwave as mw
from memwave.model import (
    causal_convolution,
    cumulative_trapezoid,
    sampled_derivative,
    trapezoid,
    trapz_weights,
)


# ---------------------------------------------------------------- grid spec


def test_grid_spec_spacing():
    g = mw.GridSpec(2.0, 16)
    assert g.h == pytest.approx(0.125)
    x = g.times_half()
    assert x.size == 17
    assert x[0] == 0.0 and x[-1] == pytest.approx(2.0)


def test_grid_spec_rejects_small_n():
    with pytest.raises(mw.UsageError):
        mw.GridSpec(1.0, 4)


def test_grid_spec_rejects_bad_horizon():
    with pytest.raises(mw.UsageError):
        mw.GridSpec(-1.0, 32)


def test_grid_spec_doubled_window():
    g = mw.GridSpec(1.0, 32)
    full = g.times_full()
    assert full.size == 65
    assert full[-1] == pytest.approx(2.0)
    assert_allclose(full[:33], g.times_half())


def test_grid_spec_refine():
    g = mw.GridSpec(1.0, 16).refine()
    assert g.N == 32 and g.h == pytest.approx(1.0 / 32.0)


def test_trapz_weights_sum_to_length():
    w = trapz_weights(11, 0.1)
    assert w.size == 11
    assert w[0] == pytest.approx(0.05)
    assert w[-1] == pytest.approx(0.05)
    assert w.sum() == pytest.approx(1.0)


# --------------------------------------------------------------- quadrature


def test_trapezoid_of_zeros_is_zero():
    assert trapezoid(np.zeros(3), 0.5) == 0.0


def test_trapezoid_constant_frozen():
    # endpoints weighted half: (0.5 + 1 + 1 + 0.5) * 0.5
    assert trapezoid(np.ones(4), 0.5) == pytest.approx(1.5)


def test_trapezoid_quadratic_frozen():
    t = np.linspace(0.0, 1.0, 101)
    val = trapezoid(t * t, 0.01)
    # classical composite-rule error h^2/12 * (f'(1) - f'(0)) = 1/6 * 1e-4
    assert val == pytest.approx(0.33335, abs=1e-12)
    assert abs(val - 1.0 / 3.0) < 2e-5


def test_trapezoid_exact_for_linear():
    t = np.linspace(0.0, 2.0, 9)
    assert trapezoid(3.0 * t - 1.0, 0.25) == pytest.approx(4.0, abs=1e-14)


def test_cumulative_trapezoid_endpoint_and_start():
    t = np.linspace(0.0, 1.0, 101)
    ct = cumulative_trapezoid(t, 0.01)
    assert ct[0] == 0.0
    assert ct[-1] == pytest.approx(0.5, abs=1e-14)
    # interior spot check: integral of s up to 0.3
    assert ct[30] == pytest.approx(0.045, abs=1e-12)


def test_sampled_derivative_exact_for_quadratic():
    x = np.linspace(0.0, 1.0, 9)
    d = sampled_derivative(3.0 * x * x - 2.0 * x + 1.0, 0.125)
    assert_allclose(d, 6.0 * x - 2.0, atol=1e-12)


def test_sampled_derivative_second_order():
    errs = []
    for n in (32, 64):
        x = np.linspace(0.0, 1.0, n + 1)
        d = sampled_derivative(np.sin(3.0 * x), 1.0 / n)
        errs.append(np.abs(d - 3.0 * np.cos(3.0 * x)).max())
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.3)


# -------------------------------------------------------------- convolution


def test_causal_convolution_zero_factor():
    b = np.linspace(0.0, 1.0, 11)
    assert_allclose(causal_convolution(np.zeros(11), b, 0.1), np.zeros(11))


def test_causal_convolution_ones_frozen():
    # (1 * 1)(t) = t, and the trapezoid rule is exact for constants
    out = causal_convolution(np.ones(11), np.ones(11), 0.1)
    assert_allclose(out, np.linspace(0.0, 1.0, 11), atol=1e-14)


def test_causal_convolution_ramp_frozen():
    t = np.linspace(0.0, 1.0, 101)
    out = causal_convolution(t, np.ones(101), 0.01)
    # (t * 1)(1) = 1/2, trapezoid-exact for linear integrands
    assert out[-1] == pytest.approx(0.5, abs=1e-12)


def test_causal_convolution_commutes():
    rng = np.random.default_rng(3)
    a = rng.standard_normal(33)
    b = rng.standard_normal(33)
    assert_allclose(
        causal_convolution(a, b, 0.05), causal_convolution(b, a, 0.05), atol=1e-13
    )


@given(
    alpha=st.floats(-3.0, 3.0),
    beta=st.floats(-3.0, 3.0),
    seed=st.integers(0, 2**16),
)
@settings(max_examples=25, deadline=None)
def test_causal_convolution_linear_in_first_factor(alpha, beta, seed):
    rng = np.random.default_rng(seed)
    a1 = rng.standard_normal(17)
    a2 = rng.standard_normal(17)
    b = rng.standard_normal(17)
    lhs = causal_convolution(alpha * a1 + beta * a2, b, 0.1)
    rhs = alpha * causal_convolution(a1, b, 0.1) + beta * causal_convolution(
        a2, b, 0.1
    )
    assert_allclose(lhs, rhs, atol=1e-11)


@given(alpha=st.floats(-5.0, 5.0), beta=st.floats(-5.0, 5.0))
@settings(max_examples=25, deadline=None)
def test_trapezoid_is_linear(alpha, beta):
    t = np.linspace(0.0, 1.0, 21)
    a = np.cos(t)
    b = t * t
    lhs = trapezoid(alpha * a + beta * b, 0.05)
    rhs = alpha * trapezoid(a, 0.05) + beta * trapezoid(b, 0.05)
    assert lhs == pytest.approx(rhs, abs=1e-11)


# ------------------------------------------------------------ field objects


def test_coefficient_field_needs_matching_length():
    g = mw.GridSpec(1.0, 8)
    with pytest.raises(mw.UsageError):
        mw.CoefficientField(grid=g, values=np.zeros(5))


def test_memory_kernel_has_doubled_window():
    g = mw.GridSpec(1.0, 10)
    k = mw.kernel_from_family("constant", (2.0,), g)
    assert k.values.size == 21
    assert_allclose(k.values, 2.0)


def test_kernel_exp_decay_frozen():
    g = mw.GridSpec(1.0, 16)
    k = mw.kernel_from_family("exp_decay", (1.0, 1.0), g)
    assert k.values[0] == pytest.approx(1.0)
    assert k.values[16] == pytest.approx(np.exp(-1.0), abs=1e-14)


def test_coefficient_families_evaluate_on_grid():
    g = mw.GridSpec(1.0, 32)
    q = mw.coefficient_from_family("gaussian_bump", (0.5, 0.1, 1.0), g)
    assert q.values.size == 33
    assert q.values[16] == pytest.approx(1.0)
    assert abs(q.values[0]) < 5e-5


def test_unknown_family_raises():
    g = mw.GridSpec(1.0, 8)
    with pytest.raises(mw.UsageError):
        mw.coefficient_from_family("not_a_family", (), g)


# ----------------------------------------------------------------- controls


def test_zero_control_is_admissible():
    g = mw.GridSpec(1.0, 16)
    f = mw.control_from_family("zero", (), g)
    assert f.admissible
    assert_allclose(f.values, 0.0)


def test_bump_control_is_admissible_and_compact():
    g = mw.GridSpec(1.0, 32)
    f = mw.control_from_family("smooth_bump_control", (0.5, 0.2), g)
    assert f.admissible
    assert f.values[0] == 0.0 and f.values[-1] == 0.0
    assert f.values.max() > 0.5


def test_bump_control_must_fit_window():
    g = mw.GridSpec(1.0, 32)
    with pytest.raises(mw.UsageError):
        mw.control_from_family("smooth_bump_control", (0.9, 0.4), g)


def test_sine_control_not_admissible():
    g = mw.GridSpec(1.0, 16)
    f = mw.control_from_family("sine", (1.0, 2.0), g)
    assert not f.admissible


def test_full_window_control_has_doubled_length():
    g = mw.GridSpec(1.0, 16)
    f = mw.control_from_family("smooth_bump_control", (0.5, 0.2), g, full_window=True)
    assert f.values.size == 33


def test_padded_full_extends_by_zero():
    g = mw.GridSpec(1.0, 16)
    f = mw.control_from_family("smooth_bump_control", (0.5, 0.2), g)
    padded = f.padded_full()
    assert padded.size == 33
    assert_allclose(padded[:17], f.values)
    assert_allclose(padded[17:], 0.0)


# -------------------------------------------------------- problem catalogue


def test_catalogue_names():
    assert set(mw.PROBLEMS) >= {
        "free",
        "classical",
        "memory_only_small",
        "potential_only_small",
        "full",
    }


def test_catalogue_free_problem_is_trivial():
    g = mw.GridSpec(1.0, 8)
    q, K = mw.get_problem("free").fields(g)
    assert_allclose(q.values, 0.0)
    assert_allclose(K.values, 0.0)


def test_catalogue_unknown_problem():
    with pytest.raises(mw.UsageError):
        mw.get_problem("nope")
