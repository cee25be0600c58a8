"""Grids, sampled fields and quadrature.

Everything downstream works on a characteristic grid: the space step and the
time step are the same h = T/N.  Coefficients live on [0, T], boundary data
and memory kernels on [0, 2T], and triangular kernels on the region
{0 <= x <= t, x + t <= 2T}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError

__all__ = [
    "GridSpec",
    "CoefficientField",
    "MemoryKernel",
    "ControlSignal",
    "TriangularField",
    "trapezoid",
    "trapz_weights",
    "cumulative_trapezoid",
    "sampled_derivative",
    "causal_convolution",
    "sample_family",
    "family_cumulative",
    "coefficient_from_family",
    "kernel_from_family",
    "control_from_family",
    "bump_profile",
    "FAMILIES",
]


# --------------------------------------------------------------------------
# grid
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Characteristic grid on [0, T]: N cells, step h = T/N in x and t.

    Boundary data is observed on the doubled window [0, 2T] (2N cells).
    """

    T: float
    N: int

    def __post_init__(self):
        if not (self.T > 0.0 and math.isfinite(self.T)):
            raise UsageError(f"grid horizon T must be positive and finite, got {self.T}")
        if self.N < 8:
            raise UsageError(f"grid needs N >= 8 cells, got N={self.N}")

    @property
    def h(self) -> float:
        return self.T / self.N

    @property
    def N2(self) -> int:
        return 2 * self.N

    def times_half(self) -> np.ndarray:
        """Grid points of [0, T] (N + 1 values); also the x grid."""
        return np.linspace(0.0, self.T, self.N + 1)

    def times_full(self) -> np.ndarray:
        """Grid points of [0, 2T] (2N + 1 values)."""
        return np.linspace(0.0, 2.0 * self.T, self.N2 + 1)

    def refine(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.T, self.N * factor)


def _frozen(values) -> np.ndarray:
    out = np.ascontiguousarray(values, dtype=float)
    out.flags.writeable = False
    return out


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------

def trapezoid(values: np.ndarray, h: float) -> float:
    """Composite trapezoid of uniformly sampled values; 0 for a single sample."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1:
        raise UsageError("trapezoid expects a 1-d sample array")
    if v.size < 2:
        return 0.0
    return h * (v.sum() - 0.5 * (v[0] + v[-1]))


def trapz_weights(n: int, h: float) -> np.ndarray:
    """Composite trapezoid weights for n uniform samples (h/2 at the ends)."""
    if n < 2:
        return np.zeros(max(n, 0))
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def cumulative_trapezoid(values: np.ndarray, h: float) -> np.ndarray:
    """Running trapezoid integral; output[0] = 0, same length as input."""
    v = np.asarray(values, dtype=float)
    out = np.zeros_like(v)
    if v.size > 1:
        out[1:] = np.cumsum(0.5 * h * (v[1:] + v[:-1]))
    return out


def sampled_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Second-order first derivative on a uniform grid (one-sided at the ends)."""
    v = np.asarray(values, dtype=float)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return out


def causal_convolution(a: np.ndarray, b: np.ndarray, h: float) -> np.ndarray:
    """Trapezoid discretization of (a * b)(t_k) = int_0^{t_k} a(t_k - s) b(s) ds.

    output[0] = 0 (degenerate interval).  Exactly symmetric in (a, b).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise UsageError("causal_convolution expects two 1-d arrays of equal length")
    full = np.convolve(a, b)[: a.size]
    return h * (full - 0.5 * (a * b[0] + a[0] * b))


# --------------------------------------------------------------------------
# sample families
# --------------------------------------------------------------------------

def bump_profile(xi: np.ndarray) -> np.ndarray:
    """C^2 bump (1 - xi^2)^3 on [-1, 1], zero outside.

    Value, first and second derivative all vanish at xi = +-1.
    """
    xi = np.asarray(xi, dtype=float)
    core = np.clip(1.0 - xi * xi, 0.0, None)
    return core ** 3


FAMILIES = (
    "zero",
    "constant",
    "gaussian_bump",
    "sine",
    "exp_decay",
    "smooth_bump_control",
)

# number of parameters each family expects
_FAMILY_ARITY = {
    "zero": 0,
    "constant": 1,
    "gaussian_bump": 3,
    "sine": 2,
    "exp_decay": 2,
    "smooth_bump_control": 2,
}


def _check_family(name: str, params) -> tuple[float, ...]:
    if name not in _FAMILY_ARITY:
        raise UsageError(f"unknown sample family {name!r}; known: {', '.join(FAMILIES)}")
    params = tuple(float(p) for p in params)
    if len(params) != _FAMILY_ARITY[name]:
        raise UsageError(
            f"family {name!r} takes {_FAMILY_ARITY[name]} parameters, got {len(params)}"
        )
    return params


def sample_family(name: str, params, points: np.ndarray) -> np.ndarray:
    """Sample a catalogued closed-form profile at the given points.

    Families: zero; constant(c); gaussian_bump(center, width, amplitude);
    sine(freq, amplitude) = amplitude*sin(2*pi*freq*t); exp_decay(amplitude,
    rate) = amplitude*exp(-rate*t); smooth_bump_control(center, width) = the
    C^2 bump supported on [center - width, center + width].
    """
    params = _check_family(name, params)
    t = np.asarray(points, dtype=float)
    if name == "zero":
        out = np.zeros_like(t)
    elif name == "constant":
        out = np.full_like(t, params[0])
    elif name == "gaussian_bump":
        center, width, amplitude = params
        if width <= 0:
            raise UsageError("gaussian_bump needs width > 0")
        out = amplitude * np.exp(-0.5 * ((t - center) / width) ** 2)
    elif name == "sine":
        freq, amplitude = params
        out = amplitude * np.sin(2.0 * np.pi * freq * t)
    elif name == "exp_decay":
        amplitude, rate = params
        out = amplitude * np.exp(-rate * t)
    elif name == "smooth_bump_control":
        center, width, = params
        if width <= 0:
            raise UsageError("smooth_bump_control needs width > 0")
        out = bump_profile((t - center) / width)
    else:  # pragma: no cover - guarded above
        raise UsageError(name)
    if not np.all(np.isfinite(out)):
        raise UsageError(f"family {name}{params} produced non-finite samples")
    return out


def family_cumulative(name: str, params, points: np.ndarray) -> np.ndarray:
    """Closed-form running integral int_0^x of a catalogued family.

    Used as a grid-independent reference when checking reconstructed
    diagonals; every family has an elementary antiderivative.
    """
    params = _check_family(name, params)
    x = np.asarray(points, dtype=float)
    if name == "zero":
        return np.zeros_like(x)
    if name == "constant":
        return params[0] * x
    if name == "gaussian_bump":
        center, width, amplitude = params
        scale = amplitude * width * math.sqrt(math.pi / 2.0)
        erf = np.vectorize(math.erf)
        s = math.sqrt(2.0) * width
        return scale * (erf((x - center) / s) - math.erf(-center / s))
    if name == "sine":
        freq, amplitude = params
        if freq == 0.0:
            return np.zeros_like(x)
        w = 2.0 * np.pi * freq
        return amplitude * (1.0 - np.cos(w * x)) / w
    if name == "exp_decay":
        amplitude, rate = params
        if rate == 0.0:
            return amplitude * x
        return amplitude * (1.0 - np.exp(-rate * x)) / rate
    if name == "smooth_bump_control":
        center, width = params
        xi = np.clip((x - center) / width, -1.0, 1.0)

        def anti(u):
            return u - u ** 3 + 0.6 * u ** 5 - u ** 7 / 7.0

        return width * (anti(xi) - anti(-1.0))
    raise UsageError(name)  # pragma: no cover


# --------------------------------------------------------------------------
# sampled field types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientField:
    """Potential samples q(x_i) on [0, T] (N + 1 values)."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (self.grid.N + 1,):
            raise UsageError(
                f"coefficient field needs {self.grid.N + 1} samples on [0, T], got {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise UsageError("coefficient field has non-finite samples")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class MemoryKernel:
    """Relaxation kernel samples K(t_j) on [0, 2T] (2N + 1 values)."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (self.grid.N2 + 1,):
            raise UsageError(
                f"memory kernel needs {self.grid.N2 + 1} samples on [0, 2T], got {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise UsageError("memory kernel has non-finite samples")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class ControlSignal:
    """Boundary control samples on [0, T] or on [0, 2T].

    ``admissible`` marks signals that vanish with their first derivative at
    t = 0 and are supported inside the open window - the class of controls
    the response convolution and the correlation march are defined for.
    """

    grid: GridSpec
    values: np.ndarray
    admissible: bool = False

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape not in ((self.grid.N + 1,), (self.grid.N2 + 1,)):
            raise UsageError(
                "control signal must be sampled on [0, T] or [0, 2T] "
                f"({self.grid.N + 1} or {self.grid.N2 + 1} values), got {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise UsageError("control signal has non-finite samples")
        object.__setattr__(self, "values", v)

    def padded_full(self) -> np.ndarray:
        """Samples on [0, 2T], zero-extended beyond the original window."""
        if self.values.size == self.grid.N2 + 1:
            return self.values
        out = np.zeros(self.grid.N2 + 1)
        out[: self.values.size] = self.values
        return out


@dataclass(frozen=True)
class TriangularField:
    """Kernel samples on the triangle {0 <= i <= j, i + j <= 2N}.

    Stored densely with zeros outside the triangle; queries below the
    characteristic (j < i) return 0 by convention, queries past the data
    window (i + j > 2N) are a contract violation.
    """

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.grid.N2 + 1
        v = np.array(self.values, dtype=float)
        if v.shape != (n, n):
            raise UsageError(f"triangular field needs a {n}x{n} sample array, got {v.shape}")
        ii, jj = np.indices(v.shape)
        outside = (jj < ii) | (ii + jj > self.grid.N2)
        v[outside] = 0.0
        if not np.all(np.isfinite(v)):
            raise UsageError("triangular field has non-finite samples")
        object.__setattr__(self, "values", _frozen(v))

    def at(self, i: int, j: int) -> float:
        if i < 0 or j < 0 or i + j > self.grid.N2:
            raise UsageError(f"triangular field query ({i}, {j}) is outside the data window")
        if j < i:
            return 0.0
        return float(self.values[i, j])

    def diagonal(self) -> np.ndarray:
        """Values on the characteristic j = i, i = 0..N."""
        return np.diagonal(self.values)[: self.grid.N + 1].copy()


# --------------------------------------------------------------------------
# family -> field constructors
# --------------------------------------------------------------------------

_ADMISSIBLE_FAMILIES = ("zero", "smooth_bump_control")


def coefficient_from_family(name: str, params, grid: GridSpec) -> CoefficientField:
    return CoefficientField(grid, sample_family(name, params, grid.times_half()))


def kernel_from_family(name: str, params, grid: GridSpec) -> MemoryKernel:
    return MemoryKernel(grid, sample_family(name, params, grid.times_full()))


def control_from_family(
    name: str, params, grid: GridSpec, *, full_window: bool = False
) -> ControlSignal:
    """Build a control on [0, T] (or [0, 2T] with ``full_window``).

    smooth_bump_control additionally has to fit inside the open window for
    the admissible flag to be set, otherwise construction fails.
    """
    pts = grid.times_full() if full_window else grid.times_half()
    end = pts[-1]
    if name == "smooth_bump_control":
        center, width = _check_family(name, params)
        if center - width < 0.0 or center + width > end:
            raise UsageError(
                f"smooth_bump_control({center}, {width}) is not supported inside (0, {end})"
            )
    values = sample_family(name, params, pts)
    return ControlSignal(grid, values, admissible=name in _ADMISSIBLE_FAMILIES)
