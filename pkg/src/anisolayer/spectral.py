"""Fourier-cosine analysis on [0, 1] and repeated antiderivatives of the force.

Zero-mean smooth functions on [0, 1] are represented by truncated series
sum_k c_k cos(k pi x), k = 1..K; the k = 0 coefficient vanishes for zero-mean
data and is never stored.  The cosine basis is the natural one here because
it satisfies the Neumann side conditions of the model equation.

The second half of the module builds the stack of repeated x-antiderivatives
F_0 = g, F_n(x, y) = integral_0^x F_{n-1}(z, y) dz of a zero-x-mean function
g, which the second-order outer correction of the expansion is made of.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from ._quad import check_finite, require_even, simpson_weights, unit_nodes
from .errors import IntegralConditionViolated, NotZeroMean
from .problem import DEFAULT_QUAD_POINTS, DecomposedProblem

DEFAULT_MODES = 64
ZERO_MEAN_TOL = 1e-8
INTEGRAL_CONDITION_TOL = 1e-7

# exp(t) underflows to subnormal below ~-745; clamp to an exact zero so the
# layer factors stay clean on platforms that trap underflow
_EXP_FLOOR = -745.0


def decaying_exp(t):
    """exp(t) for t <= 0, with hard zero once exp would underflow."""
    t = np.asarray(t, dtype=float)
    out = np.exp(np.maximum(t, _EXP_FLOOR))
    out = np.where(t < _EXP_FLOOR, 0.0, out)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class CosineSeries:
    """Coefficients c_1..c_K of a zero-mean cosine series on [0, 1]."""

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if c.ndim != 1 or c.size < 1:
            raise ValueError("coeffs must be a non-empty 1-D array")
        check_finite(c, "cosine coefficients")
        object.__setattr__(self, "coeffs", c)

    @property
    def n_modes(self) -> int:
        return self.coeffs.size

    @property
    def tail_magnitude(self) -> float:
        """|c_K|, a cheap indicator of how sharp the truncation is."""
        return float(abs(self.coeffs[-1]))

    def __call__(self, x):
        return eval_series(self, x)


def mode_numbers(n_modes: int) -> np.ndarray:
    return np.arange(1, n_modes + 1)


def cosine_coeffs(g, n_modes: int = DEFAULT_MODES,
                  quad_points: int = DEFAULT_QUAD_POINTS) -> CosineSeries:
    """Cosine coefficients c_k = 2 integral_0^1 g(x) cos(k pi x) dx, k = 1..K.

    Integrals use composite Simpson on ``quad_points + 1`` uniform nodes.

    Raises:
        NotZeroMean: |integral of g| exceeds 1e-8 under the same quadrature.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    n = require_even(quad_points)
    xq = unit_nodes(n)
    w = simpson_weights(n)
    vals = check_finite(g(xq), "series input")
    mean = float(w @ vals)
    if abs(mean) > ZERO_MEAN_TOL:
        raise NotZeroMean(f"input integrates to {mean:.3e}, expected 0")
    cosmat = np.cos(np.outer(mode_numbers(n_modes), np.pi * xq))
    return CosineSeries(2.0 * cosmat @ (w * vals))


def eval_series(series: CosineSeries, x):
    """Evaluate sum_k c_k cos(k pi x); x may be a scalar or an array."""
    x_arr = np.asarray(x, dtype=float)
    cosmat = np.cos(np.outer(x_arr.ravel(), np.pi * mode_numbers(series.n_modes)))
    out = cosmat @ series.coeffs
    return out.reshape(x_arr.shape) if x_arr.ndim else float(out[0])


@dataclass
class AntiderivativeStack:
    """Repeated x-antiderivatives F_0..F_3 of the fluctuating force.

    F_0(x, y) = ftilde(x, y) and F_n(x, y) = integral_0^x F_{n-1}(z, y) dz,
    computed by cumulative Simpson on a fixed x-grid, once per distinct y and
    memoized.  Because ftilde has zero x-mean, F_1(1, y) must vanish; every
    freshly computed column is checked and the stack refuses to proceed when
    the condition fails.
    """

    ftilde: object
    quad_points: int
    _x: np.ndarray = field(init=False, repr=False)
    _cache: dict = field(init=False, repr=False, default_factory=dict)
    _lock: threading.Lock = field(init=False, repr=False, default_factory=threading.Lock)

    def __post_init__(self) -> None:
        self.quad_points = require_even(self.quad_points)
        self._x = unit_nodes(self.quad_points)

    @property
    def x_grid(self) -> np.ndarray:
        return self._x

    def _column(self, y: float):
        key = float(y)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        f0 = check_finite(self.ftilde(self._x, key), "ftilde")
        f1 = cumulative_simpson(f0, x=self._x, initial=0.0)
        if abs(f1[-1]) > INTEGRAL_CONDITION_TOL:
            raise IntegralConditionViolated(
                f"F_1(1, y={key:g}) = {f1[-1]:.3e} exceeds {INTEGRAL_CONDITION_TOL:g}; "
                "the force fluctuation does not integrate to zero over x"
            )
        f2 = cumulative_simpson(f1, x=self._x, initial=0.0)
        f3 = cumulative_simpson(f2, x=self._x, initial=0.0)
        col = tuple(CubicSpline(self._x, fn) for fn in (f0, f1, f2, f3))
        with self._lock:
            self._cache[key] = col
        return col

    def eval(self, n: int, x, y: float):
        """F_n(x, y) for n in 0..3; x scalar or array, y scalar."""
        if not 0 <= n <= 3:
            raise ValueError(f"antiderivative order must be 0..3, got {n}")
        spline = self._column(y)[n]
        out = spline(np.asarray(x, dtype=float))
        return out if np.ndim(x) else float(out)


def build_antiderivatives(d: DecomposedProblem,
                          quad_points: int = DEFAULT_QUAD_POINTS) -> AntiderivativeStack:
    """Antiderivative stack of the fluctuating force of a decomposed problem."""
    return AntiderivativeStack(ftilde=d.ftilde, quad_points=quad_points)
