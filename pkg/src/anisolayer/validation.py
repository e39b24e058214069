"""Remainder measurement, convergence-order fits and analytic bound checks.

Given a problem family, a grid and a list of eps^2 values, the remainder
report pits every requested composite approximation against the five-point
reference solution and records the discrete sup-norm of the difference, a
least-squares order fit in log10-log10 coordinates, and a per-solve maximum
principle check.  Because the reference solution carries its own
discretization error, each table entry is accompanied by a coarse-grid
Richardson estimate of that error and flagged when the estimate is not at
least ten times below the remainder it would pollute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from ._quad import simpson_weights
from .errors import InsufficientPoints, NonPositiveNorm
from .expansion import composite
from .fdsolver import CSV_FLOAT_FORMAT, DEFAULT_MAX_ITER, DEFAULT_TOL, Field2D, Grid2D, solve_fd
from .problem import DEFAULT_QUAD_POINTS, DecomposedProblem, ProblemSpec
from .spectral import DEFAULT_MODES, AntiderivativeStack, mode_numbers

MAX_PRINCIPLE_SLACK = 1e-8
FD_ERROR_MARGIN = 10.0


@dataclass(frozen=True)
class FitResult:
    """Least-squares line through (log10 eps^2, log10 norm) points."""

    slope: float
    intercept: float
    residual: float


@dataclass(frozen=True)
class MaxPrincipleResult:
    """Outcome of the mixed-boundary maximum-principle bound check."""

    bound: float
    max_abs: float

    @property
    def passed(self) -> bool:
        return self.max_abs <= self.bound + MAX_PRINCIPLE_SLACK


@dataclass
class ErrorReport:
    """Per-eps^2 remainder norms with order fits and pollution flags."""

    eps2: list
    orders: list
    norms: dict
    slopes: dict
    fd_error_estimates: list
    flagged: dict
    max_principle: list
    grid: Grid2D
    n_modes: int
    tol: float

    def write_csv(self, stream: IO[str], metadata: dict | None = None) -> None:
        """Rows ``eps2,r0,r2,...`` with '#'-prefixed metadata lines on top."""
        for key, val in (metadata or {}).items():
            stream.write(f"# {key}: {val}\n")
        stream.write("eps2," + ",".join(f"r{2 * n}" for n in self.orders) + "\n")
        fmt = CSV_FLOAT_FORMAT
        for i, e2 in enumerate(self.eps2):
            cells = ",".join(f"{self.norms[n][i]:{fmt}}" for n in self.orders)
            stream.write(f"{e2:{fmt}},{cells}\n")

    def sidecar_dict(self) -> dict:
        """JSON-ready summary: slopes, grid, truncation, tolerances, flags."""
        return {
            "slopes": {
                f"r{2 * n}": {
                    "slope": fit.slope,
                    "intercept": fit.intercept,
                    "residual": fit.residual,
                }
                for n, fit in self.slopes.items()
            },
            "grid": {"n_x": self.grid.n_x, "n_y": self.grid.n_y},
            "n_modes": self.n_modes,
            "solver_tol": self.tol,
            "eps2": list(self.eps2),
            "fd_error_estimates": list(self.fd_error_estimates),
            "flagged": {f"r{2 * n}": list(self.flagged[n]) for n in self.orders},
            "max_principle": [
                {"bound": r.bound, "max_abs": r.max_abs, "passed": r.passed}
                for r in self.max_principle
            ],
        }


def fit_order(points: Sequence[tuple]) -> FitResult:
    """Fit log10(norm) against log10(eps^2) by ordinary least squares.

    Slope 1 means the norm scales like eps^2, slope 2 like eps^4.

    Raises:
        InsufficientPoints: fewer than 3 points.
        NonPositiveNorm: a norm (or eps^2) is not strictly positive.
    """
    if len(points) < 3:
        raise InsufficientPoints(f"order fit needs >= 3 points, got {len(points)}")
    eps2 = np.array([float(e) for e, _ in points])
    norms = np.array([float(v) for _, v in points])
    if np.any(eps2 <= 0.0) or np.any(norms <= 0.0):
        raise NonPositiveNorm("order fit needs positive eps^2 and norms")
    lx = np.log10(eps2)
    ly = np.log10(norms)
    slope, intercept = np.polyfit(lx, ly, 1)
    fitted = slope * lx + intercept
    residual = float(np.sqrt(np.mean((ly - fitted) ** 2)))
    return FitResult(slope=float(slope), intercept=float(intercept), residual=residual)


def max_principle_check(u: Field2D, p: ProblemSpec) -> MaxPrincipleResult:
    """Check ||u||_inf <= Phi + G/2 for the rescaled operator.

    Phi is the largest boundary-data magnitude and G = eps^2 sup|f|, both
    taken over the field's nodes.
    """
    xs = u.grid.x_nodes()
    ys = u.grid.y_nodes()
    phi_max = float(max(np.max(np.abs(p.phi0(xs))), np.max(np.abs(p.phi1(xs)))))
    g_max = float(p.eps**2 * np.max(np.abs(p.f(xs[:, None], ys[None, :]))))
    bound = phi_max + 0.5 * g_max
    return MaxPrincipleResult(bound=bound, max_abs=float(np.max(np.abs(u.values))))


def matching_identity_check(d: DecomposedProblem, stack: AntiderivativeStack,
                            n_modes: int = 8,
                            y_samples: Sequence[float] | None = None) -> float:
    """Largest deviation in the inner/outer matching identity.

    For each sampled y and mode k, compares the cosine coefficient of the
    outer correction -F_2(., y) + F_3(1, y) against ftilde_k(y) / (k pi)^2;
    both sides are integrated on the stack's own grid.
    """
    ys = np.linspace(0.0, 1.0, 9) if y_samples is None else np.asarray(y_samples, dtype=float)
    xq = stack.x_grid
    w = simpson_weights(stack.quad_points)
    k = mode_numbers(n_modes)
    cosmat = np.cos(np.outer(k, np.pi * xq))
    worst = 0.0
    for y in ys:
        outer_vals = -stack.eval(2, xq, float(y)) + stack.eval(3, 1.0, float(y))
        lhs = 2.0 * cosmat @ (w * outer_vals)
        ftilde_k = 2.0 * cosmat @ (w * d.ftilde(xq, float(y)))
        rhs = ftilde_k / (k * np.pi) ** 2
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def fd_self_convergence_estimate(p: ProblemSpec, fine: Field2D,
                                 tol: float = DEFAULT_TOL,
                                 max_iter: int = DEFAULT_MAX_ITER) -> float:
    """Richardson estimate of the five-point solution's own error.

    Solves once more on the half-resolution grid, restricts the fine solution
    onto it (fine y-nodes contain the coarse ones; coarse x-nodes are exact
    midpoints of fine pairs) and returns one third of the sup-norm difference,
    the second-order Richardson constant.
    """
    grid = fine.grid
    if grid.n_x % 2 or grid.n_y % 2:
        raise ValueError("self-convergence estimate needs even cell counts")
    coarse_grid = Grid2D(n_x=grid.n_x // 2, n_y=grid.n_y // 2)
    coarse, _ = solve_fd(p, coarse_grid, tol=tol, max_iter=max_iter)
    v = fine.values
    restricted = 0.5 * (v[0::2, 0::2] + v[1::2, 0::2])
    return float(np.max(np.abs(restricted - coarse.values)) / 3.0)


def remainder_norms(p: ProblemSpec, eps2_list: Sequence[float], orders: Sequence[int],
                    grid: Grid2D, n_modes: int = DEFAULT_MODES, tol: float = DEFAULT_TOL,
                    max_iter: int = DEFAULT_MAX_ITER,
                    quad_points: int = DEFAULT_QUAD_POINTS,
                    estimate_fd_error: bool = True) -> ErrorReport:
    """Measure ||u_fd - u[2n]||_inf for every (eps^2, order) pair.

    One reference solve per eps^2 serves all orders; slopes come from a
    least-squares fit across the eps^2 values, which therefore must contain
    at least three strictly increasing positive entries.

    Raises:
        InsufficientPoints: fewer than 3 eps^2 values.
        NonPositiveNorm, NoConvergence, MissingDerivatives: propagated.
    """
    eps2 = [float(e) for e in eps2_list]
    if len(eps2) < 3:
        raise InsufficientPoints(f"need >= 3 eps^2 values for slope fits, got {len(eps2)}")
    if any(e <= 0.0 for e in eps2):
        raise ValueError("eps^2 values must be positive")
    if sorted(set(eps2)) != eps2:
        raise ValueError("eps^2 values must be strictly increasing")
    orders = sorted(int(n) for n in orders)
    if orders and orders[0] < 0:
        raise ValueError("orders must be nonnegative")

    xs = grid.x_nodes()
    ys = grid.y_nodes()
    norms = {n: [] for n in orders}
    estimates = []
    mp_results = []
    for e2 in eps2:
        p_eps = p.with_eps(math.sqrt(e2))
        field, _ = solve_fd(p_eps, grid, tol=tol, max_iter=max_iter)
        mp_results.append(max_principle_check(field, p_eps))
        for n in orders:
            approx = composite(p_eps, order=n, n_modes=n_modes, quad_points=quad_points)
            diff = field.values - approx.evaluate_grid(xs, ys)
            norms[n].append(float(np.max(np.abs(diff))))
        if estimate_fd_error:
            estimates.append(fd_self_convergence_estimate(p_eps, field, tol=tol,
                                                          max_iter=max_iter))
        else:
            estimates.append(float("nan"))

    flagged = {
        n: [bool(est > norms[n][i] / FD_ERROR_MARGIN) if np.isfinite(est) else False
            for i, est in enumerate(estimates)]
        for n in orders
    }
    slopes = {n: fit_order(list(zip(eps2, norms[n]))) for n in orders}
    return ErrorReport(
        eps2=eps2,
        orders=orders,
        norms=norms,
        slopes=slopes,
        fd_error_estimates=estimates,
        flagged=flagged,
        max_principle=mp_results,
        grid=grid,
        n_modes=n_modes,
        tol=tol,
    )
