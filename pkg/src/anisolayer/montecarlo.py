"""Feynman-Kac point estimates by simulating the fast-slow diffusion.

The solution admits the stochastic representation

    u(x, y) = E[ phi_{side}(X_tau) + 1/2 integral_0^tau f(X_t, Y_t) dt ],

where X moves as a Brownian motion sped up by 1/eps and reflected at the
Neumann sides x = 0, 1, Y is a standard Brownian motion absorbed at the
Dirichlet sides y = 0, 1, and tau is the absorption time.  Paths are advanced
by Euler-Maruyama; reflection is applied through the exact folding map of the
line onto [0, 1], and the running force integral uses the left-endpoint rule.

Streams are counter-based (Philox) and split per fixed-size path chunk, so
the estimate is bit-reproducible for a given seed and config regardless of
how chunks would be scheduled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStart, NonFiniteValue
from .problem import ProblemSpec

DEFAULT_DT = 1e-5
DEFAULT_PATHS = 10_000
MAX_DT = 1e-3
MIN_PATHS = 100
_CHUNK = 20_000


@dataclass(frozen=True)
class McConfig:
    """Time step, path count, seed and the optional exit-bias correction."""

    dt: float = DEFAULT_DT
    n_paths: int = DEFAULT_PATHS
    seed: int = 0
    bridge_correction: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.dt <= MAX_DT:
            raise ValueError(f"dt must lie in (0, {MAX_DT}], got {self.dt}")
        if self.n_paths < MIN_PATHS:
            raise ValueError(f"n_paths must be >= {MIN_PATHS}, got {self.n_paths}")


@dataclass(frozen=True)
class McEstimate:
    """Sample mean, its standard error and the mean absorption time."""

    mean: float
    std_error: float
    n_paths: int
    mean_absorption_time: float
    seed: int
    dt: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "mean": self.mean,
                "std_error": self.std_error,
                "n_paths": self.n_paths,
                "mean_tau": self.mean_absorption_time,
                "seed": self.seed,
                "dt": self.dt,
            }
        )


def reflect_unit_interval(x: np.ndarray) -> np.ndarray:
    """Fold the real line onto [0, 1] by reflection at both endpoints."""
    m = np.mod(np.abs(x), 2.0)
    return np.where(m > 1.0, 2.0 - m, m)


def estimate_point(p: ProblemSpec, x0: float, y0: float, cfg: McConfig) -> McEstimate:
    """Estimate the solution value at one interior point.

    Args:
        p: problem instance.
        x0: start abscissa in [0, 1].
        y0: start ordinate, strictly inside (0, 1).
        cfg: simulation parameters.

    Raises:
        DegenerateStart: y0 on or outside the absorbing boundaries.
        NonFiniteValue: problem data evaluated to NaN/inf along a path.
    """
    if not 0.0 < y0 < 1.0:
        raise DegenerateStart(f"y0 must lie strictly inside (0, 1), got {y0}")
    if not 0.0 <= x0 <= 1.0:
        raise ValueError(f"x0 must lie in [0, 1], got {x0}")

    n_chunks = -(-cfg.n_paths // _CHUNK)
    streams = np.random.SeedSequence(cfg.seed).spawn(n_chunks)
    payoffs = np.empty(cfg.n_paths)
    taus = np.empty(cfg.n_paths)
    done = 0
    for chunk_index in range(n_chunks):
        size = min(_CHUNK, cfg.n_paths - done)
        rng = np.random.Generator(np.random.Philox(streams[chunk_index]))
        pay, tau = _run_chunk(p, x0, y0, cfg, size, rng)
        payoffs[done:done + size] = pay
        taus[done:done + size] = tau
        done += size

    if not np.all(np.isfinite(payoffs)):
        raise NonFiniteValue("payoff evaluated to a non-finite value")
    mean = float(np.mean(payoffs))
    std_error = float(np.std(payoffs, ddof=1) / np.sqrt(cfg.n_paths))
    return McEstimate(
        mean=mean,
        std_error=std_error,
        n_paths=cfg.n_paths,
        mean_absorption_time=float(np.mean(taus)),
        seed=cfg.seed,
        dt=cfg.dt,
    )


def _run_chunk(p: ProblemSpec, x0: float, y0: float, cfg: McConfig,
               size: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    dt = cfg.dt
    sqrt_dt = np.sqrt(dt)
    x_scale = sqrt_dt / p.eps

    x = np.full(size, float(x0))
    y = np.full(size, float(y0))
    force_acc = np.zeros(size)
    payoffs = np.empty(size)
    taus = np.empty(size)
    n_done = 0
    step = 0

    while x.size:
        step += 1
        force_acc += p.f(x, y) * dt
        noise = rng.standard_normal((2, x.size))
        x = reflect_unit_interval(x + x_scale * noise[0])
        y_new = y + sqrt_dt * noise[1]

        exited_bottom = y_new <= 0.0
        exited_top = y_new >= 1.0
        if cfg.bridge_correction:
            inside = ~(exited_bottom | exited_top)
            if inside.any():
                # probability that the bridge between the endpoints crossed
                p_bot = np.exp(-2.0 * np.maximum(y[inside] * y_new[inside], 0.0) / dt)
                p_top = np.exp(-2.0 * np.maximum((1.0 - y[inside]) * (1.0 - y_new[inside]), 0.0) / dt)
                draw = rng.uniform(size=int(inside.sum()))
                hit_bot = draw < p_bot
                hit_top = (~hit_bot) & (draw < p_bot + p_top)
                idx = np.flatnonzero(inside)
                exited_bottom[idx[hit_bot]] = True
                exited_top[idx[hit_top]] = True

        exited = exited_bottom | exited_top
        y = y_new
        if exited.any():
            xe = x[exited]
            value = np.where(exited_bottom[exited], p.phi0(xe), p.phi1(xe))
            pay = value + 0.5 * force_acc[exited]
            k = int(exited.sum())
            payoffs[n_done:n_done + k] = pay
            taus[n_done:n_done + k] = step * dt
            n_done += k
            keep = ~exited
            x = x[keep]
            y = y[keep]
            force_acc = force_acc[keep]

    return payoffs, taus
