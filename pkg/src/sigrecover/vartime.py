"""Variable final time: search for the shortest horizon a unit-speed control needs.

With |a(t)| = 1 the horizon T equals the path length, so the smallest T for
which the fixed-horizon solver can drive the endpoint error below ``eps`` is
the length of the shortest path with the target signature.

The search has two phases. Expansion multiplies T by ``grow`` until a solve is
feasible. Refinement then bisects between the largest infeasible and the
smallest feasible horizon seen so far. Every solve is warm-started from the
controls of the best feasible solve (or of the last solve during expansion).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .cost import VARIABLE_TIME
from .pmp import SolveResult, SolverParams, initial_controls, solve
from .signature import ControlPath
from .tensor import TruncatedTensor

log = logging.getLogger(__name__)

TOO_SHORT, CORRECT, TOO_LONG = "S1", "S2", "S3"


class TimeSearchError(RuntimeError):
    """No feasible horizon was found within the expansion budget."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


def _default_inner():
    return SolverParams(mode=VARIABLE_TIME, max_iter=20000)


@dataclass(frozen=True)
class TimeSearchParams:
    """Outer-loop settings; ``T_init=None`` means max(|level-1 of target|, 1e-3)."""

    T_init: float | None = None
    eps: float = 1e-3
    grow: float = 1.5
    refine_steps: int = 25
    refine_shrink: float = 0.5
    max_expansions: int = 20
    inner: SolverParams = field(default_factory=_default_inner)

    def __post_init__(self):
        if self.T_init is not None and not self.T_init > 0:
            raise ValueError(f"T_init must be positive, got {self.T_init}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not self.grow > 1:
            raise ValueError(f"grow must exceed 1, got {self.grow}")
        if not 0 < self.refine_shrink < 1:
            raise ValueError(f"refine_shrink must lie in (0, 1), got {self.refine_shrink}")
        if self.refine_steps < 0:
            raise ValueError(f"refine_steps must be >= 0, got {self.refine_steps}")
        if self.max_expansions < 0:
            raise ValueError(f"max_expansions must be >= 0, got {self.max_expansions}")
        if self.inner.mode != VARIABLE_TIME:
            raise ValueError("inner solver must run in variable_time mode")

    def start_time(self, target: TruncatedTensor) -> float:
        if self.T_init is not None:
            return self.T_init
        return max(float(np.linalg.norm(target.level(1))), 1e-3)


@dataclass
class VarTimeResult:
    T_star: float
    result: SolveResult
    history: list
    scenario_trace: list
    solves: list = field(default_factory=list, repr=False)

    @property
    def length(self) -> float:
        return self.result.length

    @property
    def endpoint_error(self) -> float:
        return self.result.endpoint_error


def speed_profile(controls: ControlPath) -> tuple:
    """Mean and coefficient of variation of the grid speeds |a_k|."""
    speeds = controls.speeds()
    if speeds.size == 0:
        raise ValueError("empty control path")
    mean = float(speeds.mean())
    cv = float(speeds.std() / mean) if mean > 0 else 0.0
    return mean, cv


def resample_controls(controls: ControlPath, horizon: float, steps: int | None = None,
                      unit_speed: bool = True) -> ControlPath:
    """Carry controls to a new horizon (and optionally a new grid) in normalised time.

    Each new interval takes the value of the old interval containing its
    midpoint. With ``unit_speed`` the rows are renormalised to norm 1.
    """
    steps = controls.steps if steps is None else steps
    if steps == controls.steps:
        values = controls.values.copy()
    else:
        mid = (np.arange(steps) + 0.5) / steps
        values = controls.values[np.minimum((mid * controls.steps).astype(int), controls.steps - 1)]
    if unit_speed:
        nrm = np.linalg.norm(values, axis=1)
        if np.any(nrm < 1e-12):
            raise ValueError("cannot renormalise a zero control")
        values = values / nrm[:, None]
    return ControlPath(values, horizon)


def search_final_time(target: TruncatedTensor, params: TimeSearchParams | None = None,
                      init_controls: ControlPath | None = None) -> VarTimeResult:
    params = params or TimeSearchParams()
    inner = params.inner
    eps = params.eps
    history, solves = [], []

    def run(T, warm):
        ctrl = (initial_controls(target, inner.steps, T, VARIABLE_TIME) if warm is None
                else resample_controls(warm, T, inner.steps))
        res = solve(target, ctrl, replace(inner, horizon=T))
        history.append((T, res.endpoint_error, res.length))
        solves.append(res)
        log.info("T=%.9g endpoint_error=%.3e status=%s iters=%d", T, res.endpoint_error,
                 res.status, res.iterations_used)
        return res

    T = params.start_time(target)
    warm = init_controls
    t_lo = 0.0
    best = None
    for expansion in range(params.max_expansions + 1):
        res = run(T, warm)
        if res.endpoint_error <= eps:
            best = (T, res)
            break
        t_lo = T
        warm = res.controls
        T *= params.grow
    if best is None:
        raise TimeSearchError(
            f"no feasible horizon after {params.max_expansions} expansions (last T={t_lo:.6g}, "
            f"endpoint_error={history[-1][1]:.3e} > eps={eps:g}); the target may be unreachable "
            "or eps below the solver resolution",
            history,
        )

    for _ in range(params.refine_steps):
        t_hi = best[0]
        if t_hi - t_lo < eps * t_hi:
            break
        T = t_lo + params.refine_shrink * (t_hi - t_lo)
        res = run(T, best[1].controls)
        if res.endpoint_error <= eps:
            best = (T, res)
        else:
            t_lo = T

    T_star = best[0]
    scenarios = [TOO_SHORT if err > eps else (CORRECT if t == T_star else TOO_LONG)
                 for t, err, _ in history]
    return VarTimeResult(T_star, best[1], history, scenarios, solves)
