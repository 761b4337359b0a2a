"""Iterative Pontryagin scheme with an augmented-Hamiltonian control update.

One iteration:

1. integrate the costate backward with implicit Euler, solving each implicit
   step by fixed-point iteration;
2. sweep forward, choosing each control as the minimiser of the Hamiltonian
   plus the memory term C |omega - a_prev|^2 and advancing the state by an
   exact Chen step;
3. accept the sweep only if the objective strictly decreases, otherwise keep
   the previous controls and double C.

Two costate discretisations are available. ``"implicit_euler"`` applies
implicit Euler to the full state gradient of the Hamiltonian at each node.
``"exact_source"`` (default) treats the coupling term the same way but
integrates the running-cost source gamma * d/dt grad f exactly along the known
state segment, i.e. replaces dt * gamma * Hess f . xi' by
gamma * (grad f(xi_{k+1}) - grad f(xi_k)). The first scheme carries an
O(gamma * dt) error in gamma * grad f + p that does not vanish at the target,
which stalls the iteration well before the endpoint is matched.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .cost import PENALTY, VARIABLE_TIME, MODES, CostParams, terminal_cost
from .signature import DEFAULT_STEPS, ControlPath, SignatureCurve, energy, flow, length
from .tensor import TruncatedTensor, is_group_like

log = logging.getLogger(__name__)


COSTATE_SCHEMES = ("exact_source", "implicit_euler")


class CostateError(RuntimeError):
    """The implicit-Euler fixed-point iteration failed to contract."""


@dataclass(frozen=True)
class SolverParams:
    steps: int = DEFAULT_STEPS
    max_iter: int = 2000
    C0: float = 1.0
    c_grow: float = 2.0
    c_shrink: float = 0.9
    C_min: float = 1e-6
    C_max: float = 1e12
    fp_iters: int = 50
    fp_tol: float = 1e-10
    stall_tol: float = 1e-10
    stall_window: int = 10
    mode: str = PENALTY
    gamma: float = 1e3
    horizon: float = 1.0
    costate_scheme: str = "exact_source"

    def __post_init__(self):
        if self.steps < 2:
            raise ValueError(f"steps must be >= 2, got {self.steps}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.C0 > 0:
            raise ValueError(f"C0 must be positive, got {self.C0}")
        if not self.c_grow > 1:
            raise ValueError(f"c_grow must exceed 1, got {self.c_grow}")
        if not 0 < self.c_shrink <= 1:
            raise ValueError(f"c_shrink must lie in (0, 1], got {self.c_shrink}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.fp_iters < 1:
            raise ValueError(f"fp_iters must be >= 1, got {self.fp_iters}")
        if self.costate_scheme not in COSTATE_SCHEMES:
            raise ValueError(f"costate_scheme must be one of {COSTATE_SCHEMES}, got {self.costate_scheme!r}")

    def cost_params(self, target: TruncatedTensor) -> CostParams:
        return CostParams(target=target, gamma=self.gamma, mode=self.mode)


@dataclass(frozen=True)
class CostateCurve:
    times: np.ndarray
    elements: np.ndarray
    dim: int
    depth: int
    residual: np.ndarray

    def __getitem__(self, k) -> TruncatedTensor:
        return TruncatedTensor(self.dim, self.depth, self.elements[k])

    @property
    def max_residual(self) -> float:
        return float(self.residual.max())


@dataclass
class SolveResult:
    controls: ControlPath
    states: SignatureCurve
    costates: CostateCurve
    cost_trace: list
    endpoint_error: float
    length: float
    energy: float
    iterations_used: int
    rejections: int
    status: str
    final_C: float
    stationarity: float = math.nan
    costate_residuals: list = field(default_factory=list)

    @property
    def accepted(self) -> int:
        return len(self.cost_trace) - 1

    @property
    def final_signature(self) -> TruncatedTensor:
        return self.states.endpoint


def initial_controls(target: TruncatedTensor, steps: int = DEFAULT_STEPS, horizon: float = 1.0,
                     mode: str = PENALTY) -> ControlPath:
    """Constant chord control towards the level-1 part of ``target``.

    In variable-time mode the chord is normalised to unit speed. A target with
    (numerically) zero displacement has no chord; a unit-speed planar loop in
    the first two coordinates is used instead so that the first costate does
    not vanish identically.
    """
    chord = np.array(target.level(1)) / horizon
    nrm = float(np.linalg.norm(chord))
    if mode == PENALTY:
        return ControlPath.constant(chord, steps, horizon)
    if nrm > 1e-12:
        return ControlPath.constant(chord / nrm, steps, horizon)
    values = np.zeros((steps, target.dim))
    s = (np.arange(steps) + 0.5) / steps
    if target.dim == 1:
        values[:, 0] = np.where(s < 0.5, 1.0, -1.0)
    else:
        values[:, 0] = np.cos(2 * np.pi * s)
        values[:, 1] = np.sin(2 * np.pi * s)
    return ControlPath(values, horizon)


def costate_backward(states: SignatureCurve, controls: ControlPath, params: CostParams,
                     fp_iters: int = 50, fp_tol: float = 1e-10,
                     scheme: str = "exact_source") -> CostateCurve:
    """Backward costate sweep from p(T) = 0; each implicit step is solved by fixed-point iteration.

    ``residual[k]`` is the max-abs defect of the implicit equation at node k
    after the iteration stopped (the terminal node has residual 0).
    """
    if len(states) != controls.steps + 1:
        raise ValueError(f"{len(states)} states for {controls.steps} control intervals")
    if scheme not in COSTATE_SCHEMES:
        raise ValueError(f"scheme must be one of {COSTATE_SCHEMES}, got {scheme!r}")
    p, residual, stuck = kernels.costate_sweep(
        states.elements, np.ascontiguousarray(controls.values), params.target.coeffs,
        params.weight, controls.dt, fp_iters, fp_tol, scheme == "implicit_euler",
        states.dim, states.depth,
    )
    if np.any(stuck):
        nodes = np.flatnonzero(stuck)
        raise CostateError(
            f"fixed-point iteration grew for {fp_iters} consecutive steps at nodes {nodes[:5].tolist()}; "
            "refine the grid or lower gamma"
        )
    return CostateCurve(states.times, p, states.dim, states.depth, residual)


def control_update(xi: TruncatedTensor, a_prev, p: TruncatedTensor, C: float, params: CostParams) -> np.ndarray:
    """Minimiser of H(xi, omega, p) + C |omega - a_prev|^2 over omega.

    Penalty mode has the closed form (2C a_prev - b) / (1 + 2C). In
    variable-time mode omega is restricted to the unit sphere and the
    minimiser is the normalised vector 2C a_prev - b.
    """
    from .cost import control_coefficients

    if not C > 0:
        raise ValueError(f"C must be positive, got {C}")
    a_prev = np.asarray(a_prev, dtype=float).ravel()
    w = 2.0 * C * a_prev - control_coefficients(xi, p, params)
    if params.mode == VARIABLE_TIME:
        nrm = np.linalg.norm(w)
        return a_prev.copy() if nrm < 1e-12 else w / nrm
    return w / (1.0 + 2.0 * C)


def forward_update(costates: CostateCurve, prev_controls: ControlPath, C: float,
                   params: CostParams) -> tuple:
    controls, states = kernels.forward_update(
        costates.elements, prev_controls.values, params.target.coeffs, params.weight, C,
        prev_controls.dt, params.mode == VARIABLE_TIME, prev_controls.dim, costates.depth,
    )
    ctrl = ControlPath(controls, prev_controls.horizon)
    return ctrl, SignatureCurve(ctrl.grid, states, ctrl.dim, costates.depth)


def objective(controls: ControlPath, states: SignatureCurve, params: CostParams) -> float:
    f = terminal_cost(states.endpoint, params.target)
    if params.mode == VARIABLE_TIME:
        return f
    return energy(controls) + params.gamma * f


def _objective_arrays(values, dt, end, target, mode, gamma):
    # diverging candidates may overflow; they come out inf and are rejected
    r = end - target
    r[0] = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        x = float(r @ r)
        f = x / (math.sqrt(1.0 + x) + 1.0) if math.isfinite(x) else math.inf
        if mode == VARIABLE_TIME:
            return f
        return 0.5 * dt * float(np.sum(values * values)) + gamma * f


def stationarity_gap(controls: ControlPath, states: SignatureCurve, costates: CostateCurve,
                     params: CostParams) -> float:
    """max_k |a_k + b_k|: first-order condition of the pointwise Hamiltonian minimisation (penalty mode)."""
    target = params.target.coeffs
    gap = 0.0
    for k in range(controls.steps):
        xi = states.elements[k]
        r = xi - target
        r[0] = 0.0
        q = params.weight * r / np.sqrt(1.0 + r @ r) + costates.elements[k]
        b = kernels.control_coeffs(xi, q, states.dim, states.depth)
        gap = max(gap, float(np.max(np.abs(controls.values[k] + b))))
    return gap


def solve(target: TruncatedTensor, init_controls: ControlPath | None = None,
          params: SolverParams | None = None) -> SolveResult:
    """Run the iterative scheme from ``init_controls`` towards ``target``.

    The returned result always holds the best accepted iterate; its
    ``cost_trace`` starts with the initial objective and strictly decreases.
    """
    params = params or SolverParams()
    if not is_group_like(target, 1e-6):
        log.warning("target is not group-like to 1e-6; proceeding anyway")
    if init_controls is None:
        init_controls = initial_controls(target, params.steps, params.horizon, params.mode)
    if init_controls.dim != target.dim:
        raise ValueError(f"controls have dimension {init_controls.dim}, target {target.dim}")
    if params.mode == VARIABLE_TIME:
        speeds = init_controls.speeds()
        if np.any(speeds < 1e-12):
            raise ValueError("variable-time initial controls must be nonzero everywhere")
        init_controls = ControlPath(init_controls.values / speeds[:, None], init_controls.horizon)

    cp = params.cost_params(target)
    dim, depth = target.dim, target.depth
    dt = init_controls.dt
    tgt = target.coeffs
    controls = init_controls
    states = flow(controls, depth)
    cost = objective(controls, states, cp)
    trace = [cost]
    C = params.C0
    rejections = 0
    residuals = []
    status = "max_iter"
    iterations = 0

    def backward(ctrl, st):
        curve = costate_backward(st, ctrl, cp, params.fp_iters, params.fp_tol, params.costate_scheme)
        residuals.append(curve.max_residual)
        return curve

    costates = backward(controls, states)
    if cost <= 0.0:
        status = "optimal"
    else:
        stall = 0
        for iterations in range(1, params.max_iter + 1):
            new_vals, new_states = kernels.forward_update(
                costates.elements, controls.values, tgt, cp.weight, C, dt,
                params.mode == VARIABLE_TIME, dim, depth,
            )
            new_cost = _objective_arrays(new_vals, dt, new_states[-1], tgt, params.mode, params.gamma)
            if math.isfinite(new_cost) and np.all(np.isfinite(new_states)) and new_cost < cost:
                rel = (cost - new_cost) / max(abs(cost), 1e-300)
                controls = ControlPath(new_vals, controls.horizon)
                states = SignatureCurve(controls.grid, new_states, dim, depth)
                cost = new_cost
                trace.append(cost)
                C = max(params.C_min, params.c_shrink * C)
                try:
                    costates = backward(controls, states)
                except CostateError as exc:
                    log.warning("stopping: %s", exc)
                    status = "costate_noncontraction"
                    break
                if cost <= 0.0:
                    status = "optimal"
                    break
                stall = stall + 1 if rel < params.stall_tol else 0
                if stall >= params.stall_window:
                    status = "stalled"
                    break
            else:
                # previous controls kept; their costate is unchanged, so no recomputation
                rejections += 1
                C *= params.c_grow
                if C > params.C_max:
                    status = "step_limit"
                    break
        if len(trace) == 1 and status != "optimal":
            status = "no_accepted_update"
            log.info("no update accepted in %d iterations (C=%g)", iterations, C)

    res = SolveResult(
        controls=controls,
        states=states,
        costates=costates,
        cost_trace=trace,
        endpoint_error=terminal_cost(states.endpoint, target),
        length=length(controls),
        energy=energy(controls),
        iterations_used=iterations,
        rejections=rejections,
        status=status,
        final_C=C,
        costate_residuals=residuals,
    )
    if params.mode == PENALTY:
        res.stationarity = stationarity_gap(controls, states, costates, cp)
    return res


def with_horizon(params: SolverParams, horizon: float) -> SolverParams:
    return replace(params, horizon=horizon)
