"""Terminal cost, running-cost rate and the control Hamiltonian.

The terminal cost is the 1-Lipschitz distance proxy

    f(g, target) = sqrt(1 + |g - target|^2) - 1

with |.| the flat Euclidean norm over levels 1..N. ``hamiltonian`` is
written straight from its definition through the vector fields; the state
gradient is the closed-form derivative evaluated by the compiled kernels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .signature import vector_field
from .tensor import TruncatedTensor, inner_product

PENALTY = "penalty"
VARIABLE_TIME = "variable_time"
MODES = (PENALTY, VARIABLE_TIME)


@dataclass(frozen=True)
class CostParams:
    target: TruncatedTensor
    gamma: float = 1e3
    mode: str = PENALTY

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")

    @property
    def weight(self) -> float:
        """Multiplier on the terminal-cost gradient; gamma is dropped in variable-time mode."""
        return 1.0 if self.mode == VARIABLE_TIME else float(self.gamma)


def _residual(g: TruncatedTensor, target: TruncatedTensor) -> np.ndarray:
    g._check(target)
    r = g.coeffs - target.coeffs
    r[0] = 0.0
    return r


def terminal_cost(g: TruncatedTensor, target: TruncatedTensor) -> float:
    r = _residual(g, target)
    # sqrt(1+x)-1 written as x/(sqrt(1+x)+1) to keep precision for tiny residuals
    x = float(r @ r)
    return x / (np.sqrt(1.0 + x) + 1.0)


def terminal_cost_gradient(g: TruncatedTensor, target: TruncatedTensor) -> TruncatedTensor:
    r = _residual(g, target)
    return TruncatedTensor(g.dim, g.depth, r / np.sqrt(1.0 + r @ r))


def _drift(xi: TruncatedTensor, a) -> TruncatedTensor:
    a = np.asarray(a, dtype=float).ravel()
    total = TruncatedTensor.zeros(xi.dim, xi.depth)
    for i in range(xi.dim):
        total = total + a[i] * vector_field(xi, i + 1)
    return total


def running_cost_rate(xi: TruncatedTensor, a, params: CostParams) -> float:
    """d/dt f(xi(t), target) along the flow driven by control ``a``."""
    return inner_product(terminal_cost_gradient(xi, params.target), _drift(xi, a))


def hamiltonian(xi: TruncatedTensor, omega, p: TruncatedTensor, params: CostParams) -> float:
    omega = np.asarray(omega, dtype=float).ravel()
    covector = params.weight * terminal_cost_gradient(xi, params.target) + p
    value = inner_product(covector, _drift(xi, omega))
    if params.mode == PENALTY:
        value += 0.5 * float(omega @ omega)
    return value


def hamiltonian_state_gradient(xi: TruncatedTensor, a, p: TruncatedTensor, params: CostParams) -> TruncatedTensor:
    """dH/dxi_j for every word j of levels 1..N (level-0 entry is 0)."""
    grad = kernels.ham_state_grad(
        xi.coeffs, a, p.coeffs, params.target.coeffs, params.weight, xi.dim, xi.depth
    )
    return TruncatedTensor(xi.dim, xi.depth, grad)


def control_coefficients(xi: TruncatedTensor, p: TruncatedTensor, params: CostParams) -> np.ndarray:
    """b_i = <weight * grad f + p, U_i(xi)>, the linear part of H in omega."""
    q = params.weight * terminal_cost_gradient(xi, params.target) + p
    return kernels.control_coeffs(xi.coeffs, np.ascontiguousarray(q.coeffs), xi.dim, xi.depth)
