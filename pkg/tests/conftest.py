import itertools
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sigrecover.tensor import TruncatedTensor

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")


# Word-dictionary tensors: {tuple_of_letters: coeff}. Deliberately knows nothing
# about the flat layout or the compiled kernels, so it can serve as an oracle.

def words(dim, depth):
    for k in range(depth + 1):
        yield from itertools.product(range(1, dim + 1), repeat=k)


def to_dict(g: TruncatedTensor) -> dict:
    return {w: g[w] for w in words(g.dim, g.depth)}


def from_dict(d: dict, dim, depth) -> TruncatedTensor:
    out = TruncatedTensor.zeros(dim, depth)
    for w, c in d.items():
        out = out.with_coeff(w, c)
    return out


def dict_mul(a: dict, b: dict, depth) -> dict:
    out = {}
    for u, cu in a.items():
        if cu == 0.0:
            continue
        for w, cw in b.items():
            if len(u) + len(w) <= depth:
                out[u + w] = out.get(u + w, 0.0) + cu * cw
    return out


def dict_exp_vector(v, depth) -> dict:
    """exp of a level-1 vector: coefficient of word w is prod v_{w_j} / |w|!."""
    dim = len(v)
    return {w: math.prod(v[i - 1] for i in w) / math.factorial(len(w)) for w in words(dim, depth)}


def random_tensor(rng, dim, depth, scale=1.0, level0=None) -> TruncatedTensor:
    from sigrecover import _layout

    c = scale * rng.standard_normal(_layout.total_size(dim, depth))
    if level0 is not None:
        c[0] = level0
    return TruncatedTensor(dim, depth, c)


def random_group(rng, dim, depth, segments=3, scale=0.7) -> TruncatedTensor:
    from sigrecover.tensor import exp_vector, tensor_product

    g = exp_vector(scale * rng.standard_normal(dim), depth)
    for _ in range(segments - 1):
        g = tensor_product(g, exp_vector(scale * rng.standard_normal(dim), depth))
    return g


# ---------------------------------------------------------------- costate oracles

def drift_matrix(a, dim, depth):
    """Matrix of xi -> sum_i a_i xi (x) e_i, built column by column from vector fields."""
    from sigrecover import _layout
    from sigrecover.signature import vector_field

    n = _layout.total_size(dim, depth)
    m = np.zeros((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        x = TruncatedTensor(dim, depth, e)
        m[:, j] = sum(a[i] * vector_field(x, i + 1).coeffs for i in range(dim))
    return m


def exact_source_residual(states, controls, costates, params):
    """Defect of p_k = p_{k+1} + w (grad f_{k+1} - grad f_k) + dt L_k (w grad f_k + p_k), levels 1..N."""
    from sigrecover.cost import terminal_cost_gradient

    dim, depth, dt, w = states.dim, states.depth, controls.dt, params.weight
    worst = 0.0
    for k in range(controls.steps):
        lt = drift_matrix(controls.values[k], dim, depth).T
        g_here = w * terminal_cost_gradient(states[k], params.target).coeffs
        g_next = w * terminal_cost_gradient(states[k + 1], params.target).coeffs
        rhs = costates.elements[k + 1] + g_next - g_here + dt * lt @ (g_here + costates.elements[k])
        worst = max(worst, np.abs(costates.elements[k] - rhs)[1:].max())
    return worst


def implicit_euler_residual(states, controls, costates, params):
    """Defect of p_k = p_{k+1} + dt dH/dxi(xi_k, a_k, p_k), levels 1..N."""
    from sigrecover.cost import hamiltonian_state_gradient

    worst = 0.0
    for k in range(controls.steps):
        dh = hamiltonian_state_gradient(states[k], controls.values[k], costates[k], params).coeffs
        defect = costates.elements[k] - costates.elements[k + 1] - controls.dt * dh
        worst = max(worst, np.abs(defect)[1:].max())
    return worst


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
