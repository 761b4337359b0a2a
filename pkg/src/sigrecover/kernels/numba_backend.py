"""Loop kernels compiled with numba.

Every function mirrors one in :mod:`numpy_backend` with the identical
signature. ``off`` is the level offset table from :func:`sigrecover._layout.offsets`.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def tensor_mul(g, h, dim, depth, off):
    out = np.zeros(off[depth + 1])
    for k in range(depth + 1):
        for i in range(k + 1):
            j = k - i
            nj = off[j + 1] - off[j]
            for a in range(off[i + 1] - off[i]):
                ga = g[off[i] + a]
                if ga == 0.0:
                    continue
                base = off[k] + a * nj
                for b in range(nj):
                    out[base + b] += ga * h[off[j] + b]
    return out


@njit(cache=True)
def exp_level1(v, dim, depth, off):
    out = np.zeros(off[depth + 1])
    out[0] = 1.0
    for k in range(1, depth + 1):
        inv_k = 1.0 / k
        for u in range(off[k] - off[k - 1]):
            prev = out[off[k - 1] + u] * inv_k
            base = off[k] + u * dim
            for i in range(dim):
                out[base + i] = prev * v[i]
    return out


@njit(cache=True)
def _mul_exp(xi, v, dim, depth, off):
    return tensor_mul(xi, exp_level1(v, dim, depth, off), dim, depth, off)


@njit(cache=True)
def chen_flow(increments, dim, depth, off):
    steps = increments.shape[0]
    states = np.zeros((steps + 1, off[depth + 1]))
    states[0, 0] = 1.0
    for t in range(steps):
        states[t + 1] = _mul_exp(states[t], increments[t], dim, depth, off)
    return states


@njit(cache=True)
def control_coeffs(xi, q, dim, depth, off):
    # b_i = <q, xi (x) e_i>; level N of xi shifts past the truncation
    b = np.zeros(dim)
    for k in range(1, depth + 1):
        for u in range(off[k] - off[k - 1]):
            x = xi[off[k - 1] + u]
            base = off[k] + u * dim
            for i in range(dim):
                b[i] += q[base + i] * x
    return b


@njit(cache=True)
def _driving_term(xi, a, target, gamma, dim, depth, off):
    """p-independent part of dH/dxi; level 0 left at zero."""
    n = off[depth + 1]
    r = xi - target
    r[0] = 0.0
    s2 = 1.0
    for j in range(1, n):
        s2 += r[j] * r[j]
    s = np.sqrt(s2)
    vx = np.zeros(n)
    for k in range(1, depth + 1):
        for u in range(off[k] - off[k - 1]):
            x = xi[off[k - 1] + u]
            base = off[k] + u * dim
            for i in range(dim):
                vx[base + i] = x * a[i]
    rate_num = 0.0
    for j in range(1, n):
        rate_num += r[j] * vx[j]
    out = np.zeros(n)
    for k in range(1, depth + 1):
        for u in range(off[k + 1] - off[k]):
            j = off[k] + u
            down = 0.0
            if k < depth:
                base = off[k + 1] + u * dim
                for i in range(dim):
                    down += r[base + i] * a[i]
            out[j] = gamma * ((vx[j] + down) / s - rate_num * r[j] / (s2 * s))
    return out


@njit(cache=True)
def _costate_shift(p, a, dim, depth, off):
    # (L p)_j = sum_i p_{j i} a_i, zero on the top level and on level 0
    out = np.zeros(off[depth + 1])
    for k in range(1, depth):
        for u in range(off[k + 1] - off[k]):
            base = off[k + 1] + u * dim
            acc = 0.0
            for i in range(dim):
                acc += p[base + i] * a[i]
            out[off[k] + u] = acc
    return out


@njit(cache=True)
def ham_state_grad(xi, a, p, target, gamma, dim, depth, off):
    return _driving_term(xi, a, target, gamma, dim, depth, off) + _costate_shift(p, a, dim, depth, off)


@njit(cache=True)
def _grad_f(xi, target):
    r = xi - target
    r[0] = 0.0
    return r / np.sqrt(1.0 + np.sum(r * r))


@njit(cache=True)
def costate_sweep(states, controls, target, gamma, dt, fp_iters, fp_tol, literal, dim, depth, off):
    """Backward sweep p_D = 0, p_k = base_k + dt * L(a_k) p_k, solved by fixed-point iteration.

    literal: base_k = p_{k+1} + dt * (p-free part of dH/dxi at node k).
    otherwise the running-cost source is integrated exactly along the segment:
    base_k = p_{k+1} + gamma * (grad f(xi_{k+1}) - grad f(xi_k)) + dt * L(a_k) gamma grad f(xi_k).
    """
    steps = controls.shape[0]
    n = off[depth + 1]
    costates = np.zeros((steps + 1, n))
    residual = np.zeros(steps + 1)
    stuck = np.zeros(steps + 1, dtype=np.bool_)
    g_next = gamma * _grad_f(states[steps], target)
    for t in range(steps - 1, -1, -1):
        a = controls[t]
        if literal:
            base = costates[t + 1] + dt * _driving_term(states[t], a, target, gamma, dim, depth, off)
        else:
            g_here = gamma * _grad_f(states[t], target)
            base = costates[t + 1] + (g_next - g_here) + dt * _costate_shift(g_here, a, dim, depth, off)
            g_next = g_here
        p = costates[t + 1].copy()
        last_change = np.inf
        growth = 0
        for _ in range(fp_iters):
            new = base + dt * _costate_shift(p, a, dim, depth, off)
            change = 0.0
            for j in range(n):
                c = abs(new[j] - p[j])
                if c > change:
                    change = c
            p = new
            if change <= fp_tol:
                break
            if change > last_change:
                growth += 1
            else:
                growth = 0
            last_change = change
        stuck[t] = growth >= fp_iters - 1
        p[0] = 0.0
        costates[t] = p
        lhs = base + dt * _costate_shift(p, a, dim, depth, off)
        res = 0.0
        for j in range(1, n):
            c = abs(p[j] - lhs[j])
            if c > res:
                res = c
        residual[t] = res
    return costates, residual, stuck


@njit(cache=True)
def forward_update(costates, prev_controls, target, gamma, C, dt, variable_time, dim, depth, off):
    steps = prev_controls.shape[0]
    n = off[depth + 1]
    controls = np.zeros((steps, dim))
    states = np.zeros((steps + 1, n))
    states[0, 0] = 1.0
    for t in range(steps):
        xi = states[t]
        r = xi - target
        r[0] = 0.0
        s = np.sqrt(1.0 + np.sum(r[1:] * r[1:]))
        q = gamma * r / s + costates[t]
        b = control_coeffs(xi, q, dim, depth, off)
        w = 2.0 * C * prev_controls[t] - b
        if variable_time:
            nrm = np.sqrt(np.sum(w * w))
            if nrm < 1e-12:
                w = prev_controls[t].copy()
            else:
                w = w / nrm
        else:
            w = w / (1.0 + 2.0 * C)
        controls[t] = w
        states[t + 1] = _mul_exp(xi, w * dt, dim, depth, off)
    return controls, states
