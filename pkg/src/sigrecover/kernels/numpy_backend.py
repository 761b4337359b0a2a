"""Vectorized numpy kernels; drop-in replacements for :mod:`numba_backend`."""
import numpy as np


def tensor_mul(g, h, dim, depth, off):
    out = np.zeros(off[depth + 1])
    for k in range(depth + 1):
        block = out[off[k]:off[k + 1]]
        for i in range(k + 1):
            j = k - i
            block += np.outer(g[off[i]:off[i + 1]], h[off[j]:off[j + 1]]).ravel()
    return out


def exp_level1(v, dim, depth, off):
    out = np.empty(off[depth + 1])
    out[0] = 1.0
    for k in range(1, depth + 1):
        out[off[k]:off[k + 1]] = np.outer(out[off[k - 1]:off[k]], v).ravel() / k
    return out


def chen_flow(increments, dim, depth, off):
    steps = increments.shape[0]
    states = np.zeros((steps + 1, off[depth + 1]))
    states[0, 0] = 1.0
    for t in range(steps):
        states[t + 1] = tensor_mul(states[t], exp_level1(increments[t], dim, depth, off), dim, depth, off)
    return states


def control_coeffs(xi, q, dim, depth, off):
    b = np.zeros(dim)
    for k in range(1, depth + 1):
        b += xi[off[k - 1]:off[k]] @ q[off[k]:off[k + 1]].reshape(-1, dim)
    return b


def _shift_down(x, a, dim, depth, off):
    # (L x)_j = sum_i x_{j i} a_i on levels 1..N-1
    out = np.zeros(off[depth + 1])
    for k in range(1, depth):
        out[off[k]:off[k + 1]] = x[off[k + 1]:off[k + 2]].reshape(-1, dim) @ a
    return out


def _driving_term(xi, a, target, gamma, dim, depth, off):
    r = xi - target
    r[0] = 0.0
    s2 = 1.0 + r @ r
    s = np.sqrt(s2)
    vx = np.zeros(off[depth + 1])
    for k in range(1, depth + 1):
        vx[off[k]:off[k + 1]] = np.outer(xi[off[k - 1]:off[k]], a).ravel()
    out = gamma * ((vx + _shift_down(r, a, dim, depth, off)) / s - (r @ vx) * r / (s2 * s))
    out[0] = 0.0
    return out


def ham_state_grad(xi, a, p, target, gamma, dim, depth, off):
    return _driving_term(xi, a, target, gamma, dim, depth, off) + _shift_down(p, a, dim, depth, off)


def _grad_f(xi, target):
    r = xi - target
    r[0] = 0.0
    return r / np.sqrt(1.0 + r @ r)


def costate_sweep(states, controls, target, gamma, dt, fp_iters, fp_tol, literal, dim, depth, off):
    steps = controls.shape[0]
    costates = np.zeros((steps + 1, off[depth + 1]))
    residual = np.zeros(steps + 1)
    stuck = np.zeros(steps + 1, dtype=bool)
    g_next = gamma * _grad_f(states[steps], target)
    for t in range(steps - 1, -1, -1):
        a = controls[t]
        if literal:
            base = costates[t + 1] + dt * _driving_term(states[t], a, target, gamma, dim, depth, off)
        else:
            g_here = gamma * _grad_f(states[t], target)
            base = costates[t + 1] + (g_next - g_here) + dt * _shift_down(g_here, a, dim, depth, off)
            g_next = g_here
        p = costates[t + 1].copy()
        last_change = np.inf
        growth = 0
        for _ in range(fp_iters):
            new = base + dt * _shift_down(p, a, dim, depth, off)
            change = np.max(np.abs(new - p))
            p = new
            if change <= fp_tol:
                break
            growth = growth + 1 if change > last_change else 0
            last_change = change
        stuck[t] = growth >= fp_iters - 1
        p[0] = 0.0
        costates[t] = p
        residual[t] = np.max(np.abs(p - base - dt * _shift_down(p, a, dim, depth, off))[1:])
    return costates, residual, stuck


def forward_update(costates, prev_controls, target, gamma, C, dt, variable_time, dim, depth, off):
    steps = prev_controls.shape[0]
    controls = np.zeros((steps, dim))
    states = np.zeros((steps + 1, off[depth + 1]))
    states[0, 0] = 1.0
    for t in range(steps):
        xi = states[t]
        r = xi - target
        r[0] = 0.0
        q = gamma * r / np.sqrt(1.0 + r @ r) + costates[t]
        w = 2.0 * C * prev_controls[t] - control_coeffs(xi, q, dim, depth, off)
        if variable_time:
            nrm = np.linalg.norm(w)
            w = prev_controls[t].copy() if nrm < 1e-12 else w / nrm
        else:
            w = w / (1.0 + 2.0 * C)
        controls[t] = w
        states[t + 1] = tensor_mul(xi, exp_level1(w * dt, dim, depth, off), dim, depth, off)
    return controls, states
