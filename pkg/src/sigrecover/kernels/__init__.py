"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time from ``SIGRECOVER_BACKEND``:

* ``numba`` (default when numba imports cleanly)
* ``numpy`` (always available)

Both backends share one calling convention: flat float64 coefficient vectors
in the layout of :mod:`sigrecover._layout`, plus ``dim``, ``depth`` and the
offset table ``off``. The thin wrappers below fill in ``off`` so callers only
pass shapes.
"""
import logging
import os

import numpy as np

from .. import _layout
from . import numpy_backend

log = logging.getLogger(__name__)

ENV_VAR = "SIGRECOVER_BACKEND"


def _load(name):
    if name == "numpy":
        return numpy_backend
    if name == "numba":
        from . import numba_backend
        return numba_backend
    raise ValueError(f"unknown kernel backend {name!r}; expected 'numba' or 'numpy'")


def get_backend(name: str):
    """Return the backend module by name (used by tests and the benchmark)."""
    return _load(name)


def _select():
    requested = os.environ.get(ENV_VAR, "").strip().lower()
    if requested:
        return requested, _load(requested)
    try:
        return "numba", _load("numba")
    except ImportError:  # pragma: no cover - numba is a declared dependency
        log.warning("numba unavailable, falling back to numpy kernels")
        return "numpy", numpy_backend


BACKEND_NAME, _impl = _select()


def _off(dim, depth):
    return _layout.offsets(dim, depth)


def tensor_mul(g, h, dim, depth):
    return _impl.tensor_mul(g, h, dim, depth, _off(dim, depth))


def exp_level1(v, dim, depth):
    return _impl.exp_level1(np.ascontiguousarray(v, dtype=float), dim, depth, _off(dim, depth))


def chen_flow(increments, dim, depth):
    inc = np.ascontiguousarray(increments, dtype=float).reshape(-1, dim)
    return _impl.chen_flow(inc, dim, depth, _off(dim, depth))


def control_coeffs(xi, q, dim, depth):
    return _impl.control_coeffs(xi, q, dim, depth, _off(dim, depth))


def ham_state_grad(xi, a, p, target, gamma, dim, depth):
    a = np.ascontiguousarray(a, dtype=float)
    return _impl.ham_state_grad(xi, a, p, target, float(gamma), dim, depth, _off(dim, depth))


def costate_sweep(states, controls, target, gamma, dt, fp_iters, fp_tol, literal, dim, depth):
    return _impl.costate_sweep(
        states, controls, target, float(gamma), float(dt), int(fp_iters), float(fp_tol),
        bool(literal), dim, depth, _off(dim, depth),
    )


def forward_update(costates, prev_controls, target, gamma, C, dt, variable_time, dim, depth):
    return _impl.forward_update(
        costates, np.ascontiguousarray(prev_controls, dtype=float), target, float(gamma),
        float(C), float(dt), bool(variable_time), dim, depth, _off(dim, depth),
    )
