"""Signatures of piecewise-linear paths and the controlled flow on G^N(R^d).

Controls are piecewise constant on a uniform grid, so every flow step is an
exact Chen product with the exponential of one linear segment.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .tensor import TruncatedTensor, basis_vector, tensor_product

DEFAULT_STEPS = 100


@dataclass(frozen=True)
class PiecewisePath:
    """Samples x(t_k) of a path in R^d, linearly interpolated between nodes."""

    times: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).ravel()
        points = np.asarray(self.points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        if points.shape[0] != times.size:
            raise ValueError(f"{times.size} times but {points.shape[0]} samples")
        if times.size < 2:
            raise ValueError("a path needs at least 2 samples")
        if times[0] != 0.0:
            raise ValueError(f"path must start at t=0, got t={times[0]}")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not (np.all(np.isfinite(points)) and np.all(np.isfinite(times))):
            raise ValueError("path samples must be finite")
        if np.any(points[0] != 0.0):
            raise ValueError(f"path must start at the origin, got {points[0]}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.points, axis=0)

    def length(self) -> float:
        return float(np.linalg.norm(self.increments, axis=1).sum())

    def restrict(self, start: int, stop: int) -> "PiecewisePath":
        """Sub-path on nodes start..stop (inclusive), re-anchored at t=0, x=0."""
        t = self.times[start:stop + 1]
        x = self.points[start:stop + 1]
        return PiecewisePath(t - t[0], x - x[0])


@dataclass(frozen=True)
class ControlPath:
    """Controls a(t_k) held constant on [t_k, t_{k+1}) over a uniform grid of ``horizon``."""

    values: np.ndarray
    horizon: float = 1.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 1:
            raise ValueError(f"controls must have shape (D, d) with D >= 1, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("controls must be finite")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "horizon", float(self.horizon))

    @classmethod
    def constant(cls, a, steps: int = DEFAULT_STEPS, horizon: float = 1.0) -> "ControlPath":
        a = np.asarray(a, dtype=float).ravel()
        return cls(np.tile(a, (steps, 1)), horizon)

    @property
    def steps(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.steps + 1)

    def speeds(self) -> np.ndarray:
        return np.linalg.norm(self.values, axis=1)


@dataclass(frozen=True)
class SignatureCurve:
    """Signatures xi(t_k) along a grid; ``elements`` has shape (D+1, n_coeffs)."""

    times: np.ndarray
    elements: np.ndarray
    dim: int
    depth: int

    def __len__(self):
        return self.elements.shape[0]

    def __getitem__(self, k) -> TruncatedTensor:
        return TruncatedTensor(self.dim, self.depth, self.elements[k])

    @property
    def endpoint(self) -> TruncatedTensor:
        return self[-1]


def vector_field(xi: TruncatedTensor, i: int) -> TruncatedTensor:
    """U_i(xi) = xi (x) e_i, truncated at the depth of ``xi``."""
    return tensor_product(xi, basis_vector(i, xi.dim, xi.depth))


def signature_of_path(path: PiecewisePath, depth: int) -> TruncatedTensor:
    states = kernels.chen_flow(path.increments, path.dim, depth)
    return TruncatedTensor(path.dim, depth, states[-1])


def flow_step(xi: TruncatedTensor, a, dt: float) -> TruncatedTensor:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    a = np.asarray(a, dtype=float).ravel()
    if a.size != xi.dim:
        raise ValueError(f"control has {a.size} components, state dimension is {xi.dim}")
    step = kernels.exp_level1(a * dt, xi.dim, xi.depth)
    return TruncatedTensor(xi.dim, xi.depth, kernels.tensor_mul(xi.coeffs, step, xi.dim, xi.depth))


def flow(controls: ControlPath, depth: int) -> SignatureCurve:
    states = kernels.chen_flow(controls.values * controls.dt, controls.dim, depth)
    return SignatureCurve(controls.grid, states, controls.dim, depth)


def path_from_controls(controls: ControlPath) -> PiecewisePath:
    pts = np.zeros((controls.steps + 1, controls.dim))
    np.cumsum(controls.values * controls.dt, axis=0, out=pts[1:])
    return PiecewisePath(controls.grid, pts)


def length(controls: ControlPath) -> float:
    return float(controls.dt * controls.speeds().sum())


def energy(controls: ControlPath) -> float:
    return float(0.5 * controls.dt * np.sum(controls.values**2))
