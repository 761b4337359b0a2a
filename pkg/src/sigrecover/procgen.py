"""Test-path generators: Ornstein-Uhlenbeck and Brownian paths.

Randomness comes from numpy's Philox counter-based generator seeded with the
user seed, and normals from ``Generator.standard_normal``; with a fixed numpy
version the output is bitwise reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signature import DEFAULT_STEPS, PiecewisePath


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class OuParams:
    """dX = kappa (theta - X) dt + sigma dW, simulated per coordinate.

    ``theta``, ``kappa`` and ``sigma`` may be scalars (shared by all
    coordinates) or length-``dim`` sequences.
    """

    dim: int = 2
    theta: float = 5.0
    kappa: float = 0.5
    sigma: float = 1.0
    x0: float = 0.0
    steps: int = DEFAULT_STEPS
    horizon: float = 1.0
    seed: int = 0

    def vector(self, name: str) -> np.ndarray:
        value = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (self.dim,))
        return np.array(value)

    def validate(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        for name in ("theta", "kappa", "sigma", "x0"):
            try:
                vec = self.vector(name)
            except ValueError as exc:
                raise ValueError(f"{name} must be a scalar or have {self.dim} entries") from exc
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"{name} must be finite")
        if np.any(self.vector("kappa") < 0):
            raise ValueError("kappa must be nonnegative")
        if np.any(self.vector("sigma") < 0):
            raise ValueError("sigma must be nonnegative")


def simulate_ou(params: OuParams) -> PiecewisePath:
    """Euler-Maruyama on a uniform grid, shifted so the returned path starts at 0."""
    params.validate()
    n, dt = params.steps, params.horizon / params.steps
    theta, kappa, sigma = params.vector("theta"), params.vector("kappa"), params.vector("sigma")
    noise = make_rng(params.seed).standard_normal((n, params.dim))
    x = np.empty((n + 1, params.dim))
    x[0] = params.vector("x0")
    sq = np.sqrt(dt)
    for k in range(n):
        x[k + 1] = x[k] + kappa * (theta - x[k]) * dt + sigma * sq * noise[k]
    times = np.linspace(0.0, params.horizon, n + 1)
    return PiecewisePath(times, x - x[0])


def simulate_bm(dim: int, sigma: float = 1.0, steps: int = DEFAULT_STEPS, horizon: float = 1.0,
                seed: int = 0) -> PiecewisePath:
    return simulate_ou(OuParams(dim=dim, theta=0.0, kappa=0.0, sigma=sigma, steps=steps,
                                horizon=horizon, seed=seed))
