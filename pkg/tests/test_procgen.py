import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sigrecover.procgen import OuParams, make_rng, simulate_bm, simulate_ou


def test_zero_noise_zero_mean_is_zero_path():
    path = simulate_ou(OuParams(sigma=0.0, theta=0.0, seed=1))
    assert np.all(path.points == 0.0)
    assert path.points.shape == (101, 2)
    np.testing.assert_allclose(path.times, np.linspace(0, 1, 101))


def test_deterministic_recursion_and_closed_form():
    path = simulate_ou(OuParams(dim=1, sigma=0.0, theta=5.0, kappa=0.5, steps=100))
    recursion = 5.0 * (1.0 - (1.0 - 0.5 * 0.01) ** 100)
    assert path.points[-1, 0] == pytest.approx(recursion, rel=1e-13)
    closed = 5.0 * (1.0 - math.exp(-0.5))
    assert closed == pytest.approx(1.96735, abs=1e-5)
    assert abs(path.points[-1, 0] - closed) <= 1e-2


def test_matches_independent_euler_maruyama():
    # documented generator contract: Philox(seed), standard normals of shape (steps, dim)
    z = np.random.Generator(np.random.Philox(7)).standard_normal((100, 2))
    x = np.zeros((101, 2))
    for k in range(100):
        x[k + 1] = x[k] + 0.5 * (5.0 - x[k]) * 0.01 + 1.0 * math.sqrt(0.01) * z[k]
    path = simulate_ou(OuParams(theta=5.0, kappa=0.5, sigma=1.0, steps=100, seed=7))
    np.testing.assert_array_equal(path.points, x)


def test_frozen_seed_values():
    # frozen output for seed 7, guards the cross-platform reproducibility contract
    path = simulate_ou(OuParams(seed=7))
    assert path.points[1].tolist() == [-0.11535643350339764, 0.1098419514359385]
    assert path.points[-1].tolist() == [1.3410771028215438, 1.5985966809237664]


def test_seed_determinism():
    a = simulate_ou(OuParams(seed=11))
    b = simulate_ou(OuParams(seed=11))
    c = simulate_ou(OuParams(seed=12))
    assert a.points.tobytes() == b.points.tobytes()
    assert not np.array_equal(a.points, c.points)


def test_start_shift_and_overrides():
    path = simulate_ou(OuParams(dim=3, theta=[1.0, 2.0, 3.0], kappa=[0.5, 0.0, 1.0], sigma=0.0, x0=[1.0, 0.0, 2.0]))
    assert np.all(path.points[0] == 0.0)
    # coordinate 2 has kappa=0 and sigma=0, so it stays put
    assert np.all(path.points[:, 1] == 0.0)
    # coordinate 1 started at its mean, so it stays there as well
    assert np.all(path.points[:, 0] == 0.0)
    assert path.points[-1, 2] > 0.0


@pytest.mark.parametrize("kw", [
    {"dim": 0}, {"steps": 0}, {"horizon": 0.0}, {"kappa": -1.0}, {"sigma": -0.1},
    {"theta": [1.0, 2.0, 3.0]}, {"theta": math.nan},
])
def test_invalid_params(kw):
    with pytest.raises(ValueError):
        simulate_ou(OuParams(**kw))


def test_bm_examples():
    assert np.all(simulate_bm(2, sigma=0.0, seed=3).points == 0.0)
    a = simulate_bm(2, sigma=0.7, steps=50, seed=4)
    b = simulate_ou(OuParams(dim=2, kappa=0.0, theta=123.0, sigma=0.7, steps=50, seed=4))
    np.testing.assert_array_equal(a.points, b.points)


def test_bm_increment_variance():
    sigma, steps, horizon = 1.3, 10_000, 2.0
    inc = simulate_bm(1, sigma, steps, horizon, seed=5).increments.ravel()
    var = sigma**2 * horizon / steps
    se = var * math.sqrt(2.0 / (steps - 1))
    assert abs(inc.var(ddof=1) - var) <= 3 * se
    assert abs(inc.mean()) <= 3 * math.sqrt(var / steps)


@pytest.mark.slow
def test_ensemble_mean_reversion():
    n = 10_000
    ends = np.array([simulate_ou(OuParams(dim=1, seed=s)).points[-1, 0] for s in range(n)])
    target = 5.0 * (1.0 - math.exp(-0.5))
    se = ends.std(ddof=1) / math.sqrt(n)
    assert abs(ends.mean() - target) <= 3 * se


def test_make_rng_is_philox():
    assert isinstance(make_rng(0).bit_generator, np.random.Philox)


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 60),
       st.floats(0.1, 5.0), st.floats(0.0, 3.0), st.floats(0.0, 2.0))
def test_ou_property(seed, dim, steps, horizon, kappa, sigma):
    params = OuParams(dim=dim, theta=1.5, kappa=kappa, sigma=sigma, steps=steps, horizon=horizon, seed=seed)
    path = simulate_ou(params)
    assert path.points.shape == (steps + 1, dim)
    assert np.all(path.points[0] == 0.0)
    assert path.times[-1] == pytest.approx(horizon, rel=1e-15)
    again = simulate_ou(params)
    assert again.points.tobytes() == path.points.tobytes()
    # the noise enters linearly: the sigma=0 run is the drift-only skeleton
    drift = simulate_ou(OuParams(dim=dim, theta=1.5, kappa=kappa, sigma=0.0, steps=steps, horizon=horizon))
    if sigma == 0.0:
        np.testing.assert_array_equal(path.points, drift.points)
