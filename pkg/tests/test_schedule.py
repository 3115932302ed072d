import numpy as np
import pytest

from blockforge.diffusion.schedule import (
    NoiseSchedule,
    make_linear_schedule,
    predict_x0,
    q_sample,
)
from blockforge.errors import BadScheduleParams, BadShape

# Final cumulative signal coefficient, evaluated with 50-digit arithmetic
# in an independent script (tolerance 5%).
ALPHA_BAR_1000 = 4.0358297653756833e-05


@pytest.fixture(scope="module")
def sched():
    return make_linear_schedule(1000, 1e-4, 0.02)


def test_endpoints(sched):
    assert sched.beta(1) == pytest.approx(1e-4, abs=0)
    assert sched.beta(1000) == pytest.approx(0.02, abs=0)
    assert sched.T == 1000


def test_alpha_bar_first(sched):
    assert sched.alpha_bar(1) == pytest.approx(0.9999, abs=1e-12)


def test_alpha_bar_last_extended_precision(sched):
    assert sched.alpha_bar(1000) == pytest.approx(ALPHA_BAR_1000, rel=0.05)


def test_alpha_bar_strictly_decreasing(sched):
    assert (np.diff(sched.alpha_bars) < 0).all()


def test_posterior_vars(sched):
    assert sched.posterior_var(1) == 0.0
    prev = np.concatenate([[1.0], sched.alpha_bars[:-1]])
    want = (1 - prev) / (1 - sched.alpha_bars) * sched.betas
    want[0] = 0.0
    assert np.allclose(sched.posterior_vars, want)
    assert (sched.posterior_vars[1:] <= sched.betas[1:]).all()


def test_sqrt_identity(sched):
    # sqrt(ab)^2 + (1 - ab) = 1 by construction
    for t in (1, 17, 500, 1000):
        ab = sched.alpha_bar(t)
        assert np.sqrt(ab) ** 2 + (1 - ab) == pytest.approx(1.0, abs=1e-12)


def test_bad_params():
    with pytest.raises(BadScheduleParams):
        make_linear_schedule(0, 1e-4, 0.02)
    with pytest.raises(BadScheduleParams):
        make_linear_schedule(10, 0.0, 0.02)
    with pytest.raises(BadScheduleParams):
        make_linear_schedule(10, 0.03, 0.02)
    with pytest.raises(BadScheduleParams):
        make_linear_schedule(10, 0.1, 1.0)


def test_q_sample_degenerate_cases(sched, rng):
    x0 = rng.normal(size=(4, 20))
    zeros = np.zeros_like(x0)
    t = 321
    ab = sched.alpha_bar(t)
    assert np.allclose(q_sample(x0, t, zeros, sched), np.sqrt(ab) * x0)
    eps = rng.normal(size=(4, 20))
    assert np.allclose(q_sample(zeros, t, eps, sched),
                       np.sqrt(1 - ab) * eps)


def test_q_sample_shape_check(sched, rng):
    with pytest.raises(BadShape):
        q_sample(rng.normal(size=(4, 20)), 5, rng.normal(size=(4, 19)), sched)


def test_q_sample_moments(sched, rng):
    # empirical-moment oracle: 1e4 draws at t=500
    t = 500
    x0 = rng.uniform(0, 1, size=(1, 8))
    draws = np.stack([
        q_sample(x0, t, rng.standard_normal(x0.shape), sched)
        for _ in range(10_000)
    ])
    ab = sched.alpha_bar(t)
    assert np.allclose(draws.mean(axis=0), np.sqrt(ab) * x0, atol=0.02)
    assert np.allclose(draws.std(axis=0), np.sqrt(1 - ab), rtol=0.02)


def test_predict_x0_inverts_q_sample(sched, rng):
    for t in (1, 250, 1000):
        x0 = rng.normal(size=(3, 20))
        eps = rng.normal(size=(3, 20))
        xt = q_sample(x0, t, eps, sched)
        assert np.abs(predict_x0(xt, eps, t, sched) - x0).max() < 1e-5


def test_predict_x0_zero_eps(sched, rng):
    xt = rng.normal(size=(2, 20))
    t = 1000
    want = xt / np.sqrt(sched.alpha_bar(t))
    assert np.allclose(predict_x0(xt, np.zeros_like(xt), t, sched), want)


def test_predict_x0_direct_formula(sched, rng):
    # straight-line re-evaluation of the formula at t=1000
    t = 1000
    xt = rng.normal(size=(5, 20))
    eps_hat = rng.normal(size=(5, 20))
    ab = sched.alpha_bar(t)
    want = (xt - np.sqrt(1 - ab) * eps_hat) / np.sqrt(ab)
    assert np.abs(predict_x0(xt, eps_hat, t, sched) - want).max() < 1e-6
