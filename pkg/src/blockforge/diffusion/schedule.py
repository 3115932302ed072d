"""Linear noise schedule and the closed-form forward/inverse maps.

Timesteps are 1-indexed (t = 1..T); internally arrays store index t-1.
The coefficient helpers work on anything supporting scalar multiplication
and addition, so both numpy arrays and torch tensors pass through.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import BadScheduleParams, BadShape


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step noise tables.

    betas[t-1] is the step-t noise variance; alpha_bars[t-1] the cumulative
    signal coefficient; posterior_vars[t-1] the reverse-process variance
    (zero at t=1 by convention).
    """

    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray
    posterior_vars: np.ndarray

    @property
    def T(self) -> int:
        return len(self.betas)

    def beta(self, t: int) -> float:
        return float(self.betas[t - 1])

    def alpha(self, t: int) -> float:
        return float(self.alphas[t - 1])

    def alpha_bar(self, t: int) -> float:
        return float(self.alpha_bars[t - 1])

    def posterior_var(self, t: int) -> float:
        return float(self.posterior_vars[t - 1])


def make_linear_schedule(T: int, beta_start: float = 1e-4,
                         beta_end: float = 0.02) -> NoiseSchedule:
    """Betas interpolated linearly, endpoints inclusive."""
    if T < 1:
        raise BadScheduleParams(f"T must be >= 1, got {T}")
    if not (0 < beta_start <= beta_end < 1):
        raise BadScheduleParams(
            f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}")
    if T == 1:
        betas = np.array([beta_start], dtype=np.float64)
    else:
        betas = np.linspace(beta_start, beta_end, T, dtype=np.float64)
    alphas = 1.0 - betas
    alpha_bars = np.cumprod(alphas)
    prev = np.concatenate([[1.0], alpha_bars[:-1]])
    posterior_vars = (1.0 - prev) / (1.0 - alpha_bars) * betas
    posterior_vars[0] = 0.0
    return NoiseSchedule(betas, alphas, alpha_bars, posterior_vars)


def _check_t(sched: NoiseSchedule, t: int) -> None:
    if not 1 <= t <= sched.T:
        raise BadScheduleParams(f"t must be in [1, {sched.T}], got {t}")


def q_sample(x0, t: int, eps, sched: NoiseSchedule):
    """Forward process: sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps."""
    _check_t(sched, t)
    if getattr(eps, "shape", None) != getattr(x0, "shape", None):
        raise BadShape("eps must have the shape of x0")
    ab = sched.alpha_bar(t)
    return math.sqrt(ab) * x0 + math.sqrt(1.0 - ab) * eps


def predict_x0(xt, eps_hat, t: int, sched: NoiseSchedule):
    """Clean-layout estimate: (xt - sqrt(1 - abar_t) * eps_hat) / sqrt(abar_t)."""
    _check_t(sched, t)
    ab = sched.alpha_bar(t)
    return (xt - math.sqrt(1.0 - ab) * eps_hat) / math.sqrt(ab)
