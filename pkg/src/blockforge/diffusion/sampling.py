"""Ancestral sampling from a trained denoiser."""
from __future__ import annotations

import math

import numpy as np
import torch

from ..layout import BoxLayout, CategoryTaxonomy, DEFAULT_TAXONOMY, decode
from .model import DenoiserModel
from .schedule import NoiseSchedule


def _step_sequence(T: int, steps: int | None) -> list[int]:
    """Descending 1-indexed timesteps; the full range or an even stride."""
    if steps is None or steps >= T:
        return list(range(T, 0, -1))
    ts = np.unique(np.round(np.linspace(1, T, steps)).astype(int))
    return [int(t) for t in ts[::-1]]


def sample(model: DenoiserModel, sched: NoiseSchedule, prompt: str,
           count: int, rng: torch.Generator, max_boxes: int = 32,
           steps: int | None = None,
           taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY,
           id_prefix: str = "gen") -> list[BoxLayout]:
    """DDPM ancestral sampling, decoded with empty rows dropped.

    With ``steps`` set, sampling walks an evenly strided subsequence of
    timesteps using the respaced posterior (variances recomputed from the
    retained alpha_bar values); the final step is always noise-free.
    """
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            x = torch.randn((count, max_boxes, model.row_dim), generator=rng)
            ctx = model.encode_text([prompt] * count)
            ts = _step_sequence(sched.T, steps)
            for i, t in enumerate(ts):
                ab_t = sched.alpha_bar(t)
                ab_prev = sched.alpha_bar(ts[i + 1]) if i + 1 < len(ts) else 1.0
                alpha_eff = ab_t / ab_prev
                beta_eff = 1.0 - alpha_eff
                eps_hat = model(x, t, ctx)
                mean = (x - beta_eff / math.sqrt(1.0 - ab_t) * eps_hat) \
                    / math.sqrt(alpha_eff)
                if i + 1 < len(ts):
                    var = (1.0 - ab_prev) / (1.0 - ab_t) * beta_eff
                    z = torch.randn(x.shape, generator=rng)
                    x = mean + math.sqrt(var) * z
                else:
                    x = mean
    finally:
        if was_training:
            model.train()
    layouts = []
    for j in range(count):
        layouts.append(decode(x[j].numpy(), taxonomy, drop_empty=True,
                              prompt=prompt, layout_id=f"{id_prefix}{j:04d}"))
    return layouts
