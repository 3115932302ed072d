"""Training loop and losses for the layout denoiser.

The loss is the DDPM noise-prediction objective plus an overlap penalty on
the recovered clean layout: per batch element we decode the predicted
clean rows, keep rows whose argmax class is neither wall nor empty, and
penalize their summed pairwise IoU weighted by 0.1 * abar_t.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, asdict, replace
from typing import Sequence

import numpy as np
import torch

from ..errors import EmptyDataset
from ..layout import (
    AUGMENT_OPS,
    SIZE_FLOOR,
    BoxLayout,
    CategoryTaxonomy,
    DEFAULT_TAXONOMY,
    augment,
    encode,
    pad_layout,
)
from .model import DenoiserModel
from .schedule import NoiseSchedule, make_linear_schedule

# Reference values at paper scale; desk-scale defaults below are what the
# CLI and tests actually run.
PAPER_EPOCHS = 50_000
PAPER_BATCH_SIZE = 64
PAPER_LEARNING_RATE = 2e-4

IOU_LOSS_WEIGHT = 0.1


@dataclass(frozen=True)
class TrainConfig:
    """Desk-scale training configuration.

    ``epochs`` counts optimizer steps (each step draws a fresh minibatch);
    the three flags are the ablation axes.
    """

    epochs: int = 3000
    batch_size: int = 64
    learning_rate: float = 2e-4
    d: int = 128
    L: int = 4
    heads: int = 4
    N: int = 32
    T: int = 1000
    padreal: bool = True
    spatial_encoding: bool = True
    iou_loss: bool = True
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known})


def build_model(cfg: TrainConfig,
                taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY) -> DenoiserModel:
    return DenoiserModel(row_dim=6 + taxonomy.onehot_width, d=cfg.d, L=cfg.L,
                         heads=cfg.heads,
                         spatial_encoding=cfg.spatial_encoding)


def _schedule_coeffs(sched: NoiseSchedule, t: torch.Tensor,
                     dtype: torch.dtype):
    """Per-element (sqrt_ab, sqrt_1mab, ab) for a 1-indexed t vector."""
    ab = torch.as_tensor(sched.alpha_bars, dtype=dtype)[t - 1]
    return ab.sqrt(), (1 - ab).sqrt(), ab


def overlap_penalty(x0_hat: torch.Tensor, taxonomy: CategoryTaxonomy
                    ) -> torch.Tensor:
    """Summed pairwise IoU of decoded rows, per batch element.

    Mirrors layout.decode + layout.pairwise_iou_sum with exclude_walls and
    exclude_empty, but stays differentiable through centers and sizes.
    """
    center = x0_hat[..., 0:3].clamp(0.0, 1.0)
    size = x0_hat[..., 3:6].clamp(SIZE_FLOOR, 1.0)
    cls = x0_hat[..., 6:].argmax(dim=-1)
    keep = (cls != 0) & (cls != taxonomy.empty_index)

    lo = center - size / 2
    hi = center + size / 2
    overlap = (torch.minimum(hi.unsqueeze(2), hi.unsqueeze(1))
               - torch.maximum(lo.unsqueeze(2), lo.unsqueeze(1)))
    inter = overlap.clamp(min=0.0).prod(dim=-1)
    vol = size.prod(dim=-1)
    union = vol.unsqueeze(2) + vol.unsqueeze(1) - inter
    iou = inter / union
    pair = keep.unsqueeze(2) & keep.unsqueeze(1)
    n = x0_hat.shape[1]
    upper = torch.triu(torch.ones(n, n, dtype=torch.bool,
                                  device=x0_hat.device), diagonal=1)
    return (iou * (pair & upper)).sum(dim=(1, 2))


def loss_terms(model: DenoiserModel, x0: torch.Tensor, t: torch.Tensor,
               eps: torch.Tensor, sched: NoiseSchedule, cfg: TrainConfig,
               ctx: torch.Tensor | None = None,
               taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY):
    """Loss for fixed timesteps and noise draws (used by tests directly)."""
    sqrt_ab, sqrt_1mab, ab = _schedule_coeffs(sched, t, x0.dtype)
    xt = sqrt_ab[:, None, None] * x0 + sqrt_1mab[:, None, None] * eps
    eps_hat = model(xt, t, ctx)
    noise_term = ((eps - eps_hat) ** 2).mean()
    if cfg.iou_loss:
        x0_hat = (xt - sqrt_1mab[:, None, None] * eps_hat) / sqrt_ab[:, None, None]
        iou_term = (IOU_LOSS_WEIGHT * ab * overlap_penalty(x0_hat, taxonomy)).mean()
    else:
        iou_term = torch.zeros((), dtype=x0.dtype, device=x0.device)
    return noise_term + iou_term, noise_term, iou_term


def loss(model: DenoiserModel, x0_batch: torch.Tensor,
         rng: torch.Generator, sched: NoiseSchedule, cfg: TrainConfig,
         prompts: Sequence[str] | None = None,
         taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY):
    """Draw (t, eps) per batch element and return (total, noise, iou)."""
    b = x0_batch.shape[0]
    t = torch.randint(1, sched.T + 1, (b,), generator=rng)
    eps = torch.randn(x0_batch.shape, generator=rng, dtype=x0_batch.dtype)
    ctx = model.encode_text(list(prompts) if prompts is not None else [""] * b)
    return loss_terms(model, x0_batch, t, eps, sched, cfg, ctx, taxonomy)


def make_batch(layouts: Sequence[BoxLayout], cfg: TrainConfig,
               rng: np.random.Generator,
               taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY,
               augment_ops: bool = True):
    """Augment, pad and encode a list of layouts into a (B, N, D) tensor."""
    rows = []
    prompts = []
    for layout in layouts:
        if augment_ops:
            layout = augment(layout, AUGMENT_OPS[int(rng.integers(len(AUGMENT_OPS)))])
        mode = "padreal" if cfg.padreal else "zeros"
        layout = pad_layout(layout, cfg.N, rng, mode=mode, taxonomy=taxonomy)
        rows.append(encode(layout, taxonomy))
        prompts.append(layout.prompt)
    x0 = torch.from_numpy(np.stack(rows)).to(torch.float32)
    return x0, prompts


def train(dataset: Sequence[BoxLayout], cfg: TrainConfig,
          taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY,
          log_path=None, log_every: int = 1):
    """Train a denoiser; deterministic for a fixed cfg.seed.

    Returns (model, sched, log) where log is a list of per-step dicts
    {"epoch", "noise_term", "iou_term", "total"}.
    """
    if not dataset:
        raise EmptyDataset("train needs at least one layout")
    torch.manual_seed(cfg.seed)
    model = build_model(cfg, taxonomy)
    sched = make_linear_schedule(cfg.T)
    nprng = np.random.default_rng(cfg.seed)
    torchrng = torch.Generator().manual_seed(cfg.seed)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)

    log: list[dict] = []
    log_file = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        for step in range(1, cfg.epochs + 1):
            idx = nprng.integers(0, len(dataset), size=cfg.batch_size)
            x0, prompts = make_batch([dataset[i] for i in idx], cfg, nprng,
                                     taxonomy)
            total, noise_term, iou_term = loss(model, x0, torchrng, sched,
                                               cfg, prompts, taxonomy)
            opt.zero_grad()
            total.backward()
            opt.step()
            if step % log_every == 0 or step == cfg.epochs:
                entry = {
                    "epoch": step,
                    "noise_term": float(noise_term.item()),
                    "iou_term": float(iou_term.item()),
                    "total": float(total.item()),
                }
                log.append(entry)
                if log_file:
                    log_file.write(json.dumps(entry) + "\n")
    finally:
        if log_file:
            log_file.close()
    return model, sched, log
