"""Shared test utilities: tiny configs and the finite-difference oracle."""
import numpy as np
import torch

from blockforge.diffusion.training import TrainConfig, build_model
from blockforge.synth import SynthConfig, synth_dataset


def tiny_train_config(**overrides) -> TrainConfig:
    base = dict(epochs=30, batch_size=8, learning_rate=1e-3, d=16, L=1,
                heads=2, N=8, T=100, seed=0)
    base.update(overrides)
    return TrainConfig(**base)


def tiny_dataset(count=16, seed=11, max_boxes=8):
    return synth_dataset(SynthConfig(count=count, seed=seed,
                                     max_boxes=max_boxes))


def finite_difference_check(loss_fn, model, h=1e-3, rel_tol=1e-2,
                            skip_zero_pairs=True, inactive_sample=20,
                            rng=None):
    """Compare analytic gradients of ``loss_fn()`` against central finite
    differences for every active parameter.

    Embedding rows whose analytic gradient is exactly zero (text buckets
    absent from the batch) are asserted zero and spot-checked with a
    random FD sample instead of being probed exhaustively.

    Returns (checked, worst_rel_err).
    """
    model.zero_grad()
    loss = loss_fn()
    loss.backward()
    grads = {name: (p.grad.clone() if p.grad is not None
                    else torch.zeros_like(p))
             for name, p in model.named_parameters()}

    rng = rng or np.random.default_rng(0)
    checked = 0
    worst = 0.0
    with torch.no_grad():
        for name, param in model.named_parameters():
            grad = grads[name]
            flat = param.view(-1)
            gflat = grad.view(-1)
            if name == "token_embed.weight":
                rows = grad.abs().sum(dim=1)
                active = torch.nonzero(rows > 0).view(-1).tolist()
                idxs = [r * param.shape[1] + c for r in active
                        for c in range(param.shape[1])]
                inactive = torch.nonzero(rows == 0).view(-1).tolist()
                pick = rng.choice(len(inactive),
                                  min(inactive_sample, len(inactive)),
                                  replace=False) if inactive else []
                idxs += [int(inactive[i]) * param.shape[1] for i in pick]
            else:
                idxs = range(flat.numel())
            for i in idxs:
                orig = flat[i].item()
                flat[i] = orig + h
                plus = loss_fn().item()
                flat[i] = orig - h
                minus = loss_fn().item()
                flat[i] = orig
                fd = (plus - minus) / (2 * h)
                an = gflat[i].item()
                denom = max(abs(fd), abs(an))
                if denom < 1e-8:
                    continue
                rel = abs(fd - an) / denom
                worst = max(worst, rel)
                assert rel < rel_tol, (
                    f"{name}[{i}]: analytic {an:.6g} vs fd {fd:.6g} "
                    f"(rel {rel:.3g})")
                checked += 1
    return checked, worst
