import time, torch, numpy as np
from blockforge.synth import SynthConfig, synth_dataset
from blockforge.diffusion.training import TrainConfig, train, build_model, loss, make_batch
from blockforge.diffusion.schedule import make_linear_schedule
from blockforge.diffusion.sampling import sample
from blockforge.evalmetrics import floating_rate, feature_matrix, frechet_distance, uniform_random_layouts

ds = synth_dataset(SynthConfig(count=512, seed=100))
ref = feature_matrix(ds)
rand = uniform_random_layouts(128, seed=5)
print(f"fd(random)={frechet_distance(feature_matrix(rand), ref):.3f} floating(random)={floating_rate(rand):.3f}", flush=True)

# hand-rolled loop so we can probe mid-training
cfg = TrainConfig(epochs=4000, batch_size=64, seed=0, learning_rate=3e-4)
torch.manual_seed(cfg.seed)
model = build_model(cfg)
sched = make_linear_schedule(cfg.T)
nprng = np.random.default_rng(cfg.seed)
trng = torch.Generator().manual_seed(cfg.seed)
opt = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
t0 = time.time()
for step in range(1, cfg.epochs + 1):
    idx = nprng.integers(0, len(ds), size=cfg.batch_size)
    x0, prompts = make_batch([ds[i] for i in idx], cfg, nprng)
    total, nt, it = loss(model, x0, trng, sched, cfg, prompts)
    opt.zero_grad(); total.backward(); opt.step()
    if step in (300, 600, 1000, 1500, 2500, 4000):
        gen = sample(model, sched, "a two-story modern house with a flat roof", 48,
                     torch.Generator().manual_seed(9), max_boxes=cfg.N, steps=250)
        fr = floating_rate(gen)
        fd = frechet_distance(feature_matrix(gen), ref)
        print(f"step={step} ({time.time()-t0:.0f}s) noise={nt.item():.4f} "
              f"floating={fr:.3f} fd={fd:.3f}", flush=True)
