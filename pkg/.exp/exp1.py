import time, json, torch, numpy as np
from blockforge.synth import SynthConfig, synth_dataset
from blockforge.diffusion.training import TrainConfig, train
from blockforge.diffusion.sampling import sample
from blockforge.evalmetrics import feature_matrix, frechet_distance, floating_rate, uniform_random_layouts

ds = synth_dataset(SynthConfig(count=512, seed=100))
ref_feats = feature_matrix(ds)
rand = uniform_random_layouts(128, seed=5)
rand_feats = feature_matrix(rand)
fd_rand = frechet_distance(rand_feats, ref_feats)
fr_rand = floating_rate(rand)
print(f"fd(random)={fd_rand:.3f} floating(random)={fr_rand:.3f}", flush=True)

for steps in (600, 1500):
    t0 = time.time()
    cfg = TrainConfig(epochs=steps, batch_size=64, seed=0)
    model, sched, log = train(ds, cfg)
    ttrain = time.time() - t0
    t0 = time.time()
    gen = sample(model, sched, "a two-story modern house with a flat roof", 128,
                 torch.Generator().manual_seed(9), max_boxes=cfg.N, steps=100)
    tsamp = time.time() - t0
    gen_feats = feature_matrix(gen)
    fd = frechet_distance(gen_feats, ref_feats)
    fr = floating_rate(gen)
    nw = np.mean([len(l.boxes) for l in gen])
    print(f"steps={steps} train={ttrain:.0f}s sample={tsamp:.0f}s "
          f"fd={fd:.3f} (ratio {fd/fd_rand:.3f}) floating={fr:.3f} "
          f"(margin {fr_rand-fr:.3f}) mean_boxes={nw:.1f} "
          f"last_noise={log[-1]['noise_term']:.4f}", flush=True)
