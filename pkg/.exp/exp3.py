import time, torch, numpy as np
from blockforge.synth import SynthConfig, synth_dataset
from blockforge.diffusion.training import TrainConfig, train
from blockforge.diffusion.sampling import sample
from blockforge.evalmetrics import floating_rate, feature_matrix, frechet_distance, uniform_random_layouts

ds = synth_dataset(SynthConfig(count=512, seed=100))
ref = feature_matrix(ds)
rand = uniform_random_layouts(128, seed=5)
print(f"fd(random)={frechet_distance(feature_matrix(rand), ref):.3f} floating(random)={floating_rate(rand):.3f}", flush=True)

def probe(tag, model, sched, N):
    for stride in (250, 1000):
        gen = sample(model, sched, "a two-story modern house with a flat roof", 48,
                     torch.Generator().manual_seed(9), max_boxes=N, steps=stride)
        fr = floating_rate(gen)
        fd = frechet_distance(feature_matrix(gen), ref)
        wd = [min(b.size) for l in gen for b in l.boxes if b.category == 1]
        wt = [min(b.size) for l in gen for b in l.boxes if b.category == 0]
        print(f"{tag} stride={stride}: floating={fr:.3f} fd={fd:.2f} "
              f"win_thin={np.mean(wd) if wd else -1:.4f} wall_thin={np.mean(wt) if wt else -1:.4f}", flush=True)

for tag, iou, steps in (("iou_on_1500", True, 1500), ("iou_off_1500", False, 1500)):
    cfg = TrainConfig(epochs=steps, batch_size=64, seed=0, iou_loss=iou)
    t0 = time.time()
    model, sched, log = train(ds, cfg)
    print(f"{tag} trained {time.time()-t0:.0f}s last_noise={log[-1]['noise_term']:.4f}", flush=True)
    probe(tag, model, sched, cfg.N)
