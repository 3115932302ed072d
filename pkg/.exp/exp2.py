import time, torch, numpy as np
from blockforge.synth import SynthConfig, synth_dataset
from blockforge.diffusion.training import TrainConfig, train
from blockforge.diffusion.sampling import sample
from blockforge.evalmetrics import floating_rate, feature_matrix, frechet_distance

ds = synth_dataset(SynthConfig(count=512, seed=100))
ref = feature_matrix(ds)

def probe(tag, model, sched, N):
    for stride in (100, 250, 1000):
        t0 = time.time()
        gen = sample(model, sched, "a two-story modern house with a flat roof", 48,
                     torch.Generator().manual_seed(9), max_boxes=N, steps=stride)
        fr = floating_rate(gen)
        fd = frechet_distance(feature_matrix(gen), ref)
        # window/wall stats
        import numpy as np
        wd, wt, nwin, nwall = [], [], 0, 0
        for l in gen:
            for b in l.boxes:
                if b.category == 1:
                    nwin += 1; wd.append(min(b.size))
                if b.category == 0:
                    nwall += 1; wt.append(min(b.size))
        print(f"{tag} stride={stride}: floating={fr:.3f} fd={fd:.2f} "
              f"nwin={nwin} nwall={nwall} win_thin={np.mean(wd) if wd else -1:.4f} "
              f"wall_thin={np.mean(wt) if wt else -1:.4f} ({time.time()-t0:.0f}s)", flush=True)

for tag, iou in (("iou_on", True), ("iou_off", False)):
    cfg = TrainConfig(epochs=600, batch_size=64, seed=0, iou_loss=iou)
    t0 = time.time()
    model, sched, log = train(ds, cfg)
    print(f"{tag} trained {time.time()-t0:.0f}s last_noise={log[-1]['noise_term']:.4f}", flush=True)
    probe(tag, model, sched, cfg.N)
