"""Layout-distribution evaluation: rasters, features, surrogate metrics.

The protocol mirrors image-distance evaluation of generated layouts, but
with handcrafted features instead of a pretrained vision network so the
numbers are self-contained and deterministic: each layout becomes a
91-dim vector (category histogram, center/size moments, overlap mass,
8x8 raster thumbnail) and generated-vs-reference sets are compared with
a Frechet distance over Gaussian fits and an unbiased kernel MMD.
"""
from __future__ import annotations

import colorsys
import json
from dataclasses import dataclass, asdict

import numpy as np
import scipy.linalg

from .errors import EmptyLayout, TooFewSamples
from .layout import (
    BoxLayout,
    CategoryTaxonomy,
    DEFAULT_TAXONOMY,
    iou_matrix,
    pairwise_iou_sum,
)

RASTER_ALPHA = 0.3
FEATURE_DIM = 91


def category_color(index: int, k: int) -> tuple[float, float, float]:
    """Full-saturation color wheel over the real categories."""
    return colorsys.hsv_to_rgb(index / k, 1.0, 1.0)


def rasterize_layout(layout: BoxLayout, resolution: int = 256,
                     taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY
                     ) -> np.ndarray:
    """Orthographic projection along -z onto the unit square.

    Each non-empty box paints its footprint rectangle in its category
    color, alpha-composited (0.3) onto white.  Draw order is descending
    box top elevation, ties broken by category index then center, which
    pins the output down to the pixel.  A pixel is covered when its center
    lies inside the rectangle.  Returns (res, res, 3) float64 in [0,1];
    row 0 is y = 1 (image convention).
    """
    img = np.ones((resolution, resolution, 3), dtype=np.float64)
    boxes = [b for b in layout.boxes if b.category != taxonomy.empty_index]
    boxes.sort(key=lambda b: (-(b.center[2] + b.size[2] / 2), b.category,
                              b.center, b.size))
    centers = (np.arange(resolution) + 0.5) / resolution
    for box in boxes:
        x0, x1 = box.center[0] - box.size[0] / 2, box.center[0] + box.size[0] / 2
        y0, y1 = box.center[1] - box.size[1] / 2, box.center[1] + box.size[1] / 2
        cols = (centers >= x0) & (centers <= x1)
        rows = (centers >= y0) & (centers <= y1)
        if not cols.any() or not rows.any():
            continue
        color = np.array(category_color(box.category, taxonomy.k))
        region = np.ix_(rows[::-1], cols)
        img[region] = RASTER_ALPHA * color + (1 - RASTER_ALPHA) * img[region]
    return img


def raster_to_u8(img: np.ndarray) -> np.ndarray:
    return np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)


def features(layout: BoxLayout, resolution: int = 256,
             taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY) -> np.ndarray:
    """91-dim descriptor: [histogram(14), center mean/std, size mean/std,
    non-wall pairwise IoU sum, 8x8 grayscale raster]."""
    if not layout.boxes:
        raise EmptyLayout("features needs at least one box")
    cats = np.array([b.category for b in layout.boxes])
    hist = np.bincount(cats, minlength=taxonomy.onehot_width).astype(np.float64)
    hist /= len(layout.boxes)
    centers = np.array([b.center for b in layout.boxes], dtype=np.float64)
    sizes = np.array([b.size for b in layout.boxes], dtype=np.float64)
    moments = np.concatenate([
        centers.mean(axis=0), centers.std(axis=0),
        sizes.mean(axis=0), sizes.std(axis=0),
    ])
    overlap = np.array([pairwise_iou_sum(layout, taxonomy)])
    img = rasterize_layout(layout, resolution, taxonomy)
    gray = img.mean(axis=2)
    block = resolution // 8
    thumb = gray.reshape(8, block, 8, block).mean(axis=(1, 3)).reshape(-1)
    return np.concatenate([hist, moments, overlap, thumb])


def feature_matrix(layouts: list[BoxLayout],
                   taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY) -> np.ndarray:
    return np.stack([features(l, taxonomy=taxonomy) for l in layouts])


def frechet_distance(feats_a: np.ndarray, feats_b: np.ndarray,
                     eps: float = 1e-6) -> float:
    """Frechet distance between Gaussian fits of two feature sets."""
    a = np.asarray(feats_a, dtype=np.float64)
    b = np.asarray(feats_b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise TooFewSamples("frechet_distance needs >= 2 vectors per set")
    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    cov_a = np.cov(a, rowvar=False) + eps * np.eye(a.shape[1])
    cov_b = np.cov(b, rowvar=False) + eps * np.eye(b.shape[1])
    covmean = scipy.linalg.sqrtm(cov_a @ cov_b)
    if np.iscomplexobj(covmean):
        covmean = covmean.real
    diff = mu_a - mu_b
    return float(diff @ diff + np.trace(cov_a + cov_b - 2.0 * covmean))


def _poly_kernel(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    d = x.shape[1]
    return (x @ y.T / d + 1.0) ** 3


def kernel_distance(feats_a: np.ndarray, feats_b: np.ndarray,
                    subset: int = 100, repeats: int = 10,
                    seed: int = 0) -> float:
    """Mean over seeded subsamples of the unbiased polynomial-kernel MMD^2."""
    a = np.asarray(feats_a, dtype=np.float64)
    b = np.asarray(feats_b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise TooFewSamples("kernel_distance needs >= 2 vectors per set")
    m = min(subset, len(a), len(b))
    rng = np.random.default_rng(seed)
    values = []
    for _ in range(repeats):
        xa = a[rng.choice(len(a), m, replace=False)]
        xb = b[rng.choice(len(b), m, replace=False)]
        kaa = _poly_kernel(xa, xa)
        kbb = _poly_kernel(xb, xb)
        kab = _poly_kernel(xa, xb)
        term_a = (kaa.sum() - np.trace(kaa)) / (m * (m - 1))
        term_b = (kbb.sum() - np.trace(kbb)) / (m * (m - 1))
        values.append(term_a + term_b - 2.0 * kab.mean())
    return float(np.mean(values))


def floating_rate(layouts: list[BoxLayout],
                  taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY) -> float:
    """Fraction of window/door boxes intersecting no wall box (zero volume
    overlap with every wall), pooled over all layouts."""
    window = taxonomy.index_of("window")
    door = taxonomy.index_of("door")
    wall = taxonomy.index_of("wall")
    total = 0
    floating = 0
    for layout in layouts:
        walls = [b for b in layout.boxes if b.category == wall]
        for box in layout.boxes:
            if box.category not in (window, door):
                continue
            total += 1
            attached = False
            for w in walls:
                vol = 1.0
                for axis in range(3):
                    ov = min(box.hi[axis], w.hi[axis]) - max(box.lo[axis], w.lo[axis])
                    if ov <= 0:
                        vol = 0.0
                        break
                    vol *= ov
                if vol > 0:
                    attached = True
                    break
            if not attached:
                floating += 1
    return floating / total if total else 0.0


@dataclass(frozen=True)
class EvalReport:
    fd_surrogate: float
    kd_surrogate: float
    floating_rate: float
    mean_pairwise_iou: float
    n_gen: int
    n_ref: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls(**json.loads(text))


def eval_report(gen: list[BoxLayout], ref: list[BoxLayout], seed: int = 0,
                subset: int = 100, repeats: int = 10,
                taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY) -> EvalReport:
    if not gen or not ref:
        raise TooFewSamples("eval_report needs non-empty gen and ref sets")
    fa = feature_matrix(gen, taxonomy)
    fb = feature_matrix(ref, taxonomy)
    return EvalReport(
        fd_surrogate=frechet_distance(fa, fb),
        kd_surrogate=kernel_distance(fa, fb, subset=subset, repeats=repeats,
                                     seed=seed),
        floating_rate=floating_rate(gen, taxonomy),
        mean_pairwise_iou=float(np.mean([
            pairwise_iou_sum(l, taxonomy) for l in gen])),
        n_gen=len(gen),
        n_ref=len(ref),
    )


def uniform_random_layouts(count: int, seed: int, max_boxes: int = 32,
                           taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY
                           ) -> list[BoxLayout]:
    """Baseline layouts: box count uniform in [4, max_boxes], centers
    uniform in [0,1]^3, sizes uniform in [SIZE_FLOOR, 1], categories
    uniform over the real classes."""
    from .layout import SIZE_FLOOR, ComponentBox

    rng = np.random.default_rng(seed)
    layouts = []
    for i in range(count):
        n = int(rng.integers(4, max_boxes + 1))
        boxes = []
        for _ in range(n):
            center = tuple(rng.uniform(0, 1, 3))
            size = tuple(rng.uniform(SIZE_FLOOR, 1.0, 3))
            boxes.append(ComponentBox(center, size,
                                      int(rng.integers(taxonomy.k))))
        layouts.append(BoxLayout(tuple(boxes), id=f"rand{i:04d}"))
    return layouts
