"""Procedural generator of paired (box layout, prompt, style) training data.

Buildings are assembled in meters and then normalized: per floor a slab
and four non-overlapping perimeter walls, windows embedded in wall faces,
one door on the ground floor, a roof sized to the footprint, and optional
extras (chimney, balcony with railing, corner columns).  Every window and
door intersects a wall by construction, so the floating-component rate of
the generated data is exactly zero.

Dimensions are deliberately coarse (footprints, window slots and floor
heights live on a discrete grid, windows protrude slightly from their
wall) so that a desk-scale diffusion model can learn the wall/opening
attachment structure quickly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layout import (
    BoxLayout,
    CategoryTaxonomy,
    ComponentBox,
    DEFAULT_TAXONOMY,
    normalize_layout,
    save_jsonl,
)

FLOOR_HEIGHT = 3.0
WALL_THICKNESS = 0.9
SLAB_THICKNESS = 0.3
WINDOW_DEPTH = 1.5   # > wall thickness: frames protrude on both faces
WINDOW_WIDTH = 1.2
WINDOW_HEIGHT = 1.5
WINDOW_SLOT = 2.0    # windows sit on this grid along their wall
DOOR_WIDTH = 1.2
DOOR_HEIGHT = 2.2

FOOTPRINTS = (12.0,)
# aspect fixed at 1.0 keeps wall planes at near-constant normalized positions
ASPECTS = (1.0,)

STYLE_POOL = ("modern", "medieval", "wooden", "classic")
ROOF_KINDS_BY_STYLE = {
    "modern": ("flat", "flat", "gable"),
    "medieval": ("gable", "hip"),
    "wooden": ("gable", "gable", "hip"),
    "classic": ("gable", "flat", "hip"),
}
_ORDINALS = {1: "one", 2: "two", 3: "three", 4: "four"}


@dataclass(frozen=True)
class SynthConfig:
    count: int = 512
    seed: int = 0
    floors: tuple[int, int] = (1, 3)
    aspect: tuple[float, float] = (0.6, 1.0)
    windows_per_wall: tuple[int, int] = (1, 2)
    styles: tuple[str, ...] = STYLE_POOL
    max_boxes: int = 32


def _box(taxonomy, name, center, size) -> ComponentBox:
    return ComponentBox(tuple(center), tuple(size), taxonomy.index_of(name))


def synth_building(rng: np.random.Generator,
                   cfg: SynthConfig = SynthConfig(),
                   taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY
                   ) -> tuple[BoxLayout, str, str]:
    """One building; deterministic for a fixed generator state."""
    if cfg.max_boxes < 7:
        raise ValueError("max_boxes must be >= 7 (shell + door + roof)")
    style = cfg.styles[int(rng.integers(len(cfg.styles)))]
    floors = int(rng.integers(cfg.floors[0], cfg.floors[1] + 1))
    # a floor costs 5 boxes (slab + 4 walls); door + roof always exist
    floors = max(1, min(floors, (cfg.max_boxes - 2) // 5))
    width = FOOTPRINTS[int(rng.integers(len(FOOTPRINTS)))]
    aspects = [a for a in ASPECTS if cfg.aspect[0] <= a <= cfg.aspect[1]] or [1.0]
    depth = width * aspects[int(rng.integers(len(aspects)))]
    if rng.integers(2):
        width, depth = depth, width
    roof_kind = ROOF_KINDS_BY_STYLE[style][
        int(rng.integers(len(ROOF_KINDS_BY_STYLE[style])))]

    tw, ts, fh = WALL_THICKNESS, SLAB_THICKNESS, FLOOR_HEIGHT
    boxes: list[ComponentBox] = []
    # Per-floor shell.  South/north walls span the full width; east/west
    # walls are inset by one wall thickness so the frame never overlaps.
    wall_specs = []
    for f in range(floors):
        z0 = f * fh
        zc = z0 + ts + (fh - ts) / 2
        boxes.append(_box(taxonomy, "floor", (0, 0, z0 + ts / 2), (width, depth, ts)))
        wall_h = fh - ts
        south = ((0, -(depth - tw) / 2, zc), (width, tw, wall_h))
        north = ((0, (depth - tw) / 2, zc), (width, tw, wall_h))
        west = ((-(width - tw) / 2, 0, zc), (tw, depth - 2 * tw, wall_h))
        east = (((width - tw) / 2, 0, zc), (tw, depth - 2 * tw, wall_h))
        for spec in (south, north, west, east):
            boxes.append(_box(taxonomy, "wall", *spec))
            wall_specs.append((f, spec))

    extras: list[ComponentBox] = []
    salient: list[str] = []
    # shell + door + roof are mandatory; extras only fit leftover budget
    spare = cfg.max_boxes - len(boxes) - 2
    roof_h = 1.5 if roof_kind != "flat" else 0.5
    extras.append(_box(taxonomy, "roof",
                       (0, 0, floors * fh + roof_h / 2),
                       (width + 0.4, depth + 0.4, roof_h)))
    if rng.random() < 0.45 and spare >= 1:
        cx = float(rng.choice((-2.0, 0.0, 2.0)))
        extras.append(_box(taxonomy, "chimney",
                           (cx, 0, floors * fh + roof_h + 0.7),
                           (0.6, 0.6, 1.4)))
        salient.append("a chimney")
        spare -= 1
    if floors >= 2 and rng.random() < 0.4 and spare >= 2:
        by = -(depth / 2) + 0.6
        bz = fh + ts + 0.15
        extras.append(_box(taxonomy, "balcony", (0, by, bz), (2.4, 1.2, 0.3)))
        extras.append(_box(taxonomy, "railing",
                           (0, -(depth / 2) + 0.08, bz + 0.55), (2.4, 0.1, 0.8)))
        salient.append("a balcony")
        spare -= 2
    if style in ("classic", "medieval") and rng.random() < 0.35 and spare >= 2:
        for sx in (-1, 1):
            extras.append(_box(taxonomy, "column",
                               (sx * (width / 2 - 0.6), -(depth / 2) + 0.6,
                                ts + (fh - ts) / 2),
                               (0.35, 0.35, fh - ts)))
        salient.append("columns")
        spare -= 2

    # Door on the ground-floor south wall, centered; protrudes like the
    # windows so the box visibly straddles the wall plane.
    door = _box(taxonomy, "door",
                (0, -(depth - tw) / 2, ts + DOOR_HEIGHT / 2),
                (DOOR_WIDTH, WINDOW_DEPTH, DOOR_HEIGHT))

    # Windows sit on a fixed slot grid along each wall, mid-height of the
    # floor, and fill the remaining box budget evenly across the walls.
    wpw = int(rng.integers(cfg.windows_per_wall[0], cfg.windows_per_wall[1] + 1))
    budget = cfg.max_boxes - len(boxes) - len(extras) - 1
    want = min(wpw * len(wall_specs), max(0, budget))
    windows: list[ComponentBox] = []
    slot = 0
    while len(windows) < want and slot < 8 * len(wall_specs):
        f, ((wx, wy, wz), (sx, sy, sz)) = wall_specs[slot % len(wall_specs)]
        k = slot // len(wall_specs)
        along_x = sx > sy
        length = sx if along_x else sy
        n_slots = int((length - WINDOW_WIDTH - 1.0) // WINDOW_SLOT)
        slot += 1
        if n_slots < 1:
            continue
        pick = int(rng.integers(n_slots))
        offs = (pick - (n_slots - 1) / 2) * WINDOW_SLOT
        on_south0 = f == 0 and (slot - 1) % len(wall_specs) == 0
        if on_south0 and abs(offs) < (DOOR_WIDTH + WINDOW_WIDTH) / 2 + 0.1:
            offs = WINDOW_SLOT if offs >= 0 else -WINDOW_SLOT
            if abs(offs) < (DOOR_WIDTH + WINDOW_WIDTH) / 2 + 0.1:
                continue
        zc = f * fh + ts + (fh - ts) * 0.5
        if along_x:
            center = (wx + offs, wy, zc)
            size = (WINDOW_WIDTH, WINDOW_DEPTH, WINDOW_HEIGHT)
        else:
            center = (wx, wy + offs, zc)
            size = (WINDOW_DEPTH, WINDOW_WIDTH, WINDOW_HEIGHT)
        candidate = _box(taxonomy, "window", center, size)
        if any(_overlaps(candidate, w) for w in windows):
            continue
        windows.append(candidate)

    boxes = boxes + [door] + windows + extras
    layout = normalize_layout(BoxLayout(tuple(boxes)), taxonomy)

    parts = ""
    if salient:
        parts = " and " + (salient[0] if len(salient) == 1 else
                           ", ".join(salient[:-1]) + " and " + salient[-1])
    prompt = (f"a {_ORDINALS[floors]}-story {style} house "
              f"with a {roof_kind} roof{parts}")
    return layout, prompt, style


def _overlaps(a: ComponentBox, b: ComponentBox) -> bool:
    return all(min(a.hi[i], b.hi[i]) - max(a.lo[i], b.lo[i]) > 0
               for i in range(3))


def synth_dataset(cfg: SynthConfig, path=None,
                  taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY
                  ) -> list[BoxLayout]:
    """cfg.count buildings; per-index deterministic, so any slice of the
    dataset is reproducible independently of the rest."""
    layouts = []
    for i in range(cfg.count):
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, i)))
        layout, prompt, style = synth_building(rng, cfg, taxonomy)
        layouts.append(BoxLayout(layout.boxes, prompt=prompt, style=style,
                                 id=f"synth{i:04d}"))
    if path is not None:
        save_jsonl(layouts, path, taxonomy)
    return layouts
