"""Parametric component assets: retrieval and size-aware construction.

The asset database is a built-in library of parametric generators rather
than stored meshes, which keeps construction deterministic and testable.
Each asset advertises a category, style tags and a base size ratio;
retrieval filters by style overlap and picks the closest ratio in log
space.  Composite assets (windows, doors, stairs, ...) rebuild their
sub-parts for the requested size: fixed-thickness frames stretch only
lengthwise and muntin counts follow the target dimensions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import FrameTooThick, NoAssetForCategory
from .mesh import Box3, TriangleMesh, box_mesh, pyramid_mesh, wedge_mesh

DEFAULT_MUNTIN_CELL = 0.6
DEFAULT_FRAME_WIDTH = 0.06


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def muntin_counts(width_m: float, height_m: float,
                  cell_target_m: float = DEFAULT_MUNTIN_CELL) -> tuple[int, int]:
    """Interior (vertical, horizontal) bar counts for a window size.

    One bar less than the number of target-sized cells that round into
    each dimension, never negative; rounding is half-up.
    """
    nx = max(0, _round_half_up(width_m / cell_target_m) - 1)
    ny = max(0, _round_half_up(height_m / cell_target_m) - 1)
    return nx, ny


@dataclass(frozen=True)
class AssetComponent:
    """id + category + style tags + base w:h:d ratio + parametric builder."""

    asset_id: str
    category: str
    style_tags: frozenset
    base_ratio: tuple[float, float, float]
    generator: Callable[[tuple, dict], list[TriangleMesh]]

    def build(self, target_size, style: dict) -> list[TriangleMesh]:
        return self.generator(tuple(float(v) for v in target_size), dict(style))


def _centered(size) -> Box3:
    return Box3.from_center_size((0.0, 0.0, 0.0), size)


def _solid_box(size, style) -> list[TriangleMesh]:
    return [box_mesh(_centered(size))]


def _plane_axes(size) -> tuple[int, int]:
    """(width_axis, depth_axis) for facade-plane composites: the thinner
    horizontal axis is the depth (wall-normal) axis."""
    return (0, 1) if size[0] >= size[1] else (1, 0)


def _facade_box(w0, w1, z0, z1, depth, w_axis, d_axis) -> Box3:
    lo = [0.0, 0.0, 0.0]
    hi = [0.0, 0.0, 0.0]
    lo[w_axis], hi[w_axis] = w0, w1
    lo[d_axis], hi[d_axis] = -depth / 2, depth / 2
    lo[2], hi[2] = z0, z1
    return Box3(tuple(lo), tuple(hi))


def _frame_and_glass(size, frame: float, glass_depth: float,
                     w_axis: int, d_axis: int):
    w, h = size[w_axis], size[2]
    if 2 * frame >= min(w, h):
        raise FrameTooThick(
            f"frame width {frame} too thick for {w} x {h} opening")
    d = size[d_axis]
    meshes = [
        box_mesh(_facade_box(-w / 2, w / 2, -h / 2, -h / 2 + frame, d,
                             w_axis, d_axis)),                       # sill
        box_mesh(_facade_box(-w / 2, w / 2, h / 2 - frame, h / 2, d,
                             w_axis, d_axis)),                       # head
        box_mesh(_facade_box(-w / 2, -w / 2 + frame, -h / 2 + frame,
                             h / 2 - frame, d, w_axis, d_axis)),     # jambs
        box_mesh(_facade_box(w / 2 - frame, w / 2, -h / 2 + frame,
                             h / 2 - frame, d, w_axis, d_axis)),
    ]
    glass = box_mesh(_facade_box(-w / 2 + frame, w / 2 - frame,
                                 -h / 2 + frame, h / 2 - frame,
                                 min(glass_depth, d), w_axis, d_axis))
    return meshes, glass


def _window_generator(muntins: bool):
    def build(size, style) -> list[TriangleMesh]:
        w_axis, d_axis = _plane_axes(size)
        frame = float(style.get("frame_width", DEFAULT_FRAME_WIDTH))
        d = size[d_axis]
        frames, glass = _frame_and_glass(size, frame, min(0.02, d / 3),
                                         w_axis, d_axis)
        meshes = frames
        if muntins:
            w, h = size[w_axis], size[2]
            cell = float(style.get("muntin_cell", DEFAULT_MUNTIN_CELL))
            nx, ny = muntin_counts(w, h, cell)
            bar = min(frame / 2, 0.03)
            bar_depth = min(0.03, d)
            wi, hi = w - 2 * frame, h - 2 * frame
            for i in range(nx):
                c = -wi / 2 + wi * (i + 1) / (nx + 1)
                meshes.append(box_mesh(_facade_box(
                    c - bar / 2, c + bar / 2, -hi / 2, hi / 2, bar_depth,
                    w_axis, d_axis)))
            for j in range(ny):
                c = -hi / 2 + hi * (j + 1) / (ny + 1)
                meshes.append(box_mesh(_facade_box(
                    -wi / 2, wi / 2, c - bar / 2, c + bar / 2, bar_depth,
                    w_axis, d_axis)))
        meshes.append(glass)
        return meshes

    return build


def _door_panel(size, style) -> list[TriangleMesh]:
    return [box_mesh(_centered(size))]


def _door_glass(size, style) -> list[TriangleMesh]:
    w_axis, d_axis = _plane_axes(size)
    frame = float(style.get("frame_width", 0.08))
    frames, glass = _frame_and_glass(size, frame, min(0.03, size[d_axis]),
                                     w_axis, d_axis)
    return frames + [glass]


def _roof_flat(size, style) -> list[TriangleMesh]:
    return [box_mesh(_centered(size))]


def _roof_gable(size, style) -> list[TriangleMesh]:
    ridge = 0 if size[0] >= size[1] else 1
    return [wedge_mesh(_centered(size), ridge_axis=ridge)]


def _roof_hip(size, style) -> list[TriangleMesh]:
    return [pyramid_mesh(_centered(size))]


def _stairs(size, style) -> list[TriangleMesh]:
    run_axis = 0 if size[0] >= size[1] else 1
    step_h = float(style.get("step_height", 0.2))
    n = max(2, min(16, _round_half_up(size[2] / step_h)))
    length, height = size[run_axis], size[2]
    meshes = []
    for i in range(n):
        lo = [-size[0] / 2, -size[1] / 2, -height / 2]
        hi = [size[0] / 2, size[1] / 2, -height / 2]
        lo[run_axis] = -length / 2 + length * i / n
        hi[run_axis] = -length / 2 + length * (i + 1) / n
        hi[2] = -height / 2 + height * (i + 1) / n
        meshes.append(box_mesh(Box3(tuple(lo), tuple(hi))))
    return meshes


def _railing(size, style) -> list[TriangleMesh]:
    w_axis, d_axis = _plane_axes(size)
    w, h = size[w_axis], size[2]
    rail_h = min(0.08, h / 3)
    spacing = float(style.get("post_spacing", 0.4))
    n_posts = max(2, _round_half_up(w / spacing) + 1)
    post = min(0.05, w / (2 * n_posts))
    meshes = [box_mesh(_facade_box(-w / 2, w / 2, h / 2 - rail_h, h / 2,
                                   size[d_axis], w_axis, d_axis))]
    for i in range(n_posts):
        c = -w / 2 + post / 2 + (w - post) * i / (n_posts - 1)
        meshes.append(box_mesh(_facade_box(
            c - post / 2, c + post / 2, -h / 2, h / 2 - rail_h,
            min(post, size[d_axis]), w_axis, d_axis)))
    return meshes


def _chimney(size, style) -> list[TriangleMesh]:
    cap_h = min(0.2, size[2] * 0.15)
    shaft = Box3((-size[0] * 0.4, -size[1] * 0.4, -size[2] / 2),
                 (size[0] * 0.4, size[1] * 0.4, size[2] / 2 - cap_h))
    cap = Box3((-size[0] / 2, -size[1] / 2, size[2] / 2 - cap_h),
               (size[0] / 2, size[1] / 2, size[2] / 2))
    return [box_mesh(shaft), box_mesh(cap)]


def _column(size, style) -> list[TriangleMesh]:
    trim_h = min(0.15, size[2] * 0.08)
    base = Box3((-size[0] / 2, -size[1] / 2, -size[2] / 2),
                (size[0] / 2, size[1] / 2, -size[2] / 2 + trim_h))
    cap = Box3((-size[0] / 2, -size[1] / 2, size[2] / 2 - trim_h),
               (size[0] / 2, size[1] / 2, size[2] / 2))
    shaft = Box3((-size[0] * 0.35, -size[1] * 0.35, -size[2] / 2 + trim_h),
                 (size[0] * 0.35, size[1] * 0.35, size[2] / 2 - trim_h))
    return [box_mesh(base), box_mesh(shaft), box_mesh(cap)]


def _awning(size, style) -> list[TriangleMesh]:
    ridge = 0 if size[0] >= size[1] else 1
    return [wedge_mesh(_centered(size), ridge_axis=ridge)]


def default_asset_db() -> list[AssetComponent]:
    def a(asset_id, category, tags, ratio, generator):
        m = max(ratio)
        return AssetComponent(asset_id, category, frozenset(tags),
                              tuple(r / m for r in ratio), generator)

    return [
        a("wall_plain", "wall", {"concrete", "stone", "wood", "brick"},
          (1.0, 0.03, 0.3), _solid_box),
        a("floor_slab", "floor", {"concrete", "wood"},
          (1.0, 0.8, 0.04), _solid_box),
        a("window_muntin", "window",
          {"classic", "wooden", "medieval", "glass_clear", "wood"},
          (0.6, 0.08, 1.0), _window_generator(muntins=True)),
        a("window_plain", "window",
          {"modern", "glass_reflective", "metal", "flat"},
          (1.0, 0.08, 0.85), _window_generator(muntins=False)),
        a("door_panel", "door",
          {"classic", "wooden", "medieval", "wood", "brown"},
          (0.5, 0.05, 1.0), _door_panel),
        a("door_glass", "door", {"modern", "metal", "glass_reflective"},
          (0.55, 0.05, 1.0), _door_glass),
        a("roof_flat", "roof", {"flat", "modern", "concrete"},
          (1.0, 0.8, 0.1), _roof_flat),
        a("roof_gable", "roof",
          {"gable", "shingle", "slate", "classic", "wooden", "medieval"},
          (1.0, 0.8, 0.35), _roof_gable),
        a("roof_hip", "roof", {"hip", "shingle", "slate"},
          (1.0, 0.8, 0.3), _roof_hip),
        a("stairs_straight", "stairs", {"concrete", "wood", "stone"},
          (1.0, 0.4, 0.6), _stairs),
        a("column_square", "column", {"stone", "concrete", "classic"},
          (0.12, 0.12, 1.0), _column),
        a("balcony_slab", "balcony", {"concrete", "stone", "wood"},
          (1.0, 0.45, 0.12), _solid_box),
        a("chimney_cap", "chimney", {"brick", "stone"},
          (0.35, 0.35, 1.0), _chimney),
        a("railing_posts", "railing", {"metal", "wood"},
          (1.0, 0.05, 0.35), _railing),
        a("garage_box", "garage", {"concrete", "metal"},
          (1.0, 0.9, 0.8), _solid_box),
        a("awning_wedge", "awning", {"fabric", "metal"},
          (1.0, 0.4, 0.2), _awning),
        a("decoration_block", "decoration", {"stone", "concrete"},
          (0.4, 0.4, 1.0), _solid_box),
    ]


def retrieve_component(db: list[AssetComponent], category: str,
                       style_tags, target_ratio) -> AssetComponent:
    """Filter by category and style-tag overlap, then pick the asset whose
    normalized size ratio is closest in log space; ties go to the
    lexicographically smallest asset id."""
    candidates = [asset for asset in db if asset.category == category]
    if not candidates:
        raise NoAssetForCategory(f"no asset for category {category!r}")
    tags = frozenset(style_tags)
    tagged = [asset for asset in candidates if asset.style_tags & tags]
    pool = tagged or candidates
    target = np.asarray(target_ratio, dtype=np.float64)
    target = target / target.max()

    def score(asset: AssetComponent) -> float:
        base = np.asarray(asset.base_ratio)
        return float(np.linalg.norm(np.log(target) - np.log(base)))

    return min(pool, key=lambda asset: (score(asset), asset.asset_id))


def stretch_component(asset: AssetComponent, target_size,
                      style: dict | None = None) -> list[TriangleMesh]:
    """Build the asset at the target size (meshes centered on the origin).

    The union of the returned meshes spans exactly ``target_size``;
    composite assets rebuild fixed-thickness parts rather than scaling
    them.
    """
    if min(target_size) <= 0:
        raise ValueError(f"target_size must be positive, got {target_size}")
    return asset.build(target_size, style or {})
