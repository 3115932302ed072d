"""Scene assembly: rule layout -> placed component meshes.

Every node is realized at exactly its rule-layout box (scaled to meters),
so the world bounding box of each component's mesh set equals its box;
openings are carved out of walls as through-holes clipped to the wall's
in-plane interior, and wall-wall overlap deduplication is applied only
when it cannot shrink a wall's silhouette.  Geometry adjustments that do
move components (sibling alignment, depth snapping) live in
``align_siblings`` so that plain assembly stays bound-exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import BlockforgeError
from ..rules import ATTACHABLE, RuleLayout
from .assets import AssetComponent, default_asset_db, retrieve_component
from .csg import carve_opening
from .mesh import Box3, TriangleMesh, box_mesh, union_bounds

WALL_THICKNESS_FLOOR = 0.05  # meters
BOUNDS_TOL = 1e-9

# Margin kept between a carved opening and the wall's in-plane boundary so
# carving can never strip an entire boundary face off a wall.
OPENING_MARGIN = 0.01


@dataclass
class SceneNode:
    id: str
    category: str
    box: Box3
    style: dict
    children: tuple[str, ...]
    meshes: list[TriangleMesh]
    floating: bool = False
    solids: list[Box3] | None = None  # prism decomposition (walls only)

    def bounds(self) -> Box3:
        return union_bounds([m.bounds() for m in self.meshes])


@dataclass
class SceneGraph:
    world_scale: float
    roots: tuple[str, ...]
    nodes: list[SceneNode] = field(default_factory=list)

    def node(self, node_id: str) -> SceneNode:
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise KeyError(node_id)

    def bounds(self) -> Box3:
        return union_bounds([n.bounds() for n in self.nodes])


def _to_meters(center, size, world_scale) -> Box3:
    return Box3.from_center_size(tuple(c * world_scale for c in center),
                                 tuple(s * world_scale for s in size))


def _thin_axis(box: Box3) -> int:
    return int(np.argmin(box.size))


def _clip_opening(child: Box3, wall: Box3) -> Box3 | None:
    """Through-hole for a child: spans the wall's full thin axis, clipped
    to the wall's in-plane interior with a small margin so a boundary
    sliver of wall always survives.  Returns None when no usable hole
    remains."""
    inter = wall.intersection(child)
    if inter is None:
        return None
    lo = list(inter.lo)
    hi = list(inter.hi)
    depth = _thin_axis(wall)
    lo[depth], hi[depth] = wall.lo[depth], wall.hi[depth]
    for axis in range(3):
        if axis == depth:
            continue
        margin = min(OPENING_MARGIN, (wall.hi[axis] - wall.lo[axis]) / 4)
        lo[axis] = max(lo[axis], wall.lo[axis] + margin)
        hi[axis] = min(hi[axis], wall.hi[axis] - margin)
        if hi[axis] <= lo[axis]:
            return None
    return Box3(tuple(lo), tuple(hi))


def _dedupe_wall_solids(wall_boxes: dict[str, Box3]) -> dict[str, list[Box3]]:
    """Subtract earlier walls' volume from later ones (id order), unless
    doing so would change the later wall's bounding box."""
    solids: dict[str, list[Box3]] = {}
    ordered = sorted(wall_boxes)
    for j, node_id in enumerate(ordered):
        box = wall_boxes[node_id]
        holes = []
        for earlier in ordered[:j]:
            inter = box.intersection(wall_boxes[earlier])
            if inter is not None:
                holes.append(inter)
        if holes:
            fragments = carve_opening(box, holes)
            if fragments and _bounds_equal(union_bounds(fragments), box):
                solids[node_id] = fragments
                continue
        solids[node_id] = [box]
    return solids


def _bounds_equal(a: Box3, b: Box3, tol: float = BOUNDS_TOL) -> bool:
    return (max(abs(x - y) for x, y in zip(a.lo, b.lo)) <= tol
            and max(abs(x - y) for x, y in zip(a.hi, b.hi)) <= tol)


def _style_tags(style: dict) -> frozenset:
    return frozenset(str(v).lower() for v in style.values()
                     if isinstance(v, str))


def assemble(rules: RuleLayout,
             db: list[AssetComponent] | None = None) -> SceneGraph:
    """Build every component at its box; carve wall openings for attached
    children.  Deterministic for a fixed (rules, db)."""
    if db is None:
        db = default_asset_db()
    scene = SceneGraph(world_scale=rules.world_scale, roots=tuple(sorted(rules.roots)))

    boxes: dict[str, Box3] = {}
    for node in rules.components:
        box = _to_meters(node.center, node.size, rules.world_scale)
        if node.category == "wall":
            axis = _thin_axis(box)
            if box.size[axis] < WALL_THICKNESS_FLOOR:
                center, size = list(box.center), list(box.size)
                size[axis] = WALL_THICKNESS_FLOOR
                box = Box3.from_center_size(center, size)
        boxes[node.id] = box

    wall_ids = [n.id for n in rules.components if n.category == "wall"]
    wall_solids = _dedupe_wall_solids({i: boxes[i] for i in wall_ids})

    by_id = {n.id: n for n in rules.components}
    for node in sorted(rules.components, key=lambda n: n.id):
        box = boxes[node.id]
        try:
            if node.category == "wall":
                solids = wall_solids[node.id]
                holes = []
                for child_id in node.children:
                    child = by_id[child_id]
                    if child.category not in ATTACHABLE:
                        continue
                    hole = _clip_opening(boxes[child_id], box)
                    if hole is not None:
                        holes.append(hole)
                if holes:
                    carved: list[Box3] = []
                    for solid in solids:
                        overlapping = [h for h in holes if solid.overlaps(h)]
                        if overlapping:
                            carved.extend(carve_opening(solid, overlapping))
                        else:
                            carved.append(solid)
                    solids = carved
                meshes = [box_mesh(s, group=node.id) for s in solids]
                scene.nodes.append(SceneNode(
                    node.id, node.category, box, dict(node.style),
                    node.children, meshes, node.floating, solids))
            else:
                asset = retrieve_component(db, node.category,
                                           _style_tags(node.style), box.size)
                meshes = [m.translated(box.center) for m in
                          asset.build(box.size, node.style)]
                for mesh in meshes:
                    mesh.group = node.id
                scene.nodes.append(SceneNode(
                    node.id, node.category, box, dict(node.style),
                    node.children, meshes, node.floating))
        except BlockforgeError as exc:
            raise type(exc)(f"{node.id}: {exc}") from exc
    return scene


def align_siblings(scene: SceneGraph,
                   tolerance_fraction: float = 0.02) -> SceneGraph:
    """Snap window bottoms under one wall to their median elevation and
    center children in their wall's thickness.

    The tolerance is ``tolerance_fraction`` of total building height; no
    component ever moves further than that, and a second application is a
    no-op.
    """
    total = scene.bounds()
    tol = tolerance_fraction * (total.hi[2] - total.lo[2])
    out = SceneGraph(scene.world_scale, scene.roots,
                     [replace(n, meshes=list(n.meshes)) for n in scene.nodes])
    index = {n.id: i for i, n in enumerate(out.nodes)}
    for node in list(out.nodes):
        if node.category != "wall" or not node.children:
            continue
        depth = _thin_axis(node.box)
        kids = [out.nodes[index[c]] for c in node.children if c in index]
        windows = [k for k in kids if k.category == "window"]
        bottoms = sorted(k.box.lo[2] for k in windows)
        median = bottoms[len(bottoms) // 2] if len(bottoms) % 2 else (
            (bottoms[len(bottoms) // 2 - 1] + bottoms[len(bottoms) // 2]) / 2
        ) if bottoms else None
        for kid in kids:
            offset = [0.0, 0.0, 0.0]
            gap = node.box.center[depth] - kid.box.center[depth]
            if abs(gap) <= tol:
                offset[depth] = gap
            if kid.category == "window" and median is not None:
                dz = median - kid.box.lo[2]
                if abs(dz) <= tol:
                    offset[2] = dz
            if any(offset):
                moved = replace(
                    kid, box=kid.box.translated(offset),
                    meshes=[m.translated(offset) for m in kid.meshes])
                out.nodes[index[kid.id]] = moved
    return out
