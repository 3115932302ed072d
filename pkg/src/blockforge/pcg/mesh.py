"""Triangle meshes and the axis-aligned primitives everything is built from.

All solids are closed, consistently outward-oriented triangle meshes in
meters.  Watertightness here means every undirected edge is shared by
exactly two triangles and paired directed edges run in opposite
directions (consistent orientation); a correctly oriented solid has
positive signed volume.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class Box3:
    """Axis-aligned box as (lo, hi) corners, in meters."""

    lo: Vec3
    hi: Vec3

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))

    @classmethod
    def from_center_size(cls, center, size) -> "Box3":
        return cls(tuple(c - s / 2 for c, s in zip(center, size)),
                   tuple(c + s / 2 for c, s in zip(center, size)))

    @property
    def center(self) -> Vec3:
        return tuple((a + b) / 2 for a, b in zip(self.lo, self.hi))

    @property
    def size(self) -> Vec3:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    @property
    def volume(self) -> float:
        s = self.size
        return max(s[0], 0.0) * max(s[1], 0.0) * max(s[2], 0.0)

    def intersection(self, other: "Box3") -> "Box3 | None":
        lo = tuple(max(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(min(a, b) for a, b in zip(self.hi, other.hi))
        if any(h <= l for l, h in zip(lo, hi)):
            return None
        return Box3(lo, hi)

    def overlaps(self, other: "Box3") -> bool:
        return self.intersection(other) is not None

    def contains_point(self, p) -> bool:
        return all(l <= v <= h for l, v, h in zip(self.lo, p, self.hi))

    def translated(self, offset) -> "Box3":
        return Box3(tuple(l + o for l, o in zip(self.lo, offset)),
                    tuple(h + o for h, o in zip(self.hi, offset)))


def union_bounds(boxes: list[Box3]) -> Box3:
    lo = tuple(min(b.lo[a] for b in boxes) for a in range(3))
    hi = tuple(max(b.hi[a] for b in boxes) for a in range(3))
    return Box3(lo, hi)


@dataclass
class TriangleMesh:
    """Vertices in meters, triangle vertex-index triples, owning group id."""

    vertices: np.ndarray
    triangles: np.ndarray
    group: str = ""

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)

    def bounds(self) -> Box3:
        return Box3(tuple(self.vertices.min(axis=0)),
                    tuple(self.vertices.max(axis=0)))

    def translated(self, offset) -> "TriangleMesh":
        return TriangleMesh(self.vertices + np.asarray(offset, dtype=np.float64),
                            self.triangles.copy(), self.group)


# Box corner v_i has coordinates picked by the bits of i: bit0 -> x=hi,
# bit1 -> y=hi, bit2 -> z=hi.
_BOX_FACES = (
    (0, 2, 1), (1, 2, 3),  # z = lo
    (4, 5, 6), (5, 7, 6),  # z = hi
    (0, 1, 4), (1, 5, 4),  # y = lo
    (2, 6, 3), (3, 6, 7),  # y = hi
    (0, 4, 2), (2, 4, 6),  # x = lo
    (1, 3, 5), (3, 7, 5),  # x = hi
)


def box_mesh(box: Box3, group: str = "") -> TriangleMesh:
    lo, hi = box.lo, box.hi
    verts = [(hi[0] if i & 1 else lo[0],
              hi[1] if i & 2 else lo[1],
              hi[2] if i & 4 else lo[2]) for i in range(8)]
    return TriangleMesh(np.array(verts), np.array(_BOX_FACES), group)


def wedge_mesh(box: Box3, ridge_axis: int = 0, group: str = "") -> TriangleMesh:
    """Triangular prism filling ``box``: rectangular base at z=lo, ridge
    line at z=hi running along ``ridge_axis`` (0=x or 1=y) through the
    center of the other horizontal axis."""
    lo, hi = box.lo, box.hi
    if ridge_axis == 0:
        b0 = (lo[0], lo[1], lo[2])
        b1 = (hi[0], lo[1], lo[2])
        b2 = (hi[0], hi[1], lo[2])
        b3 = (lo[0], hi[1], lo[2])
        mid = (lo[1] + hi[1]) / 2
        r0 = (lo[0], mid, hi[2])
        r1 = (hi[0], mid, hi[2])
    else:
        b0 = (lo[0], lo[1], lo[2])
        b1 = (lo[0], hi[1], lo[2])
        b2 = (hi[0], hi[1], lo[2])
        b3 = (hi[0], lo[1], lo[2])
        mid = (lo[0] + hi[0]) / 2
        r0 = (mid, lo[1], hi[2])
        r1 = (mid, hi[1], hi[2])
    verts = np.array([b0, b1, b2, b3, r0, r1])
    tris = np.array([
        (0, 2, 1), (0, 3, 2),       # base, facing -z
        (0, 1, 5), (0, 5, 4),       # near slope
        (3, 4, 5), (3, 5, 2),       # far slope
        (0, 4, 3),                  # end cap at b0/b3
        (1, 2, 5),                  # end cap at b1/b2
    ])
    mesh = TriangleMesh(verts, tris, group)
    if signed_volume(mesh) < 0:
        mesh.triangles = mesh.triangles[:, ::-1]
    return mesh


def pyramid_mesh(box: Box3, group: str = "") -> TriangleMesh:
    """Rectangular base at z=lo, apex at the center of the z=hi face."""
    lo, hi = box.lo, box.hi
    b0 = (lo[0], lo[1], lo[2])
    b1 = (hi[0], lo[1], lo[2])
    b2 = (hi[0], hi[1], lo[2])
    b3 = (lo[0], hi[1], lo[2])
    apex = ((lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, hi[2])
    verts = np.array([b0, b1, b2, b3, apex])
    tris = np.array([
        (0, 2, 1), (0, 3, 2),  # base
        (0, 1, 4), (1, 2, 4), (2, 3, 4), (3, 0, 4),
    ])
    return TriangleMesh(verts, tris, group)


def signed_volume(mesh: TriangleMesh) -> float:
    """Divergence-theorem volume; positive for outward orientation."""
    v = mesh.vertices
    a = v[mesh.triangles[:, 0]]
    b = v[mesh.triangles[:, 1]]
    c = v[mesh.triangles[:, 2]]
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def triangle_areas(mesh: TriangleMesh) -> np.ndarray:
    v = mesh.vertices
    a = v[mesh.triangles[:, 0]]
    b = v[mesh.triangles[:, 1]]
    c = v[mesh.triangles[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def is_watertight(mesh: TriangleMesh) -> bool:
    """Edge-2-manifold with consistent winding and no degenerate faces."""
    if len(mesh.triangles) == 0:
        return False
    if (triangle_areas(mesh) <= 1e-12).any():
        return False
    directed = Counter()
    for tri in mesh.triangles:
        for k in range(3):
            edge = (int(tri[k]), int(tri[(k + 1) % 3]))
            if edge[0] == edge[1]:
                return False
            directed[edge] += 1
    if any(count != 1 for count in directed.values()):
        return False
    return all((b, a) in directed for (a, b) in directed)
