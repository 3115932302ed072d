"""Boolean operations on axis-aligned prisms via interval decomposition.

General CSG is avoided on purpose: every solid here is an axis-aligned
box, so subtraction and union reduce to splitting intervals on the cut
planes of the operands, keeping the cells whose centers survive, and
greedily coalescing adjacent cells back into boxes.  This is exact up to
float arithmetic on the original coordinates (no epsilons introduced).
"""
from __future__ import annotations

import numpy as np

from ..errors import OpeningOutsideWall
from .mesh import Box3

# Two walls merge end-to-end only when their cross-sections agree to this
# tolerance on the other two axes.
CROSS_SECTION_TOL = 1e-6


def _axis_cuts(wall: Box3, openings: list[Box3], axis: int) -> list[float]:
    cuts = {wall.lo[axis], wall.hi[axis]}
    for op in openings:
        for v in (op.lo[axis], op.hi[axis]):
            if wall.lo[axis] < v < wall.hi[axis]:
                cuts.add(v)
    return sorted(cuts)


def carve_opening(wall_box: Box3, openings: list[Box3]) -> list[Box3]:
    """Subtract the union of the openings from the wall.

    Every opening must overlap the wall.  The wall interval set is split
    on each opening's extents; cells whose centers lie inside no opening
    are kept and coalesced greedily along x, then y, then z.  The summed
    volume of the result equals wall volume minus the volume of
    wall intersect union(openings), exactly up to float rounding.
    """
    for i, op in enumerate(openings):
        if not wall_box.overlaps(op):
            raise OpeningOutsideWall(f"openings[{i}] does not overlap the wall")
    if not openings:
        return [wall_box]

    cuts = [_axis_cuts(wall_box, openings, axis) for axis in range(3)]
    nx, ny, nz = (len(c) - 1 for c in cuts)
    keep = np.ones((nx, ny, nz), dtype=bool)
    centers = [np.array([(c[i] + c[i + 1]) / 2 for i in range(len(c) - 1)])
               for c in cuts]
    for op in openings:
        inside = [
            (centers[a] > op.lo[a]) & (centers[a] < op.hi[a]) for a in range(3)
        ]
        keep &= ~(inside[0][:, None, None] & inside[1][None, :, None]
                  & inside[2][None, None, :])
    return _coalesce(keep, cuts)


def _coalesce(keep: np.ndarray, cuts: list[list[float]]) -> list[Box3]:
    """Greedy run merging along x, then y, then z."""
    nx, ny, nz = keep.shape
    # x runs: (x0, x1) spans per (iy, iz)
    runs = []
    for iz in range(nz):
        for iy in range(ny):
            ix = 0
            while ix < nx:
                if keep[ix, iy, iz]:
                    start = ix
                    while ix < nx and keep[ix, iy, iz]:
                        ix += 1
                    runs.append((cuts[0][start], cuts[0][ix], iy, iz))
                else:
                    ix += 1
    # y merge: identical x-span, same iz, consecutive iy
    cols: dict = {}
    for x0, x1, iy, iz in runs:
        cols.setdefault((x0, x1, iz), []).append(iy)
    slabs = []
    for (x0, x1, iz), iys in cols.items():
        iys.sort()
        start = prev = iys[0]
        for iy in iys[1:] + [None]:
            if iy is not None and iy == prev + 1:
                prev = iy
                continue
            slabs.append((x0, x1, cuts[1][start], cuts[1][prev + 1], iz))
            if iy is not None:
                start = prev = iy
    # z merge: identical xy-footprint, consecutive iz
    stacks: dict = {}
    for x0, x1, y0, y1, iz in slabs:
        stacks.setdefault((x0, x1, y0, y1), []).append(iz)
    boxes = []
    for (x0, x1, y0, y1), izs in stacks.items():
        izs.sort()
        start = prev = izs[0]
        for iz in izs[1:] + [None]:
            if iz is not None and iz == prev + 1:
                prev = iz
                continue
            boxes.append(Box3((x0, y0, cuts[2][start]),
                              (x1, y1, cuts[2][prev + 1])))
            if iz is not None:
                start = prev = iz
    return boxes


def _same_cross_section(a: Box3, b: Box3, axis: int) -> bool:
    for other in range(3):
        if other == axis:
            continue
        if (abs(a.lo[other] - b.lo[other]) > CROSS_SECTION_TOL
                or abs(a.hi[other] - b.hi[other]) > CROSS_SECTION_TOL):
            return False
    return True


def _try_interval_union(a: Box3, b: Box3) -> Box3 | None:
    for axis in range(3):
        if not _same_cross_section(a, b, axis):
            continue
        if (b.lo[axis] <= a.hi[axis] + CROSS_SECTION_TOL
                and a.lo[axis] <= b.hi[axis] + CROSS_SECTION_TOL):
            lo = list(a.lo)
            hi = list(a.hi)
            lo[axis] = min(a.lo[axis], b.lo[axis])
            hi[axis] = max(a.hi[axis], b.hi[axis])
            return Box3(tuple(lo), tuple(hi))
    return None


def merge_walls(walls: list[Box3]) -> list[Box3]:
    """Deduplicate overlapping wall volume.

    Collinear walls with identical cross-sections become one box by
    interval union; any other overlapping pair is resolved by carving the
    shared region out of the lexicographically later wall, so the union
    of the result equals the union of the input with no doubly covered
    solid regions.
    """
    boxes = list(walls)
    # interval unions to fixpoint
    merged = True
    while merged:
        merged = False
        for i in range(len(boxes)):
            for j in range(i + 1, len(boxes)):
                u = _try_interval_union(boxes[i], boxes[j])
                if u is not None:
                    boxes[i] = u
                    del boxes[j]
                    merged = True
                    break
            if merged:
                break
    # overlap subtraction from the lexicographically later box
    boxes.sort(key=lambda b: (b.lo, b.hi))
    result: list[Box3] = []
    for j, box in enumerate(boxes):
        holes = []
        for earlier in boxes[:j]:
            inter = box.intersection(earlier)
            if inter is not None:
                holes.append(inter)
        if holes:
            result.extend(carve_opening(box, holes))
        else:
            result.append(box)
    return result
