"""Box-based layout data model.

A layout is an unordered set of axis-aligned boxes, each carrying a center,
full extents, and a category.  Centers live in normalized building
coordinates [0,1]^3; the category is an index into a fixed taxonomy whose
last slot is the reserved "empty" padding class.  Everything here is an
immutable value; operations return new layouts.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BadShape,
    DegenerateSize,
    EmptyLayout,
    ParseError,
    TooManyBoxes,
    UnknownCategory,
)

# Smallest admissible size component after decoding, and the size assigned
# to zeros-mode padding boxes.  Keeps downstream geometry non-degenerate.
SIZE_FLOOR = 0.005

CATEGORY_NAMES = (
    "wall",
    "window",
    "door",
    "roof",
    "floor",
    "stairs",
    "column",
    "balcony",
    "chimney",
    "railing",
    "garage",
    "awning",
    "decoration",
)

AUGMENT_OPS = ("identity", "rot90", "rot180", "rot270", "mirror_x", "mirror_y")

Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class CategoryTaxonomy:
    """Ordered category labels; the one-hot width is ``len(names) + 1``.

    Index 0 is always "wall"; the index ``len(names)`` is the empty class
    used for padding.
    """

    names: tuple[str, ...] = CATEGORY_NAMES

    def __post_init__(self) -> None:
        if len(set(self.names)) != len(self.names):
            raise ValueError("category names must be unique")
        if self.names[0] != "wall":
            raise ValueError("taxonomy must place 'wall' at index 0")
        for name in self.names:
            if name != name.lower():
                raise ValueError(f"category name {name!r} must be lowercase")

    @property
    def k(self) -> int:
        return len(self.names)

    @property
    def empty_index(self) -> int:
        return len(self.names)

    @property
    def onehot_width(self) -> int:
        return len(self.names) + 1

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownCategory(f"unknown category {name!r}") from None

    def name_of(self, index: int) -> str:
        if index == self.empty_index:
            return "empty"
        if 0 <= index < len(self.names):
            return self.names[index]
        raise UnknownCategory(f"category index {index} out of range")


DEFAULT_TAXONOMY = CategoryTaxonomy()


@dataclass(frozen=True)
class ComponentBox:
    """Axis-aligned box: normalized center, full extents, category index."""

    center: Vec3
    size: Vec3
    category: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "size", tuple(float(v) for v in self.size))
        object.__setattr__(self, "category", int(self.category))
        if len(self.center) != 3 or len(self.size) != 3:
            raise BadShape("center and size must have 3 components")

    @property
    def lo(self) -> Vec3:
        return tuple(c - s / 2 for c, s in zip(self.center, self.size))

    @property
    def hi(self) -> Vec3:
        return tuple(c + s / 2 for c, s in zip(self.center, self.size))

    @property
    def volume(self) -> float:
        return self.size[0] * self.size[1] * self.size[2]

    def sort_key(self):
        return (self.category, self.center, self.size)


@dataclass(frozen=True)
class BoxLayout:
    """Unordered collection of component boxes plus prompt metadata.

    Equality is permutation-invariant: two layouts with the same multiset
    of boxes (and the same id/prompt/style) compare equal.
    """

    boxes: tuple[ComponentBox, ...]
    prompt: str = ""
    style: str = ""
    id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "boxes", tuple(self.boxes))

    def __eq__(self, other) -> bool:
        if not isinstance(other, BoxLayout):
            return NotImplemented
        return (
            self.id == other.id
            and self.prompt == other.prompt
            and self.style == other.style
            and sorted(self.boxes, key=ComponentBox.sort_key)
            == sorted(other.boxes, key=ComponentBox.sort_key)
        )

    def __hash__(self):
        return hash((self.id, self.prompt, self.style,
                     tuple(sorted(self.boxes, key=ComponentBox.sort_key))))

    def non_empty(self, taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY) -> tuple[ComponentBox, ...]:
        empty = taxonomy.empty_index
        return tuple(b for b in self.boxes if b.category != empty)


def _check_sizes_positive(boxes: Iterable[ComponentBox]) -> None:
    for i, box in enumerate(boxes):
        if min(box.size) <= 0:
            raise DegenerateSize(f"boxes[{i}].size must be positive, got {box.size}")


def normalize_layout(layout: BoxLayout,
                     taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY) -> BoxLayout:
    """Uniformly rescale and translate so the tight bounding box of the
    non-empty boxes fits [0,1]^3 with its center at (0.5, 0.5, 0.5).

    The same scale factor applies to every axis, so relative geometry is
    preserved.  Normalization happens before padding; empty boxes, if any,
    are carried through the same affine map.
    """
    real = layout.non_empty(taxonomy)
    if not real:
        raise EmptyLayout("normalize_layout needs at least one non-empty box")
    _check_sizes_positive(layout.boxes)

    lo = [min(b.lo[a] for b in real) for a in range(3)]
    hi = [max(b.hi[a] for b in real) for a in range(3)]
    extent = max(hi[a] - lo[a] for a in range(3))
    scale = 1.0 / extent
    mid = [(lo[a] + hi[a]) / 2 for a in range(3)]

    def mapped(box: ComponentBox) -> ComponentBox:
        center = tuple((box.center[a] - mid[a]) * scale + 0.5 for a in range(3))
        size = tuple(box.size[a] * scale for a in range(3))
        return ComponentBox(center, size, box.category)

    return replace(layout, boxes=tuple(mapped(b) for b in layout.boxes))


def pad_layout(layout: BoxLayout, max_boxes: int, rng: np.random.Generator,
               mode: str = "padreal",
               taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY) -> BoxLayout:
    """Pad with empty-class boxes up to exactly ``max_boxes`` boxes.

    ``padreal`` copies each padding box's center and size from a uniformly
    chosen non-empty donor; ``zeros`` parks padding boxes at the origin with
    the minimum admissible size.
    """
    if mode not in ("padreal", "zeros"):
        raise ValueError(f"unknown padding mode {mode!r}")
    if len(layout.boxes) > max_boxes:
        raise TooManyBoxes(
            f"layout has {len(layout.boxes)} boxes, max is {max_boxes}")

    need = max_boxes - len(layout.boxes)
    if need == 0:
        return layout
    real = layout.non_empty(taxonomy)
    pads = []
    for _ in range(need):
        if mode == "padreal" and real:
            donor = real[int(rng.integers(len(real)))]
            pads.append(ComponentBox(donor.center, donor.size, taxonomy.empty_index))
        else:
            pads.append(ComponentBox((0.0, 0.0, 0.0),
                                     (SIZE_FLOOR, SIZE_FLOOR, SIZE_FLOOR),
                                     taxonomy.empty_index))
    return replace(layout, boxes=layout.boxes + tuple(pads))


def augment(layout: BoxLayout, op: str) -> BoxLayout:
    """Apply a symmetry of the unit cube about the vertical (z) axis.

    Boxes are axis-aligned, so only quarter turns keep the representation
    valid; 90/270 degree turns swap the x/y size components.  Mirrors
    reflect about the planes x=0.5 and y=0.5.  A normalized input stays
    normalized.
    """
    if op not in AUGMENT_OPS:
        raise ValueError(f"unknown augment op {op!r}")
    if op == "identity":
        return layout

    def mapped(box: ComponentBox) -> ComponentBox:
        x, y, z = box.center
        sx, sy, sz = box.size
        if op == "rot90":
            return ComponentBox((1 - y, x, z), (sy, sx, sz), box.category)
        if op == "rot180":
            return ComponentBox((1 - x, 1 - y, z), (sx, sy, sz), box.category)
        if op == "rot270":
            return ComponentBox((y, 1 - x, z), (sy, sx, sz), box.category)
        if op == "mirror_x":
            return ComponentBox((1 - x, y, z), (sx, sy, sz), box.category)
        return ComponentBox((x, 1 - y, z), (sx, sy, sz), box.category)

    return replace(layout, boxes=tuple(mapped(b) for b in layout.boxes))


def encode(layout: BoxLayout,
           taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY) -> np.ndarray:
    """Encode boxes as rows [center(3), size(3), one-hot(K+1)]."""
    width = 6 + taxonomy.onehot_width
    out = np.zeros((len(layout.boxes), width), dtype=np.float64)
    for i, box in enumerate(layout.boxes):
        if not 0 <= box.category <= taxonomy.empty_index:
            raise UnknownCategory(f"category index {box.category} out of range")
        out[i, 0:3] = box.center
        out[i, 3:6] = box.size
        out[i, 6 + box.category] = 1.0
    return out


def decode(tensor: np.ndarray, taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY,
           drop_empty: bool = False, prompt: str = "", style: str = "",
           layout_id: str = "") -> BoxLayout:
    """Decode a row tensor back into a layout.

    Class is the per-row argmax over the one-hot dims; centers clamp to
    [0,1] and sizes to [SIZE_FLOOR, 1] so sampled noise always yields
    usable geometry.
    """
    arr = np.asarray(tensor, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 6 + taxonomy.onehot_width:
        raise BadShape(
            f"expected (*, {6 + taxonomy.onehot_width}) tensor, got {arr.shape}")
    boxes = []
    for row in arr:
        category = int(np.argmax(row[6:]))
        if drop_empty and category == taxonomy.empty_index:
            continue
        center = tuple(float(min(1.0, max(0.0, v))) for v in row[0:3])
        size = tuple(float(min(1.0, max(SIZE_FLOOR, v))) for v in row[3:6])
        boxes.append(ComponentBox(center, size, category))
    return BoxLayout(tuple(boxes), prompt=prompt, style=style, id=layout_id)


def aabb_iou(a: ComponentBox, b: ComponentBox) -> float:
    """Intersection volume over union volume of two axis-aligned boxes.

    Boxes are closed intervals; touching boxes intersect with zero volume
    and therefore have IoU 0.
    """
    if min(a.size) <= 0 or min(b.size) <= 0:
        raise DegenerateSize("aabb_iou needs positive sizes")
    # Volumes come from the same lo/hi differences as the intersection so
    # that identical boxes yield exactly 1.0.
    inter = vol_a = vol_b = 1.0
    for axis in range(3):
        overlap = min(a.hi[axis], b.hi[axis]) - max(a.lo[axis], b.lo[axis])
        if overlap <= 0:
            return 0.0
        inter *= overlap
        vol_a *= a.hi[axis] - a.lo[axis]
        vol_b *= b.hi[axis] - b.lo[axis]
    union = vol_a + vol_b - inter
    return inter / union


def iou_matrix(centers: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    """Pairwise IoU for n boxes given as (n,3) center and size arrays."""
    lo = centers - sizes / 2
    hi = centers + sizes / 2
    inter = np.ones((len(centers), len(centers)))
    for axis in range(3):
        overlap = (np.minimum(hi[:, None, axis], hi[None, :, axis])
                   - np.maximum(lo[:, None, axis], lo[None, :, axis]))
        inter *= np.clip(overlap, 0.0, None)
    vol = (hi - lo).prod(axis=1)
    union = vol[:, None] + vol[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(union > 0, inter / union, 0.0)
    return out


def pairwise_iou_sum(layout: BoxLayout,
                     taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY,
                     exclude_walls: bool = True,
                     exclude_empty: bool = True) -> float:
    """Sum of aabb_iou over unordered box pairs.

    Pairs touching a wall-class box are skipped when ``exclude_walls`` is
    set (components embedded in walls are legitimate overlaps), and pairs
    touching an empty-class box when ``exclude_empty`` is set.
    """
    keep = []
    for box in layout.boxes:
        if exclude_walls and box.category == 0:
            continue
        if exclude_empty and box.category == taxonomy.empty_index:
            continue
        keep.append(box)
    if len(keep) < 2:
        return 0.0
    centers = np.array([b.center for b in keep])
    sizes = np.array([b.size for b in keep])
    if (sizes <= 0).any():
        raise DegenerateSize("pairwise_iou_sum needs positive sizes")
    mat = iou_matrix(centers, sizes)
    return float(np.triu(mat, k=1).sum())


# ---------------------------------------------------------------------------
# JSONL wire format.
#
# One record per line:
#   {"id": ..., "prompt": ..., "style": ..., "boxes": [{"category": name,
#    "center": [x,y,z], "size": [sx,sy,sz]}, ...]}
# Keys are emitted in this order; reals carry up to 9 significant digits so
# that save -> load -> save is byte-identical.


def _fmt(x: float) -> str:
    s = format(float(x), ".9g")
    # ".9g" may emit bare exponents like "1e-05"; that is valid JSON.
    return s


def _box_to_json(box: ComponentBox, taxonomy: CategoryTaxonomy) -> str:
    name = taxonomy.name_of(box.category)
    center = ",".join(_fmt(v) for v in box.center)
    size = ",".join(_fmt(v) for v in box.size)
    return ('{"category":%s,"center":[%s],"size":[%s]}'
            % (json.dumps(name), center, size))


def layout_to_json(layout: BoxLayout,
                   taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY) -> str:
    boxes = ",".join(_box_to_json(b, taxonomy) for b in layout.boxes)
    return ('{"id":%s,"prompt":%s,"style":%s,"boxes":[%s]}'
            % (json.dumps(layout.id), json.dumps(layout.prompt),
               json.dumps(layout.style), boxes))


def _parse_vec3(value, path: str, line_no: int) -> Vec3:
    if (not isinstance(value, list) or len(value) != 3
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                       for v in value)):
        raise ParseError(f"line {line_no}: {path}: expected 3 numbers")
    return tuple(float(v) for v in value)


def layout_from_record(record: dict, line_no: int,
                       taxonomy: CategoryTaxonomy) -> BoxLayout:
    if not isinstance(record, dict):
        raise ParseError(f"line {line_no}: record must be an object")
    for key in ("id", "prompt", "style"):
        if key in record and not isinstance(record[key], str):
            raise ParseError(f"line {line_no}: {key}: expected string")
    raw_boxes = record.get("boxes")
    if not isinstance(raw_boxes, list):
        raise ParseError(f"line {line_no}: boxes: expected array")
    boxes = []
    for i, raw in enumerate(raw_boxes):
        path = f"boxes[{i}]"
        if not isinstance(raw, dict):
            raise ParseError(f"line {line_no}: {path}: expected object")
        name = raw.get("category")
        if not isinstance(name, str):
            raise ParseError(f"line {line_no}: {path}.category: expected string")
        if name == "empty":
            category = taxonomy.empty_index
        else:
            try:
                category = taxonomy.index_of(name)
            except UnknownCategory:
                raise UnknownCategory(
                    f"line {line_no}: {path}.category: unknown category {name!r}"
                ) from None
        center = _parse_vec3(raw.get("center"), f"{path}.center", line_no)
        size = _parse_vec3(raw.get("size"), f"{path}.size", line_no)
        if min(size) <= 0:
            raise ParseError(
                f"line {line_no}: {path}.size: components must be positive")
        boxes.append(ComponentBox(center, size, category))
    return BoxLayout(tuple(boxes), prompt=record.get("prompt", ""),
                     style=record.get("style", ""), id=record.get("id", ""))


def load_jsonl(path, taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY) -> list[BoxLayout]:
    layouts = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"line {line_no}: invalid JSON: {exc}") from None
            layouts.append(layout_from_record(record, line_no, taxonomy))
    return layouts


def save_jsonl(layouts: Sequence[BoxLayout], path,
               taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for layout in layouts:
            fh.write(layout_to_json(layout, taxonomy))
            fh.write("\n")
