import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blockforge.errors import (
    DegenerateSize,
    EmptyLayout,
    ParseError,
    TooManyBoxes,
    UnknownCategory,
)
from blockforge.layout import (
    AUGMENT_OPS,
    SIZE_FLOOR,
    BoxLayout,
    CategoryTaxonomy,
    ComponentBox,
    DEFAULT_TAXONOMY,
    aabb_iou,
    augment,
    decode,
    encode,
    load_jsonl,
    normalize_layout,
    pad_layout,
    pairwise_iou_sum,
    save_jsonl,
)

from conftest import random_box, random_layout


def test_taxonomy_shape(taxonomy):
    assert taxonomy.k == 13
    assert taxonomy.names[0] == "wall"
    assert taxonomy.empty_index == 13
    assert taxonomy.onehot_width == 14
    assert len(set(taxonomy.names)) == 13


def test_taxonomy_rejects_misordered():
    with pytest.raises(ValueError):
        CategoryTaxonomy(names=("window", "wall"))


# --- normalize -------------------------------------------------------------


def test_normalize_single_box_forced():
    layout = BoxLayout((ComponentBox((2, 2, 2), (2, 2, 2), 0),))
    out = normalize_layout(layout)
    assert out.boxes[0].center == (0.5, 0.5, 0.5)
    assert out.boxes[0].size == (1.0, 1.0, 1.0)


def test_normalize_idempotent(rng):
    layout = normalize_layout(random_layout(rng))
    again = normalize_layout(layout)
    for a, b in zip(layout.boxes, again.boxes):
        assert max(abs(x - y) for x, y in zip(a.center, b.center)) < 1e-9
        assert max(abs(x - y) for x, y in zip(a.size, b.size)) < 1e-9


def test_normalize_matches_affine_oracle():
    # Two boxes spanning [0,4]x[0,2]x[0,2]: scale 1/4, then recenter.
    a = ComponentBox((1, 0.5, 1), (2, 1, 2), 0)
    b = ComponentBox((3, 1.5, 1), (2, 1, 2), 1)
    out = normalize_layout(BoxLayout((a, b)))

    # independent affine oracle: x' = (x - mid) * s + 0.5
    scale = 1 / 4
    mid = (2.0, 1.0, 1.0)

    def oracle(box):
        center = tuple((box.center[i] - mid[i]) * scale + 0.5 for i in range(3))
        size = tuple(box.size[i] * scale for i in range(3))
        return center, size

    for src, got in zip((a, b), out.boxes):
        want_center, want_size = oracle(src)
        assert got.center == pytest.approx(want_center, abs=1e-12)
        assert got.size == pytest.approx(want_size, abs=1e-12)


def test_normalize_errors():
    with pytest.raises(EmptyLayout):
        normalize_layout(BoxLayout(()))
    empty_only = BoxLayout((ComponentBox((0.5,) * 3, (0.1,) * 3, 13),))
    with pytest.raises(EmptyLayout):
        normalize_layout(empty_only)
    bad = BoxLayout((ComponentBox((0.5,) * 3, (0.1, -0.1, 0.1), 0),))
    with pytest.raises(DegenerateSize):
        normalize_layout(bad)


# --- padding ---------------------------------------------------------------


def test_padreal_copies_donor_geometry(rng):
    layout = BoxLayout((
        ComponentBox((0.2, 0.2, 0.2), (0.1, 0.1, 0.1), 0),
        ComponentBox((0.8, 0.8, 0.8), (0.2, 0.2, 0.2), 1),
    ))
    padded = pad_layout(layout, 4, np.random.default_rng(7), mode="padreal")
    assert len(padded.boxes) == 4
    donors = {(b.center, b.size) for b in layout.boxes}
    for box in padded.boxes[2:]:
        assert box.category == 13
        assert (box.center, box.size) in donors


def test_pad_noop_and_too_many(rng):
    layout = random_layout(rng, n=4)
    assert pad_layout(layout, 4, rng) == layout
    with pytest.raises(TooManyBoxes):
        pad_layout(layout, 3, rng)


def test_pad_zeros_mode(rng):
    layout = random_layout(rng, n=1)
    padded = pad_layout(layout, 3, rng, mode="zeros")
    for box in padded.boxes[1:]:
        assert box.category == 13
        assert box.center == (0.0, 0.0, 0.0)
        assert box.size == (SIZE_FLOOR,) * 3


def test_pad_deterministic_for_seed(rng):
    layout = random_layout(rng, n=3)
    a = pad_layout(layout, 8, np.random.default_rng(42))
    b = pad_layout(layout, 8, np.random.default_rng(42))
    assert a == b


# --- augmentation ----------------------------------------------------------


def test_augment_identity(demo_layout):
    assert augment(demo_layout, "identity") == demo_layout


def test_mirror_x_formula():
    box = ComponentBox((0.7, 0.5, 0.3), (0.2, 0.4, 0.1), 2)
    out = augment(BoxLayout((box,)), "mirror_x").boxes[0]
    assert out.center == pytest.approx((0.3, 0.5, 0.3))
    assert out.size == box.size


def test_rot90_four_times_identity(rng):
    layout = normalize_layout(random_layout(rng))
    out = layout
    for _ in range(4):
        out = augment(out, "rot90")
    for a, b in zip(layout.boxes, out.boxes):
        assert max(abs(x - y) for x, y in zip(a.center, b.center)) < 1e-9
        assert max(abs(x - y) for x, y in zip(a.size, b.size)) < 1e-9


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=30, deadline=None)
def test_augment_group_relations(seed):
    rng = np.random.default_rng(seed)
    layout = normalize_layout(random_layout(rng))

    def close(a, b):
        return all(
            max(abs(x - y) for x, y in zip(p.center, q.center)) < 1e-9
            and max(abs(x - y) for x, y in zip(p.size, q.size)) < 1e-9
            for p, q in zip(a.boxes, b.boxes))

    assert close(augment(augment(layout, "mirror_x"), "mirror_x"), layout)
    assert close(augment(augment(layout, "mirror_y"), "mirror_y"), layout)
    assert close(augment(augment(layout, "rot90"), "rot270"), layout)
    assert close(augment(augment(layout, "rot180"), "rot180"), layout)


def test_augment_preserves_normalization(rng):
    layout = normalize_layout(random_layout(rng))
    for op in AUGMENT_OPS:
        out = augment(layout, op)
        renorm = normalize_layout(out)
        for a, b in zip(out.boxes, renorm.boxes):
            assert max(abs(x - y) for x, y in zip(a.center, b.center)) < 1e-9


# --- encode / decode -------------------------------------------------------


def test_encode_decode_round_trip(rng, taxonomy):
    layout = pad_layout(random_layout(rng, n=5), 8, rng)
    tensor = encode(layout, taxonomy)
    assert tensor.shape == (8, 20)
    assert np.allclose(tensor[:, 6:].sum(axis=1), 1.0)
    back = decode(tensor, taxonomy, drop_empty=False)
    assert sorted(b.sort_key() for b in back.boxes) == \
        sorted(b.sort_key() for b in layout.boxes)


def test_decode_argmax_and_clamps(taxonomy):
    row = np.zeros((1, 20))
    row[0, 0:3] = (0.5, 1.3, -0.2)     # center clamps to [0,1]
    row[0, 3:6] = (-0.2, 0.4, 2.0)     # size clamps to [SIZE_FLOOR, 1]
    row[0, 6] = 0.1
    row[0, 7] = 0.9
    box = decode(row, taxonomy).boxes[0]
    assert box.category == 1
    assert box.center == (0.5, 1.0, 0.0)
    assert box.size == (SIZE_FLOOR, 0.4, 1.0)


def test_decode_drop_empty(taxonomy, rng):
    layout = pad_layout(random_layout(rng, n=3), 6, rng)
    tensor = encode(layout, taxonomy)
    kept = decode(tensor, taxonomy, drop_empty=True)
    assert len(kept.boxes) == 3


def test_decode_bad_shape(taxonomy):
    from blockforge.errors import BadShape

    with pytest.raises(BadShape):
        decode(np.zeros((2, 7)), taxonomy)


# --- IoU -------------------------------------------------------------------


def test_iou_identical_and_disjoint():
    a = ComponentBox((0.5, 0.5, 0.5), (0.2, 0.2, 0.2), 0)
    b = ComponentBox((0.9, 0.9, 0.9), (0.1, 0.1, 0.1), 0)
    assert aabb_iou(a, a) == 1.0
    assert aabb_iou(a, b) == 0.0


def test_iou_touching_boxes_is_zero():
    a = ComponentBox((0.25, 0.5, 0.5), (0.5, 0.5, 0.5), 0)
    b = ComponentBox((0.75, 0.5, 0.5), (0.5, 0.5, 0.5), 0)
    assert aabb_iou(a, b) == 0.0


def test_iou_worked_example():
    # Analytic: inter 0.375*0.5*0.5 = 0.09375, union 0.25 - 0.09375
    a = ComponentBox((0.5, 0.5, 0.5), (0.5, 0.5, 0.5), 0)
    b = ComponentBox((0.625, 0.5, 0.5), (0.5, 0.5, 0.5), 0)
    assert aabb_iou(a, b) == pytest.approx(0.6, abs=1e-12)


def _monte_carlo_iou(a, b, n, rng):
    lo = np.minimum(a.lo, b.lo)
    hi = np.maximum(a.hi, b.hi)
    pts = rng.uniform(lo, hi, size=(n, 3))
    in_a = np.all((pts >= a.lo) & (pts <= a.hi), axis=1)
    in_b = np.all((pts >= b.lo) & (pts <= b.hi), axis=1)
    inter = np.count_nonzero(in_a & in_b)
    union = np.count_nonzero(in_a | in_b)
    return inter / union if union else 0.0


def test_iou_example_against_monte_carlo(rng):
    a = ComponentBox((0.5, 0.5, 0.5), (0.5, 0.5, 0.5), 0)
    b = ComponentBox((0.625, 0.5, 0.5), (0.5, 0.5, 0.5), 0)
    assert _monte_carlo_iou(a, b, 10 ** 6, rng) == pytest.approx(0.6, abs=1e-2)


def test_iou_monte_carlo_200_pairs(rng):
    for _ in range(200):
        a = random_box(rng)
        b = random_box(rng)
        exact = aabb_iou(a, b)
        mc = _monte_carlo_iou(a, b, 20_000, rng)
        assert abs(exact - mc) < 1e-2 or abs(exact - mc) < 0.05 * max(exact, mc)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=50, deadline=None)
def test_iou_properties(seed):
    rng = np.random.default_rng(seed)
    a, b = random_box(rng), random_box(rng)
    ab = aabb_iou(a, b)
    assert ab == aabb_iou(b, a)
    assert 0.0 <= ab <= 1.0
    assert aabb_iou(a, a) == pytest.approx(1.0)


def test_iou_degenerate_raises():
    a = ComponentBox((0.5, 0.5, 0.5), (0.2, 0.2, 0.2), 0)
    bad = ComponentBox((0.5, 0.5, 0.5), (0.0, 0.2, 0.2), 0)
    with pytest.raises(DegenerateSize):
        aabb_iou(a, bad)


# --- pairwise sums ---------------------------------------------------------


def test_pairwise_sum_disjoint_is_zero():
    boxes = tuple(ComponentBox((0.1 + 0.3 * i, 0.5, 0.5), (0.1, 0.1, 0.1), 1)
                  for i in range(3))
    assert pairwise_iou_sum(BoxLayout(boxes)) == 0.0


def test_pairwise_sum_excludes_walls():
    window = ComponentBox((0.5, 0.5, 0.5), (0.2, 0.2, 0.2), 1)
    layout = BoxLayout((window, window,
                        ComponentBox((0.5, 0.5, 0.5), (0.4, 0.4, 0.4), 0)))
    assert pairwise_iou_sum(layout, exclude_walls=True) == pytest.approx(1.0)


def test_pairwise_sum_matches_brute_force(rng, taxonomy):
    layout = random_layout(rng, n=5)
    total = 0.0
    for i in range(5):
        for j in range(i + 1, 5):
            a, b = layout.boxes[i], layout.boxes[j]
            if a.category == 0 or b.category == 0:
                continue
            total += aabb_iou(a, b)
    assert pairwise_iou_sum(layout, taxonomy) == pytest.approx(total, abs=1e-12)


def test_pairwise_sum_permutation_invariant(rng, taxonomy):
    layout = random_layout(rng, n=6)
    perm = BoxLayout(tuple(reversed(layout.boxes)))
    assert pairwise_iou_sum(layout, taxonomy) == \
        pairwise_iou_sum(perm, taxonomy)


# --- JSONL -----------------------------------------------------------------


def test_jsonl_round_trip_byte_identical(tmp_path, rng, taxonomy):
    layouts = [random_layout(rng, n=3) for _ in range(3)]
    layouts = [BoxLayout(l.boxes, prompt=f"p{i}", style="modern", id=f"l{i}")
               for i, l in enumerate(layouts)]
    p1 = tmp_path / "a.jsonl"
    p2 = tmp_path / "b.jsonl"
    save_jsonl(layouts, p1, taxonomy)
    loaded = load_jsonl(p1, taxonomy)
    # canonical re-serialization is byte-identical (9 significant digits)
    save_jsonl(loaded, p2, taxonomy)
    assert p1.read_bytes() == p2.read_bytes()
    for want, got in zip(layouts, loaded):
        assert (want.id, want.prompt, want.style) == (got.id, got.prompt, got.style)
        for a, b in zip(want.boxes, got.boxes):
            assert a.category == b.category
            assert a.center == pytest.approx(b.center, rel=1e-8)
            assert a.size == pytest.approx(b.size, rel=1e-8)
    # layouts already in the canonical domain round-trip to equality
    assert load_jsonl(p2, taxonomy) == loaded


def test_jsonl_negative_size_names_path(tmp_path):
    record = {"id": "x", "prompt": "", "style": "", "boxes": [
        {"category": "wall", "center": [0.5, 0.5, 0.5], "size": [-1, 0.1, 0.1]}]}
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps(record) + "\n")
    with pytest.raises(ParseError) as err:
        load_jsonl(path)
    assert "boxes[0].size" in str(err.value)
    assert "line 1" in str(err.value)


def test_jsonl_unknown_category(tmp_path):
    record = {"id": "x", "prompt": "", "style": "", "boxes": [
        {"category": "spire", "center": [0.5, 0.5, 0.5], "size": [0.1, 0.1, 0.1]}]}
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps(record) + "\n")
    with pytest.raises(UnknownCategory):
        load_jsonl(path)


def test_jsonl_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    assert load_jsonl(path) == []


def test_jsonl_invalid_json_line_number(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": "a", "boxes": []}\n{nope\n')
    with pytest.raises(ParseError) as err:
        load_jsonl(path)
    assert "line 2" in str(err.value)


# --- semantic equality -----------------------------------------------------


def test_layout_equality_is_permutation_invariant(rng):
    layout = random_layout(rng, n=5)
    shuffled = BoxLayout(tuple(reversed(layout.boxes)), prompt=layout.prompt,
                         style=layout.style, id=layout.id)
    assert layout == shuffled


def test_normalize_permutation_invariant(rng):
    layout = random_layout(rng, n=5)
    shuffled = BoxLayout(tuple(reversed(layout.boxes)))
    assert normalize_layout(layout) == normalize_layout(shuffled)
