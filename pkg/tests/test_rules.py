import json

import pytest

from blockforge.errors import OracleMalformedResponse, OracleUnavailable
from blockforge.layout import BoxLayout, ComponentBox
from blockforge.rules import (
    DEFAULT_TEMPLATES,
    RemoteStyleOracle,
    expand_to_rules,
    infer_attachments,
    offline_style_oracle,
    parse_rule_layout,
    resolve_styles,
    rule_layout_to_json,
    validate_rule_layout,
)


def make_layout(boxes, prompt="", style=""):
    return BoxLayout(tuple(boxes), prompt=prompt, style=style)


WALL = ComponentBox((0.5, 0.3, 0.4), (0.8, 0.08, 0.5), 0)
WINDOW_IN_WALL = ComponentBox((0.35, 0.3, 0.4), (0.1, 0.1, 0.2), 1)


# --- expand ------------------------------------------------------------------


def test_expand_basic_templates():
    rules = expand_to_rules(make_layout([WALL, WINDOW_IN_WALL]))
    assert len(rules.components) == 2
    window = [n for n in rules.components if n.category == "window"][0]
    for key in ("frame_width", "muntin_cell", "glass_material"):
        assert key in window.style
    wall = [n for n in rules.components if n.category == "wall"][0]
    assert wall.style == DEFAULT_TEMPLATES.templates["wall"]
    assert wall.style is not DEFAULT_TEMPLATES.templates["wall"]


def test_expand_excludes_empty_class():
    empty = ComponentBox((0.5, 0.5, 0.5), (0.1, 0.1, 0.1), 13)
    rules = expand_to_rules(make_layout([WALL, empty]))
    assert len(rules.components) == 1


def test_expand_ids_stable_across_runs_and_order():
    layout = make_layout([WINDOW_IN_WALL, WALL])
    a = expand_to_rules(layout)
    b = expand_to_rules(make_layout([WALL, WINDOW_IN_WALL]))
    assert [n.id for n in a.components] == [n.id for n in b.components]
    assert [(n.id, n.category, n.center) for n in a.components] == \
        [(n.id, n.category, n.center) for n in b.components]
    # sorted by (category index, center): wall (0) before window (1)
    assert a.components[0].category == "wall"
    assert a.components[0].id == "c000"


def test_expand_geometry_matches_boxes():
    rules = expand_to_rules(make_layout([WALL]))
    node = rules.components[0]
    assert node.center == WALL.center
    assert node.size == WALL.size


# --- attachments -------------------------------------------------------------


def test_window_inside_wall_attaches():
    rules = infer_attachments(expand_to_rules(make_layout([WALL, WINDOW_IN_WALL])))
    wall = [n for n in rules.components if n.category == "wall"][0]
    window = [n for n in rules.components if n.category == "window"][0]
    assert window.id in wall.children
    assert window.id not in rules.roots
    assert not window.floating


def test_attachment_prefers_larger_overlap():
    # hand-computed: window x-span [0.42, 0.62]; wall A covers 0.08 of it,
    # wall B covers 0.12, so B wins on intersection volume
    wall_a = ComponentBox((0.3, 0.5, 0.5), (0.4, 0.1, 0.5), 0)
    wall_b = ComponentBox((0.7, 0.5, 0.5), (0.4, 0.1, 0.5), 0)
    window = ComponentBox((0.52, 0.5, 0.5), (0.2, 0.1, 0.2), 1)
    rules = infer_attachments(expand_to_rules(make_layout([wall_a, wall_b, window])))
    by_center = {n.center[0]: n for n in rules.components if n.category == "wall"}
    window_node = [n for n in rules.components if n.category == "window"][0]
    assert window_node.id in by_center[0.7].children
    assert window_node.id not in by_center[0.3].children


def test_attachment_tie_breaks_to_lower_wall_id():
    # power-of-two coordinates make the overlap/distance ties exact
    wall_a = ComponentBox((0.25, 0.5, 0.5), (0.5, 0.125, 0.5), 0)
    wall_b = ComponentBox((0.75, 0.5, 0.5), (0.5, 0.125, 0.5), 0)
    window = ComponentBox((0.5, 0.5, 0.5), (0.25, 0.125, 0.25), 1)
    rules = infer_attachments(expand_to_rules(make_layout([wall_a, wall_b, window])))
    walls = sorted((n for n in rules.components if n.category == "wall"),
                   key=lambda n: n.id)
    assert [n for n in rules.components if n.category == "window"][0].id \
        in walls[0].children


def test_floating_door_flagged():
    door = ComponentBox((0.9, 0.9, 0.9), (0.05, 0.05, 0.1), 2)
    rules = infer_attachments(expand_to_rules(make_layout([WALL, door])))
    door_node = [n for n in rules.components if n.category == "door"][0]
    assert door_node.floating
    assert door_node.id in rules.roots


def test_attachment_idempotent_and_order_invariant():
    layout_a = make_layout([WALL, WINDOW_IN_WALL])
    layout_b = make_layout([WINDOW_IN_WALL, WALL])
    once = infer_attachments(expand_to_rules(layout_a))
    twice = infer_attachments(once)
    other = infer_attachments(expand_to_rules(layout_b))
    assert rule_layout_to_json(once) == rule_layout_to_json(twice)
    assert rule_layout_to_json(once) == rule_layout_to_json(other)


def test_non_attachable_categories_stay_root():
    roof = ComponentBox((0.5, 0.3, 0.7), (0.9, 0.2, 0.2), 3)
    rules = infer_attachments(expand_to_rules(make_layout([WALL, roof])))
    roof_node = [n for n in rules.components if n.category == "roof"][0]
    assert roof_node.id in rules.roots
    assert not roof_node.floating


# --- style oracles -----------------------------------------------------------


def test_offline_oracle_modern_office():
    styles = offline_style_oracle("modern office building",
                                  [("c000", "window"), ("c001", "wall")])
    assert styles["c000"]["glass_material"] == "glass_reflective"
    assert styles["c000"]["frame_material"] == "metal"
    assert styles["c001"]["material"] == "concrete"


def test_offline_oracle_medieval_castle():
    styles = offline_style_oracle("a medieval castle",
                                  [("c000", "wall"), ("c001", "roof")])
    assert styles["c000"]["material"] == "stone"
    assert styles["c001"]["material"] == "slate"


def test_offline_oracle_empty_prompt():
    assert offline_style_oracle("", [("c000", "wall")]) == {}


def test_offline_oracle_priority_order():
    styles = offline_style_oracle("modern medieval", [("c000", "wall")])
    assert styles["c000"]["material"] == "concrete"


def test_offline_oracle_roof_kind_keyword():
    styles = offline_style_oracle("a wooden cabin with a hip roof",
                                  [("c000", "roof")])
    assert styles["c000"]["kind"] == "hip"


def test_offline_oracle_word_boundaries():
    # "modernist" must not trigger the "modern" row
    assert offline_style_oracle("modernist-free", [("c0", "wall")]) == {}


def test_resolve_styles_modern_window():
    rules = infer_attachments(expand_to_rules(
        make_layout([WALL, WINDOW_IN_WALL])))
    out, warnings = resolve_styles(rules, "modern office building")
    window = [n for n in out.components if n.category == "window"][0]
    assert window.style["glass_material"] == "glass_reflective"
    assert window.style["frame_material"] == "metal"
    assert warnings == []


def test_resolve_styles_empty_reply_keeps_rules():
    rules = expand_to_rules(make_layout([WALL]))
    out, warnings = resolve_styles(rules, "anything", lambda p, c: {})
    assert rule_layout_to_json(out) == rule_layout_to_json(rules)
    assert warnings == []


def test_resolve_styles_unknown_key_warning():
    rules = expand_to_rules(make_layout([WALL]))
    oracle = lambda p, c: {"c000": {"nonexistent_key": 1}}  # noqa: E731
    out, warnings = resolve_styles(rules, "x", oracle)
    assert "nonexistent_key" not in out.components[0].style
    assert any("nonexistent_key" in w for w in warnings)


def test_resolve_styles_never_touches_geometry():
    rules = expand_to_rules(make_layout([WALL, WINDOW_IN_WALL]))
    out, _ = resolve_styles(rules, "a medieval castle")
    for before, after in zip(rules.components, out.components):
        assert before.center == after.center
        assert before.size == after.size


# --- remote oracle -----------------------------------------------------------


class _FakeResponse:
    def __init__(self, payload):
        self.payload = payload

    def raise_for_status(self):
        pass

    def json(self):
        return self.payload


def test_remote_oracle_happy_path(monkeypatch):
    calls = []

    def fake_post(url, json=None, timeout=None):
        calls.append((url, json, timeout))
        return _FakeResponse({"styles": {"c000": {"material": "stone"}}})

    monkeypatch.setattr("requests.post", fake_post)
    oracle = RemoteStyleOracle("http://oracle.example")
    styles = oracle("castle", [("c000", "wall")])
    assert styles == {"c000": {"material": "stone"}}
    url, payload, timeout = calls[0]
    assert url == "http://oracle.example/v1/style"
    assert payload == {"prompt": "castle",
                       "components": [{"id": "c000", "category": "wall"}]}
    assert timeout == 5.0


def test_remote_oracle_malformed_raises(monkeypatch):
    monkeypatch.setattr("requests.post",
                        lambda *a, **k: _FakeResponse({"nope": 1}))
    with pytest.raises(OracleMalformedResponse):
        RemoteStyleOracle("http://oracle.example")("x", [("c0", "wall")])


def test_remote_oracle_falls_back_offline(monkeypatch):
    attempts = []

    def fake_post(*a, **k):
        attempts.append(1)
        raise OSError("connection refused")

    monkeypatch.setattr("requests.post", fake_post)
    oracle = RemoteStyleOracle("http://oracle.example", retries=2)
    styles = oracle("a medieval castle", [("c000", "wall")])
    assert len(attempts) == 3  # 1 try + 2 retries
    assert styles["c000"]["material"] == "stone"


def test_remote_oracle_unavailable_without_fallback(monkeypatch):
    def fake_post(*a, **k):
        raise OSError("connection refused")

    monkeypatch.setattr("requests.post", fake_post)
    oracle = RemoteStyleOracle("http://oracle.example", fallback=None)
    with pytest.raises(OracleUnavailable):
        oracle("x", [("c0", "wall")])


# --- validation / canonical form ---------------------------------------------


def valid_doc():
    rules = infer_attachments(expand_to_rules(
        make_layout([WALL, WINDOW_IN_WALL], prompt="hi", style="modern")))
    return json.loads(rule_layout_to_json(rules))


def test_validate_round_trip_canonical():
    doc = valid_doc()
    text = json.dumps(doc)
    rules, errors = validate_rule_layout(text.encode("utf-8"))
    assert errors == []
    canonical = rule_layout_to_json(rules)
    rules2, _ = validate_rule_layout(canonical)
    assert rule_layout_to_json(rules2) == canonical


def test_parse_serialize_identity():
    doc = valid_doc()
    rules = parse_rule_layout(json.dumps(doc))
    again = parse_rule_layout(rule_layout_to_json(rules))
    assert again == rules


def test_validate_dangling_child():
    doc = valid_doc()
    doc["components"][0]["children"] = ["c999"]
    rules, errors = validate_rule_layout(json.dumps(doc))
    assert rules is None
    assert any("children[0]: dangling id" in e for e in errors)


def test_validate_duplicate_attachment():
    doc = valid_doc()
    # attach the window to the wall twice via a second parent
    doc["components"].append({
        "id": "c002", "category": "wall", "center": [0.5, 0.7, 0.4],
        "size": [0.5, 0.05, 0.5], "style": {}, "children": ["c001"],
        "floating": False})
    doc["roots"].append("c002")
    rules, errors = validate_rule_layout(json.dumps(doc))
    assert rules is None
    assert any("duplicate attachment" in e for e in errors)


def test_validate_duplicate_id():
    doc = valid_doc()
    doc["components"].append(dict(doc["components"][0]))
    rules, errors = validate_rule_layout(json.dumps(doc))
    assert rules is None
    assert any("duplicate id" in e for e in errors)


def test_validate_self_cycle():
    doc = valid_doc()
    doc["components"][0]["children"] = [doc["components"][0]["id"]]
    rules, errors = validate_rule_layout(json.dumps(doc))
    assert rules is None
    assert any("cycle" in e for e in errors)


def test_validate_geometry_and_types():
    doc = valid_doc()
    doc["components"][0]["size"] = [0.1, -0.2, 0.1]
    rules, errors = validate_rule_layout(json.dumps(doc))
    assert rules is None
    assert any("size: components must be positive" in e for e in errors)

    rules, errors = validate_rule_layout(b"not json at all")
    assert rules is None
    assert any("invalid JSON" in e for e in errors)


def test_validate_unattached_component():
    doc = valid_doc()
    doc["roots"] = [r for r in doc["roots"] if r != "c000"]
    rules, errors = validate_rule_layout(json.dumps(doc))
    assert rules is None
    assert any("neither a root nor attached" in e for e in errors)


def test_validate_unknown_category():
    doc = valid_doc()
    doc["components"][0]["category"] = "spire"
    rules, errors = validate_rule_layout(json.dumps(doc))
    assert rules is None
    assert any("unknown category" in e for e in errors)
