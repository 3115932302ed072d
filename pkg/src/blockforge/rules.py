"""Hierarchical rule-based layouts compiled from box-based layouts.

A rule layout is a validated two-level JSON tree: root components (walls,
roofs, slabs, ...) and opening components (windows, doors, awnings)
attached to the wall they overlap most.  Styles start from per-category
templates and can be overwritten by a style oracle; the offline oracle is
a deterministic keyword table standing in for a remote language model.
"""
from __future__ import annotations

import copy
import json
import os
import re
from dataclasses import dataclass, field, replace

from .errors import OracleMalformedResponse, OracleUnavailable, UnknownCategory
from .layout import BoxLayout, CategoryTaxonomy, DEFAULT_TAXONOMY, Vec3, _fmt

DEFAULT_WORLD_SCALE = 12.0  # meters per normalized unit

ORACLE_URL_ENV = "BLOCKFORGE_STYLE_ORACLE_URL"

# Categories that attach to walls during inference.
ATTACHABLE = ("window", "door", "awning")

TEMPLATES: dict[str, dict] = {
    "wall": {"material": "concrete", "color": "white"},
    "window": {"frame_width": 0.06, "muntin_cell": 0.6,
               "glass_material": "glass_clear", "frame_material": "wood"},
    "door": {"material": "wood", "color": "brown"},
    "roof": {"kind": "gable", "material": "shingle", "color": "gray"},
    "floor": {"material": "concrete", "color": "gray"},
    "stairs": {"material": "concrete", "step_height": 0.2},
    "column": {"material": "stone", "color": "white"},
    "balcony": {"material": "concrete", "color": "white"},
    "chimney": {"material": "brick", "color": "red"},
    "railing": {"material": "metal", "color": "black", "post_spacing": 0.4},
    "garage": {"material": "concrete", "color": "gray"},
    "awning": {"material": "fabric", "color": "green"},
    "decoration": {"material": "stone", "color": "white"},
}

REQUIRED_KEYS: dict[str, tuple[str, ...]] = {
    "window": ("frame_width", "muntin_cell", "glass_material"),
}


@dataclass(frozen=True)
class TemplateLibrary:
    templates: dict = field(default_factory=lambda: copy.deepcopy(TEMPLATES))
    required: dict = field(default_factory=lambda: dict(REQUIRED_KEYS))

    def __post_init__(self):
        for category, keys in self.required.items():
            missing = [k for k in keys if k not in self.templates.get(category, {})]
            if missing:
                raise ValueError(
                    f"template for {category!r} lacks required keys {missing}")

    def style_for(self, category: str) -> dict:
        if category not in self.templates:
            raise UnknownCategory(f"no template for category {category!r}")
        return copy.deepcopy(self.templates[category])


DEFAULT_TEMPLATES = TemplateLibrary()


@dataclass(frozen=True)
class ComponentNode:
    id: str
    category: str
    center: Vec3
    size: Vec3
    style: dict
    children: tuple[str, ...] = ()
    floating: bool = False


@dataclass(frozen=True)
class RuleLayout:
    prompt: str
    style: str
    world_scale: float
    roots: tuple[str, ...]
    components: tuple[ComponentNode, ...]

    def node(self, node_id: str) -> ComponentNode:
        for node in self.components:
            if node.id == node_id:
                return node
        raise KeyError(node_id)

    def with_components(self, components) -> "RuleLayout":
        return replace(self, components=tuple(components))


def expand_to_rules(layout: BoxLayout,
                    templates: TemplateLibrary = DEFAULT_TEMPLATES,
                    world_scale: float = DEFAULT_WORLD_SCALE,
                    taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY) -> RuleLayout:
    """One flat node per non-empty box, styled from its category template.

    Node ids are assigned in (category, center) order, so the same layout
    always produces the same ids regardless of box order.
    """
    boxes = sorted(layout.non_empty(taxonomy),
                   key=lambda b: (b.category, b.center, b.size))
    nodes = []
    for i, box in enumerate(boxes):
        category = taxonomy.name_of(box.category)
        nodes.append(ComponentNode(
            id=f"c{i:03d}", category=category, center=box.center,
            size=box.size, style=templates.style_for(category)))
    return RuleLayout(prompt=layout.prompt, style=layout.style,
                      world_scale=float(world_scale),
                      roots=tuple(n.id for n in nodes),
                      components=tuple(nodes))


def _intersection_volume(a: ComponentNode, b: ComponentNode) -> float:
    vol = 1.0
    for axis in range(3):
        lo = max(a.center[axis] - a.size[axis] / 2,
                 b.center[axis] - b.size[axis] / 2)
        hi = min(a.center[axis] + a.size[axis] / 2,
                 b.center[axis] + b.size[axis] / 2)
        if hi <= lo:
            return 0.0
        vol *= hi - lo
    return vol


def infer_attachments(rules: RuleLayout) -> RuleLayout:
    """Attach windows/doors/awnings to the wall they overlap most.

    Ties break by smaller center distance, then lower wall id.  Openings
    overlapping no wall stay at root with the floating flag set.  The
    operation is idempotent: already-attached nodes are re-derived from
    scratch every time.
    """
    walls = [n for n in rules.components if n.category == "wall"]
    children: dict[str, list[str]] = {w.id: [] for w in walls}
    new_nodes = []
    roots = []
    for node in sorted(rules.components, key=lambda n: n.id):
        if node.category not in ATTACHABLE:
            new_nodes.append(replace(node, children=(), floating=False))
            roots.append(node.id)
            continue
        best = None
        for wall in walls:
            vol = _intersection_volume(node, wall)
            if vol <= 0:
                continue
            dist = sum((node.center[a] - wall.center[a]) ** 2 for a in range(3))
            key = (-vol, dist, wall.id)
            if best is None or key < best[0]:
                best = (key, wall.id)
        if best is None:
            new_nodes.append(replace(node, children=(), floating=True))
            roots.append(node.id)
        else:
            children[best[1]].append(node.id)
            new_nodes.append(replace(node, children=(), floating=False))
    final = []
    for node in new_nodes:
        if node.id in children:
            final.append(replace(node, children=tuple(sorted(children[node.id]))))
        else:
            final.append(node)
    return replace(rules, roots=tuple(roots), components=tuple(final))


# --- style oracles ---------------------------------------------------------

_WORD_RE = re.compile(r"[a-z0-9]+")

# Scanned in order; the first prompt keyword that matches wins the whole
# table row ("modern medieval" resolves to modern).
STYLE_KEYWORDS: tuple[tuple[tuple[str, ...], dict], ...] = (
    (("modern",), {
        "wall": {"material": "concrete", "color": "white"},
        "window": {"glass_material": "glass_reflective",
                   "frame_material": "metal"},
        "roof": {"kind": "flat", "material": "concrete"},
        "door": {"material": "metal"},
    }),
    (("medieval", "castle"), {
        "wall": {"material": "stone", "color": "gray"},
        "window": {"glass_material": "glass_clear", "frame_material": "wood"},
        "roof": {"kind": "gable", "material": "slate"},
        "door": {"material": "wood"},
    }),
    (("wooden", "cabin"), {
        "wall": {"material": "wood", "color": "brown"},
        "window": {"frame_material": "wood"},
        "roof": {"kind": "gable", "material": "shingle"},
        "door": {"material": "wood"},
    }),
)

ROOF_KIND_WORDS = ("flat", "gable", "hip")


def offline_style_oracle(prompt: str,
                         components: list[tuple[str, str]]) -> dict:
    """Deterministic keyword-table oracle.

    Returns a per-component-id style map in the same shape as the remote
    oracle's "styles" payload; an empty prompt or no keyword hit yields an
    empty map (template defaults stand).
    """
    words = set(_WORD_RE.findall(prompt.lower()))
    table: dict = {}
    for keywords, row in STYLE_KEYWORDS:
        if words & set(keywords):
            table = copy.deepcopy(row)
            break
    for kind in ROOF_KIND_WORDS:
        if kind in words:
            table.setdefault("roof", {})["kind"] = kind
            break
    if not table:
        return {}
    styles = {}
    for node_id, category in components:
        if category in table:
            styles[node_id] = copy.deepcopy(table[category])
    return styles


class RemoteStyleOracle:
    """HTTP client for the style service with offline fallback.

    POSTs {"prompt", "components": [{"id", "category"}]} to
    ``<url>/v1/style`` and expects {"styles": {id: {key: value}}}.
    """

    def __init__(self, url: str, timeout: float = 5.0, retries: int = 2,
                 fallback=offline_style_oracle):
        self.url = url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.fallback = fallback

    def __call__(self, prompt: str, components: list[tuple[str, str]]) -> dict:
        import requests

        payload = {
            "prompt": prompt,
            "components": [{"id": i, "category": c} for i, c in components],
        }
        last_error = None
        for _ in range(1 + self.retries):
            try:
                resp = requests.post(f"{self.url}/v1/style", json=payload,
                                     timeout=self.timeout)
                resp.raise_for_status()
                body = resp.json()
            except Exception as exc:  # noqa: BLE001 - network and HTTP errors
                last_error = exc
                continue
            styles = body.get("styles") if isinstance(body, dict) else None
            if not isinstance(styles, dict) or not all(
                    isinstance(v, dict) for v in styles.values()):
                raise OracleMalformedResponse(
                    f"style oracle returned unexpected payload: {body!r}")
            return styles
        if self.fallback is not None:
            return self.fallback(prompt, components)
        raise OracleUnavailable(f"style oracle unreachable: {last_error}")


def get_style_oracle(url: str | None = None):
    """Remote oracle when a URL is given (or set in the environment),
    otherwise the offline keyword table."""
    url = url or os.environ.get(ORACLE_URL_ENV)
    if url:
        return RemoteStyleOracle(url)
    return offline_style_oracle


def resolve_styles(rules: RuleLayout, prompt: str, oracle=offline_style_oracle
                   ) -> tuple[RuleLayout, list[str]]:
    """Overwrite template styles with oracle output.

    The oracle is queried once with the prompt and the (id, category)
    list.  Keys absent from a node's template are ignored and reported in
    the returned warning list; geometry is never touched.
    """
    components = [(n.id, n.category) for n in rules.components]
    styles = oracle(prompt, components)
    warnings: list[str] = []
    new_nodes = []
    for node in rules.components:
        overrides = styles.get(node.id, {})
        style = dict(node.style)
        for key, value in overrides.items():
            if key in style:
                style[key] = value
            else:
                warnings.append(f"{node.id}: unknown style key {key!r}")
        new_nodes.append(replace(node, style=style))
    for node_id in styles:
        if node_id not in {n.id for n in rules.components}:
            warnings.append(f"{node_id}: unknown component id in oracle reply")
    return rules.with_components(new_nodes), warnings


# --- canonical JSON --------------------------------------------------------


def _style_value_json(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return _fmt(value)
    return json.dumps(value)


def _node_json(node: ComponentNode) -> str:
    style = ",".join(
        f"{json.dumps(k)}:{_style_value_json(node.style[k])}"
        for k in sorted(node.style))
    children = ",".join(json.dumps(c) for c in node.children)
    return (
        '{"id":%s,"category":%s,"center":[%s],"size":[%s],'
        '"style":{%s},"children":[%s],"floating":%s}'
        % (json.dumps(node.id), json.dumps(node.category),
           ",".join(_fmt(v) for v in node.center),
           ",".join(_fmt(v) for v in node.size),
           style, children, "true" if node.floating else "false"))


def rule_layout_to_json(rules: RuleLayout) -> str:
    """Canonical form: meta, roots, components; components sorted by id."""
    meta = ('{"prompt":%s,"style":%s,"world_scale":%s}'
            % (json.dumps(rules.prompt), json.dumps(rules.style),
               _fmt(rules.world_scale)))
    nodes = ",".join(_node_json(n)
                     for n in sorted(rules.components, key=lambda n: n.id))
    roots = ",".join(json.dumps(r) for r in sorted(rules.roots))
    return '{"meta":%s,"roots":[%s],"components":[%s]}' % (meta, roots, nodes)


def _check_vec3(value, path: str, errors: list[str]) -> tuple | None:
    if (not isinstance(value, list) or len(value) != 3
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                       for v in value)):
        errors.append(f"{path}: expected 3 numbers")
        return None
    return tuple(float(v) for v in value)


def validate_rule_layout(document,
                         taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY
                         ) -> tuple[RuleLayout | None, list[str]]:
    """Full schema validation with JSON-path-addressed errors.

    Returns (RuleLayout, []) for valid documents and (None, errors)
    otherwise; errors are collected, not raised.
    """
    errors: list[str] = []
    if isinstance(document, (bytes, bytearray)):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            return None, [f"(root): not valid UTF-8: {exc}"]
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            return None, [f"(root): invalid JSON: {exc}"]
    if not isinstance(document, dict):
        return None, ["(root): expected object"]

    meta = document.get("meta")
    world_scale = DEFAULT_WORLD_SCALE
    prompt = style = ""
    if not isinstance(meta, dict):
        errors.append("meta: expected object")
    else:
        prompt = meta.get("prompt", "")
        style = meta.get("style", "")
        for key, value in (("prompt", prompt), ("style", style)):
            if not isinstance(value, str):
                errors.append(f"meta.{key}: expected string")
        ws = meta.get("world_scale", DEFAULT_WORLD_SCALE)
        if not isinstance(ws, (int, float)) or isinstance(ws, bool) or ws <= 0:
            errors.append("meta.world_scale: expected positive number")
        else:
            world_scale = float(ws)

    raw_components = document.get("components")
    nodes: list[ComponentNode] = []
    ids: dict[str, int] = {}
    if not isinstance(raw_components, list):
        errors.append("components: expected array")
        raw_components = []
    for i, raw in enumerate(raw_components):
        path = f"components[{i}]"
        if not isinstance(raw, dict):
            errors.append(f"{path}: expected object")
            continue
        node_id = raw.get("id")
        if not isinstance(node_id, str) or not node_id:
            errors.append(f"{path}.id: expected non-empty string")
            continue
        if node_id in ids:
            errors.append(f"{path}.id: duplicate id {node_id!r}")
            continue
        ids[node_id] = i
        category = raw.get("category")
        if not isinstance(category, str) or category not in taxonomy.names:
            errors.append(f"{path}.category: unknown category {category!r}")
            continue
        center = _check_vec3(raw.get("center"), f"{path}.center", errors)
        size = _check_vec3(raw.get("size"), f"{path}.size", errors)
        if size is not None and min(size) <= 0:
            errors.append(f"{path}.size: components must be positive")
            size = None
        style_obj = raw.get("style", {})
        if not isinstance(style_obj, dict) or not all(
                isinstance(k, str) for k in style_obj):
            errors.append(f"{path}.style: expected object with string keys")
            style_obj = {}
        children = raw.get("children", [])
        if not isinstance(children, list) or not all(
                isinstance(c, str) for c in children):
            errors.append(f"{path}.children: expected array of ids")
            children = []
        floating = raw.get("floating", False)
        if not isinstance(floating, bool):
            errors.append(f"{path}.floating: expected boolean")
            floating = False
        if center is None or size is None:
            continue
        nodes.append(ComponentNode(node_id, category, center, size,
                                   dict(style_obj), tuple(children), floating))

    node_index = {n.id: n for n in nodes}
    parent_of: dict[str, str] = {}
    for node in nodes:
        i = ids.get(node.id, 0)
        for j, child in enumerate(node.children):
            path = f"components[{i}].children[{j}]"
            if child not in node_index:
                errors.append(f"{path}: dangling id {child!r}")
                continue
            if child == node.id:
                errors.append(f"{path}: cycle ({child!r} is its own child)")
                continue
            if child in parent_of:
                errors.append(f"{path}: duplicate attachment of {child!r}")
                continue
            parent_of[child] = node.id
            if node_index[child].children:
                errors.append(
                    f"{path}: {child!r} has children of its own "
                    "(two-level tree only)")

    raw_roots = document.get("roots")
    roots: list[str] = []
    if not isinstance(raw_roots, list) or not all(
            isinstance(r, str) for r in (raw_roots or [])):
        errors.append("roots: expected array of ids")
    else:
        seen = set()
        for j, root in enumerate(raw_roots):
            if root not in node_index:
                errors.append(f"roots[{j}]: dangling id {root!r}")
            elif root in seen:
                errors.append(f"roots[{j}]: duplicate root {root!r}")
            elif root in parent_of:
                errors.append(
                    f"roots[{j}]: {root!r} is attached to {parent_of[root]!r}")
            else:
                seen.add(root)
                roots.append(root)
        for node in nodes:
            if node.id not in seen and node.id not in parent_of:
                errors.append(
                    f"components[{ids[node.id]}]: {node.id!r} neither a root "
                    "nor attached")

    if errors:
        return None, errors
    return RuleLayout(prompt=prompt, style=style, world_scale=world_scale,
                      roots=tuple(roots), components=tuple(nodes)), []


def parse_rule_layout(document,
                      taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY) -> RuleLayout:
    """validate_rule_layout that raises on the first error list."""
    rules, errors = validate_rule_layout(document, taxonomy)
    if rules is None:
        raise ValueError("invalid rule layout: " + "; ".join(errors))
    return rules
