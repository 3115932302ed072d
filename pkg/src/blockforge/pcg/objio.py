"""Wavefront OBJ export with one group per component.

Groups appear in ascending component-id order; vertex coordinates carry
six decimals and face indices are global and 1-indexed, so a fixed scene
always produces byte-identical output.  Material annotations are emitted
as group-level ``usemtl`` names derived from style keys; no texture or
material files are written.
"""
from __future__ import annotations

import json

from .assemble import SceneGraph, SceneNode


def _material_name(node: SceneNode) -> str:
    style = node.style
    material = style.get("material") or style.get("glass_material") or "default"
    color = style.get("color")
    return f"{material}_{color}" if color else str(material)


def export_obj(scene: SceneGraph) -> bytes:
    lines: list[str] = []
    offset = 1
    for node in sorted(scene.nodes, key=lambda n: n.id):
        lines.append(f"g component_{node.id}")
        lines.append(f"usemtl {_material_name(node)}")
        for mesh in node.meshes:
            for v in mesh.vertices:
                lines.append(f"v {v[0]:.6f} {v[1]:.6f} {v[2]:.6f}")
            for tri in mesh.triangles:
                a, b, c = (int(i) + offset for i in tri)
                lines.append(f"f {a} {b} {c}")
            offset += len(mesh.vertices)
    return ("\n".join(lines) + "\n").encode("utf-8")


def scene_manifest(scene: SceneGraph) -> dict:
    """Sidecar viewer manifest: component id -> category/material/color."""
    manifest = {}
    for node in sorted(scene.nodes, key=lambda n: n.id):
        manifest[node.id] = {
            "category": node.category,
            "material": str(node.style.get("material")
                            or node.style.get("glass_material") or "default"),
            "color": str(node.style.get("color", "")),
        }
    return manifest


def manifest_json(scene: SceneGraph) -> str:
    return json.dumps(scene_manifest(scene), indent=2, sort_keys=True)


def parse_obj_groups(data: bytes) -> dict[str, dict]:
    """Parse exported OBJ back into {group: {"vertices": [...],
    "faces": [...]}} (verification helper for tests and tools)."""
    groups: dict[str, dict] = {}
    current = None
    vertices: list[tuple[float, float, float]] = []
    for line in data.decode("utf-8").splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "g":
            current = parts[1]
            groups[current] = {"vertices": [], "faces": [], "usemtl": None}
        elif parts[0] == "v":
            v = (float(parts[1]), float(parts[2]), float(parts[3]))
            vertices.append(v)
            if current is not None:
                groups[current]["vertices"].append(v)
        elif parts[0] == "f":
            idx = tuple(int(p.split("/")[0]) for p in parts[1:])
            if current is not None:
                groups[current]["faces"].append(idx)
        elif parts[0] == "usemtl" and current is not None:
            groups[current]["usemtl"] = parts[1]
    return groups
