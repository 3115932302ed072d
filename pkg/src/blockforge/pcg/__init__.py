from .mesh import TriangleMesh, Box3, box_mesh, is_watertight, signed_volume
from .csg import carve_opening, merge_walls
from .assets import (
    AssetComponent,
    default_asset_db,
    muntin_counts,
    retrieve_component,
    stretch_component,
)
from .assemble import SceneGraph, SceneNode, assemble, align_siblings
from .objio import export_obj, scene_manifest

__all__ = [
    "TriangleMesh",
    "Box3",
    "box_mesh",
    "is_watertight",
    "signed_volume",
    "carve_opening",
    "merge_walls",
    "AssetComponent",
    "default_asset_db",
    "muntin_counts",
    "retrieve_component",
    "stretch_component",
    "SceneGraph",
    "SceneNode",
    "assemble",
    "align_siblings",
    "export_obj",
    "scene_manifest",
]
