"""Combinatorial invariants and cobordisms of structurally stable vector fields on surfaces."""

from flowcob.surface_map import (
    CombinatorialMap, MapError, build_map, canonical_form, dual_map, euler_genus,
    faces, from_rotation, map_isomorphic,
)
from flowcob.field_graph import (
    FieldGraph, NodeKind, SkeletonMap, SkeletonRole, duality_check, flow_certificate,
    is_saddled_triangulation, reconstruct_field_graph, sink_skeleton, source_skeleton,
    validate_field_graph,
)
from flowcob.cobordism import (
    Move, Trace, apply_move, canonical_reduced, cobordant_sphere, reduce, replay,
)
from flowcob.torus_mcg import decompose, evaluate, torus_cobordism_trace
from flowcob.periodic import PeriodicStructure, reduce_sphere_full, validate_structure

__version__ = "0.1.0"

__all__ = [
    "CombinatorialMap", "MapError", "build_map", "canonical_form", "dual_map", "euler_genus",
    "faces", "from_rotation", "map_isomorphic",
    "FieldGraph", "NodeKind", "SkeletonMap", "SkeletonRole", "duality_check", "flow_certificate",
    "is_saddled_triangulation", "reconstruct_field_graph", "sink_skeleton", "source_skeleton",
    "validate_field_graph",
    "Move", "Trace", "apply_move", "canonical_reduced", "cobordant_sphere", "reduce", "replay",
    "decompose", "evaluate", "torus_cobordism_trace",
    "PeriodicStructure", "reduce_sphere_full", "validate_structure",
]
