"""JSON file formats for maps, field graphs, skeletons and periodic structures.

Loaders accept any fixed-point-free involution for ``alpha`` and renumber the
darts so that edge ``k`` is ``(2k, 2k+1)``; vertex-, face- and edge-indexed
fields are carried through the renumbering.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from flowcob.field_graph import FieldGraph, NodeKind, SkeletonMap, SkeletonRole
from flowcob.periodic import PeriodicStructure, structure_from_dict, structure_to_dict
from flowcob.surface_map import CombinatorialMap, build_map, normalize_darts


class MalformedFile(ValueError):
    pass


def _ints(d: dict, key: str) -> list[int]:
    value = d.get(key)
    if not isinstance(value, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in value):
        raise MalformedFile(f"{key!r} must be a list of integers")
    return value


def map_from_dict(d: dict) -> tuple[CombinatorialMap, CombinatorialMap, tuple[int, ...]]:
    """(original map, renumbered map, old dart -> new dart)."""
    if not isinstance(d, dict):
        raise MalformedFile("expected a JSON object")
    alpha, sigma = _ints(d, "alpha"), _ints(d, "sigma")
    n = d.get("n_darts", len(alpha))
    if n != len(alpha):
        raise MalformedFile(f"n_darts={n} but alpha has {len(alpha)} entries")
    iso = d.get("isolated_vertices")
    original = build_map(alpha, sigma, iso)
    renumbered, new = normalize_darts(original)
    return original, renumbered, new


def load_map(d: dict) -> CombinatorialMap:
    return map_from_dict(d)[1]


def load_field_graph(d: dict) -> FieldGraph:
    orig, m, new = map_from_dict(d)
    kinds = d.get("kinds")
    tails = _ints(d, "tail")
    if not isinstance(kinds, list) or len(kinds) != orig.V:
        raise MalformedFile(f"'kinds' must list one kind per vertex ({orig.V})")
    if len(tails) != orig.E:
        raise MalformedFile(f"'tail' must list one dart per edge ({orig.E})")
    new_kinds = [None] * m.V
    for v, kind in enumerate(kinds):
        try:
            k = NodeKind(kind)
        except ValueError as exc:
            raise MalformedFile(f"unknown vertex kind {kind!r}") from exc
        dart = orig.vertices[v][0] if orig.vertices[v] else None
        new_kinds[m.vertex_of[new[dart]] if dart is not None else v] = k
    new_tail = [None] * m.E
    for k, t in enumerate(tails):
        if t not in orig.edges[k]:
            raise MalformedFile(f"tail dart {t} is not on edge {k}")
        new_tail[m.edge_of[new[t]]] = new[t]
    return FieldGraph(m, tuple(new_kinds), tuple(new_tail))


def load_skeleton(d: dict) -> SkeletonMap:
    orig, m, new = map_from_dict(d)
    try:
        role = SkeletonRole(d.get("role", "sink"))
    except ValueError as exc:
        raise MalformedFile(f"unknown role {d.get('role')!r}") from exc

    def carry(indices, orbits, index_of, limit):
        out = set()
        for i in indices:
            if not isinstance(i, int) or not 0 <= i < limit:
                raise MalformedFile(f"mark {i!r} out of range")
            out.add(index_of[new[orbits[i][0]]] if orbits[i] else i)
        return frozenset(out)

    mv = carry(d.get("marked_vertices", []), orig.vertices, m.vertex_of, orig.V)
    mf = carry(d.get("marked_faces", []), orig.face_cycles, m.face_of, orig.F)
    return SkeletonMap(m, role, mv, mf)


def load_structure(d: dict) -> PeriodicStructure:
    try:
        return structure_from_dict(d, load_skeleton)
    except (KeyError, TypeError) as exc:
        raise MalformedFile(f"bad structure file: {exc}") from exc


def detect_kind(d: dict) -> str:
    if not isinstance(d, dict):
        raise MalformedFile("expected a JSON object")
    if "regions" in d:
        return "structure"
    if "kinds" in d:
        return "field_graph"
    if "role" in d or "marked_vertices" in d or "marked_faces" in d:
        return "skeleton"
    return "map"


def load(d: dict):
    kind = detect_kind(d)
    loader = {"structure": load_structure, "field_graph": load_field_graph,
              "skeleton": load_skeleton, "map": load_map}[kind]
    return kind, loader(d)


def dump(obj) -> dict:
    if isinstance(obj, PeriodicStructure):
        return structure_to_dict(obj)
    return obj.to_dict()


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"{path}: {exc}") from exc


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, payload) -> None:
    write_atomic(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
