"""Embedded graphs of fixed points and their sink/source skeletons.

A :class:`FieldGraph` is a map whose vertices are sources, sinks and saddles
and whose edges are directed (each edge records the dart at its tail).  The
sink skeleton keeps only the sinks and replaces each saddle by an edge between
its two downstream sinks; the source skeleton does the same upstream.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from flowcob.surface_map import (
    CombinatorialMap, Disconnected, build_map, dual_map, euler_genus,
    map_isomorphic, perm_from_cycles, canonical_alpha,
)


class NodeKind(str, enum.Enum):
    SOURCE = "source"
    SINK = "sink"
    SADDLE = "saddle"


class SkeletonRole(str, enum.Enum):
    SINK = "sink"
    SOURCE = "source"


class InducedEmbeddingDegenerate(ValueError):
    pass


class NotConnected(ValueError):
    pass


class NotSaddledTriangulation(ValueError):
    pass


@dataclass(frozen=True)
class FieldGraph:
    map: CombinatorialMap
    kinds: tuple[NodeKind, ...]
    tail: tuple[int, ...]  # per edge (in map.edges order), the dart at the tail

    def __post_init__(self):
        if len(self.kinds) != self.map.V:
            raise ValueError(f"{len(self.kinds)} kinds for {self.map.V} vertices")
        if len(self.tail) != self.map.E:
            raise ValueError(f"{len(self.tail)} tails for {self.map.E} edges")
        for k, t in enumerate(self.tail):
            if t not in self.map.edges[k]:
                raise ValueError(f"tail dart {t} does not belong to edge {k}")

    @property
    def U(self) -> int:
        return self.kinds.count(NodeKind.SOURCE)

    @property
    def I(self) -> int:  # noqa: E743
        return self.kinds.count(NodeKind.SINK)

    @property
    def A(self) -> int:
        return self.kinds.count(NodeKind.SADDLE)

    @property
    def genus(self) -> int:
        return euler_genus(self.map)

    def is_out(self, dart: int) -> bool:
        return self.tail[self.map.edge_of[dart]] == dart

    def kind_at(self, dart: int) -> NodeKind:
        return self.kinds[self.map.vertex_of[dart]]

    def degrees(self, v: int) -> tuple[int, int]:
        """(in-degree, out-degree) of vertex ``v``; loops count on both."""
        out = sum(1 for d in self.map.vertices[v] if self.is_out(d))
        return len(self.map.vertices[v]) - out, out

    def to_dict(self) -> dict:
        d = self.map.to_dict()
        d["kinds"] = [k.value for k in self.kinds]
        d["tail"] = list(self.tail)
        return d


@dataclass(frozen=True)
class SkeletonMap:
    map: CombinatorialMap
    role: SkeletonRole = SkeletonRole.SINK
    marked_vertices: frozenset = frozenset()
    marked_faces: frozenset = frozenset()

    def __post_init__(self):
        for v in self.marked_vertices:
            if not 0 <= v < self.map.V:
                raise ValueError(f"marked vertex {v} out of range")
        for f in self.marked_faces:
            if not 0 <= f < self.map.F:
                raise ValueError(f"marked face {f} out of range")

    @property
    def is_marked(self) -> bool:
        return bool(self.marked_vertices or self.marked_faces)

    def dart_colors(self) -> list[int]:
        m = self.map
        return [(m.vertex_of[d] in self.marked_vertices) + 2 * (m.face_of[d] in self.marked_faces)
                for d in range(m.n_darts)]

    def to_dict(self) -> dict:
        d = self.map.to_dict()
        d["role"] = self.role.value
        d["marked_vertices"] = sorted(self.marked_vertices)
        d["marked_faces"] = sorted(self.marked_faces)
        return d


@dataclass
class ValidationReport:
    valid: bool
    U: int
    I: int  # noqa: E741
    A: int
    genus: int
    residual: int
    violations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"valid": self.valid, "U": self.U, "I": self.I, "A": self.A,
                "genus": self.genus, "poincare_hopf_residual": self.residual,
                "violations": list(self.violations)}


def poincare_hopf_residual(fg: FieldGraph) -> int:
    return ph_residual(fg.U, fg.I, fg.A, fg.genus)


def ph_residual(U: int, I: int, A: int, genus: int) -> int:  # noqa: E741
    return U + I - A - (2 - 2 * genus)


def validate_field_graph(fg: FieldGraph) -> ValidationReport:
    """Check every saddled-graph condition and collect all violations."""
    m = fg.map
    violations = []
    for k, (a, b) in enumerate(m.edges):
        ka, kb = fg.kind_at(a), fg.kind_at(b)
        if ka == kb:
            violations.append({"condition": "edge joins two vertices of the same kind",
                               "edge": k, "kind": ka.value})
    for v, kind in enumerate(fg.kinds):
        din, dout = fg.degrees(v)
        if kind is NodeKind.SOURCE and din:
            violations.append({"condition": "source has incoming edges", "vertex": v, "in_degree": din})
        elif kind is NodeKind.SINK and dout:
            violations.append({"condition": "sink has outgoing edges", "vertex": v, "out_degree": dout})
        elif kind is NodeKind.SADDLE and (din, dout) != (2, 2):
            violations.append({"condition": "saddle must have in-degree 2 and out-degree 2",
                               "vertex": v, "in_degree": din, "out_degree": dout})
    if fg.U == 0:
        violations.append({"condition": "no source"})
    if fg.I == 0:
        violations.append({"condition": "no sink"})
    residual = poincare_hopf_residual(fg)
    if residual:
        violations.append({"condition": "U + I - A != 2 - 2g", "residual": residual})
    return ValidationReport(not violations, fg.U, fg.I, fg.A, fg.genus, residual, violations)


# -- skeletons ----------------------------------------------------------------

def _skeleton(fg: FieldGraph, role: SkeletonRole) -> tuple[SkeletonMap, list[int]]:
    """Induced skeleton plus, for each skeleton dart, the field-graph dart it came from."""
    m = fg.map
    keep = NodeKind.SINK if role is SkeletonRole.SINK else NodeKind.SOURCE
    want_out = role is SkeletonRole.SINK
    origin = []
    for v, kind in enumerate(fg.kinds):
        if kind is not NodeKind.SADDLE:
            continue
        arms = [d for d in m.vertices[v] if fg.is_out(d) == want_out]
        ends = [m.alpha[d] for d in arms]
        if len(arms) != 2 or any(fg.kind_at(e) is not keep for e in ends):
            raise InducedEmbeddingDegenerate(f"saddle {v} does not have two {keep.value} arms")
        origin.extend(ends)
    new = {d: i for i, d in enumerate(origin)}
    cycles = []
    n_keep = 0
    for v, kind in enumerate(fg.kinds):
        if kind is not keep:
            continue
        n_keep += 1
        cyc = [new[d] for d in m.rotation(m.vertices[v][0]) if d in new] if m.vertices[v] else []
        if not cyc and origin:
            raise InducedEmbeddingDegenerate(f"{keep.value} {v} touches no saddle")
        cycles.append(cyc)
    n = len(origin)
    try:
        if n == 0:
            sk = build_map((), (), isolated_vertices=n_keep)
        else:
            sk = build_map(canonical_alpha(n // 2), perm_from_cycles(cycles, n))
    except Disconnected as exc:
        raise InducedEmbeddingDegenerate(str(exc)) from exc
    return SkeletonMap(sk, role), origin


def sink_skeleton(fg: FieldGraph) -> SkeletonMap:
    return _skeleton(fg, SkeletonRole.SINK)[0]


def source_skeleton(fg: FieldGraph) -> SkeletonMap:
    return _skeleton(fg, SkeletonRole.SOURCE)[0]


def sources_by_face(fg: FieldGraph) -> Optional[list[set[int]]]:
    """For each face of the sink skeleton, the sources seen from its corners.

    A source is seen from a corner when its edge to the sink leaves in the
    angular sector of that corner.
    """
    sk, origin = _skeleton(fg, SkeletonRole.SINK)
    m, s = fg.map, sk.map
    if s.n_darts == 0:
        return [{v for v, k in enumerate(fg.kinds) if k is NodeKind.SOURCE}]
    found = [set() for _ in range(s.F)]
    for y in range(s.n_darts):
        start, stop = origin[y], origin[s.sigma[y]]
        d = m.sigma[start]
        while d != stop and d != start:
            other = m.vertex_of[m.alpha[d]]
            if fg.kinds[other] is NodeKind.SOURCE:
                found[s.face_of[s.sigma[y]]].add(other)
            d = m.sigma[d]
    return found


def duality_check(fg: FieldGraph) -> bool:
    """Dual of the sink skeleton matches the source skeleton face-for-source.

    The bijection must send each saddle's edge to the same saddle's edge and
    each sink-skeleton face to the source inside it.
    """
    try:
        sk, o_sink = _skeleton(fg, SkeletonRole.SINK)
        su, o_src = _skeleton(fg, SkeletonRole.SOURCE)
    except InducedEmbeddingDegenerate:
        return False
    inside = sources_by_face(fg)
    if any(len(srcs) != 1 for srcs in inside):
        return False
    m = fg.map
    if sk.map.n_darts == 0:
        return su.map.n_darts == 0 and fg.U == 1 and fg.I == 1
    face_source = [next(iter(srcs)) for srcs in inside]
    dual = dual_map(sk.map)
    colors_dual = [(face_source[sk.map.face_of[d]], m.vertex_of[m.alpha[o_sink[d]]])
                   for d in range(dual.n_darts)]
    colors_src = [(m.vertex_of[o_src[d]], m.vertex_of[m.alpha[o_src[d]]])
                  for d in range(su.map.n_darts)]
    return map_isomorphic(dual, su.map, colors_dual, colors_src) is not None


# -- reconstruction -------------------------------------------------------------

def reconstruct_field_graph(s: SkeletonMap) -> FieldGraph:
    """Rebuild the saddled triangulation whose sink skeleton is ``s``.

    Each skeleton edge gets a saddle at its midpoint, each face one source.
    For skeleton dart ``y`` (edge ``k = y // 2``):

    * edge ``y``: saddle k -> sink at ``y``;
    * edge ``2E + y``: source of face(y) -> saddle k, on the side of ``y``;
    * edge ``4E + y``: source of face(sigma y) -> sink at ``y``, through the
      corner between ``y`` and ``sigma y``.

    Tails are always the even dart of an edge.  A source skeleton is first
    turned into the sink skeleton by duality.
    """
    sm = s.map
    if s.role is SkeletonRole.SOURCE:
        sm = dual_map(sm)
    if sm.V != 1 and sm.n_darts == 0:
        raise NotConnected(f"{sm.V} isolated vertices")
    E = sm.E
    if E == 0:
        g = build_map((1, 0), (0, 1))
        return FieldGraph(g, (NodeKind.SOURCE, NodeKind.SINK), (0,))

    def h_sad(y):
        return 2 * y

    def h_sink(y):
        return 2 * y + 1

    def side_src(y):
        return 2 * (2 * E + y)

    def side_sad(y):
        return 2 * (2 * E + y) + 1

    def corner_src(y):
        return 2 * (4 * E + y)

    def corner_sink(y):
        return 2 * (4 * E + y) + 1

    cycles = []
    for rot in sm.vertices:
        cyc = []
        for y in sm.rotation(rot[0]):
            cyc += [h_sink(y), corner_sink(y)]
        cycles.append(cyc)
    for k in range(E):
        y, z = 2 * k, 2 * k + 1
        cycles.append([h_sad(y), side_sad(y), h_sad(z), side_sad(z)])
    for face in sm.face_cycles:
        walk = []
        for x in face:
            # side of x, then the corner at the far end of x
            walk += [side_src(x), corner_src(sm.alpha[x])]
        cycles.append(walk[::-1])
    n = 12 * E
    g = build_map(canonical_alpha(6 * E), perm_from_cycles(cycles, n))
    kinds = []
    for v in g.vertices:
        d = v[0]
        j = d // 2
        if j < 2 * E:
            kinds.append(NodeKind.SADDLE if d % 2 == 0 else NodeKind.SINK)
        elif d % 2 == 0:
            kinds.append(NodeKind.SOURCE)
        elif j < 4 * E:
            kinds.append(NodeKind.SADDLE)
        else:
            kinds.append(NodeKind.SINK)
    return FieldGraph(g, tuple(kinds), tuple(range(0, n, 2)))


# -- triangulation ------------------------------------------------------------

_CORNER_KINDS = {NodeKind.SOURCE, NodeKind.SADDLE, NodeKind.SINK}


def is_saddled_triangulation(fg: FieldGraph) -> tuple[bool, Optional[dict]]:
    """(ok, witness): witness names the first failing condition or face."""
    report = validate_field_graph(fg)
    if not report.valid:
        return False, {"reason": "not saddled", "violations": report.violations}
    m = fg.map
    for i, face in enumerate(m.face_cycles):
        if len(face) != 3:
            return False, {"reason": "face is not a triangle", "face": i, "degree": len(face)}
        if {fg.kind_at(d) for d in face} != _CORNER_KINDS:
            return False, {"reason": "face corners are not source, saddle, sink", "face": i}
    return True, None


@dataclass(frozen=True)
class FaceCertificate:
    face: int
    source: int
    saddle: int
    sink: int
    source_saddle: int  # edge indices
    saddle_sink: int
    source_sink: int


def flow_certificate(fg: FieldGraph) -> tuple[FaceCertificate, ...]:
    """Per-triangle corner assignment standing in for the local flow model."""
    ok, witness = is_saddled_triangulation(fg)
    if not ok:
        raise NotSaddledTriangulation(str(witness))
    m = fg.map
    certs = []
    for i, face in enumerate(m.face_cycles):
        corner = {fg.kind_at(d): m.vertex_of[d] for d in face}
        by_pair = {}
        for d in face:
            k = m.edge_of[d]
            a, b = m.edges[k]
            ends = frozenset((fg.kind_at(a), fg.kind_at(b)))
            tail_kind = fg.kind_at(fg.tail[k])
            by_pair[ends] = (k, tail_kind)
        src_sad = by_pair[frozenset((NodeKind.SOURCE, NodeKind.SADDLE))]
        sad_snk = by_pair[frozenset((NodeKind.SADDLE, NodeKind.SINK))]
        src_snk = by_pair[frozenset((NodeKind.SOURCE, NodeKind.SINK))]
        assert src_sad[1] is NodeKind.SOURCE and sad_snk[1] is NodeKind.SADDLE \
            and src_snk[1] is NodeKind.SOURCE
        certs.append(FaceCertificate(i, corner[NodeKind.SOURCE], corner[NodeKind.SADDLE],
                                     corner[NodeKind.SINK], src_sad[0], sad_snk[0], src_snk[0]))
    return tuple(certs)


def field_graph_from_edges(n_vertices_kinds, rotations, directed_edges) -> FieldGraph:
    """Convenience builder: kinds per vertex, rotation per vertex as edge-end
    labels ``(edge, 0|1)`` (0 = tail end), edges as (tail, head) vertex pairs.

    Vertex order in the result follows the smallest dart, so kinds are
    re-sorted accordingly.
    """
    n_edges = len(directed_edges)
    cycles = []
    owner = {}
    for v, rot in enumerate(rotations):
        cyc = [2 * e + end for e, end in rot]
        for d in cyc:
            owner[d] = v
        cycles.append(cyc)
    for e, (t, h) in enumerate(directed_edges):
        if owner.get(2 * e) != t or owner.get(2 * e + 1) != h:
            raise ValueError(f"edge {e} ends disagree with rotations")
    m = build_map(canonical_alpha(n_edges), perm_from_cycles(cycles, 2 * n_edges))
    kinds = tuple(NodeKind(n_vertices_kinds[owner[v[0]]]) for v in m.vertices)
    return FieldGraph(m, kinds, tuple(range(0, 2 * n_edges, 2)))
