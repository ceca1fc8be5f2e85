"""Cobordism moves on sink skeletons and the reduction to one sink, one source.

A sink merge contracts a non-loop edge (two sinks and a saddle become one
sink); a source merge deletes an edge separating two distinct faces (two
sources and a saddle become one source).  Both are reversible; the inverse
moves split a vertex or insert an edge across a face.

Skeletons handled here always carry alpha = (0 1)(2 3)...; removing edge k
drops darts 2k, 2k+1 and shifts later darts down by two, inverse moves
append the new edge last.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from flowcob.field_graph import SkeletonMap
from flowcob.surface_map import (
    CombinatorialMap, build_map, canonical_alpha, canonical_form, euler_genus,
    map_isomorphic, perm_from_cycles,
)

SINK_MERGE = "sink_merge"
SOURCE_MERGE = "source_merge"
SWALLOW = "swallow"
TWIST = "twist"


class MoveNotApplicable(ValueError):
    pass


class StuckBeforeReduced(RuntimeError):
    pass


class GenusMismatch(ValueError):
    pass


class NotSphere(ValueError):
    pass


class TraceMismatch(RuntimeError):
    pass


@dataclass(frozen=True)
class Move:
    kind: str
    edge: Optional[int] = None
    inverse: bool = False
    params: tuple = ()
    region: Optional[int] = None
    orbit: Optional[int] = None
    direction: Optional[int] = None

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        for name in ("edge", "region", "orbit", "direction"):
            value = getattr(self, name)
            if value is not None:
                d[name] = value
        if self.inverse:
            d["inverse"] = True
            d["params"] = list(self.params)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Move":
        return cls(d["kind"], d.get("edge"), bool(d.get("inverse", False)),
                   tuple(d.get("params", ())), d.get("region"), d.get("orbit"),
                   d.get("direction"))


@dataclass(frozen=True)
class TraceStep:
    move: Move
    pre: str
    post: str


@dataclass
class Trace:
    steps: list = field(default_factory=list)
    initial: str = ""

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    @property
    def final(self) -> str:
        return self.steps[-1].post if self.steps else self.initial

    def moves(self) -> list:
        return [st.move for st in self.steps]

    def count(self, kind: str) -> int:
        return sum(1 for st in self.steps if st.move.kind == kind)

    def chained(self) -> bool:
        prev = self.initial
        for st in self.steps:
            if st.pre != prev:
                return False
            prev = st.post
        return True

    def to_jsonl(self) -> str:
        lines = [json.dumps({"step": i, "move": st.move.to_dict(), "pre": st.pre, "post": st.post},
                            sort_keys=True)
                 for i, st in enumerate(self.steps)]
        return "".join(line + "\n" for line in lines)

    @classmethod
    def from_jsonl(cls, text: str, initial: str = "") -> "Trace":
        steps = []
        for line in text.splitlines():
            if line.strip():
                rec = json.loads(line)
                steps.append(TraceStep(Move.from_dict(rec["move"]), rec["pre"], rec["post"]))
        if not initial and steps:
            initial = steps[0].pre
        return cls(steps, initial)


def skeleton_digest(s: SkeletonMap) -> str:
    """Isomorphism-invariant hash of a skeleton including role and marks."""
    key = s.role.value.encode() + b"|" + canonical_form(s.map, s.dart_colors())
    if s.map.n_darts == 0:
        key += bytes([bool(s.marked_vertices), bool(s.marked_faces)])
    return hashlib.sha256(key).hexdigest()


# -- enumerators -----------------------------------------------------------------

def sink_moves(s: SkeletonMap) -> list[Move]:
    m = s.map
    out = []
    for k, (a, b) in enumerate(m.edges):
        u, v = m.vertex_of[a], m.vertex_of[b]
        if u == v or (u in s.marked_vertices and v in s.marked_vertices):
            continue
        out.append(Move(SINK_MERGE, k))
    return out


def source_moves(s: SkeletonMap) -> list[Move]:
    m = s.map
    out = []
    for k, (a, b) in enumerate(m.edges):
        f, g = m.face_of[a], m.face_of[b]
        if f == g or (f in s.marked_faces and g in s.marked_faces):
            continue
        out.append(Move(SOURCE_MERGE, k))
    return out


# -- surgery --------------------------------------------------------------------

def _require_canonical(m: CombinatorialMap) -> None:
    if m.alpha != canonical_alpha(m.E):
        raise ValueError("skeleton darts must be paired as (2i, 2i+1)")


def _assemble(n: int, cycles: list) -> CombinatorialMap:
    if n == 0:
        return build_map((), ())
    return build_map(canonical_alpha(n // 2), perm_from_cycles([c for c in cycles if c], n))


def _entity_maps(old: CombinatorialMap, new: CombinatorialMap, dart_map: dict,
                 merged_vertex=(), merged_face=()) -> tuple[dict, dict]:
    """Old vertex/face index -> new index; ``merged_*`` list entities fused into one."""

    def image(orbits, index, ent, fused):
        group = fused if ent in fused else (ent,)
        for e in group:
            for d in orbits[e]:
                if d in dart_map:
                    return index[dart_map[d]]
        return 0  # only a dartless map has entities without darts

    vmap = {v: image(old.vertices, new.vertex_of, v, merged_vertex) for v in range(old.V)}
    fmap = {f: image(old.face_cycles, new.face_of, f, merged_face) for f in range(old.F)}
    return vmap, fmap


def _marked(s: SkeletonMap, new: CombinatorialMap, vmap: dict, fmap: dict) -> SkeletonMap:
    return SkeletonMap(new, s.role, frozenset(vmap[v] for v in s.marked_vertices),
                       frozenset(fmap[f] for f in s.marked_faces))


def _compaction(n: int, k: int) -> dict:
    return {d: (d if d < 2 * k else d - 2) for d in range(n) if d // 2 != k}


def _contract(s: SkeletonMap, k: int):
    m = s.map
    d, e = 2 * k, 2 * k + 1
    u, v = m.vertex_of[d], m.vertex_of[e]
    c = _compaction(m.n_darts, k)
    merged = m.rotation(d)[1:] + m.rotation(e)[1:]
    cycles = [[c[x] for x in merged]]
    for w, orbit in enumerate(m.vertices):
        if w not in (u, v):
            cycles.append([c[x] for x in m.rotation(orbit[0])])
    new = _assemble(m.n_darts - 2, cycles)
    return new, *_entity_maps(m, new, c, merged_vertex=(u, v))


def _delete(s: SkeletonMap, k: int):
    m = s.map
    d, e = 2 * k, 2 * k + 1
    f, g = m.face_of[d], m.face_of[e]
    c = _compaction(m.n_darts, k)
    cycles = [[c[x] for x in m.rotation(orbit[0]) if x in c] for orbit in m.vertices]
    new = _assemble(m.n_darts - 2, cycles)
    return new, *_entity_maps(m, new, c, merged_face=(f, g))


def _split_vertex(s: SkeletonMap, params):
    # the split vertex keeps its index-bearing role on the side holding dart n
    vertex_dart, start, length = params
    m = s.map
    n = m.n_darts
    if n == 0:
        if vertex_dart is not None or length:
            raise MoveNotApplicable("the dartless map only splits into a single edge")
        rot = []
    else:
        if vertex_dart is None or not 0 <= vertex_dart < n:
            raise MoveNotApplicable(f"no dart {vertex_dart}")
        rot = m.rotation(vertex_dart)
    size = len(rot)
    if not 0 <= length <= size or (size and not 0 <= start < size):
        raise MoveNotApplicable(f"bad split segment ({start}, {length}) of {size} darts")
    segment = [rot[(start + i) % size] for i in range(length)]
    rest = [rot[(start + length + i) % size] for i in range(size - length)]
    cycles = [[n] + rest, [n + 1] + segment]
    w = m.vertex_of[vertex_dart] if n else 0
    for x, orbit in enumerate(m.vertices):
        if n and x != w:
            cycles.append(list(m.rotation(orbit[0])))
    new = _assemble(n + 2, cycles)
    vmap, fmap = _entity_maps(m, new, {x: x for x in range(n)})
    vmap[w] = new.vertex_of[n]
    return new, vmap, fmap


def _insert_edge(s: SkeletonMap, params):
    # the split face keeps its role on the side holding dart n
    corner1, corner2 = params
    m = s.map
    n = m.n_darts
    sigma = {x: m.sigma[x] for x in range(n)}
    if corner1 is None:
        if n:
            raise MoveNotApplicable("corner1 may be empty only on the dartless map")
        sigma[n] = n
    else:
        if not 0 <= corner1 < n:
            raise MoveNotApplicable(f"no dart {corner1}")
        sigma[n] = sigma[corner1]
        sigma[corner1] = n
    if corner2 is None or not 0 <= corner2 <= n:
        raise MoveNotApplicable(f"bad second corner {corner2}")
    sigma[n + 1] = sigma[corner2]
    sigma[corner2] = n + 1
    new = build_map(canonical_alpha(n // 2 + 1), [sigma[x] for x in range(n + 2)])
    if new.F != m.F + 1:
        raise MoveNotApplicable("corners lie on different faces")
    vmap, fmap = _entity_maps(m, new, {x: x for x in range(n)})
    split = m.face_of[corner1] if n else 0
    fmap[split] = new.face_of[n]
    return new, vmap, fmap


def apply_move_tracked(s: SkeletonMap, move: Move):
    """(new skeleton, old->new vertex indices, old->new face indices)."""
    _require_canonical(s.map)
    if move.kind == SINK_MERGE:
        if move.inverse:
            surgery = _split_vertex(s, move.params)
        elif move not in sink_moves(s):
            raise MoveNotApplicable(f"sink merge on edge {move.edge} not available")
        else:
            surgery = _contract(s, move.edge)
    elif move.kind == SOURCE_MERGE:
        if move.inverse:
            surgery = _insert_edge(s, move.params)
        elif move not in source_moves(s):
            raise MoveNotApplicable(f"source merge on edge {move.edge} not available")
        else:
            surgery = _delete(s, move.edge)
    else:
        raise MoveNotApplicable(f"{move.kind} does not act on a single skeleton")
    new, vmap, fmap = surgery
    return _marked(s, new, vmap, fmap), vmap, fmap


def apply_move(s: SkeletonMap, move: Move) -> SkeletonMap:
    """Apply a merge (or, with ``inverse``, its undoing); marks follow their entities."""
    return apply_move_tracked(s, move)[0]


def inverse_move(pre: SkeletonMap, move: Move) -> Move:
    """The inverse of forward ``move``, in the darts of ``apply_move(pre, move)``."""
    m = pre.map
    k = move.edge
    d, e = 2 * k, 2 * k + 1
    c = _compaction(m.n_darts, k)
    if move.kind == SINK_MERGE:
        rest = [c[x] for x in m.rotation(d)[1:]]
        seg = [c[x] for x in m.rotation(e)[1:]]
        if rest:
            params = (rest[0], len(rest) % (len(rest) + len(seg)), len(seg))
        elif seg:
            params = (seg[0], 0, len(seg))
        else:
            params = (None, 0, 0)
        return Move(SINK_MERGE, inverse=True, params=params)
    if move.kind == SOURCE_MERGE:
        new_d, new_e = m.n_darts - 2, m.n_darts - 1
        pd, pe = m.sigma_inv[d], m.sigma_inv[e]
        if pd == e and pe == d:
            params = (None, new_d)
        elif pe == d:
            params = (c[pd], new_d)
        elif pd == e:
            # e sits just before d: e takes the first new dart
            params = (c[pe], new_d)
        else:
            params = (c[pd], c[pe])
        return Move(SOURCE_MERGE, inverse=True, params=params)
    raise MoveNotApplicable(f"no inverse for {move.kind}")


def translate_move(move: Move, bijection: dict) -> Move:
    """Rewrite dart parameters of an inverse move through ``bijection``."""
    if not move.inverse:
        raise ValueError("only inverse moves carry dart parameters")
    if move.kind == SINK_MERGE:
        vd, start, length = move.params
        return replace(move, params=(None if vd is None else bijection[vd], start, length))
    c1, c2 = move.params
    return replace(move, params=(None if c1 is None else bijection[c1], bijection.get(c2, c2)))


# -- reduction --------------------------------------------------------------------

def exhaust(s: SkeletonMap, strategy: str = "phased", tag: Optional[dict] = None):
    """Apply merges greedily (lowest edge first) until none applies.

    Returns (final skeleton, list of (move, pre, post) skeleton triples).
    ``phased`` exhausts sink merges before source merges; ``interleaved``
    alternates between the two kinds whenever both are available.
    """
    if strategy not in ("phased", "interleaved"):
        raise ValueError(f"unknown strategy {strategy!r}")
    tag = tag or {}
    state = s
    history = []
    prefer_sink = True
    while True:
        sinks, sources = sink_moves(state), source_moves(state)
        if strategy == "phased":
            pick = sinks[0] if sinks else (sources[0] if sources else None)
        else:
            first, second = (sinks, sources) if prefer_sink else (sources, sinks)
            pick = first[0] if first else (second[0] if second else None)
            prefer_sink = not prefer_sink
        if pick is None:
            return state, history
        nxt = apply_move(state, pick)
        history.append((replace(pick, **tag), state, nxt))
        state = nxt


def _trace_of(s: SkeletonMap, history) -> Trace:
    steps = [TraceStep(mv, skeleton_digest(a), skeleton_digest(b)) for mv, a, b in history]
    return Trace(steps, skeleton_digest(s))


def reduce(s: SkeletonMap, strategy: str = "phased") -> Trace:
    """Reduce to one sink and one source; trace length is (V-1)+(F-1)."""
    if s.is_marked:
        raise ValueError("reduce expects an unmarked skeleton; marked ones go through the periodic module")
    final, history = exhaust(s, strategy)
    if not is_reduced(final):
        raise StuckBeforeReduced(f"no move applies at V={final.map.V}, F={final.map.F}")
    return _trace_of(s, history)


def reduce_with_states(s: SkeletonMap, strategy: str = "phased"):
    final, history = exhaust(s, strategy)
    if not s.is_marked and not is_reduced(final):
        raise StuckBeforeReduced(f"no move applies at V={final.map.V}, F={final.map.F}")
    return final, history


def reduce_with_trace(s: SkeletonMap, strategy: str = "phased"):
    """(final skeleton, hashed trace) for an unmarked skeleton."""
    final, history = reduce_with_states(s, strategy)
    return final, _trace_of(s, history)


def is_reduced(s: SkeletonMap) -> bool:
    return s.map.V == 1 and s.map.F == 1


def canonical_reduced(g: int) -> SkeletonMap:
    """One sink, 2g loops arranged handle by handle around a single face."""
    if g < 0:
        raise ValueError("genus must be nonnegative")
    if g == 0:
        return SkeletonMap(build_map((), ()))
    rot = []
    for j in range(g):
        rot += [4 * j, 4 * j + 2, 4 * j + 1, 4 * j + 3]
    return SkeletonMap(build_map(canonical_alpha(2 * g), perm_from_cycles([rot], 4 * g)))


def replay(s: SkeletonMap, trace: Trace) -> SkeletonMap:
    """Re-apply every move, checking the recorded hashes along the way."""
    state = s
    if trace.initial and skeleton_digest(state) != trace.initial:
        raise TraceMismatch("initial state does not match the trace")
    for i, st in enumerate(trace):
        if skeleton_digest(state) != st.pre:
            raise TraceMismatch(f"step {i}: pre-state hash differs")
        state = apply_move(state, st.move)
        if skeleton_digest(state) != st.post:
            raise TraceMismatch(f"step {i}: post-state hash differs")
    return state


def genus_profile(s: SkeletonMap, trace: Trace) -> list[int]:
    state = s
    out = [euler_genus(state.map)]
    for st in trace:
        state = apply_move(state, st.move)
        out.append(euler_genus(state.map))
    return out


def cobordant_sphere(a: SkeletonMap, b: SkeletonMap) -> Trace:
    """Trace from ``a`` to ``b``: reduce ``a``, then undo the reduction of ``b``."""
    ga, gb = euler_genus(a.map), euler_genus(b.map)
    if ga != gb:
        raise GenusMismatch(f"genus {ga} vs genus {gb}")
    if ga != 0:
        raise NotSphere(f"genus {ga}")
    if a.is_marked or b.is_marked:
        raise ValueError("cobordant_sphere expects unmarked skeletons")
    final_a, hist_a = reduce_with_states(a)
    _, hist_b = reduce_with_states(b)
    steps = [TraceStep(mv, skeleton_digest(x), skeleton_digest(y)) for mv, x, y in hist_a]
    state = final_a
    for mv, pre_b, post_b in reversed(hist_b):
        bij = map_isomorphic(post_b.map, state.map)
        if bij is None:
            raise StuckBeforeReduced("replayed state lost track of the reduction of b")
        inv = translate_move(inverse_move(pre_b, mv), bij)
        nxt = apply_move(state, inv)
        steps.append(TraceStep(inv, skeleton_digest(state), skeleton_digest(nxt)))
        state = nxt
    return Trace(steps, skeleton_digest(a))


def trace_states(s: SkeletonMap, moves: Iterable[Move]) -> list[SkeletonMap]:
    out = [s]
    for mv in moves:
        out.append(apply_move(out[-1], mv))
    return out
