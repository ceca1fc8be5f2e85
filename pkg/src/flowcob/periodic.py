"""Fields with periodic orbits: regions, orbit-aware merges and the swallow move.

Periodic orbits cut the surface into regions.  Each region is stored already
closed off: its field is a sink skeleton in which an attracting orbit shows
up as a marked vertex (it acts as a sink) and a repelling orbit as a marked
face (it acts as a source).  An orbit borders exactly two region sides.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from typing import Optional

from flowcob.cobordism import (
    SINK_MERGE, SOURCE_MERGE, SWALLOW, Move, MoveNotApplicable, NotSphere,
    StuckBeforeReduced, Trace, TraceMismatch, TraceStep, apply_move_tracked,
    exhaust, sink_moves, source_moves,
)
from flowcob.field_graph import (
    SkeletonMap, SkeletonRole, reconstruct_field_graph, validate_field_graph,
)
from flowcob.surface_map import canonical_form, euler_genus

ATTRACTING = "attracting"
REPELLING = "repelling"


class NotACandidate(ValueError):
    pass


class InvalidStructure(ValueError):
    def __init__(self, violations):
        super().__init__("; ".join(v["condition"] for v in violations))
        self.violations = violations


@dataclass(frozen=True)
class Orbit:
    id: int
    polarity: str

    def __post_init__(self):
        if self.polarity not in (ATTRACTING, REPELLING):
            raise ValueError(f"polarity must be {ATTRACTING!r} or {REPELLING!r}")

    @property
    def mark_kind(self) -> str:
        return "vertex" if self.polarity == ATTRACTING else "face"


@dataclass(frozen=True)
class Region:
    id: int
    genus: int
    closed_field: SkeletonMap
    marks: tuple = ()  # (orbit id, "vertex" | "face", index) per orbit side

    def orbit_sides(self) -> list[int]:
        return [orbit for orbit, _, _ in self.marks]


@dataclass(frozen=True)
class PeriodicStructure:
    surface_genus: int
    orbits: tuple
    regions: tuple

    def orbit(self, oid: int) -> Orbit:
        for o in self.orbits:
            if o.id == oid:
                return o
        raise KeyError(oid)

    def region(self, rid: int) -> Region:
        for r in self.regions:
            if r.id == rid:
                return r
        raise KeyError(rid)

    def sides(self, oid: int) -> list[int]:
        """Region ids on the two sides of orbit ``oid`` (with repetition)."""
        return [r.id for r in self.regions for o in r.orbit_sides() if o == oid]


def make_region(rid: int, closed_field: SkeletonMap, marks, genus: Optional[int] = None) -> Region:
    """Region whose skeleton marks are set from ``marks``."""
    marks = tuple(sorted((int(o), kind, int(i)) for o, kind, i in marks))
    sk = SkeletonMap(closed_field.map, SkeletonRole.SINK,
                     frozenset(i for _, kind, i in marks if kind == "vertex"),
                     frozenset(i for _, kind, i in marks if kind == "face"))
    if genus is None:
        genus = euler_genus(sk.map)
    return Region(rid, genus, sk, marks)


# -- validation -------------------------------------------------------------------

def _incidence(p: PeriodicStructure):
    """(connected, cycle rank) of the region/orbit incidence graph."""
    parent = {r.id: r.id for r in p.regions}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for o in p.orbits:
        sides = p.sides(o.id)
        if len(sides) == 2:
            parent[find(sides[0])] = find(sides[1])
    components = len({find(r.id) for r in p.regions})
    n_edges = sum(1 for o in p.orbits if len(p.sides(o.id)) == 2)
    return components == 1, n_edges - len(p.regions) + components


def validate_structure(p: PeriodicStructure) -> dict:
    violations = []
    orbit_ids = [o.id for o in p.orbits]
    region_ids = [r.id for r in p.regions]
    if len(set(orbit_ids)) != len(orbit_ids):
        violations.append({"condition": "duplicate orbit id"})
    if len(set(region_ids)) != len(region_ids):
        violations.append({"condition": "duplicate region id"})
    if not p.regions:
        violations.append({"condition": "no regions"})
    known = {o.id: o for o in p.orbits}
    for r in p.regions:
        sk = r.closed_field
        if sk.role is not SkeletonRole.SINK:
            violations.append({"condition": "closed field must be a sink skeleton", "region": r.id})
        if euler_genus(sk.map) != r.genus:
            violations.append({"condition": "closed field genus differs from region genus",
                               "region": r.id, "genus": r.genus, "field_genus": euler_genus(sk.map)})
        entities = [(kind, i) for _, kind, i in r.marks]
        if len(set(entities)) != len(entities):
            violations.append({"condition": "two orbit sides share one mark", "region": r.id})
        if ({i for kind, i in entities if kind == "vertex"} != set(sk.marked_vertices)
                or {i for kind, i in entities if kind == "face"} != set(sk.marked_faces)):
            violations.append({"condition": "skeleton marks disagree with orbit marks", "region": r.id})
        for oid, kind, i in r.marks:
            if oid not in known:
                violations.append({"condition": "mark names an unknown orbit", "region": r.id, "orbit": oid})
            elif known[oid].mark_kind != kind:
                violations.append({"condition": "mark kind does not match orbit polarity",
                                   "region": r.id, "orbit": oid})
            limit = sk.map.V if kind == "vertex" else sk.map.F
            if not 0 <= i < limit:
                violations.append({"condition": "mark index out of range", "region": r.id, "orbit": oid})
        try:
            if not validate_field_graph(reconstruct_field_graph(sk)).valid:
                violations.append({"condition": "closed field does not reconstruct to a valid field",
                                   "region": r.id})
        except ValueError as exc:
            violations.append({"condition": "closed field cannot be reconstructed",
                               "region": r.id, "error": str(exc)})
    for o in p.orbits:
        n_sides = len(p.sides(o.id))
        if n_sides != 2:
            violations.append({"condition": "orbit must border exactly two region sides",
                               "orbit": o.id, "sides": n_sides})
    if p.regions and not violations:
        connected, rank = _incidence(p)
        if not connected:
            violations.append({"condition": "regions are not connected through orbits"})
        total = sum(r.genus for r in p.regions) + rank
        if total != p.surface_genus:
            violations.append({"condition": "region genera plus cycle rank differ from surface genus",
                               "expected": p.surface_genus, "found": total})
        if p.surface_genus == 0:
            if rank:
                violations.append({"condition": "incidence graph of a sphere must be a tree"})
            if any(r.genus for r in p.regions):
                violations.append({"condition": "regions of a sphere must have genus 0"})
    return {"valid": not violations, "violations": violations}


# -- moves ----------------------------------------------------------------------

def periodic_moves(r: Region) -> list[Move]:
    """Merges available inside a region; marked entities never merge together."""
    return [replace(m, region=r.id) for m in sink_moves(r.closed_field) + source_moves(r.closed_field)]


def apply_region_move(p: PeriodicStructure, move: Move) -> PeriodicStructure:
    r = p.region(move.region)
    new_sk, vmap, fmap = apply_move_tracked(r.closed_field, replace(move, region=None))
    marks = [(o, kind, vmap[i] if kind == "vertex" else fmap[i]) for o, kind, i in r.marks]
    new_r = make_region(r.id, new_sk, marks, r.genus)
    return replace(p, regions=tuple(new_r if x.id == r.id else x for x in p.regions))


def swallow_candidates(p: PeriodicStructure) -> list[tuple[int, int]]:
    """(orbit, region) pairs where a bare disc can shrink onto its one zero."""
    out = []
    for r in p.regions:
        if r.genus != 0 or len(r.marks) != 1 or r.closed_field.map.n_darts != 0:
            continue
        oid = r.marks[0][0]
        sides = p.sides(oid)
        if len(sides) == 2 and sides[0] != sides[1]:
            out.append((oid, r.id))
    return out


def apply_swallow(p: PeriodicStructure, orbit: int, region: int) -> PeriodicStructure:
    if (orbit, region) not in swallow_candidates(p):
        raise NotACandidate(f"orbit {orbit} cannot swallow region {region}")
    other_id = next(rid for rid in p.sides(orbit) if rid != region)
    other = p.region(other_id)
    kept = [mk for mk in other.marks if mk[0] != orbit]
    new_other = make_region(other.id, other.closed_field, kept, other.genus)
    regions = tuple(new_other if r.id == other_id else r for r in p.regions if r.id != region)
    orbits = tuple(o for o in p.orbits if o.id != orbit)
    return PeriodicStructure(p.surface_genus, orbits, regions)


def apply_structure_move(p: PeriodicStructure, move: Move) -> PeriodicStructure:
    if move.kind == SWALLOW:
        return apply_swallow(p, move.orbit, move.region)
    if move.kind in (SINK_MERGE, SOURCE_MERGE):
        return apply_region_move(p, move)
    raise MoveNotApplicable(f"{move.kind} does not act on periodic structures")


def structure_digest(p: PeriodicStructure) -> str:
    parts = []
    index = {o.id: i + 1 for i, o in enumerate(sorted(p.orbits, key=lambda o: o.id))}
    for r in sorted(p.regions, key=lambda r: r.id):
        m = r.closed_field.map
        colors = [0] * m.n_darts
        for oid, kind, i in r.marks:
            for d in (m.vertices[i] if kind == "vertex" else m.face_cycles[i]):
                colors[d] += index[oid] << (16 if kind == "face" else 0)
        empty_marks = sorted((oid, kind) for oid, kind, _ in r.marks) if m.n_darts == 0 else []
        parts.append([r.id, r.genus, canonical_form(m, colors).hex(), empty_marks])
    orbits = [[o.id, o.polarity] for o in sorted(p.orbits, key=lambda o: o.id)]
    blob = json.dumps({"g": p.surface_genus, "orbits": orbits, "regions": parts}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _leaf(p: PeriodicStructure) -> Region:
    for r in sorted(p.regions, key=lambda r: r.id):
        if len(r.marks) == 1:
            return r
    raise StuckBeforeReduced("no region is bounded by a single orbit")


def reduce_sphere_full(p: PeriodicStructure, strategy: str = "phased") -> Trace:
    """Reduce leaf regions and swallow their orbits until none remain, then
    reduce the last (primitive) region to one sink and one source."""
    if p.surface_genus != 0:
        raise NotSphere(f"surface genus {p.surface_genus}")
    report = validate_structure(p)
    if not report["valid"]:
        raise InvalidStructure(report["violations"])
    state = p
    steps = []

    def record(move, nxt):
        steps.append(TraceStep(move, structure_digest(state), structure_digest(nxt)))

    def reduce_region(r: Region):
        nonlocal state
        _, history = exhaust(r.closed_field, strategy, tag={"region": r.id})
        for move, _, _ in history:
            nxt = apply_region_move(state, move)
            record(move, nxt)
            state = nxt

    while state.orbits:
        leaf = _leaf(state)
        reduce_region(leaf)
        oid = leaf.marks[0][0]
        if (oid, leaf.id) not in swallow_candidates(state):
            raise StuckBeforeReduced(f"region {leaf.id} did not reduce to a bare disc")
        mv = Move(SWALLOW, region=leaf.id, orbit=oid)
        nxt = apply_swallow(state, oid, leaf.id)
        record(mv, nxt)
        state = nxt
    (last,) = state.regions
    reduce_region(last)
    final = state.regions[0].closed_field.map
    if (final.V, final.F) != (1, 1):
        raise StuckBeforeReduced("last region did not reduce")
    return Trace(steps, structure_digest(p))


def replay_structure(p: PeriodicStructure, trace: Trace) -> PeriodicStructure:
    state = p
    for i, st in enumerate(trace):
        if structure_digest(state) != st.pre:
            raise TraceMismatch(f"step {i}: pre-state hash differs")
        state = apply_structure_move(state, st.move)
        if structure_digest(state) != st.post:
            raise TraceMismatch(f"step {i}: post-state hash differs")
    return state


def wrap_primitive(s: SkeletonMap, surface_genus: Optional[int] = None) -> PeriodicStructure:
    """A structure with no orbits: one region holding ``s``."""
    g = euler_genus(s.map)
    return PeriodicStructure(g if surface_genus is None else surface_genus, (),
                             (make_region(0, s, ()),))


# -- file format ----------------------------------------------------------------

def _parse_mark(text: str) -> tuple[str, int]:
    kind, _, idx = text.partition(" ")
    if kind not in ("vertex", "face"):
        raise ValueError(f"bad orbit mark {text!r}")
    return kind, int(idx)


def structure_to_dict(p: PeriodicStructure) -> dict:
    regions = []
    for r in p.regions:
        sk = r.closed_field.to_dict()
        marks: dict = {}
        for oid, kind, i in r.marks:
            marks.setdefault(str(oid), []).append(f"{kind} {i}")
        regions.append({"id": r.id, "genus": r.genus, "closed_field": sk,
                        "orbit_marks": {k: v[0] if len(v) == 1 else v for k, v in marks.items()}})
    return {"surface_genus": p.surface_genus,
            "orbits": [{"id": o.id, "polarity": o.polarity} for o in p.orbits],
            "regions": regions}


def structure_from_dict(d: dict, skeleton_loader) -> PeriodicStructure:
    orbits = tuple(Orbit(int(o["id"]), o["polarity"]) for o in d["orbits"])
    regions = []
    for rd in d["regions"]:
        sk = skeleton_loader(rd["closed_field"])
        marks = []
        for oid, entry in rd.get("orbit_marks", {}).items():
            for text in ([entry] if isinstance(entry, str) else entry):
                marks.append((int(oid), *_parse_mark(text)))
        regions.append(make_region(int(rd["id"]), sk, marks, int(rd["genus"])))
    return PeriodicStructure(int(d["surface_genus"]), orbits, tuple(regions))


# -- random sphere structures ---------------------------------------------------

def _grow(sk: SkeletonMap, need_v: int, need_f: int, rng: random.Random) -> SkeletonMap:
    """Add vertices by splits and faces by edge insertions until large enough."""
    while sk.map.V < need_v:
        m = sk.map
        if m.n_darts == 0:
            params = (None, 0, 0)
        else:
            d = rng.randrange(m.n_darts)
            size = len(m.rotation(d))
            params = (d, rng.randrange(size), rng.randrange(size + 1))
        sk = apply_move_tracked(sk, Move(SINK_MERGE, inverse=True, params=params))[0]
    while sk.map.F < need_f:
        m = sk.map
        if m.n_darts == 0:
            params = (None, 0)
        else:
            face = m.face_cycles[rng.randrange(m.F)]
            # corner before face dart x sits at sigma^-1(x)
            c1 = m.sigma_inv[rng.choice(face)]
            c2 = m.sigma_inv[rng.choice(face)]
            params = (c1, c2 if c2 != c1 else m.n_darts)
        sk = apply_move_tracked(sk, Move(SOURCE_MERGE, inverse=True, params=params))[0]
    return sk


def random_sphere_structure(rng: random.Random, n_orbits: int, pool) -> PeriodicStructure:
    """Random tree of n+1 genus-0 regions with leaf fields drawn from ``pool``."""
    orbits = tuple(Orbit(i, rng.choice((ATTRACTING, REPELLING))) for i in range(n_orbits))
    incident = {r: [] for r in range(n_orbits + 1)}
    for i in range(n_orbits):
        parent = rng.randrange(i + 1)
        incident[parent].append(i)
        incident[i + 1].append(i)
    regions = []
    for rid, olist in incident.items():
        kinds = [orbits[o].mark_kind for o in olist]
        nv, nf = kinds.count("vertex"), kinds.count("face")
        sk = SkeletonMap(rng.choice(pool).map)
        sk = _grow(sk, nv, nf, rng)
        verts = rng.sample(range(sk.map.V), nv)
        faces = rng.sample(range(sk.map.F), nf)
        marks = []
        for o, kind in zip(olist, kinds):
            marks.append((o, kind, verts.pop() if kind == "vertex" else faces.pop()))
        regions.append(make_region(rid, sk, marks, 0))
    return PeriodicStructure(0, orbits, tuple(regions))
