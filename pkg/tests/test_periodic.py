import json
import random

import pytest

from flowcob.census import enumerate_skeletons
from flowcob.cobordism import (
    SINK_MERGE, SOURCE_MERGE, SWALLOW, Move, MoveNotApplicable, Trace, TraceMismatch, reduce,
)
from flowcob.field_graph import SkeletonMap
from flowcob.io import load_skeleton, load_structure
from flowcob.periodic import (
    ATTRACTING, REPELLING, InvalidStructure, NotACandidate, Orbit, PeriodicStructure,
    apply_structure_move, apply_swallow, make_region, periodic_moves, random_sphere_structure,
    reduce_sphere_full, replay_structure, structure_digest, structure_from_dict,
    structure_to_dict, swallow_candidates, validate_structure, wrap_primitive,
)
from flowcob.surface_map import empty_map

EMPTY = SkeletonMap(empty_map())


def two_region():
    o = Orbit(0, ATTRACTING)
    regions = (make_region(0, EMPTY, [(0, "vertex", 0)]), make_region(1, EMPTY, [(0, "vertex", 0)]))
    return PeriodicStructure(0, (o,), regions)


def nested():
    # disc | annulus | disc; the annulus sees an attracting and a repelling orbit
    orbits = (Orbit(0, ATTRACTING), Orbit(1, REPELLING))
    regions = (
        make_region(0, EMPTY, [(0, "vertex", 0)]),
        make_region(1, EMPTY, [(0, "vertex", 0), (1, "face", 0)]),
        make_region(2, EMPTY, [(1, "face", 0)]),
    )
    return PeriodicStructure(0, orbits, regions)


def test_two_region_valid():
    assert validate_structure(two_region())["valid"]
    assert sorted(swallow_candidates(two_region())) == [(0, 0), (0, 1)]


def test_minimal_leaf_has_no_moves():
    assert periodic_moves(two_region().regions[0]) == []


def test_marked_region_moves(edge_map, loop_map):
    r = make_region(0, SkeletonMap(edge_map), [(0, "vertex", 1)])
    assert [m.kind for m in periodic_moves(r)] == [SINK_MERGE]
    r = make_region(0, SkeletonMap(loop_map), [(0, "face", 0)])
    assert [m.kind for m in periodic_moves(r)] == [SOURCE_MERGE]
    both = make_region(0, SkeletonMap(edge_map), [(0, "vertex", 0), (1, "vertex", 1)])
    assert periodic_moves(both) == []


def test_nested_candidates_and_swallow():
    p = nested()
    assert validate_structure(p)["valid"]
    assert sorted(swallow_candidates(p)) == [(0, 0), (1, 2)]
    q = apply_swallow(p, 0, 0)
    assert len(q.orbits) == 1 and validate_structure(q)["valid"]
    assert (1, 2) in swallow_candidates(q) and (1, 1) in swallow_candidates(q)
    with pytest.raises(NotACandidate):
        apply_swallow(p, 0, 1)


def test_swallow_two_region_gives_primitive():
    q = apply_swallow(two_region(), 0, 1)
    assert q.orbits == () and len(q.regions) == 1
    assert not q.regions[0].closed_field.is_marked
    assert validate_structure(q)["valid"]


def test_invalid_structures(loop_map):
    o = Orbit(0, ATTRACTING)
    # a repelling mark on an attracting orbit
    bad = PeriodicStructure(0, (o,), (make_region(0, EMPTY, [(0, "face", 0)]),
                                      make_region(1, EMPTY, [(0, "vertex", 0)])))
    assert not validate_structure(bad)["valid"]
    # one side only
    lonely = PeriodicStructure(0, (o,), (make_region(0, EMPTY, [(0, "vertex", 0)]),))
    conds = {v["condition"] for v in validate_structure(lonely)["violations"]}
    assert "orbit must border exactly two region sides" in conds
    # two regions joined by two orbits: a cycle, impossible on the sphere
    orbits = (Orbit(0, ATTRACTING), Orbit(1, REPELLING))
    cyc = PeriodicStructure(0, orbits, (
        make_region(0, EMPTY, [(0, "vertex", 0), (1, "face", 0)]),
        make_region(1, EMPTY, [(0, "vertex", 0), (1, "face", 0)])))
    conds = {v["condition"] for v in validate_structure(cyc)["violations"]}
    assert "incidence graph of a sphere must be a tree" in conds
    with pytest.raises(InvalidStructure):
        reduce_sphere_full(cyc)


def test_empty_vertex_marked_twice_rejected():
    orbits = (Orbit(0, ATTRACTING), Orbit(1, ATTRACTING))
    p = PeriodicStructure(0, orbits, (
        make_region(0, EMPTY, [(0, "vertex", 0), (1, "vertex", 0)]),
        make_region(1, EMPTY, [(0, "vertex", 0)]),
        make_region(2, EMPTY, [(1, "vertex", 0)])))
    conds = {v["condition"] for v in validate_structure(p)["violations"]}
    assert "two orbit sides share one mark" in conds


def test_reduce_two_region():
    trace = reduce_sphere_full(two_region())
    assert trace.count(SWALLOW) == 1 and len(trace) == 1


def test_reduce_nested_counts(edge_map, loop_map):
    orbits = (Orbit(0, ATTRACTING), Orbit(1, REPELLING))
    inner = make_region(0, SkeletonMap(edge_map), [(0, "vertex", 0)])
    ring = make_region(1, SkeletonMap(loop_map), [(0, "vertex", 0), (1, "face", 1)])
    outer = make_region(2, EMPTY, [(1, "face", 0)])
    p = PeriodicStructure(0, orbits, (inner, ring, outer))
    assert validate_structure(p)["valid"]
    trace = reduce_sphere_full(p)
    merges = sum((r.closed_field.map.V - 1) + (r.closed_field.map.F - 1) for r in p.regions)
    assert trace.count(SWALLOW) == 2
    assert len(trace) == 2 + merges
    assert replay_structure(p, trace) is not None


def test_zero_orbit_matches_primitive():
    s = enumerate_skeletons(3, 0)[-1]
    trace = reduce_sphere_full(wrap_primitive(s))
    assert [st.move.kind for st in trace] == [st.move.kind for st in reduce(s)]
    assert [st.move.edge for st in trace] == [st.move.edge for st in reduce(s)]


def test_replay_rejects_wrong_start():
    trace = reduce_sphere_full(nested())
    with pytest.raises(TraceMismatch):
        replay_structure(two_region(), trace)


def test_structure_dict_round_trip():
    p = nested()
    d = structure_to_dict(p)
    text = json.dumps(d)
    q = load_structure(json.loads(text))
    assert structure_digest(q) == structure_digest(p)
    assert structure_to_dict(q) == d
    assert d["regions"][1]["orbit_marks"] == {"0": "vertex 0", "1": "face 0"}


def test_structure_from_dict_list_marks():
    d = structure_to_dict(two_region())
    d["regions"][0]["orbit_marks"]["0"] = ["vertex 0"]
    p = structure_from_dict(d, load_skeleton)
    assert validate_structure(p)["valid"]


def test_random_structures_reduce():
    pool = enumerate_skeletons(3, 0)
    rng = random.Random(11)
    for _ in range(15):
        n = rng.randint(0, 6)
        p = random_sphere_structure(rng, n, pool)
        assert validate_structure(p)["valid"]
        trace = reduce_sphere_full(p, rng.choice(("phased", "interleaved")))
        assert trace.count(SWALLOW) == n
        # only swallows change the orbit count, one at a time
        state, orbits = p, len(p.orbits)
        for st in trace:
            state = apply_structure_move(state, st.move)
            drop = orbits - len(state.orbits)
            assert drop == (1 if st.move.kind == SWALLOW else 0)
            orbits = len(state.orbits)
            assert validate_structure(state)["valid"]


def test_structure_move_kinds():
    with pytest.raises(MoveNotApplicable):
        apply_structure_move(two_region(), Move("twist", edge=0, direction=1))
    assert isinstance(reduce_sphere_full(two_region()), Trace)
