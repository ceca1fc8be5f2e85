"""Exhaustive census of small skeletons and theorem checks over it.

Maps with E edges are grown from maps with E-1 edges by every vertex split
and every edge insertion between two corners, then deduplicated by canonical
form.  Every connected map arises this way: contract a non-loop edge if there
is one, otherwise delete any loop.  Class counts quotient by orientation
preserving homeomorphism of the surface, not by isotopy; on the torus the
marking data lives in :mod:`flowcob.torus_mcg`.
"""

from __future__ import annotations

import itertools
import json
import logging
from pathlib import Path
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from flowcob.cobordism import (
    StuckBeforeReduced, Trace, TraceStep, canonical_reduced, genus_profile, reduce_with_states,
)
from flowcob.field_graph import (
    SkeletonMap, duality_check, flow_certificate, is_saddled_triangulation,
    poincare_hopf_residual, reconstruct_field_graph, sink_skeleton, source_skeleton,
    validate_field_graph,
)
from flowcob.surface_map import (
    CombinatorialMap, Disconnected, build_map, canonical_alpha, canonical_form,
    canonical_map, euler_genus, map_isomorphic, perm_from_cycles,
)

log = logging.getLogger(__name__)

MAX_EDGES = 5


class BudgetExceeded(ValueError):
    pass


class CensusFailure(AssertionError):
    def __init__(self, message, instance=None, path=None):
        super().__init__(message)
        self.instance = instance
        self.path = path


def _children(m: CombinatorialMap):
    """All maps with one more edge that contract or delete back to ``m``."""
    n = m.n_darts
    a, b = n, n + 1
    alpha = canonical_alpha(n // 2 + 1)
    # vertex splits
    if n == 0:
        yield build_map(alpha, (0, 1))
    for orbit in m.vertices:
        if not orbit:
            continue
        rot = m.rotation(orbit[0])
        size = len(rot)
        for start in range(size):
            for length in range(size + 1):
                seg = [rot[(start + i) % size] for i in range(length)]
                rest = [rot[(start + length + i) % size] for i in range(size - length)]
                cycles = [[a] + rest, [b] + seg]
                cycles += [m.rotation(o[0]) for o in m.vertices if o and o is not orbit]
                yield build_map(alpha, perm_from_cycles(cycles, n + 2))
    # edge insertions, on one face or across two
    corners1 = list(range(n)) or [None]
    for c1 in corners1:
        for c2 in list(range(n)) + [a]:
            sigma = list(m.sigma) + [a, b]
            if c1 is not None:
                sigma[a], sigma[c1] = sigma[c1], a
            sigma[b], sigma[c2] = sigma[c2], b
            yield build_map(alpha, sigma)


def _grow_all(max_edges: int, max_genus: int) -> list[dict[bytes, CombinatorialMap]]:
    levels = [{canonical_form(build_map((), ())): build_map((), ())}]
    for _ in range(max_edges):
        nxt: dict[bytes, CombinatorialMap] = {}
        for parent in levels[-1].values():
            if euler_genus(parent) > max_genus:
                continue
            for child in _children(parent):
                if euler_genus(child) > max_genus:
                    continue
                key = canonical_form(child)
                if key not in nxt:
                    nxt[key] = canonical_map(child)
        levels.append(nxt)
    return levels


def enumerate_skeletons(max_edges: int, genus: int, exact_edges: bool = False) -> list[SkeletonMap]:
    """Canonical representatives of connected maps of the given genus,
    with at most (or, with ``exact_edges``, exactly) ``max_edges`` edges."""
    if max_edges > MAX_EDGES:
        raise BudgetExceeded(f"census is capped at {MAX_EDGES} edges")
    if max_edges < 0 or genus < 0:
        raise ValueError("max_edges and genus must be nonnegative")
    levels = _grow_all(max_edges, genus)
    out = []
    for e, level in enumerate(levels):
        if exact_edges and e != max_edges:
            continue
        keys = sorted(k for k, m in level.items() if euler_genus(m) == genus)
        out.extend(SkeletonMap(level[k]) for k in keys)
    return out


def enumerate_naive(n_edges: int, genus: int) -> set[bytes]:
    """Canonical forms from a sweep of every rotation on 2E darts."""
    n = 2 * n_edges
    alpha = canonical_alpha(n_edges)
    found = set()
    for sigma in itertools.permutations(range(n)):
        try:
            m = build_map(alpha, sigma)
        except Disconnected:
            continue
        if euler_genus(m) == genus:
            found.add(canonical_form(m))
    return found


# -- verification ------------------------------------------------------------------

CHECKS = ("poincare_hopf", "valid", "theorem1", "triangulation", "certificate",
          "duality", "round_trip", "reduces", "canonical_terminal", "trace_length",
          "genus_invariant")


def check_instance(s: SkeletonMap, genus: int) -> dict:
    """Run every check on one skeleton; returns {check: bool} plus the
    terminal canonical form of its reduction."""
    m = s.map
    res = {}
    fg = reconstruct_field_graph(s)
    res["valid"] = validate_field_graph(fg).valid
    res["poincare_hopf"] = poincare_hopf_residual(fg) == 0
    sk = sink_skeleton(fg)
    res["theorem1"] = sk.map.F == fg.U and sk.map.V == fg.I and sk.map.E == fg.A
    if fg.A >= 1:
        ok, _ = is_saddled_triangulation(fg)
        res["triangulation"] = ok
        res["certificate"] = ok and len(flow_certificate(fg)) == fg.map.F
    else:
        res["triangulation"] = res["certificate"] = True
    res["duality"] = duality_check(fg) and source_skeleton(fg).map.V == fg.U
    res["round_trip"] = map_isomorphic(sk.map, m) is not None
    try:
        final, history = reduce_with_states(s)
    except StuckBeforeReduced:
        res.update(reduces=False, trace_length=False, genus_invariant=False)
        res["canonical_terminal"] = False
        return {"checks": res, "terminal": None, "edges": m.E, "stuck": True, "canonical": False}
    res["reduces"] = final.map.V == 1 and final.map.F == 1
    canonical = map_isomorphic(final.map, canonical_reduced(genus).map) is not None
    # above genus 1 several one-vertex one-face maps exist; reported, not required
    res["canonical_terminal"] = canonical or genus >= 2
    res["trace_length"] = len(history) == (m.V - 1) + (m.F - 1) and final.map.E == 2 * genus
    trace = Trace([TraceStep(mv, "", "") for mv, _, _ in history])
    res["genus_invariant"] = set(genus_profile(s, trace)) == {genus}
    return {"checks": res, "terminal": canonical_form(final.map).hex(), "edges": m.E,
            "canonical": canonical}


def _check_job(args):
    d, genus = args
    m = CombinatorialMap(d["n_darts"], tuple(d["alpha"]), tuple(d["sigma"]), d["isolated_vertices"])
    return check_instance(SkeletonMap(m), genus)


@dataclass
class CensusReport:
    genus: int
    max_edges: int
    per_edge_count: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        totals = {"instances": 0, "reduction_failures": 0}
        for row in self.per_edge_count.values():
            totals["instances"] += row["instances"]
            totals["reduction_failures"] += row["reduction_failures"]
        terminals = set()
        for row in self.per_edge_count.values():
            terminals.update(row["_terminals"])
        totals["cobordism_classes"] = len(terminals)
        rows = {str(e): {k: v for k, v in row.items() if not k.startswith("_")}
                for e, row in sorted(self.per_edge_count.items())}
        return {
            "genus": self.genus,
            "max_edges": self.max_edges,
            "class_notion": "map isomorphism (orientation-preserving homeomorphism), not isotopy",
            "per_edge_count": rows,
            "totals": totals,
        }


def verify_theorems(genus: int, max_edges: int, jobs: int = 1,
                    counterexample_path="census_counterexample.json") -> CensusReport:
    """Check every census instance; the first failure is written to
    ``counterexample_path`` and raised as :class:`CensusFailure`."""
    instances = enumerate_skeletons(max_edges, genus)
    payload = [(s.map.to_dict(), genus) for s in instances]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_check_job, payload, chunksize=8))
    else:
        results = [check_instance(s, genus) for s in instances]
    report = CensusReport(genus, max_edges)
    for e in range(max_edges + 1):
        report.per_edge_count[e] = {
            "instances": 0, "isomorphism_classes": 0, "cobordism_classes": 0,
            "reduction_failures": 0, "reached_canonical_reduced": 0,
            **{f"{c}_passed": 0 for c in CHECKS}, "_terminals": set(),
        }
    for s, res in zip(instances, results):
        row = report.per_edge_count[res["edges"]]
        failed = [c for c, ok in res["checks"].items() if not ok]
        if failed:
            row["reduction_failures"] += bool(res.get("stuck"))
            Path(counterexample_path).write_text(json.dumps(
                {"genus": genus, "failed": failed, "skeleton": s.to_dict()}, indent=2))
            raise CensusFailure(f"checks {failed} failed", s, counterexample_path)
        row["instances"] += 1
        row["isomorphism_classes"] += 1
        for c in CHECKS:
            row[f"{c}_passed"] += 1
        row["reached_canonical_reduced"] += res["canonical"]
        row["_terminals"].add(res["terminal"])
        row["cobordism_classes"] = len(row["_terminals"])
    log.info("census genus=%d max_edges=%d: %d instances", genus, max_edges, len(instances))
    return report
