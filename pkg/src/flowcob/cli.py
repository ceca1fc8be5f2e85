"""Command-line front end.

Exit status: 0 on success, 1 when the input is well formed but fails a
domain check (the full report goes to stdout as JSON), 2 when a file cannot
be parsed.  Output files are written atomically.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from flowcob import io
from flowcob.census import MAX_EDGES, CensusFailure, verify_theorems
from flowcob.cobordism import NotSphere, StuckBeforeReduced, TraceMismatch, reduce_with_trace
from flowcob.field_graph import (
    FieldGraph, InducedEmbeddingDegenerate, NodeKind, NotConnected, SkeletonMap, SkeletonRole,
    flow_certificate, is_saddled_triangulation, reconstruct_field_graph, sink_skeleton,
    source_skeleton, validate_field_graph,
)
from flowcob.periodic import InvalidStructure, PeriodicStructure, reduce_sphere_full, validate_structure
from flowcob.surface_map import CombinatorialMap, MapError, dual_map, euler_genus, map_isomorphic
from flowcob.torus_mcg import NotUnimodular, decompose, evaluate, parse_matrix, word_to_str

OK, INVALID, MALFORMED = 0, 1, 2

DOMAIN_ERRORS = (NotUnimodular, InducedEmbeddingDegenerate, NotConnected, StuckBeforeReduced,
                 NotSphere, TraceMismatch)


class DomainInvalid(Exception):
    def __init__(self, report: dict):
        super().__init__(report.get("error", "invalid"))
        self.report = report


def _color(code: str, text: str) -> str:
    if os.environ.get("FLOWCOB_COLOR", "1") == "0" or not sys.stderr.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def _emit(payload, out=None) -> None:
    if out:
        io.write_json(out, payload)
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))


def _load(path, *kinds):
    kind, obj = io.load(io.read_json(path))
    if kind == "map" and "skeleton" in kinds and "map" not in kinds:
        kind, obj = "skeleton", SkeletonMap(obj)
    if kinds and kind not in kinds:
        raise io.MalformedFile(f"{path}: expected {' or '.join(kinds)}, found {kind}")
    return obj


def _map_summary(m: CombinatorialMap) -> dict:
    return {"V": m.V, "E": m.E, "F": m.F, "genus": euler_genus(m),
            "euler_characteristic": m.euler_characteristic(),
            "face_degrees": [len(f) for f in m.face_cycles]}


# -- commands --------------------------------------------------------------------

def cmd_validate(args) -> int:
    obj = _load(args.file)
    if isinstance(obj, FieldGraph):
        report = validate_field_graph(obj).to_dict()
    elif isinstance(obj, PeriodicStructure):
        report = validate_structure(obj)
    else:
        m = obj.map if isinstance(obj, SkeletonMap) else obj
        # a connected rotation system is valid once it parses
        report = {"valid": True, "violations": [], **_map_summary(m)}
    _emit(report)
    return OK if report["valid"] else INVALID


def cmd_invariants(args) -> int:
    obj = _load(args.file, "map", "skeleton", "field_graph")
    if isinstance(obj, FieldGraph):
        out = _map_summary(obj.map)
        rep = validate_field_graph(obj)
        ok, witness = is_saddled_triangulation(obj)
        out.update(U=obj.U, I=obj.I, A=obj.A, poincare_hopf_residual=rep.residual,
                   saddled_triangulation=ok)
        if ok:
            out["certificate_faces"] = len(flow_certificate(obj))
        else:
            out["triangulation_witness"] = witness
    elif isinstance(obj, SkeletonMap):
        out = _map_summary(obj.map)
        out.update(role=obj.role.value, marked_vertices=sorted(obj.marked_vertices),
                   marked_faces=sorted(obj.marked_faces))
    else:
        out = _map_summary(obj)
    _emit(out)
    return OK


def cmd_derive(args) -> int:
    fg = _load(args.file, "field_graph")
    report = validate_field_graph(fg)
    if not report.valid:
        raise DomainInvalid(report.to_dict())
    sk = sink_skeleton(fg) if args.role == "sink" else source_skeleton(fg)
    _emit(sk.to_dict(), args.out)
    return OK


def cmd_reconstruct(args) -> int:
    sk = _load(args.file, "skeleton")
    _emit(reconstruct_field_graph(sk).to_dict(), args.out)
    return OK


def cmd_reduce(args) -> int:
    sk = _load(args.file, "skeleton")
    if sk.is_marked:
        raise DomainInvalid({"valid": False, "error": "marked skeletons reduce through reduce-periodic"})
    final, trace = reduce_with_trace(sk, args.strategy)
    if args.trace:
        io.write_atomic(args.trace, trace.to_jsonl())
    if args.out:
        io.write_json(args.out, final.to_dict())
    _emit({"steps": len(trace), "sink_merges": trace.count("sink_merge"),
           "source_merges": trace.count("source_merge"), "initial": trace.initial,
           "final": trace.final, "final_map": _map_summary(final.map)})
    return OK


def cmd_dual(args) -> int:
    obj = _load(args.file, "map", "skeleton")
    if isinstance(obj, SkeletonMap):
        flipped = SkeletonRole.SOURCE if obj.role is SkeletonRole.SINK else SkeletonRole.SINK
        # marked faces become marked vertices of the dual and vice versa
        out = SkeletonMap(dual_map(obj.map), flipped, obj.marked_faces, obj.marked_vertices)
    else:
        out = dual_map(obj)
    _emit(out.to_dict(), args.out)
    return OK


def cmd_iso(args) -> int:
    a = _load(args.first, "map", "skeleton")
    b = _load(args.second, "map", "skeleton")
    ma = a.map if isinstance(a, SkeletonMap) else a
    mb = b.map if isinstance(b, SkeletonMap) else b
    bij = map_isomorphic(ma, mb)
    _emit({"isomorphic": bij is not None,
           "bijection": None if bij is None else [bij[d] for d in range(ma.n_darts)]})
    return OK


def cmd_census(args) -> int:
    try:
        report = verify_theorems(args.genus, args.max_edges, jobs=args.jobs,
                                 counterexample_path=args.counterexample)
    except CensusFailure as exc:
        raise DomainInvalid({"valid": False, "error": str(exc), "counterexample": str(exc.path)})
    _emit(report.to_dict(), args.out)
    return OK


def cmd_torus_word(args) -> int:
    try:
        target = parse_matrix(args.target)
    except NotUnimodular:
        raise
    except ValueError as exc:
        raise io.MalformedFile(str(exc)) from exc
    word = decompose(target)
    product = evaluate(word)
    _emit({"target": [list(r) for r in target], "word": word_to_str(word),
           "letters": [[g, s] for g, s in word], "length": len(word),
           "product": [list(r) for r in product], "verified": product == target})
    return OK if product == target else INVALID


def cmd_reduce_periodic(args) -> int:
    p = _load(args.file, "structure")
    trace = reduce_sphere_full(p, args.strategy)
    if args.trace:
        io.write_atomic(args.trace, trace.to_jsonl())
    _emit({"steps": len(trace), "swallows": trace.count("swallow"),
           "sink_merges": trace.count("sink_merge"), "source_merges": trace.count("source_merge"),
           "orbits": len(p.orbits), "initial": trace.initial, "final": trace.final})
    return OK


# -- DOT ---------------------------------------------------------------------------

SHAPES = {NodeKind.SOURCE: "triangle", NodeKind.SINK: "invtriangle", NodeKind.SADDLE: "diamond"}


def _dot_field_graph(fg: FieldGraph) -> list[str]:
    lines = []
    for v, kind in enumerate(fg.kinds):
        lines.append(f'  v{v} [label="{kind.value[:2]}{v}", shape={SHAPES[kind]}];')
    m = fg.map
    for k, t in enumerate(fg.tail):
        h = m.alpha[t]
        lines.append(f'  v{m.vertex_of[t]} -> v{m.vertex_of[h]} [label="e{k}"];')
    return lines


def _dot_skeleton(sk: SkeletonMap, prefix: str = "") -> list[str]:
    m = sk.map
    vkind = NodeKind.SINK if sk.role is SkeletonRole.SINK else NodeKind.SOURCE
    fkind = NodeKind.SOURCE if vkind is NodeKind.SINK else NodeKind.SINK
    lines = []
    for v in range(m.V):
        extra = ", peripheries=2" if v in sk.marked_vertices else ""
        lines.append(f'  {prefix}v{v} [label="{prefix}v{v}", shape={SHAPES[vkind]}{extra}];')
    for k, (a, b) in enumerate(m.edges):
        lines.append(f'  {prefix}v{m.vertex_of[a]} -> {prefix}v{m.vertex_of[b]} '
                     f'[label="a{k}", dir=none];')
    for f in sorted(sk.marked_faces):
        lines.append(f'  {prefix}f{f} [label="{prefix}f{f}", shape={SHAPES[fkind]}, '
                     f'peripheries=2, style=dashed];')
        for v in sorted({m.vertex_of[d] for d in m.face_cycles[f]}):
            lines.append(f'  {prefix}f{f} -> {prefix}v{v} [style=dotted, dir=none];')
    return lines


def to_dot(obj) -> str:
    if isinstance(obj, FieldGraph):
        body = _dot_field_graph(obj)
    elif isinstance(obj, SkeletonMap):
        body = _dot_skeleton(obj)
    elif isinstance(obj, CombinatorialMap):
        body = _dot_skeleton(SkeletonMap(obj))
    else:
        body = []
        for r in obj.regions:
            body.append(f'  subgraph cluster_r{r.id} {{')
            body.append(f'  label="region {r.id}";')
            body += _dot_skeleton(r.closed_field, prefix=f"r{r.id}_")
            body.append("  }")
    return "digraph flowcob {\n" + "\n".join(body) + ("\n" if body else "") + "}\n"


def cmd_dot(args) -> int:
    text = to_dot(_load(args.file))
    if args.out:
        io.write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return OK


# -- entry point -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flowcob", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.set_defaults(func=func)
        return sp

    sp = add("validate", cmd_validate, "check a field graph, structure or map")
    sp.add_argument("file")
    sp = add("invariants", cmd_invariants, "counts, genus and triangulation status")
    sp.add_argument("file")
    sp = add("derive", cmd_derive, "sink or source skeleton of a field graph")
    sp.add_argument("file")
    sp.add_argument("--role", choices=("sink", "source"), default="sink")
    sp.add_argument("--out")
    sp = add("reconstruct", cmd_reconstruct, "field graph from a skeleton")
    sp.add_argument("file")
    sp.add_argument("--out")
    sp = add("reduce", cmd_reduce, "reduce a skeleton to one sink and one source")
    sp.add_argument("file")
    sp.add_argument("--trace")
    sp.add_argument("--out")
    sp.add_argument("--strategy", choices=("phased", "interleaved"), default="phased")
    sp = add("dual", cmd_dual, "dual map or skeleton")
    sp.add_argument("file")
    sp.add_argument("--out")
    sp = add("iso", cmd_iso, "test two maps for isomorphism")
    sp.add_argument("first")
    sp.add_argument("second")
    sp = add("census", cmd_census, "enumerate skeletons and check the theorems on each")
    sp.add_argument("--genus", type=int, required=True)
    sp.add_argument("--max-edges", type=int, required=True)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out")
    sp.add_argument("--counterexample", default="census_counterexample.json")
    sp = add("torus-word", cmd_torus_word, "Dehn twist word for an SL(2,Z) matrix")
    sp.add_argument("--target", required=True, help='matrix as "a,b;c,d"')
    sp = add("reduce-periodic", cmd_reduce_periodic, "reduce a sphere structure with periodic orbits")
    sp.add_argument("file")
    sp.add_argument("--trace")
    sp.add_argument("--strategy", choices=("phased", "interleaved"), default="phased")
    sp = add("dot", cmd_dot, "DOT digraph for viewing")
    sp.add_argument("file")
    sp.add_argument("--out")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("--jobs must be at least 1", file=sys.stderr)
        return MALFORMED
    if getattr(args, "genus", 0) < 0:
        print("--genus must be nonnegative", file=sys.stderr)
        return MALFORMED
    if not 0 <= getattr(args, "max_edges", 0) <= MAX_EDGES:
        print(f"--max-edges must lie in 0..{MAX_EDGES}", file=sys.stderr)
        return MALFORMED
    try:
        code = args.func(args)
    except DomainInvalid as exc:
        _emit(exc.report)
        code = INVALID
    except InvalidStructure as exc:
        _emit({"valid": False, "violations": exc.violations})
        code = INVALID
    except DOMAIN_ERRORS as exc:
        _emit({"valid": False, "error": f"{type(exc).__name__}: {exc}"})
        code = INVALID
    except (io.MalformedFile, MapError, json.JSONDecodeError, KeyError, TypeError,
            ValueError, OSError) as exc:
        print(f"{_color('31', 'error')}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return MALFORMED
    if sys.stderr.isatty():
        print(_color("32", "ok") if code == OK else _color("33", "invalid"), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
