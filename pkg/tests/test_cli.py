import json
import os
import re

import pytest
from hypothesis import given, settings, strategies as st

from flowcob import cli, io
from flowcob.census import enumerate_skeletons
from flowcob.cobordism import Trace, canonical_reduced
from flowcob.field_graph import reconstruct_field_graph, SkeletonMap
from flowcob.periodic import ATTRACTING, Orbit, PeriodicStructure, make_region, structure_to_dict
from flowcob.surface_map import empty_map

# -- a grammar-level DOT checker (statement subset emitted by the tool) -----------

TOKEN = re.compile(r'\s*(?:(->|--)|([{}\[\];,=])|("(?:[^"\\]|\\.)*")|([A-Za-z_][A-Za-z0-9_.]*|-?\d+(?:\.\d+)?))')


def tokenize(text):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise SyntaxError(f"bad character at {pos}: {text[pos:pos + 10]!r}")
        out.append(next(g for g in m.groups() if g is not None))
        pos = m.end()
    return out


def is_id(tok):
    return tok.startswith('"') or re.fullmatch(r"[A-Za-z_][A-Za-z0-9_.]*|-?\d+(\.\d+)?", tok)


def parse_dot(text):
    toks = tokenize(text)
    i = 0

    def expect(t):
        nonlocal i
        if i >= len(toks) or toks[i] != t:
            raise SyntaxError(f"expected {t!r} at token {i}")
        i += 1

    def ident():
        nonlocal i
        if i >= len(toks) or not is_id(toks[i]):
            raise SyntaxError(f"expected identifier at token {i}")
        i += 1
        return toks[i - 1]

    def attr_list():
        nonlocal i
        while i < len(toks) and toks[i] == "[":
            i += 1
            while toks[i] != "]":
                ident()
                expect("=")
                ident()
                if toks[i] in (",", ";"):
                    i += 1
            expect("]")

    def stmt_list():
        nonlocal i
        while toks[i] != "}":
            if toks[i] == "subgraph":
                i += 1
                ident()
                expect("{")
                stmt_list()
                expect("}")
            else:
                ident()
                if toks[i] == "=":
                    i += 1
                    ident()
                else:
                    while toks[i] == "->":
                        i += 1
                        ident()
                    attr_list()
            if toks[i] == ";":
                i += 1

    expect("digraph")
    if toks[i] != "{":
        ident()
    expect("{")
    stmt_list()
    expect("}")
    if i != len(toks):
        raise SyntaxError("trailing tokens")
    return True


def test_dot_checker_rejects_garbage():
    with pytest.raises(SyntaxError):
        parse_dot("digraph { a -> ; }")
    with pytest.raises(SyntaxError):
        parse_dot("digraph { a [shape=] }")
    assert parse_dot('digraph g { a [label="x", shape=box]; a -> b; }')


# -- helpers ---------------------------------------------------------------------

def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


def write(path, payload):
    path.write_text(json.dumps(payload))
    return path


@pytest.fixture
def files(tmp_path, good_field, loop_map, edge_map):
    o = Orbit(0, ATTRACTING)
    blank = SkeletonMap(empty_map())
    p = PeriodicStructure(0, (o,), (make_region(0, blank, [(0, "vertex", 0)]),
                                    make_region(1, blank, [(0, "vertex", 0)])))
    return {
        "good": write(tmp_path / "good_field.json", good_field.to_dict()),
        "loop": write(tmp_path / "loop_sphere.json", loop_map.to_dict()),
        "edge": write(tmp_path / "edge.json", edge_map.to_dict()),
        "structure": write(tmp_path / "structure.json", structure_to_dict(p)),
        "dir": tmp_path,
    }


# -- documented examples ----------------------------------------------------------

def test_validate_good_field(capsys, files):
    code, out = run(capsys, "validate", files["good"])
    rep = json.loads(out)
    assert code == 0
    assert {k: rep[k] for k in ("valid", "U", "I", "A", "genus")} == \
        {"valid": True, "U": 2, "I": 1, "A": 1, "genus": 0}


def test_reduce_with_trace(capsys, files):
    trace = files["dir"] / "t.jsonl"
    code, out = run(capsys, "reduce", files["loop"], "--trace", trace)
    assert code == 0
    lines = trace.read_text().splitlines()
    assert len(lines) == 1 and json.loads(out)["steps"] == 1
    assert Trace.from_jsonl(trace.read_text()).chained()


def test_torus_word(capsys):
    code, out = run(capsys, "torus-word", "--target", "0,1;-1,0")
    rep = json.loads(out)
    assert code == 0 and rep["verified"] and rep["product"] == [[0, 1], [-1, 0]]


# -- exit codes ------------------------------------------------------------------

def test_invalid_field_exit_1(capsys, files, good_field):
    d = good_field.to_dict()
    d["kinds"] = ["source"] * len(d["kinds"])
    code, out = run(capsys, "validate", write(files["dir"] / "bad.json", d))
    rep = json.loads(out)
    assert code == 1 and not rep["valid"] and len(rep["violations"]) > 1


@pytest.mark.parametrize("text", ["{", "[]", '{"alpha": [0, 1], "sigma": [0, 1]}',
                                  '{"alpha": [1, 0], "sigma": [0]}', '{"alpha": "x", "sigma": []}',
                                  '{"alpha": [1, 0], "sigma": [0, 1], "kinds": ["sink", "blob"], "tail": [0]}'])
def test_malformed_exit_2(capsys, tmp_path, text):
    path = tmp_path / "m.json"
    path.write_text(text)
    assert cli.main(["validate", str(path)]) == 2


def test_missing_file_exit_2(tmp_path):
    assert cli.main(["validate", str(tmp_path / "nope.json")]) == 2


def test_non_unimodular_exit_1(capsys):
    code, out = run(capsys, "torus-word", "--target", "2,0;0,1")
    assert code == 1 and not json.loads(out)["valid"]
    assert cli.main(["torus-word", "--target", "1;2"]) == 2


def test_flag_validation(capsys):
    assert cli.main(["census", "--genus", "0", "--max-edges", "9"]) == 2
    assert cli.main(["census", "--genus", "-1", "--max-edges", "2"]) == 2
    assert cli.main(["census", "--genus", "0", "--max-edges", "2", "--jobs", "0"]) == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["reduce"])
    assert info.value.code == 2


def test_wrong_kind_exit_2(capsys, files):
    assert cli.main(["derive", str(files["loop"])]) == 2


# -- other commands ---------------------------------------------------------------

def test_derive_and_reconstruct(capsys, files):
    sk_path = files["dir"] / "sk.json"
    assert cli.main(["derive", str(files["good"]), "--out", str(sk_path)]) == 0
    sk = io.load_skeleton(json.loads(sk_path.read_text()))
    assert (sk.map.V, sk.map.E, sk.map.F) == (1, 1, 2)
    src_path = files["dir"] / "src.json"
    assert cli.main(["derive", str(files["good"]), "--role", "source", "--out", str(src_path)]) == 0
    assert json.loads(src_path.read_text())["role"] == "source"
    fg_path = files["dir"] / "fg.json"
    assert cli.main(["reconstruct", str(sk_path), "--out", str(fg_path)]) == 0
    code, out = run(capsys, "validate", fg_path)
    assert code == 0 and json.loads(out)["A"] == 1


def test_invariants(capsys, files):
    code, out = run(capsys, "invariants", files["good"])
    rep = json.loads(out)
    assert code == 0 and rep["saddled_triangulation"] and rep["certificate_faces"] == 4
    code, out = run(capsys, "invariants", files["loop"])
    assert json.loads(out)["face_degrees"] == [1, 1]


def test_dual_and_iso(capsys, files):
    dual = files["dir"] / "dual.json"
    assert cli.main(["dual", str(files["loop"]), "--out", str(dual)]) == 0
    code, out = run(capsys, "iso", dual, files["edge"])
    assert code == 0 and json.loads(out)["isomorphic"]
    code, out = run(capsys, "iso", files["loop"], files["edge"])
    assert code == 0 and not json.loads(out)["isomorphic"]


def test_census_command(capsys, files):
    out_path = files["dir"] / "report.json"
    code = cli.main(["census", "--genus", "1", "--max-edges", "3", "--out", str(out_path),
                     "--counterexample", str(files["dir"] / "c.json")])
    rep = json.loads(out_path.read_text())
    assert code == 0 and rep["totals"]["cobordism_classes"] == 1 and rep["genus"] == 1


def test_reduce_periodic(capsys, files):
    trace = files["dir"] / "p.jsonl"
    code, out = run(capsys, "reduce-periodic", files["structure"], "--trace", trace)
    assert code == 0 and json.loads(out)["swallows"] == 1
    assert len(trace.read_text().splitlines()) == 1


def test_reduce_periodic_invalid(capsys, files):
    d = json.loads(files["structure"].read_text())
    d["regions"] = d["regions"][:1]
    code, out = run(capsys, "reduce-periodic", write(files["dir"] / "bad.json", d))
    assert code == 1 and json.loads(out)["violations"]


def test_reduce_marked_refused(capsys, files):
    d = json.loads(files["loop"].read_text())
    d["marked_faces"] = [0]
    code, _ = run(capsys, "reduce", write(files["dir"] / "m.json", d))
    assert code == 1


# -- DOT ------------------------------------------------------------------------

def test_dot_field_graph_shapes(capsys, files):
    code, out = run(capsys, "dot", files["good"])
    assert code == 0 and parse_dot(out)
    assert out.count("shape=triangle") == 2
    assert out.count("shape=invtriangle") == 1 and out.count("shape=diamond") == 1
    assert out.count("->") == 6


def test_dot_marks_and_structures(capsys, files):
    d = json.loads(files["loop"].read_text())
    d.update(marked_vertices=[0], marked_faces=[1])
    code, out = run(capsys, "dot", write(files["dir"] / "m.json", d))
    assert code == 0 and parse_dot(out)
    assert out.count("peripheries=2") == 2
    code, out = run(capsys, "dot", files["structure"])
    assert code == 0 and parse_dot(out) and "subgraph cluster_r0" in out


DOT_SOURCES = [s for g in (0, 1) for s in enumerate_skeletons(3, g)]


@settings(max_examples=40, deadline=None)
@given(i=st.integers(0, len(DOT_SOURCES) - 1))
def test_dot_always_parses(i):
    s = DOT_SOURCES[i]
    assert parse_dot(cli.to_dot(s))
    assert parse_dot(cli.to_dot(reconstruct_field_graph(s)))


# -- round trip and atomic writes ---------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(i=st.integers(0, len(DOT_SOURCES) - 1), cmd=st.sampled_from(["derive-sink", "derive-source",
                                                                    "reconstruct", "dual"]))
def test_emitted_files_round_trip(tmp_path_factory, i, cmd):
    d = tmp_path_factory.mktemp("rt")
    s = DOT_SOURCES[i]
    fg = reconstruct_field_graph(s)
    src = d / "in.json"
    src.write_text(json.dumps(fg.to_dict() if cmd.startswith("derive") else s.to_dict()))
    out = d / "out.json"
    if cmd.startswith("derive"):
        argv = ["derive", str(src), "--role", cmd.split("-")[1], "--out", str(out)]
    else:
        argv = [cmd, str(src), "--out", str(out)]
    assert cli.main(argv) == 0
    first = json.loads(out.read_text())
    kind, obj = io.load(first)
    assert io.dump(obj) == first


def test_reduce_out_round_trip(capsys, files):
    out = files["dir"] / "final.json"
    assert cli.main(["reduce", str(files["good"].parent / "loop_sphere.json"), "--out", str(out)]) == 0
    first = json.loads(out.read_text())
    assert io.dump(io.load(first)[1]) == first


def test_atomic_write_leaves_no_partial(tmp_path, monkeypatch):
    target = tmp_path / "x.json"
    target.write_text("old")

    def boom(*args, **kwargs):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(OSError):
        io.write_atomic(target, "new")
    assert target.read_text() == "old"
    assert [p.name for p in tmp_path.iterdir()] == ["x.json"]


def test_color_switch(monkeypatch):
    monkeypatch.setenv("FLOWCOB_COLOR", "0")
    assert cli._color("31", "error") == "error"


def test_canonical_reduced_dot():
    assert parse_dot(cli.to_dot(canonical_reduced(2)))
