"""Markings of the reduced torus skeleton and Dehn-twist words.

A marking is an integer 2x2 matrix of determinant 1 whose columns give the
homology classes of the two skeleton loops in the basis of two fixed
reference curves.  Twisting along a loop of the current skeleton multiplies
the marking on the right by the twist about the matching reference curve.

Conventions: ``G1 = [[1, 1], [0, 1]]``, ``G2 = [[1, 0], [-1, 1]]``.
"""

from __future__ import annotations

import hashlib
import json
from itertools import groupby
from typing import Sequence

from flowcob.cobordism import TWIST, Move, Trace, TraceStep

G1 = "G1"
G2 = "G2"

Matrix = tuple[tuple[int, int], tuple[int, int]]
IDENTITY: Matrix = ((1, 0), (0, 1))


class NotUnimodular(ValueError):
    pass


def twist_matrix(gen: str) -> Matrix:
    if gen == G1:
        return ((1, 1), (0, 1))
    if gen == G2:
        return ((1, 0), (-1, 1))
    raise ValueError(f"unknown generator {gen!r}")


def twist_power(gen: str, k: int) -> Matrix:
    if gen == G1:
        return ((1, k), (0, 1))
    if gen == G2:
        return ((1, 0), (-k, 1))
    raise ValueError(f"unknown generator {gen!r}")


def matmul(x: Matrix, y: Matrix) -> Matrix:
    (a, b), (c, d) = x
    (e, f), (g, h) = y
    return ((a * e + b * g, a * f + b * h), (c * e + d * g, c * f + d * h))


def det(x: Matrix) -> int:
    (a, b), (c, d) = x
    return a * d - b * c


def inverse(x: Matrix) -> Matrix:
    (a, b), (c, d) = x
    if det(x) != 1:
        raise NotUnimodular(f"determinant {det(x)}")
    return ((d, -b), (-c, a))


def as_marking(x) -> Matrix:
    m = ((int(x[0][0]), int(x[0][1])), (int(x[1][0]), int(x[1][1])))
    if det(m) != 1:
        raise NotUnimodular(f"determinant {det(m)} != 1")
    return m


def apply_twist(m: Matrix, gen: str, sign: int = 1) -> Matrix:
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return matmul(m, twist_power(gen, sign))


def evaluate(word: Sequence[tuple[str, int]]) -> Matrix:
    # runs of one generator collapse to a single power
    out = IDENTITY
    for gen, run in groupby(word, key=lambda letter: letter[0]):
        out = matmul(out, twist_power(gen, sum(sign for _, sign in run)))
    return out


def _letters(gen: str, k: int) -> list[tuple[str, int]]:
    sign = 1 if k > 0 else -1
    return [(gen, sign)] * abs(k)


# (G1 G2 G1)^2 = -I
_MINUS_I = [(G1, 1), (G2, 1), (G1, 1)] * 2


def decompose(target) -> list[tuple[str, int]]:
    """Word in G1, G2 (letters with sign) evaluating to ``target``.

    Euclid on the first column: left factors G1^-q shrink the top entry and
    G2^q the bottom one until the column is (+-1, 0).  What remains is
    +-G1^b; the sign costs one copy of (G1 G2 G1)^2.
    """
    t = as_marking(target)
    (a, b), (c, d) = t
    left = []  # factors F applied on the left, in order
    while c != 0:
        if a == 0:
            q_gen, q = G1, 1
        elif abs(a) <= abs(c):
            q_gen, q = G2, c // a
        else:
            q_gen, q = G1, -(a // c)
        f = twist_power(q_gen, q)
        (a, b), (c, d) = matmul(f, ((a, b), (c, d)))
        left.append((q_gen, q))
    word = []
    for gen, q in left:
        word += _letters(gen, -q)
    if a == 1:
        word += _letters(G1, b)
    else:
        word += _MINUS_I + _letters(G1, -b)
    return free_reduce(word)


def free_reduce(word) -> list[tuple[str, int]]:
    """Cancel adjacent letter pairs g g^-1."""
    out: list[tuple[str, int]] = []
    for gen, sign in word:
        if out and out[-1] == (gen, -sign):
            out.pop()
        else:
            out.append((gen, sign))
    return out


def word_to_str(word) -> str:
    return " ".join(gen if sign > 0 else gen + "^-1" for gen, sign in word)


def parse_matrix(text: str) -> Matrix:
    """``"a,b;c,d"`` -> ((a, b), (c, d))."""
    rows = [r for r in text.split(";")]
    if len(rows) != 2:
        raise ValueError(f"expected two rows in {text!r}")
    vals = [[int(x) for x in r.split(",")] for r in rows]
    if any(len(r) != 2 for r in vals):
        raise ValueError(f"expected two columns in {text!r}")
    return as_marking(vals)


def marking_digest(m: Matrix) -> str:
    return hashlib.sha256(json.dumps(m).encode()).hexdigest()


def torus_cobordism_trace(a, b) -> Trace:
    """TwistMacro moves carrying marking ``a`` to ``b`` (loop 0 is G1, loop 1 is G2)."""
    a, b = as_marking(a), as_marking(b)
    word = decompose(matmul(inverse(a), b))
    steps = []
    state = a
    for gen, sign in word:
        nxt = apply_twist(state, gen, sign)
        steps.append(TraceStep(Move(TWIST, edge=0 if gen == G1 else 1, direction=sign),
                               marking_digest(state), marking_digest(nxt)))
        state = nxt
    if state != b:
        raise AssertionError("twist word does not reach the target marking")
    return Trace(steps, marking_digest(a))


def replay_twists(a, trace: Trace) -> Matrix:
    state = as_marking(a)
    for st in trace:
        state = apply_twist(state, G1 if st.move.edge == 0 else G2, st.move.direction)
    return state


def markings_connected(markings) -> bool:
    """Every pair of markings is joined by a verified twist trace."""
    ms = [as_marking(x) for x in markings]
    for x in ms:
        for y in ms:
            if replay_twists(x, torus_cobordism_trace(x, y)) != y:
                return False
    return True
