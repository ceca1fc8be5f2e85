"""Rotation-system maps on oriented surfaces.

A map on ``n_darts`` darts is a pair of permutations: ``alpha`` pairs the two
darts of every edge, ``sigma`` rotates counterclockwise around each vertex.
Faces are the orbits of ``phi = sigma o alpha``, i.e. ``phi[d] = sigma[alpha[d]]``.

The corner between ``d`` and ``sigma[d]`` belongs to the face containing
``sigma[d]``.  The map with no darts has one isolated vertex and one face
(the sphere); its face is represented by the empty cycle.
"""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence


class MapError(ValueError):
    """Base class for malformed map data."""


class NotInvolution(MapError):
    pass


class FixedPointInAlpha(MapError):
    pass


class SizeMismatch(MapError):
    pass


class NotPermutation(MapError):
    pass


class Disconnected(MapError):
    pass


def perm_cycles(perm: Sequence[int]) -> list[tuple[int, ...]]:
    """Cycles of ``perm``, each starting at its smallest element, sorted."""
    seen = [False] * len(perm)
    cycles = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        cycle = []
        d = start
        while not seen[d]:
            seen[d] = True
            cycle.append(d)
            d = perm[d]
        cycles.append(tuple(cycle))
    return cycles


def perm_from_cycles(cycles, n: int) -> tuple[int, ...]:
    perm = list(range(n))
    for cycle in cycles:
        for i, d in enumerate(cycle):
            perm[d] = cycle[(i + 1) % len(cycle)]
    return tuple(perm)


def invert(perm: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(perm)
    for i, j in enumerate(perm):
        inv[j] = i
    return tuple(inv)


@dataclass(frozen=True)
class CombinatorialMap:
    n_darts: int
    alpha: tuple[int, ...]
    sigma: tuple[int, ...]
    isolated_vertices: int = 0

    # orbit tables are cached lazily; the dataclass stays immutable

    @cached_property
    def vertices(self) -> list[tuple[int, ...]]:
        if self.n_darts == 0:
            return [()] * self.isolated_vertices
        return perm_cycles(self.sigma)

    @cached_property
    def edges(self) -> list[tuple[int, int]]:
        return [c for c in perm_cycles(self.alpha)]

    @cached_property
    def phi(self) -> tuple[int, ...]:
        return tuple(self.sigma[self.alpha[d]] for d in range(self.n_darts))

    @cached_property
    def face_cycles(self) -> list[tuple[int, ...]]:
        if self.n_darts == 0:
            return [()]
        return perm_cycles(self.phi)

    @cached_property
    def vertex_of(self) -> tuple[int, ...]:
        return _orbit_index(self.vertices, self.n_darts)

    @cached_property
    def face_of(self) -> tuple[int, ...]:
        return _orbit_index(self.face_cycles, self.n_darts)

    @cached_property
    def edge_of(self) -> tuple[int, ...]:
        return _orbit_index(self.edges, self.n_darts)

    @cached_property
    def sigma_inv(self) -> tuple[int, ...]:
        return invert(self.sigma)

    @property
    def V(self) -> int:
        return len(self.vertices)

    @property
    def E(self) -> int:
        return self.n_darts // 2

    @property
    def F(self) -> int:
        return len(self.face_cycles)

    def euler_characteristic(self) -> int:
        return self.V - self.E + self.F

    def rotation(self, dart: int) -> list[int]:
        """Darts around the vertex of ``dart``, counterclockwise from it."""
        out = [dart]
        d = self.sigma[dart]
        while d != dart:
            out.append(d)
            d = self.sigma[d]
        return out

    def to_dict(self) -> dict:
        return {
            "n_darts": self.n_darts,
            "isolated_vertices": self.isolated_vertices,
            "alpha": list(self.alpha),
            "sigma": list(self.sigma),
        }


def _orbit_index(orbits, n: int) -> tuple[int, ...]:
    index = [0] * n
    for i, orbit in enumerate(orbits):
        for d in orbit:
            index[d] = i
    return tuple(index)


def _check_perm(p: Sequence[int], n: int, name: str) -> None:
    if len(p) != n:
        raise SizeMismatch(f"{name} has length {len(p)}, expected {n}")
    if sorted(p) != list(range(n)):
        raise NotPermutation(f"{name} is not a permutation of 0..{n - 1}")


def build_map(alpha: Sequence[int], sigma: Sequence[int],
              isolated_vertices: Optional[int] = None) -> CombinatorialMap:
    """Validate a permutation pair and return the connected map it encodes."""
    alpha = tuple(int(x) for x in alpha)
    sigma = tuple(int(x) for x in sigma)
    n = len(alpha)
    if len(sigma) != n:
        raise SizeMismatch(f"alpha acts on {n} darts but sigma on {len(sigma)}")
    if n % 2:
        raise SizeMismatch(f"odd number of darts ({n})")
    _check_perm(alpha, n, "alpha")
    _check_perm(sigma, n, "sigma")
    for d in range(n):
        if alpha[d] == d:
            raise FixedPointInAlpha(f"alpha fixes dart {d}")
        if alpha[alpha[d]] != d:
            raise NotInvolution(f"alpha is not an involution at dart {d}")
    if isolated_vertices is None:
        isolated_vertices = 1 if n == 0 else 0
    if n == 0 and isolated_vertices != 1:
        raise Disconnected(f"a dartless map needs exactly one vertex, got {isolated_vertices}")
    if n > 0 and isolated_vertices != 0:
        raise Disconnected(f"{isolated_vertices} isolated vertices alongside edges")
    if n and not _transitive(alpha, sigma):
        raise Disconnected("alpha and sigma do not act transitively on the darts")
    m = CombinatorialMap(n, alpha, sigma, isolated_vertices)
    assert (2 - m.euler_characteristic()) % 2 == 0 and m.euler_characteristic() <= 2
    return m


def _transitive(alpha, sigma) -> bool:
    seen = {0}
    stack = [0]
    while stack:
        d = stack.pop()
        for e in (alpha[d], sigma[d]):
            if e not in seen:
                seen.add(e)
                stack.append(e)
    return len(seen) == len(alpha)


def canonical_alpha(n_edges: int) -> tuple[int, ...]:
    return tuple(d ^ 1 for d in range(2 * n_edges))


def from_rotation(cycles, n_edges: int) -> CombinatorialMap:
    """Map with alpha = (0 1)(2 3)... and vertex rotations given as cycles."""
    n = 2 * n_edges
    return build_map(canonical_alpha(n_edges), perm_from_cycles(cycles, n))


def relabel(m: CombinatorialMap, new_label: Sequence[int]) -> CombinatorialMap:
    """Conjugate ``m`` by the dart bijection ``d -> new_label[d]``."""
    n = m.n_darts
    alpha = [0] * n
    sigma = [0] * n
    for d in range(n):
        alpha[new_label[d]] = new_label[m.alpha[d]]
        sigma[new_label[d]] = new_label[m.sigma[d]]
    return CombinatorialMap(n, tuple(alpha), tuple(sigma), m.isolated_vertices)


def normalize_darts(m: CombinatorialMap) -> tuple[CombinatorialMap, tuple[int, ...]]:
    """Renumber darts so alpha pairs (2i, 2i+1); returns (map, old->new)."""
    new = [0] * m.n_darts
    for k, (a, b) in enumerate(m.edges):
        new[a], new[b] = 2 * k, 2 * k + 1
    new = tuple(new)
    return relabel(m, new), new


def random_relabel(m: CombinatorialMap, rng: random.Random) -> CombinatorialMap:
    perm = list(range(m.n_darts))
    rng.shuffle(perm)
    return relabel(m, perm)


def euler_genus(m: CombinatorialMap) -> int:
    return (2 - m.euler_characteristic()) // 2


def faces(m: CombinatorialMap) -> list[tuple[int, ...]]:
    return list(m.face_cycles)


def dual_map(m: CombinatorialMap) -> CombinatorialMap:
    """Dual on the same oriented surface: same darts and edges, rotation
    ``phi^-1 = alpha o sigma^-1``.

    ``phi`` walks each face with the face on its right, so the
    counterclockwise order around a face-vertex is ``phi`` reversed; using
    ``phi`` itself would give the mirror image.  Vertex ``i`` of the dual is
    face ``i`` of ``m``; the dual of the dual is ``m`` relabelled by alpha.
    """
    return CombinatorialMap(m.n_darts, m.alpha, invert(m.phi), m.isolated_vertices)


# -- isomorphism and canonical forms ------------------------------------------

def _propagate(a: CombinatorialMap, b: CombinatorialMap, root_a: int, root_b: int,
               colors_a, colors_b) -> Optional[dict[int, int]]:
    mapping = {root_a: root_b}
    used = {root_b}
    stack = [root_a]
    while stack:
        d = stack.pop()
        e = mapping[d]
        if colors_a is not None and colors_a[d] != colors_b[e]:
            return None
        for pa, pb in ((a.alpha, b.alpha), (a.sigma, b.sigma)):
            x, y = pa[d], pb[e]
            if x in mapping:
                if mapping[x] != y:
                    return None
            else:
                if y in used:
                    return None
                mapping[x] = y
                used.add(y)
                stack.append(x)
    return mapping


def map_isomorphic(a: CombinatorialMap, b: CombinatorialMap,
                   colors_a: Optional[Sequence] = None,
                   colors_b: Optional[Sequence] = None) -> Optional[dict[int, int]]:
    """A dart bijection conjugating ``a`` onto ``b``, or None.

    Optional per-dart colors must be preserved by the bijection.  Anchors
    dart 0 of ``a`` at every dart of ``b``; connectivity makes propagation
    from one anchor decide the whole bijection.
    """
    if (a.n_darts, a.V, a.F) != (b.n_darts, b.V, b.F):
        return None
    if a.n_darts == 0:
        return {}
    for root in range(b.n_darts):
        mapping = _propagate(a, b, 0, root, colors_a, colors_b)
        if mapping is not None and len(mapping) == a.n_darts:
            return mapping
    return None


def _labelling_from(m: CombinatorialMap, root: int) -> list[int]:
    # root gets 0, its alpha-partner 1; labels are handed out in pairs while
    # walking sigma from each labelled dart in label order
    n = m.n_darts
    label = [-1] * n
    order = []

    def take(d):
        label[d] = len(order)
        order.append(d)
        e = m.alpha[d]
        label[e] = len(order)
        order.append(e)

    take(root)
    i = 0
    while i < len(order):
        nxt = m.sigma[order[i]]
        if label[nxt] < 0:
            take(nxt)
        i += 1
    return label


def canonical_labelling(m: CombinatorialMap, colors: Optional[Sequence[int]] = None) -> tuple[bytes, list[int]]:
    """Minimal serialization over all roots, with the labelling achieving it."""
    best = None
    best_label = []
    for root in range(m.n_darts):
        label = _labelling_from(m, root)
        inv = [0] * m.n_darts
        for d, ld in enumerate(label):
            inv[ld] = d
        words = [label[m.sigma[inv[i]]] for i in range(m.n_darts)]
        if colors is not None:
            words += [colors[inv[i]] for i in range(m.n_darts)]
        key = struct.pack(f">{len(words)}I", *words)
        if best is None or key < best:
            best, best_label = key, label
    if best is None:
        best = b""
    header = struct.pack(">2I", m.n_darts, m.isolated_vertices)
    return header + best, best_label


def canonical_form(m: CombinatorialMap, colors: Optional[Sequence[int]] = None) -> bytes:
    """Byte string equal for two maps exactly when they are isomorphic."""
    return canonical_labelling(m, colors)[0]


def canonical_map(m: CombinatorialMap) -> CombinatorialMap:
    _, label = canonical_labelling(m)
    return relabel(m, label) if m.n_darts else m


def empty_map() -> CombinatorialMap:
    return build_map((), ())
