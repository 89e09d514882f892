"""Labeled loop graphs and the single-loop deletion step.

A loop graph is stored as its set of first-return loops.  Each loop records
``word``, its decomposition into loops of the base graph ``G<1>``, and
``label``, the concatenated edge symbols of those base loops.  Every graph
carries a length budget ``L``: loops longer than ``L`` are never materialised
and all statements about a graph hold "up to length L".

Base loop identifiers are lowercase strings (``a, b, ..., z, aa, ab, ...``).
A base loop of length 1 named ``a`` has the single edge symbol ``a``; a loop
``c`` of length 2 has symbols ``c1 c2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

from .errors import LoopNotFound, NotIrreducible
from .series import Series


@lru_cache(maxsize=None)
def loop_name(i: int) -> str:
    """Bijective base-26 name: 0 -> a, 25 -> z, 26 -> aa."""
    out = []
    i += 1
    while i:
        i, r = divmod(i - 1, 26)
        out.append(chr(ord("a") + r))
    return "".join(reversed(out))


@lru_cache(maxsize=1 << 20)
def edge_symbols(name: str, length: int) -> tuple:
    if length == 1:
        return (name,)
    return tuple(f"{name}{i}" for i in range(1, length + 1))


def split_symbol(sym: str) -> tuple[str, int]:
    """Inverse of :func:`edge_symbols`: ``'c2' -> ('c', 1)``, ``'a' -> ('a', 0)``."""
    i = len(sym)
    while i and sym[i - 1].isdigit():
        i -= 1
    if i == len(sym):
        return sym, 0
    return sym[:i], int(sym[i:]) - 1


@dataclass(frozen=True, order=True)
class Loop:
    word: tuple
    label: tuple

    @property
    def length(self) -> int:
        return len(self.label)

    @property
    def name(self) -> str:
        return ".".join(self.word)

    def __repr__(self):
        return f"Loop({' '.join(self.label)})"


def _sort_key(loop: Loop):
    return (loop.length, loop.label)


@dataclass(frozen=True)
class LabeledLoopGraph:
    base: tuple
    loops: tuple
    budget: int
    deleted_history: tuple = ()
    _by_label: dict = field(default=None, compare=False, repr=False)
    _by_length: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "loops", tuple(sorted(self.loops, key=_sort_key)))
        object.__setattr__(self, "_by_label", {lp.label: lp for lp in self.loops})
        by_length: dict = {}
        for lp in self.loops:
            by_length.setdefault(len(lp.label), []).append(lp)
        object.__setattr__(self, "_by_length", by_length)

    @classmethod
    def fresh(cls, named_lengths: Iterable[tuple[str, int]], budget: int) -> "LabeledLoopGraph":
        """Graph whose loops are the given base loops, each with its own symbols."""
        base = tuple(Loop((name, ), edge_symbols(name, n)) for name, n in named_lengths)
        return cls(base, tuple(lp for lp in base if lp.length <= budget), budget)

    @property
    def base_alphabet(self) -> tuple:
        return tuple(s for lp in self.base for s in lp.label)

    def base_lengths(self) -> dict:
        return {lp.word[0]: lp.length for lp in self.base}

    def census(self) -> Series:
        return Series(tuple(len(self._by_length.get(n, ())) for n in range(1, self.budget + 1)))

    def loops_of_length(self, n: int) -> list[Loop]:
        return list(self._by_length.get(n, ()))

    def by_label(self, label: Sequence[str]) -> Loop | None:
        return self._by_label.get(tuple(label))

    def __contains__(self, loop: Loop) -> bool:
        return self._by_label.get(loop.label) == loop

    def __len__(self):
        return len(self.loops)

    def has_distinct_labels(self) -> bool:
        return len(self._by_label) == len(self.loops)


def from_series(f: Series, budget: int) -> LabeledLoopGraph:
    """Loop graph with ``f_n`` loops of each length ``n <= budget``, all edges distinct."""
    if budget > f.degree:
        raise ValueError(f"budget {budget} exceeds the series degree {f.degree}")
    named = []
    for n in range(1, budget + 1):
        for _ in range(f[n]):
            named.append((loop_name(len(named)), n))
    return LabeledLoopGraph.fresh(named, budget)


def delete_loop_step(G: LabeledLoopGraph, l: Loop) -> LabeledLoopGraph:
    """Replace every loop ``c != l`` by the family ``c l^n``, ``|c| + n|l| <= L``."""
    if l not in G:
        raise LoopNotFound(f"{l!r} is not a loop of the graph")
    L = G.budget
    new = []
    for c in G.loops:
        if c == l:
            continue
        word, label = c.word, c.label
        while len(label) <= L:
            new.append(Loop(word, label))
            word, label = word + l.word, label + l.label
    return LabeledLoopGraph(G.base, tuple(new), L, G.deleted_history + (l,))


def split_graph(G: LabeledLoopGraph, heads: Iterable[Loop], tails: Iterable[Loop]) -> LabeledLoopGraph:
    """Loops ``h k_1 ... k_j`` with ``h`` in ``heads`` and ``k_i`` in ``tails``.

    This is the loop set of ``h k*`` when ``G`` is split into ``heads`` and
    ``tails``.
    """
    L = G.budget
    tails = sorted(tails, key=_sort_key)
    new = []
    frontier = list(heads)
    while frontier:
        nxt = []
        for c in frontier:
            new.append(c)
            for k in tails:
                if c.length + k.length <= L:
                    nxt.append(Loop(c.word + k.word, c.label + k.label))
        frontier = nxt
    return LabeledLoopGraph(G.base, tuple(new), L, G.deleted_history + tuple(tails))


def check_condition_star(G: LabeledLoopGraph, W: Loop) -> bool:
    """Symbols of ``W`` occur in loop labels only inside a prefix equal to ``W``."""
    wl = W.label
    syms = set(wl)
    n = len(wl)
    for lp in G.loops:
        lab = lp.label
        prefix_ok = lab[:n] == wl
        for i, s in enumerate(lab):
            if s in syms and not (prefix_ok and i < n):
                return False
    return True


def first_return_series(adjacency, vertex: int, degree: int) -> Series:
    """Counts of first-return paths to ``vertex`` by length, with edge multiplicity."""
    A = [[int(x) for x in row] for row in adjacency]
    m = len(A)
    if any(len(row) != m for row in A):
        raise ValueError("adjacency matrix must be square")
    if any(x < 0 for row in A for x in row):
        raise ValueError("adjacency entries must be nonnegative")
    if not 0 <= vertex < m:
        raise ValueError("vertex out of range")
    if degree < 1:
        raise ValueError("degree must be positive")
    _check_irreducible(A, vertex)

    v = vertex
    others = [j for j in range(m) if j != v]
    coeffs = [A[v][v]]
    # walks that left v and have not come back, by current endpoint
    walk = {j: A[v][j] for j in others}
    for _ in range(2, degree + 1):
        coeffs.append(sum(walk[j] * A[j][v] for j in others))
        walk = {j2: sum(walk[j] * A[j][j2] for j in others) for j2 in others}
    return Series(tuple(coeffs))


def _check_irreducible(A, v):
    m = len(A)

    def reach(step):
        seen = {v}
        stack = [v]
        while stack:
            i = stack.pop()
            for j in range(m):
                if step(i, j) and j not in seen:
                    seen.add(j)
                    stack.append(j)
        return seen

    fwd = reach(lambda i, j: A[i][j] > 0)
    bwd = reach(lambda i, j: A[j][i] > 0)
    bad = [j for j in range(m) if j not in fwd or j not in bwd]
    if bad:
        raise NotIrreducible(f"states {bad} are not bi-reachable from vertex {v}")
    if not any(A[v]):
        raise NotIrreducible("vertex has no outgoing edges")
