"""Independent reference computations used by the tests.

Nothing here imports the package's algorithms; only ``Series`` is used to
build inputs.
"""
from __future__ import annotations

import random
from fractions import Fraction

import numpy as np


def petal_graph(coeffs):
    """Adjacency lists of the loop graph with ``coeffs[n-1]`` loops of length ``n``.

    Vertex 0 is the base; each loop of length ``n`` gets ``n - 1`` private
    vertices.  Edges are returned as a list of ``(src, dst)`` pairs so that
    parallel edges stay distinct.
    """
    edges = []
    nxt = 1
    for n, c in enumerate(coeffs, 1):
        for _ in range(c):
            path = [0] + list(range(nxt, nxt + n - 1)) + [0]
            nxt += n - 1
            edges.extend(zip(path, path[1:]))
    return nxt, edges


def brute_force_fix(coeffs, n):
    """Count closed walks of length ``n`` by enumerating every edge sequence."""
    m, edges = petal_graph(coeffs)
    out = {}
    for i, (s, t) in enumerate(edges):
        out.setdefault(s, []).append(t)
    total = 0

    def walk(start, v, k):
        nonlocal total
        if k == n:
            total += v == start
            return
        for w in out.get(v, ()):
            walk(start, w, k + 1)

    for v in range(m):
        walk(v, v, 0)
    return total


def trace_power_fix(coeffs, n):
    m, edges = petal_graph(coeffs)
    A = [[0] * m for _ in range(m)]
    for s, t in edges:
        A[s][t] += 1
    P = [[int(i == j) for j in range(m)] for i in range(m)]
    for _ in range(n):
        P = [[sum(P[i][k] * A[k][j] for k in range(m)) for j in range(m)] for i in range(m)]
    return sum(P[i][i] for i in range(m))


def brute_first_returns(A, v, degree):
    """First-return paths to ``v`` by explicit depth-first enumeration."""
    m = len(A)
    counts = [0] * degree

    def dfs(u, length, mult):
        for w in range(m):
            if not A[u][w]:
                continue
            if w == v:
                counts[length] += mult * A[u][w]
            elif length + 1 < degree:
                dfs(w, length + 1, mult * A[u][w])

    dfs(v, 0, 1)
    return counts


def perron_root(A, tol=1e-12, max_iter=1_000_000):
    """Spectral radius of a nonnegative irreducible matrix by power iteration.

    Iterates on ``A + I`` (primitive, same Perron vector) and stops when the
    Collatz-Wielandt bounds ``min (Mx)_i/x_i <= rho <= max (Mx)_i/x_i`` meet.
    """
    M = np.asarray(A, dtype=float) + np.eye(len(A))
    x = np.ones(len(A))
    for _ in range(max_iter):
        y = M @ x
        r = y / x
        lo, hi = float(r.min()), float(r.max())
        if hi - lo < tol:
            break
        x = y / y.sum()
    return (lo + hi) / 2 - 1.0


def is_irreducible(A):
    m = len(A)
    R = (np.asarray(A) > 0).astype(int) + np.eye(m, dtype=int)
    P = np.linalg.matrix_power(R, m)
    return bool((P > 0).all()) and bool(np.asarray(A).sum(axis=1).all())


def random_irreducible(rng: random.Random, size, max_entry=2):
    while True:
        A = [[rng.choice([0, 0, 1, max_entry]) for _ in range(size)] for _ in range(size)]
        if is_irreducible(A):
            return A


def geometric_partial(n_terms, x):
    """``sum_{n=1}^{N} x^n`` in closed form."""
    x = Fraction(x)
    return x * (1 - x ** n_terms) / (1 - x)
