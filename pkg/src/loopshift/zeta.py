"""Periodic points, orbit counts and the product formula for loop shifts.

For a loop shift the zeta function is ``1/(1 - f)``, so the generating series
of fixed-point counts is its logarithmic derivative ``z f'(z) / (1 - f(z))``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import NotRealizable
from .series import Series, one_minus, product_one_minus_powers


@dataclass(frozen=True)
class OrbitData:
    fix: tuple
    orbits: tuple

    @classmethod
    def of(cls, f: Series) -> "OrbitData":
        fix = fix_counts(f)
        return cls(tuple(fix), tuple(orbit_counts(fix)))

    def check(self) -> bool:
        return all(
            self.fix[n - 1] == sum(k * self.orbits[k - 1] for k in divisors(n))
            for n in range(1, len(self.fix) + 1)
        )


def fix_counts(f: Series) -> list[int]:
    """``|Fix(sigma_f^n)|`` for ``n = 1..N`` via ``Fix = n f_n + sum_j f_j Fix_{n-j}``."""
    c = f.coeffs
    fix: list[int] = []
    for n in range(1, f.degree + 1):
        s = n * c[n - 1]
        for j in range(1, n):
            if c[j - 1]:
                s += c[j - 1] * fix[n - j - 1]
        fix.append(s)
    return fix


def divisors(n: int) -> list[int]:
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d * d != n:
                large.append(n // d)
        d += 1
    return small + large[::-1]


def mobius(n: int) -> int:
    if n < 1:
        raise ValueError("mobius is defined for positive integers")
    result = 1
    p = 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            result = -result
        p += 1
    if n > 1:
        result = -result
    return result


def mobius_invert(a: Sequence[int]) -> list[int]:
    """Signed inversion of ``a_n = sum_{k|n} k b_k``; inexact division raises."""
    out = []
    for n in range(1, len(a) + 1):
        s = sum(mobius(n // k) * a[k - 1] for k in divisors(n))
        if s % n:
            raise NotRealizable(n)
        out.append(s // n)
    return out


def orbit_counts(fix: Sequence[int]) -> list[int]:
    """``|O_n| = (1/n) sum_{k|n} mu(n/k) Fix_k``."""
    out = mobius_invert(fix)
    for n, o in enumerate(out, 1):
        if o < 0:
            raise NotRealizable(n)
    return out


def fix_from_orbits(orbits: Sequence[int]) -> list[int]:
    return [sum(k * orbits[k - 1] for k in divisors(n)) for n in range(1, len(orbits) + 1)]


def orbit_series_counts(f: Series) -> list[int]:
    return orbit_counts(fix_counts(f))


def product_formula_residual(f: Series, orbits: Sequence[int]) -> list[int]:
    """``prod_n (1 - z^n)^{O_n} - (1 - f)`` as a signed list from the constant term."""
    N = min(f.degree, len(orbits))
    prod = product_one_minus_powers(list(orbits[:N]), N)
    rhs = one_minus(f)[:N + 1]
    return [x - y for x, y in zip(prod, rhs)]


def discrepancy_growth(F: Series, G: Series, window: float = 0.5) -> float:
    """Estimate ``limsup |O_n(F) - O_n(G)|^{1/n}`` over the upper window of degrees.

    Returns 0 when every discrepancy in the window vanishes.
    """
    N = min(F.degree, G.degree)
    dO = orbit_discrepancies(F, G)
    start = max(1, N - max(1, round(window * N)) + 1)
    vals = [abs(dO[n - 1]) ** (1.0 / n) for n in range(start, N + 1) if dO[n - 1]]
    return max(vals) if vals else 0.0


def orbit_discrepancies(F: Series, G: Series) -> list[int]:
    N = min(F.degree, G.degree)
    a = [x - y for x, y in zip(fix_counts(F.truncate(N)), fix_counts(G.truncate(N)))]
    return mobius_invert(a)
