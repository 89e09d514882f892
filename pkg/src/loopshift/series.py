"""Truncated power series with nonnegative integer coefficients.

A :class:`Series` of degree ``N`` stores the coefficients of ``z, z^2, ...,
z^N``; the constant term is always zero.  Binary operations are exact up to
the smaller of the two degrees and never extrapolate past it.

Signed helpers (``one_minus``, ``poly_mul``, ``product_one_minus_powers``)
work on plain lists indexed from the constant term; they exist for identity
checks such as ``(1 - g)(1 - k) == 1 - f``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from numbers import Integral
from typing import Callable, Iterable, Sequence

from .errors import NegativeCoefficient


@dataclass(frozen=True)
class Series:
    coeffs: tuple

    def __post_init__(self):
        cs = []
        for i, c in enumerate(self.coeffs):
            if isinstance(c, bool) or not isinstance(c, Integral):
                raise TypeError(f"coefficient of z^{i + 1} is not an integer: {c!r}")
            c = int(c)
            if c < 0:
                raise NegativeCoefficient(i + 1, c)
            cs.append(c)
        object.__setattr__(self, "coeffs", tuple(cs))

    # construction -----------------------------------------------------

    @classmethod
    def from_coeffs(cls, coeffs: Iterable[int], degree: int | None = None) -> "Series":
        """Series with ``coeffs[0]`` as the coefficient of ``z``.

        ``degree`` pads with zeros or truncates.
        """
        cs = list(coeffs)
        if degree is not None:
            cs = (cs + [0] * degree)[:degree]
        return cls(tuple(cs))

    @classmethod
    def zero(cls, degree: int) -> "Series":
        return cls((0,) * degree)

    @classmethod
    def monomial(cls, n: int, degree: int, c: int = 1) -> "Series":
        if n < 1:
            raise ValueError("monomials must have positive exponent")
        cs = [0] * degree
        if n <= degree:
            cs[n - 1] = c
        return cls(tuple(cs))

    @classmethod
    def from_function(cls, fn: Callable[[int], int], degree: int) -> "Series":
        return cls(tuple(fn(n) for n in range(1, degree + 1)))

    # access -------------------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, n: int) -> int:
        """Coefficient of ``z^n``; zero for ``n <= 0``."""
        if n <= 0:
            return 0
        if n > self.degree:
            raise IndexError(f"z^{n} is beyond the truncation degree {self.degree}")
        return self.coeffs[n - 1]

    def __iter__(self):
        return iter(self.coeffs)

    def __len__(self):
        return len(self.coeffs)

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def support(self) -> list[int]:
        return [i + 1 for i, c in enumerate(self.coeffs) if c]

    def truncate(self, degree: int) -> "Series":
        return Series(self.coeffs[:degree])

    def total(self) -> int:
        return sum(self.coeffs)

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __repr__(self):
        terms = []
        for n, c in enumerate(self.coeffs, 1):
            if c:
                mono = "z" if n == 1 else f"z^{n}"
                terms.append(mono if c == 1 else f"{c}{mono}")
        body = " + ".join(terms) if terms else "0"
        return f"Series({body}; N={self.degree})"


@dataclass(frozen=True)
class Star:
    """``1 + k + k^2 + ...`` kept as an explicit unit plus a :class:`Series` tail."""

    tail: Series
    unit: int = 1

    @property
    def degree(self) -> int:
        return self.tail.degree

    def signed(self) -> list[int]:
        return [self.unit] + list(self.tail.coeffs)


# arithmetic -------------------------------------------------------------

def _common_degree(a: Series, b: Series) -> int:
    return min(a.degree, b.degree)


def add(a: Series, b: Series) -> Series:
    n = _common_degree(a, b)
    return Series(tuple(x + y for x, y in zip(a.coeffs[:n], b.coeffs[:n])))


def sub_checked(a: Series, b: Series) -> Series:
    """Coefficientwise ``a - b``; raises :class:`NegativeCoefficient` on underflow."""
    n = _common_degree(a, b)
    out = []
    for i in range(n):
        d = a.coeffs[i] - b.coeffs[i]
        if d < 0:
            raise NegativeCoefficient(i + 1, d)
        out.append(d)
    return Series(tuple(out))


def mul(a: Series, b: Series) -> Series:
    n = _common_degree(a, b)
    out = [0] * n
    ac, bc = a.coeffs, b.coeffs
    # z^(i+1) * z^(j+1) lands at index i + j + 1
    for i in range(n):
        x = ac[i]
        if not x:
            continue
        for j in range(n - i - 1):
            y = bc[j]
            if y:
                out[i + j + 1] += x * y
    return Series(tuple(out))


def star(k: Series) -> Star:
    """Truncation of ``1/(1 - k)`` as unit plus tail ``k + k^2 + ...``."""
    n = k.degree
    t = [0] * n
    kc = k.coeffs
    for m in range(n):
        # t = k + k*t
        s = kc[m]
        for j in range(m):
            if kc[j] and t[m - j - 1]:
                s += kc[j] * t[m - j - 1]
        t[m] = s
    return Star(Series(tuple(t)))


def mul_star(a: Series, s: Star) -> Series:
    """``a * (unit + tail)``."""
    prod = mul(a, s.tail)
    n = min(a.degree, s.degree)
    return Series(tuple(s.unit * x + y for x, y in zip(a.coeffs[:n], prod.coeffs)))


def divide_one_minus(f: Series, k: Series) -> Series:
    """Return ``g`` with ``(1 - g)(1 - k) = 1 - f`` to the common degree.

    Uses ``g = f - k + g k`` coefficient by coefficient.  A negative
    coefficient means ``k`` is not a sub-series of ``f`` in the required sense.
    """
    n = _common_degree(f, k)
    g = [0] * n
    fc, kc = f.coeffs, k.coeffs
    for m in range(n):
        s = fc[m] - kc[m]
        for j in range(m):
            if g[j] and kc[m - j - 1]:
                s += g[j] * kc[m - j - 1]
        if s < 0:
            raise NegativeCoefficient(m + 1, s)
        g[m] = s
    return Series(tuple(g))


def eval_partial(f: Series, x) -> Fraction:
    """Exact ``sum_{n <= N} f_n x^n`` for rational ``0 < x < 1``."""
    x = Fraction(x)
    if not 0 < x < 1:
        raise ValueError("evaluation point must lie in (0, 1)")
    acc = Fraction(0)
    for c in reversed(f.coeffs):
        acc = (acc + c) * x
    return acc


# signed helpers -----------------------------------------------------------

def one_minus(f: Series) -> list[int]:
    return [1] + [-c for c in f.coeffs]


def poly_mul(a: Sequence[int], b: Sequence[int], degree: int) -> list[int]:
    """Product of two signed coefficient lists (constant term first), truncated."""
    out = [0] * (degree + 1)
    for i, x in enumerate(a[:degree + 1]):
        if not x:
            continue
        for j, y in enumerate(b[:degree + 1 - i]):
            if y:
                out[i + j] += x * y
    return out


def product_one_minus_powers(exponents: dict[int, int] | Sequence[int], degree: int) -> list[int]:
    """``prod_n (1 - z^n)^{e_n}`` truncated at ``degree``, for ``e_n >= 0``.

    ``exponents`` is either a mapping ``n -> e_n`` or a sequence with
    ``exponents[n - 1] = e_n``.  Large exponents are expanded by the binomial
    theorem so the cost does not depend on their size.
    """
    if not isinstance(exponents, dict):
        exponents = {n: e for n, e in enumerate(exponents, 1)}
    out = [1] + [0] * degree
    for n, e in sorted(exponents.items()):
        if e == 0 or n > degree:
            continue
        if e < 0:
            raise ValueError("exponents must be nonnegative")
        factor = [0] * (degree + 1)
        for j in range(degree // n + 1):
            factor[j * n] = (-1) ** j * comb(e, j)
        out = poly_mul(out, factor, degree)
    return out
