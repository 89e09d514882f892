"""Entropy, period and recurrence class of a loop shift from its series.

``lambda`` is the exponential of the Gurevich entropy: the reciprocal of the
smallest singularity of ``1/(1 - f)``, i.e. ``1 / min(root of f = 1, rad f)``.
The root is bracketed by bisection on exact partial sums; the radius of
convergence comes from a growth-rate estimate over the last third of the
coefficients.

Finite data cannot decide a limsup, so the growth estimate is heuristic and
every verdict that depends on it can come back ``Inconclusive``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np

from .errors import EntropyAtOrBelowZero, InconclusiveEntropy, PeriodMismatch, ZeroSeries
from .series import Series

DEFAULT_TOL = 1e-12
DEFAULT_MARGIN = 0.05
_EXTENDED_DEGREE = 240
# relative gap kept between the recurrence growth rate and a rational bracket
_POLE_GAP = 1e-9


class VereJones(enum.Enum):
    TRANSIENT = "Transient"
    RECURRENT_NOT_POSITIVE = "RecurrentNotPositive"
    POSITIVE_RECURRENT = "PositiveRecurrent"
    INCONCLUSIVE = "Inconclusive"


class SPRVerdict(enum.Enum):
    YES = "Yes"
    NO = "No"
    INCONCLUSIVE = "Inconclusive"


# period ------------------------------------------------------------------

def period(f: Series) -> int:
    """gcd of the lengths ``n`` with ``f_n > 0``."""
    supp = f.support()
    if not supp:
        raise ZeroSeries("period of the zero series is undefined")
    return reduce(math.gcd, supp)


def strip_period(F: Series, p: int) -> Series:
    """``a`` with ``a_n = F_{pn}``; every nonzero ``F_n`` must sit on the ``p``-grid."""
    if p < 1:
        raise ValueError("period must be positive")
    for n in F.support():
        if n % p:
            raise PeriodMismatch(f"coefficient of z^{n} is off the {p}-grid", n)
    return Series(tuple(F[p * n] for n in range(1, F.degree // p + 1)))


def inflate_period(a: Series, p: int, degree: int | None = None) -> Series:
    """``F(z) = a(z^p)``; the degree is ``p * deg a`` unless given."""
    if p < 1:
        raise ValueError("period must be positive")
    degree = p * a.degree if degree is None else degree
    cs = [0] * degree
    for n, c in enumerate(a.coeffs, 1):
        if p * n <= degree:
            cs[p * n - 1] = c
    return Series(tuple(cs))


# linear recurrences --------------------------------------------------------

def _berlekamp_massey(seq):
    s = [Fraction(x) for x in seq]
    C, B = [Fraction(1)], [Fraction(1)]
    L, m, b = 0, 1, Fraction(1)
    for n in range(len(s)):
        d = s[n]
        for i in range(1, L + 1):
            d += C[i] * s[n - i]
        if d == 0:
            m += 1
            continue
        coef = d / b
        T = C[:]
        if len(C) < len(B) + m:
            C = C + [Fraction(0)] * (len(B) + m - len(C))
        for i, Bi in enumerate(B):
            C[i + m] -= coef * Bi
        if 2 * L <= n:
            L, B, b, m = n + 1 - L, T, d, 1
        else:
            m += 1
    return L, (C + [Fraction(0)] * (L + 1))[:L + 1]


@dataclass(frozen=True)
class Recurrence:
    """``a_n = -sum_i c_i a_{n-i}`` for indices past ``offset`` (0-based)."""

    offset: int
    c: tuple

    @property
    def order(self):
        return len(self.c) - 1

    def extend(self, coeffs, degree):
        out = list(coeffs)
        L = self.order
        while len(out) < degree:
            v = -sum(self.c[i] * out[-i] for i in range(1, L + 1))
            if v.denominator != 1 or v < 0:
                return None
            out.append(int(v))
        return out

    def rational(self, coeffs) -> tuple[list, list]:
        """``(P, Q)`` with ``sum_{n>=1} coeffs[n-1] x^n = P(x) / Q(x)``, constant term first."""
        Q = list(self.c)
        a = [Fraction(0)] + [Fraction(x) for x in coeffs]
        d = self.offset + self.order
        P = [sum(Q[i] * a[m - i] for i in range(len(Q)) if 0 <= m - i < len(a)) for m in range(d + 1)]
        return P, Q

    def dominant_root(self) -> float:
        roots = np.roots([float(x) for x in self.c])
        return float(max(abs(roots))) if len(roots) else 0.0


def find_recurrence(coeffs, max_offset: int = 2) -> Recurrence | None:
    """Shortest linear recurrence generating the tail of ``coeffs``.

    Accepted only when at least one coefficient beyond the ``2L`` needed to
    pin the recurrence agrees with it, and only when it keeps producing
    nonnegative integers.
    """
    coeffs = list(coeffs)
    best = None
    for off in range(max_offset + 1):
        seq = coeffs[off:]
        if len(seq) < 6 or not any(seq):
            continue
        L, C = _berlekamp_massey(seq)
        if L == 0 or 2 * L + 1 > len(seq):
            continue
        rec = Recurrence(off, tuple(C))
        if rec.extend(coeffs, len(coeffs) + 2 * len(coeffs)) is None:
            continue
        if best is None or L < best.order:
            best = rec
    return best


# growth rate -----------------------------------------------------------------

@dataclass(frozen=True)
class GrowthEstimate:
    """Estimate of ``limsup f_n^{1/n}`` (the reciprocal radius of convergence)."""

    rate: float
    method: str
    window: tuple
    recurrence: Recurrence | None = None


def growth_rate(f: Series) -> GrowthEstimate:
    p = period(f)
    a = list(strip_period(f, p).coeffs)
    n_total = len(a)
    w = max(3, math.ceil(n_total / 3))
    lo = max(1, n_total - w + 1)
    window = (p * lo, p * n_total)
    tail = a[lo - 1:]

    rec = find_recurrence(a)
    if rec is not None:
        return GrowthEstimate(rec.dominant_root() ** (1.0 / p), "recurrence", window, rec)
    if not any(tail):
        return GrowthEstimate(0.0, "polynomial", window)
    if all(tail) and len(tail) >= 4:
        ns = np.arange(lo + 1, n_total + 1, dtype=float)
        ratios = np.array([a[n - 1] / a[n - 2] for n in range(lo + 1, n_total + 1)], dtype=float)
        # ratio method: a_n / a_{n-1} ~ rate * (1 + s/n), extrapolated to 1/n -> 0
        slope, intercept = np.polyfit(1.0 / ns, ratios, 1)
        resid = ratios - (intercept + slope / ns)
        if intercept > 0 and np.max(np.abs(resid)) <= DEFAULT_MARGIN * intercept:
            return GrowthEstimate(float(intercept) ** (1.0 / p), "ratio-fit", window)
    root = max(a[n - 1] ** (1.0 / n) for n in range(lo, n_total + 1) if a[n - 1])
    return GrowthEstimate(root ** (1.0 / p), "root-test", window)


# entropy ---------------------------------------------------------------------

def _sum_at_least_one(coeffs, lam: Fraction) -> bool:
    """Whether ``sum c_n lam^{-n} >= 1``, in integer arithmetic."""
    p, q = lam.numerator, lam.denominator
    N = len(coeffs)
    # sum c_n q^n p^(N-n) >= p^N
    acc = 0
    qn = 1
    for c in coeffs:
        qn *= q
        acc = acc * p + c * qn
    return acc >= p ** N


def _upper_bracket(coeffs) -> Fraction:
    """An ``x`` with ``sum c_n x^{-n} < 1``: every term is kept below ``1/N``."""
    N = len(coeffs)
    b = max(math.exp((math.log(N * c)) / n) for n, c in enumerate(coeffs, 1) if c)
    hi = Fraction(math.ceil(b) + 1)
    while _sum_at_least_one(coeffs, hi):
        hi *= 2
    return hi


def partial_mass(f: Series, lam) -> Fraction:
    """Exact ``sum_{n <= N} f_n lam^{-n}``."""
    x = 1 / Fraction(lam)
    acc = Fraction(0)
    for c in reversed(f.coeffs):
        acc = (acc + c) * x
    return acc


@dataclass(frozen=True)
class LambdaEnclosure:
    """Interval ``[lo, hi]`` holding ``lambda`` and how it was obtained.

    For the root method the working partial sum (the truncation, or its
    recurrence extension) is ``>= 1`` at ``lo``, and the partial sum plus the
    estimated tail past the working degree is ``< 1`` at ``hi``; the width is
    ``tol`` unless the tail is material.  ``tail_bound`` is that tail at
    ``hi``.  When the recurrence gives a closed form the bracket is exact
    and ``tail_bound`` is 0.
    """

    lo: Fraction
    hi: Fraction
    method: str
    growth: GrowthEstimate
    working_degree: int
    tail_bound: float | None = None

    @property
    def mid(self) -> float:
        return float((self.lo + self.hi) / 2)

    @property
    def width(self) -> float:
        return float(self.hi - self.lo)

    @property
    def entropy(self) -> float:
        return math.log(self.mid)

    def overlaps(self, other: "LambdaEnclosure", slack: float = 0.0) -> bool:
        return float(self.lo) - slack <= float(other.hi) and float(other.lo) - slack <= float(self.hi)

    def __contains__(self, x) -> bool:
        return self.lo <= Fraction(x) <= self.hi


def _working_coeffs(f: Series, growth: GrowthEstimate) -> list[int]:
    if growth.recurrence is None:
        return list(f.coeffs)
    p = period(f)
    a = list(strip_period(f, p).coeffs)
    ext = growth.recurrence.extend(a, max(_EXTENDED_DEGREE // p, 4 * len(a)))
    if ext is None:
        return list(f.coeffs)
    out = [0] * (p * len(ext))
    for n, c in enumerate(ext, 1):
        out[p * n - 1] = c
    return out


def _tail_bound(coeffs, growth: GrowthEstimate, lam: Fraction, margin: float) -> float | None:
    if growth.rate == 0.0:
        return 0.0
    N = len(coeffs)
    rate = growth.rate * (1 + margin)
    x = 1.0 / float(lam)
    if rate * x >= 1:
        return None
    lo = max(1, N - max(3, math.ceil(N / 3)) + 1)
    logc = max(math.log(c) - n * math.log(rate) for n, c in enumerate(coeffs[lo - 1:], lo) if c) \
        if any(coeffs[lo - 1:]) else -math.inf
    if logc == -math.inf:
        return 0.0
    return math.exp(logc + (N + 1) * math.log(rate * x)) / (1 - rate * x)


def entropy(f: Series, tol: float = DEFAULT_TOL, margin: float = DEFAULT_MARGIN) -> LambdaEnclosure:
    """Enclose ``lambda`` (entropy is ``log lambda``) to width ``tol``."""
    if f.is_zero():
        raise ZeroSeries("entropy of the zero series is undefined")
    if tol <= 0:
        raise ValueError("tol must be positive")
    growth = growth_rate(f)
    coeffs = _working_coeffs(f, growth)
    total = sum(coeffs)
    if total <= 1:
        raise EntropyAtOrBelowZero(
            f"partial sums never exceed 1 below x = 1 (sum of coefficients {total})")
    lo, hi = Fraction(1), _upper_bracket(coeffs)
    tol_q = Fraction(tol)
    while hi - lo > tol_q:
        mid = (lo + hi) / 2
        if _sum_at_least_one(coeffs, mid):
            lo = mid
        else:
            hi = mid
    lam_root = float(lo)
    rate = growth.rate
    if growth.recurrence is not None:
        exact = _rational_root(f, growth, lo, hi, tol_q)
        if exact is not None:
            return LambdaEnclosure(*exact, "root+recurrence", growth, len(coeffs), 0.0)
    if rate < lam_root * (1 - margin):
        method = "root" if growth.recurrence is None else "root+recurrence"
        hi = _widen_for_tail(coeffs, growth, hi, margin, tol_q)
        return LambdaEnclosure(lo, hi, method, growth, len(coeffs),
                               _tail_bound(coeffs, growth, hi, margin))
    if rate > lam_root * (1 + margin):
        centre = Fraction(rate).limit_denominator(10 ** 15)
        half = tol_q / 2
        return LambdaEnclosure(centre - half, centre + half, "radius", growth, len(coeffs), None)
    raise InconclusiveEntropy(
        f"root of the partial sum ({lam_root:.6g}) and coefficient growth "
        f"({rate:.6g}) are not separated at degree {f.degree}")


def _widen_for_tail(coeffs, growth: GrowthEstimate, hi: Fraction, margin: float,
                    tol_q: Fraction) -> Fraction:
    """Raise ``hi`` until the partial sum plus the tail bound drops below 1.

    The partial-sum root is only a lower bound for ``lambda``; the neglected
    tail can push the true root up.
    """
    def above(lam):
        tb = _tail_bound(coeffs, growth, lam, margin)
        if tb is None:
            return True
        return float(partial_mass(Series(tuple(coeffs)), lam)) + tb >= 1

    if not above(hi):
        return hi
    lo, step = hi, tol_q
    while above(hi):
        lo, hi = hi, hi + step
        step *= 2
    while hi - lo > tol_q:
        mid = (lo + hi) / 2
        if above(mid):
            lo = mid
        else:
            hi = mid
    return hi


def _poly_at(c, y: Fraction) -> Fraction:
    acc = Fraction(0)
    for x in reversed(c):
        acc = acc * y + x
    return acc


def _rational_root(f: Series, growth: GrowthEstimate, lo: Fraction, hi: Fraction, tol_q: Fraction):
    """Bisect ``f(1/lam) = 1`` on the closed form ``P/Q`` given by the recurrence.

    Above the growth rate ``Q`` stays positive, so ``f >= 1`` iff ``P >= Q``.
    The generating function has a pole at the reciprocal growth rate, so the
    root always lies above it.  Returns ``None`` if the bracket cannot be
    placed safely above the pole.
    """
    p = period(f)
    P, Q = growth.recurrence.rational(strip_period(f, p).coeffs)
    floor = Fraction(growth.rate * (1 + _POLE_GAP))
    lo = max(lo, floor)

    def at_least_one(lam):
        y = 1 / lam ** p
        return _poly_at(P, y) >= _poly_at(Q, y)

    if _poly_at(Q, 1 / lo ** p) <= 0 or not at_least_one(lo):
        return None
    hi = max(hi, lo + tol_q)
    while at_least_one(hi):
        lo, hi = hi, 2 * hi
    while hi - lo > tol_q:
        mid = (lo + hi) / 2
        if at_least_one(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


# classification ------------------------------------------------------------

@dataclass(frozen=True)
class SpectralReport:
    lambda_: LambdaEnclosure
    period: int
    vere_jones: VereJones
    spr: SPRVerdict
    evidence: dict = field(default_factory=dict)

    @property
    def entropy(self) -> float:
        return self.lambda_.entropy


def classify(f: Series, enclosure: LambdaEnclosure | None = None,
             tol: float = DEFAULT_TOL, margin: float = DEFAULT_MARGIN) -> SpectralReport:
    p = period(f)
    enc = enclosure if enclosure is not None else entropy(f, tol=tol, margin=margin)
    growth = enc.growth
    lam_mid = (enc.lo + enc.hi) / 2
    evidence = {
        "method": enc.method,
        "growth_rate": growth.rate,
        "growth_method": growth.method,
        "growth_window": list(growth.window),
        "partial_sum_at_lo": float(partial_mass(f, enc.lo)),
        "partial_sum_at_hi": float(partial_mass(f, enc.hi)),
        "first_moment": float(sum(n * c / float(lam_mid) ** n for n, c in enumerate(f.coeffs, 1) if c)),
        "tail_bound": enc.tail_bound,
        "degree": f.degree,
    }
    if enc.method == "root+recurrence" and enc.tail_bound == 0.0:
        # closed form: the pole at the growth rate lies strictly beyond 1/lambda
        return SpectralReport(enc, p, VereJones.POSITIVE_RECURRENT, SPRVerdict.YES, evidence)
    if enc.method.startswith("root"):
        if growth.rate <= float(enc.lo) * (1 - margin) and enc.tail_bound is not None:
            # geometric tail certificate: the sum at lambda is 1 and the first moment is finite
            return SpectralReport(enc, p, VereJones.POSITIVE_RECURRENT, SPRVerdict.YES, evidence)
        return SpectralReport(enc, p, VereJones.INCONCLUSIVE, SPRVerdict.INCONCLUSIVE, evidence)

    # radius method: lambda equals the growth rate, so limsup f_n^{1/n} = lambda
    N = f.degree
    mass = partial_mass(f, lam_mid)
    tail = float(f[N]) / float(lam_mid) ** N * N
    evidence["mass_at_lambda"] = float(mass)
    evidence["tail_estimate"] = tail
    if float(mass) + tail < 1 - tol:
        return SpectralReport(enc, p, VereJones.TRANSIENT, SPRVerdict.NO, evidence)
    return SpectralReport(enc, p, VereJones.INCONCLUSIVE, SPRVerdict.NO, evidence)
