"""One-block codes between loop shifts, decoding through magic words, and
simulation of return times and coding times under the maximal entropy measure.

A :class:`BlockCode` is stored at the level of loops.  Both sides are loop
graphs whose loops carry fresh edge symbols (see
:func:`loopshift.loopgraph.edge_symbols`), and ``loop_table`` sends each
domain loop to the sequence of image loops its label runs through.  The
symbol map is derived from that table, so the code is one-block by
construction and lengths are preserved.

Magic words always have offset 0: an occurrence of the magic word in an
image point starts at a coordinate where the preimage enters a domain loop.
"""
from __future__ import annotations

import bisect
import math
from collections import Counter
from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import chain
from typing import Sequence

import numpy as np

from .errors import AmbiguousParse, NoMagicWord, NotInImage, NotRecurrent, UnknownSymbol
from .loopgraph import LabeledLoopGraph, edge_symbols, loop_name, split_symbol
from .series import Series
from .spectral import LambdaEnclosure


class _SymbolMap(Mapping):
    """Read-only view ``domain symbol -> image symbol``."""

    def __init__(self, code: "BlockCode"):
        self._code = code

    def __getitem__(self, sym):
        try:
            return self._code.encode((sym,))[0]
        except UnknownSymbol:
            raise KeyError(sym) from None

    def __iter__(self):
        code = self._code
        for d, n in code.domain.items():
            yield from edge_symbols(d, n)

    def __len__(self):
        return sum(self._code.domain.values())


@dataclass(frozen=True, eq=False)
class BlockCode:
    """Injective one-block code given loop by loop.

    ``magic_loops`` is a sequence of image loops whose concatenated label is
    the magic word.  ``heads`` lists image loops whose labels occur in images
    only where a domain loop starts, and with which every domain loop's image
    begins; it is what lets the code act as the outer factor of a
    composition.  ``magic_word`` overrides the label of ``magic_loops``.
    """

    domain: Mapping
    image: Mapping
    loop_table: Mapping
    magic_loops: tuple | None = None
    heads: frozenset = frozenset()
    magic_word: tuple | None = None
    overrides: Mapping = field(default_factory=dict)
    name: str = ""
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        if not self.validate:
            return
        seen = set()
        for d, word in self.loop_table.items():
            if d not in self.domain:
                raise ValueError(f"loop table mentions unknown domain loop {d!r}")
            if sum(self.image[b] for b in word) != self.domain[d]:
                raise ValueError(f"domain loop {d!r} does not preserve length")
            if word in seen:
                raise ValueError(f"two domain loops share the image {word!r}")
            seen.add(word)
        if set(self.domain) != set(self.loop_table):
            raise ValueError("every domain loop needs an entry in the loop table")

    # construction -------------------------------------------------------

    @classmethod
    def identity(cls, lengths: Mapping) -> "BlockCode":
        lengths = dict(lengths)
        first = min(lengths, key=lambda k: (lengths[k], k)) if lengths else None
        return cls(lengths, lengths, {k: (k,) for k in lengths},
                   (first,) if first is not None else None,
                   frozenset(lengths), name="identity")

    @classmethod
    def from_graph(cls, G: LabeledLoopGraph, magic: str | None, heads=(), name="") -> "BlockCode":
        """Code from the loops of ``G`` into its base loops.

        Domain loops get fresh names in (length, label) order, which is the
        naming :func:`loopshift.loopgraph.from_series` gives the same census.
        """
        domain, table = {}, {}
        for i, lp in enumerate(G.loops):
            d = loop_name(i)
            domain[d] = lp.length
            table[d] = lp.word
        return cls(domain, G.base_lengths(), table,
                   (magic,) if magic is not None else None, frozenset(heads), name=name)

    def with_overrides(self, overrides: Mapping) -> "BlockCode":
        """Copy whose symbol map is patched; used to inject faults."""
        return BlockCode(self.domain, self.image, self.loop_table, self.magic_loops,
                         self.heads, self.magic_word, dict(overrides), self.name, validate=False)

    def with_magic(self, word: Sequence[str]) -> "BlockCode":
        return BlockCode(self.domain, self.image, self.loop_table, self.magic_loops,
                         self.heads, tuple(word), self.overrides, self.name, validate=False)

    def inflate(self, p: int) -> "BlockCode":
        """Same code between the period-``p`` inflations of both shifts."""
        if p == 1:
            return self
        if self.magic_word is not None and self.magic_loops is None:
            raise ValueError("cannot inflate a code whose magic word is not loop aligned")
        return BlockCode({d: n * p for d, n in self.domain.items()},
                         {b: n * p for b, n in self.image.items()},
                         self.loop_table, self.magic_loops, self.heads, name=self.name,
                         validate=False)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "domain": dict(self.domain),
            "image": dict(self.image),
            "table": {d: list(w) for d, w in self.loop_table.items()},
            "magic_loops": None if self.magic_loops is None else list(self.magic_loops),
            "magic_word": None if self.magic_word is None else list(self.magic_word),
            "heads": sorted(self.heads),
        }

    @classmethod
    def from_dict(cls, d: Mapping, validate: bool = True) -> "BlockCode":
        ml, mw = d.get("magic_loops"), d.get("magic_word")
        return cls(dict(d["domain"]), dict(d["image"]),
                   {k: tuple(w) for k, w in d["table"].items()},
                   None if ml is None else tuple(ml), frozenset(d.get("heads", ())),
                   None if mw is None else tuple(mw), name=d.get("name", ""),
                   validate=validate)

    # views ----------------------------------------------------------------

    @property
    def is_renaming(self) -> bool:
        return all(len(w) == 1 for w in self.loop_table.values())

    @property
    def magic(self) -> tuple | None:
        if self.magic_word is not None:
            return self.magic_word
        if self.magic_loops is None:
            return None
        return self.image_word(self.magic_loops)

    @property
    def symbol_map(self) -> Mapping:
        return _SymbolMap(self)

    @cached_property
    def _labels(self) -> dict:
        return {d: self.image_word(w) for d, w in self.loop_table.items()}

    @cached_property
    def _by_label(self) -> dict:
        return {lab: d for d, lab in self._labels.items()}

    @cached_property
    def _by_length(self) -> dict:
        out: dict = {}
        for d in sorted(self.domain, key=lambda k: (self.domain[k], len(k), k)):
            out.setdefault(self.domain[d], []).append(d)
        return out

    def loops_of_length(self, n: int) -> list:
        return self._by_length.get(n, [])

    def domain_census(self) -> Counter:
        return Counter(self.domain.values())

    def image_word(self, loops: Sequence[str]) -> tuple:
        return tuple(chain.from_iterable(edge_symbols(b, self.image[b]) for b in loops))

    def domain_word(self, loops: Sequence[str]) -> tuple:
        return tuple(chain.from_iterable(edge_symbols(d, self.domain[d]) for d in loops))

    def label(self, d: str) -> tuple:
        return self._labels[d]

    # coding ---------------------------------------------------------------

    def encode(self, word: Sequence[str]) -> tuple:
        out = []
        for s in word:
            if s in self.overrides:
                out.append(self.overrides[s])
                continue
            d, i = split_symbol(s)
            n = self.domain.get(d)
            if n is None or i >= n or edge_symbols(d, n)[i] != s:
                raise UnknownSymbol(f"{s!r} is not a domain symbol")
            out.append(self._labels[d][i])
        return tuple(out)

    def encode_loops(self, loops: Sequence[str]) -> tuple:
        return self.encode(self.domain_word(loops))

    def magic_positions(self, word: Sequence[str]) -> list[int]:
        m = self.magic
        if not m:
            raise NoMagicWord("code has no magic word")
        word = tuple(word)
        J = len(m)
        return [i for i in range(len(word) - J + 1) if word[i:i + J] == m]

    def decode_loops(self, word: Sequence[str]) -> tuple[int, tuple]:
        """Offset of the first magic word and the domain loops up to the last one."""
        word = tuple(word)
        pos = self.magic_positions(word)
        if len(pos) < 2:
            raise NoMagicWord(f"found {len(pos)} occurrence(s) of the magic word, need 2")
        seg = word[pos[0]:pos[-1]]
        return pos[0], self._parse(seg)

    def decode_window(self, word: Sequence[str]) -> tuple[int, tuple]:
        off, loops = self.decode_loops(word)
        return off, self.domain_word(loops)

    def _parse(self, seg: tuple) -> tuple:
        by_label = self._by_label
        lengths = sorted(self._by_length)
        n = len(seg)
        ways = [0] * (n + 1)
        back: list = [None] * (n + 1)
        ways[0] = 1
        for i in range(n):
            if not ways[i]:
                continue
            for ln in lengths:
                j = i + ln
                if j > n:
                    break
                d = by_label.get(seg[i:j])
                if d is not None:
                    ways[j] = min(2, ways[j] + ways[i])
                    back[j] = (i, d)
        if ways[n] == 0:
            raise NotInImage("window between magic words is not a concatenation of loop images")
        if ways[n] > 1:
            raise AmbiguousParse("window between magic words has several loop decompositions")
        out = []
        j = n
        while j:
            i, d = back[j]
            out.append(d)
            j = i
        return tuple(reversed(out))


def compose(inner: BlockCode, outer: BlockCode) -> BlockCode:
    """``outer`` after ``inner``; the image loops of ``inner`` are the domain of ``outer``.

    If ``M`` is a magic word of ``inner`` made of whole loops, the image of
    ``M`` under ``outer`` followed by a head of ``outer`` is a magic word of
    the composite: the head pins the end of ``M`` to a loop boundary, and
    the word in between has a unique loop decomposition.
    """
    if dict(inner.image) != dict(outer.domain):
        raise ValueError("image loops of the inner code must be the domain loops of the outer code")
    ot = outer.loop_table
    table = {a: tuple(chain.from_iterable(ot[b] for b in w)) for a, w in inner.loop_table.items()}

    magic = None
    if inner.magic_loops is not None and inner.magic_word is None:
        m = tuple(chain.from_iterable(ot[b] for b in inner.magic_loops))
        if outer.is_renaming:
            magic = m
        elif outer.heads:
            magic = m + (min(outer.heads, key=lambda h: (outer.image[h], len(h), h)),)
    if inner.is_renaming:
        heads = outer.heads
    elif outer.is_renaming:
        heads = frozenset(ot[h][0] for h in inner.heads)
    else:
        heads = frozenset()
    name = f"{outer.name}*{inner.name}" if inner.name and outer.name else ""
    # injectivity and length preservation are inherited from the factors
    return BlockCode(dict(inner.domain), dict(outer.image), table, magic, heads, name=name,
                     validate=False)


def compose_chain(chain_: Sequence[BlockCode]) -> BlockCode:
    """Compose stages listed from the innermost domain outwards."""
    if not chain_:
        raise ValueError("empty chain")
    code = chain_[0]
    for nxt in chain_[1:]:
        code = compose(code, nxt)
    return code


# injectivity on periodic points ---------------------------------------------

@dataclass
class InjectivityReport:
    max_period: int
    sequences: int = 0
    with_magic: int = 0
    passed: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _loop_sequences(code: BlockCode, total: int):
    by_len = {n: code.loops_of_length(n) for n in range(1, total + 1)}

    def rec(rem):
        if rem == 0:
            yield ()
            return
        for n in range(1, rem + 1):
            for d in by_len[n]:
                for rest in rec(rem - n):
                    yield (d,) + rest

    yield from rec(total)


def verify_injectivity_periodic(code: BlockCode, max_period: int) -> InjectivityReport:
    """Decode every periodic domain point of period at most ``max_period``.

    Each periodic point is represented by a loop sequence starting at the
    base vertex; its shifts are covered by shift invariance.  Points whose
    image avoids the magic word are counted but not decoded.
    """
    rep = InjectivityReport(max_period)
    m = code.magic
    J = len(m) if m else 0
    for p in range(1, max_period + 1):
        for seq in _loop_sequences(code, p):
            rep.sequences += 1
            try:
                img = code.encode(code.domain_word(seq))
            except UnknownSymbol as exc:
                rep.failures.append((seq, str(exc)))
                continue
            reps = J // p + 3
            window = img * reps
            if not m or not _contains(img * (J // p + 2), m):
                continue
            rep.with_magic += 1
            dom = code.domain_word(seq) * reps
            try:
                off, syms = code.decode_window(window)
            except (NotInImage, AmbiguousParse, NoMagicWord) as exc:
                rep.failures.append((seq, type(exc).__name__))
                continue
            if dom[off:off + len(syms)] != syms:
                rep.failures.append((seq, "decoded segment differs from the preimage"))
            else:
                rep.passed += 1
    return rep


def _contains(word: tuple, sub: tuple) -> bool:
    J = len(sub)
    return any(word[i:i + J] == sub for i in range(len(word) - J + 1))


# maximal entropy measure ------------------------------------------------------

def _lambda_value(lam) -> float:
    if isinstance(lam, LambdaEnclosure):
        return lam.mid
    return float(lam)


def _length_law(f: Series, lam, tol: float, max_length: int | None = None):
    lv = _lambda_value(lam)
    N = f.degree if max_length is None else min(max_length, f.degree)
    probs = np.array([f[n] * lv ** (-n) for n in range(1, N + 1)], dtype=float)
    mass = float(sum(Fraction(f[n]) * Fraction(lv) ** (-n) for n in range(1, f.degree + 1)))
    if abs(mass - 1.0) > tol:
        raise NotRecurrent(f"loop-length law has mass {mass:.12g}, not 1 within {tol}")
    return probs / probs.sum()


def _uniform_index(rng, m: int) -> int:
    if m <= 2 ** 62:
        return int(rng.integers(m))
    bits = m.bit_length()
    nbytes = (bits + 7) // 8
    while True:
        x = int.from_bytes(rng.bytes(nbytes), "little") >> (8 * nbytes - bits)
        if x < m:
            return x


def sample_max_entropy(f: Series, lam, steps: int, seed, tol: float = 1e-6,
                       max_length: int | None = None) -> list[tuple[int, int]]:
    """Loops ``(length, index)`` drawn i.i.d. from the maximal entropy measure.

    A loop of length ``n`` has probability ``lam**-n``; the sequence stops
    once its total length reaches ``steps``.  ``max_length`` drops longer
    loops and renormalises, which is how truncated codes are simulated.
    """
    probs = _length_law(f, lam, tol, max_length)
    rng = np.random.default_rng(seed)
    mean = float(np.dot(np.arange(1, len(probs) + 1), probs))
    out: list[tuple[int, int]] = []
    total = 0
    while total < steps:
        batch = int((steps - total) / mean) + 16
        lengths = rng.choice(len(probs), size=batch, p=probs) + 1
        for n in lengths:
            n = int(n)
            out.append((n, _uniform_index(rng, f[n])))
            total += n
            if total >= steps:
                break
    return out


@dataclass
class TailReport:
    tails: list
    ratio: float
    window: int
    n_max: int
    lam: Fraction
    ratio_bounds: tuple = ()
    threshold: float = 0.9

    @property
    def exponential(self) -> bool:
        return self.ratio < self.threshold


def _tails(f: Series, lam: Fraction, n_max: int, normalize: bool) -> list:
    N = f.degree
    terms = [Fraction(f[m]) / lam ** m for m in range(1, N + 1)]
    tails = [Fraction(0)] * (N + 2)
    for m in range(N, 0, -1):
        tails[m] = tails[m + 1] + terms[m - 1]
    out = tails[1:n_max + 1]
    if normalize and tails[1]:
        out = [t / tails[1] for t in out]
    return out


def _decay_ratio(tails: list, w: int) -> float:
    a, b = tails[-1 - w], tails[-1]
    if a == 0 or b == 0:
        return 0.0
    return math.exp((math.log(b.numerator) - math.log(b.denominator)
                     - math.log(a.numerator) + math.log(a.denominator)) / w)


def return_time_tail(f: Series, lam, n_max: int | None = None, window: int | None = None,
                     normalize: bool = False, threshold: float = 0.9) -> TailReport:
    """``T(n) = sum_{n <= m <= N} f_m lam^-m`` and the decay ratio over the last window.

    The ratio is ``(T(n_max) / T(n_max - w))**(1/w)`` with ``w = n_max // 4``
    unless given.  ``lam`` may be an exact rational or an enclosure; for an
    enclosure the tails are evaluated at ``hi`` and the ratio is also given
    at both endpoints.
    """
    N = f.degree
    n_max = N if n_max is None else n_max
    if not 1 <= n_max <= N:
        raise ValueError(f"n_max must lie in 1..{N}")
    w = window if window is not None else max(1, n_max // 4)
    if w >= n_max:
        raise ValueError("window must be shorter than n_max")
    if isinstance(lam, LambdaEnclosure):
        ends = [Fraction(lam.lo), Fraction(lam.hi)]
    else:
        ends = [Fraction(lam)]
    reports = [(e, _tails(f, e, n_max, normalize)) for e in ends]
    ratios = [_decay_ratio(t, w) for _, t in reports]
    lam_used, tails = reports[-1]
    return TailReport(tails, ratios[-1], w, n_max, lam_used,
                      (min(ratios), max(ratios)), threshold)


# coding times -------------------------------------------------------------------

@dataclass
class CodingTimeReport:
    samples: int
    histogram: dict
    mean: float
    quantiles: dict
    tail_ratio: float
    censored: int
    magic: tuple | None

    def survival(self, k: int) -> float:
        tot = sum(self.histogram.values())
        return sum(c for n, c in self.histogram.items() if n >= k) / tot if tot else 0.0


def _magic_hits(img: np.ndarray, magic: np.ndarray) -> np.ndarray:
    J = len(magic)
    if len(img) < J:
        return np.zeros(0, dtype=np.int64)
    view = np.lib.stride_tricks.sliding_window_view(img, J)
    return np.flatnonzero((view == magic).all(axis=1))


def coding_times(code: BlockCode, f_common: Series, lam, samples: int, seed,
                 spacing: int = 16, tol: float = 5e-2) -> tuple[np.ndarray, int]:
    """Sampled ``n(x)`` values and the number of censored samples.

    ``n(x)`` is the smallest ``n`` such that the magic word occurs both in
    ``x[-n, -1]`` and in ``x[1, n]``.  Samples are taken every ``spacing``
    coordinates along one long trajectory of the maximal entropy measure of
    the domain, pushed to the image.
    """
    if code.is_renaming:
        return np.zeros(samples, dtype=np.int64), 0
    magic = code.magic
    if not magic:
        raise NoMagicWord("code has no magic word")
    L = max(code.domain.values())
    census = code.domain_census()
    for n in range(1, min(L, f_common.degree) + 1):
        if census.get(n, 0) != f_common[n]:
            raise ValueError(f"series and code disagree on the number of loops of length {n}")
    margin = 4096
    steps = samples * spacing + 2 * margin
    loops = sample_max_entropy(f_common, lam, steps, seed, tol=tol, max_length=L)
    alphabet: dict = {}
    img: list[int] = []
    for n, i in loops:
        for s in code.label(code.loops_of_length(n)[i]):
            img.append(alphabet.setdefault(s, len(alphabet)))
    img_arr = np.asarray(img, dtype=np.int64)
    m_arr = np.asarray([alphabet.get(s, -1) for s in magic], dtype=np.int64)
    occ = _magic_hits(img_arr, m_arr)
    J = len(magic)
    t = margin + spacing * np.arange(samples)
    li = np.searchsorted(occ, t - J, side="right") - 1
    ri = np.searchsorted(occ, t + 1, side="left")
    ok = (li >= 0) & (ri < len(occ))
    left = t[ok] - occ[li[ok]]
    right = occ[ri[ok]] + J - 1 - t[ok]
    return np.maximum(left, right), int((~ok).sum())


def tail_ratio(values: np.ndarray, q_lo: float = 0.5, q_hi: float = 0.99) -> float:
    """Per-step geometric decay of the empirical survival function between two quantiles."""
    if len(values) == 0:
        return float("nan")
    k1 = int(np.quantile(values, q_lo, method="lower"))
    k2 = int(np.quantile(values, q_hi, method="lower"))
    if k2 <= k1:
        return 0.0
    s1 = float(np.mean(values >= k1))
    s2 = float(np.mean(values >= k2))
    return (s2 / s1) ** (1.0 / (k2 - k1))


def coding_time_stats(code, f_common: Series, lam, samples: int = 10_000, seed=0,
                      spacing: int = 16, tol: float = 5e-2) -> CodingTimeReport:
    if not isinstance(code, BlockCode):
        code = compose_chain(list(code))
    vals, censored = coding_times(code, f_common, lam, samples, seed, spacing, tol)
    hist = Counter(int(v) for v in vals)
    qs = {q: float(np.quantile(vals, q)) for q in (0.5, 0.9, 0.99)} if len(vals) else {}
    return CodingTimeReport(len(vals), dict(sorted(hist.items())),
                            float(vals.mean()) if len(vals) else float("nan"),
                            qs, tail_ratio(vals), censored, code.magic)


# magic word search ------------------------------------------------------------

class _Occurrences:
    """Words readable from a loop boundary and from inside a loop, up to length ``M``.

    Only loops in the code's table exist, so results hold up to its budget.
    """

    def __init__(self, code: BlockCode, M: int, lam: float):
        self.labels = list(code._by_label)
        self.M = M
        self.lam = lam
        self._pref: dict = {}
        full, ends = set(), set()
        for lab in self.labels:
            n = len(lab)
            for i in range(1, n):
                if n - i >= M:
                    full.add(lab[i:i + M])
                else:
                    ends.add(lab[i:])
        self.full, self.ends = full, ends

    def from_boundary(self, m: int) -> dict:
        """Words of length ``m`` read from a boundary, with their probability weight."""
        if m in self._pref:
            return self._pref[m]
        out: dict = {}
        for lab in self.labels:
            wt = self.lam ** -len(lab)
            if len(lab) >= m:
                key = lab[:m]
                out[key] = out.get(key, 0.0) + wt
            else:
                for w, x in self.from_boundary(m - len(lab)).items():
                    key = lab + w
                    out[key] = out.get(key, 0.0) + wt * x
        self._pref[m] = out
        return out

    def from_inside(self, m: int) -> set:
        bad = {s[:m] for s in self.full}
        for s in self.ends:
            if len(s) >= m:
                bad.add(s[:m])
            else:
                bad.update(s + w for w in self.from_boundary(m - len(s)))
        return bad


@dataclass
class MagicSearch:
    word: tuple
    weight: float
    candidates: int


def find_magic_word(code: BlockCode, max_length: int = 8, lam: float = 2.0) -> MagicSearch | None:
    """Most frequent word of length at most ``max_length`` that occurs only at loop starts.

    A word that can be read from a loop boundary but from no interior
    position marks domain-loop starts wherever it occurs; with injectivity
    this makes it a magic word with offset 0.  Words are ranked by their
    weight ``sum lam^-|loops|`` over the ways to read them from a boundary,
    which is proportional to their frequency under the maximal entropy
    measure; ties go to the shorter word, then lexicographically.
    """
    occ = _Occurrences(code, max_length, lam)
    best = None
    count = 0
    for m in range(1, max_length + 1):
        bad = occ.from_inside(m)
        for w, x in occ.from_boundary(m).items():
            if w in bad:
                continue
            count += 1
            key = (-round(x, 15), m, w)
            if best is None or key < best[0]:
                best = (key, w, x)
    if best is None:
        return None
    return MagicSearch(best[1], best[2], count)


def is_boundary_marking(code: BlockCode, word: Sequence[str]) -> bool:
    """``word`` can be read from a loop boundary and from no interior position."""
    word = tuple(word)
    if not word:
        return False
    labels = sorted(code._by_label)
    memo: dict = {}

    def readable(w):
        # w is a prefix of some concatenation of loop labels
        if not w:
            return True
        if w in memo:
            return memo[w]
        memo[w] = False
        i = bisect.bisect_left(labels, w)
        if i < len(labels) and labels[i][:len(w)] == w:
            memo[w] = True
            return True
        for j in range(1, len(w)):
            head = w[:j]
            k = bisect.bisect_left(labels, head)
            if k < len(labels) and labels[k] == head and readable(w[j:]):
                memo[w] = True
                return True
        return False

    if not readable(word):
        return False
    first = word[0]
    m = len(word)
    for lab in labels:
        n = len(lab)
        for i in range(1, n):
            if lab[i] != first:
                continue
            seg = lab[i:i + m]
            if seg == word[:len(seg)] and (len(seg) == m or readable(word[len(seg):])):
                return False
    return True
