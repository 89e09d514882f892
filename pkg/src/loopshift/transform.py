"""Constructive pipeline: splitting codes, short-loop removal, gap preparation,
the loop-deletion lemma and the almost-isomorphism builder.

Every function works on series first and builds labeled graphs and codes
only when a length budget is given.  With ``budget=None`` the series
recursions run alone, which is how the large randomized checks are done.

Chains of codes are listed from the innermost domain outwards: the first
stage starts at the common shift and the last one lands in the input shift.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, NamedTuple, Sequence

from .codec import BlockCode, compose_chain, find_magic_word, is_boundary_marking
from .errors import (BudgetExceeded, CommonSeriesMismatch, Degenerate, EntropyMismatch,
                     MagicWordUnavailable, NoValidBeta, NoValidN, NotSPR, PeriodMismatch,
                     PositivityViolated, SplitMismatch)
from .loopgraph import (LabeledLoopGraph, Loop, check_condition_star, delete_loop_step,
                        from_series, split_graph)
from .series import (Series, add, divide_one_minus, mul_star, one_minus, poly_mul,
                     product_one_minus_powers, star, sub_checked)
from .spectral import SPRVerdict, classify, entropy, inflate_period, period, strip_period
from .zeta import discrepancy_growth, orbit_discrepancies, orbit_series_counts


@dataclass
class Stage:
    """One code of a chain together with the evidence gathered while building it."""
    code: BlockCode
    kind: str
    magic: Loop | None
    condition_star: bool | None
    census_ok: bool


def _check_budget(f: Series, budget: int):
    if budget < 1:
        raise ValueError("budget must be positive")
    if budget > f.degree:
        raise ValueError(f"budget {budget} exceeds the series degree {f.degree}")


def _first_loops(G: LabeledLoopGraph, counts: Series) -> list[Loop]:
    """For each length ``n``, the first ``counts[n]`` loops of that length."""
    out = []
    for n in range(1, G.budget + 1):
        out.extend(G.loops_of_length(n)[:counts[n]])
    return out


def _split_stage(f: Series, h: Series, k: Series, budget: int, kind: str) -> tuple[Series, Stage]:
    _check_budget(f, budget)
    G = from_series(f, budget)
    heads = _first_loops(G, h)
    head_set = set(heads)
    tails = [lp for lp in G.loops if lp not in head_set]
    dom = split_graph(G, heads, tails)
    W = min(heads, key=lambda lp: (lp.length, lp.label))
    series = mul_star(h, star(k))
    code = BlockCode.from_graph(dom, W.word[0], [lp.word[0] for lp in heads], name=kind)
    stage = Stage(code, kind, W, check_condition_star(dom, W),
                  dom.census() == series.truncate(budget))
    return series, stage


def lemmazero_split(f: Series, h: Series, k: Series, budget: int | None = None):
    """Split ``f = h + k`` and return ``h k*`` with the code into ``sigma_f``.

    Every new loop is labeled by an ``h``-loop followed by ``k``-loops, so any
    ``h``-loop label is a magic word; the smallest one is recorded.  With
    ``budget=None`` only the series is computed and the code is ``None``.
    """
    n = min(f.degree, h.degree, k.degree)
    if f.truncate(n) != add(h, k).truncate(n):
        raise SplitMismatch("f is not the coefficientwise sum h + k")
    if k.is_zero():
        code = None
        if budget is not None:
            _check_budget(f, budget)
            code = BlockCode.identity(from_series(f, budget).base_lengths())
        return f.truncate(n), code
    if h.is_zero():
        raise Degenerate("h is zero, so h k* is zero")
    if budget is None:
        return mul_star(h, star(k)), None
    series, stage = _split_stage(f.truncate(n), h.truncate(n), k.truncate(n), budget, "split")
    return series, stage.code


def lemmazero_identity_holds(f: Series, h: Series, k: Series) -> bool:
    """``(1 - h k*)(1 - k) == 1 - f`` to the common degree."""
    n = min(f.degree, h.degree, k.degree)
    g = mul_star(h.truncate(n), star(k.truncate(n)))
    return poly_mul(one_minus(g), one_minus(k.truncate(n)), n) == one_minus(f.truncate(n))


# short loops -----------------------------------------------------------------

def delete_short_loops(F: Series, N: int, budget: int | None = None, stages: bool = False):
    """Delete a shortest loop, one at a time, until no loop is shorter than ``N``.

    Each deletion is a splitting with ``k = z^n``.  Returns ``(Fbar, chain)``
    with the chain running from ``sigma_Fbar`` out to ``sigma_F``; with
    ``stages=True`` the chain holds :class:`Stage` records instead of codes.
    """
    if N < 1:
        raise ValueError("N must be positive")
    cur = F
    built: list = []
    while True:
        supp = cur.support()
        if not supp:
            raise Degenerate("deleting short loops exhausted every loop")
        n = supp[0]
        if n >= N:
            break
        k = Series.monomial(n, cur.degree)
        nxt = divide_one_minus(cur, k)
        if budget is not None:
            _check_budget(cur, budget)
            G = from_series(cur, budget)
            l = G.loops_of_length(n)[0]
            dom = delete_loop_step(G, l)
            heads = [lp for lp in G.loops if lp != l]
            if not heads:
                raise Degenerate("deleting short loops exhausted every loop")
            W = min(heads, key=lambda lp: (lp.length, lp.label))
            code = BlockCode.from_graph(dom, W.word[0], [lp.word[0] for lp in heads],
                                        name=f"delete-{n}")
            built.append(Stage(code, f"delete-{n}", W, check_condition_star(dom, W),
                               dom.census() == nxt.truncate(budget)))
        cur = nxt
    built.reverse()
    return cur, (built if stages else [s.code for s in built])


def short_loop_identity_holds(F: Series, Fbar: Series, N: int) -> bool:
    """``(1 - Fbar) prod_{n<N} (1 - z^n)^{O_n(F)} == 1 - F``."""
    orbits = orbit_series_counts(F)
    prod = product_one_minus_powers({n: orbits[n - 1] for n in range(1, N)}, F.degree)
    return poly_mul(one_minus(Fbar), prod, F.degree) == one_minus(F)


# gap preparation -----------------------------------------------------------------

def ceil_power(beta: Fraction, n: int) -> int:
    return math.ceil(Fraction(beta) ** n)


@dataclass
class GapPrep:
    f: Series
    g: Series
    N: int
    left_chain: list
    right_chain: list
    b: Series
    Fbar: Series
    Gbar: Series
    checks: dict = field(default_factory=dict)

    @property
    def chains(self):
        return self.left_chain, self.right_chain


def choose_N(F: Series, G: Series, beta, discrepancy_bound: bool = False) -> int:
    """Smallest ``N`` with ``min(O_n(F), O_n(G)) >= 2 ceil(beta^n)`` for ``N <= n <= degree``.

    ``discrepancy_bound`` also asks ``|O_n(F) - O_n(G)| <= beta^n - 1``.
    """
    beta = Fraction(beta)
    D = min(F.degree, G.degree)
    oF = orbit_series_counts(F.truncate(D))
    oG = orbit_series_counts(G.truncate(D))
    N = None
    for n in range(D, 0, -1):
        bn = beta ** n
        ok = min(oF[n - 1], oG[n - 1]) >= 2 * math.ceil(bn)
        if ok and discrepancy_bound:
            ok = abs(oF[n - 1] - oG[n - 1]) <= bn - 1
        if not ok:
            break
        N = n
    if N is None:
        raise NoValidN(f"no N satisfies the orbit census condition up to degree {D} at beta={beta}")
    return N


def gapprep(F: Series, G: Series, beta, budget: int | None = None,
            discrepancy_bound: bool = False, N: int | None = None) -> GapPrep:
    """Series ``f, g`` with no loops shorter than ``N``, ``f_n, g_n >= beta^n`` and
    the orbit discrepancy of ``F, G`` kept for ``n >= N``.

    Chains hold :class:`Stage` records from ``sigma_f`` (resp. ``sigma_g``)
    out to ``sigma_F`` (resp. ``sigma_G``).
    """
    beta = Fraction(beta)
    if beta < 1:
        raise ValueError("beta must be at least 1")
    D = min(F.degree, G.degree)
    F, G = F.truncate(D), G.truncate(D)
    if N is None:
        N = choose_N(F, G, beta, discrepancy_bound)
    Fbar, chainF = delete_short_loops(F, N, budget, stages=True)
    Gbar, chainG = delete_short_loops(G, N, budget, stages=True)
    b = Series(tuple(ceil_power(beta, n) if N <= n < 2 * N else 0 for n in range(1, D + 1)))
    hF, hG = sub_checked(Fbar, b), sub_checked(Gbar, b)
    if budget is None:
        f, g = mul_star(hF, star(b)), mul_star(hG, star(b))
    else:
        f, sF = _split_stage(Fbar, hF, b, budget, "split")
        g, sG = _split_stage(Gbar, hG, b, budget, "split")
        chainF.insert(0, sF)
        chainG.insert(0, sG)

    oF, oG = orbit_series_counts(F), orbit_series_counts(G)
    of, og = orbit_series_counts(f), orbit_series_counts(g)
    checks = {
        "short_loops_F": short_loop_identity_holds(F, Fbar, N),
        "short_loops_G": short_loop_identity_holds(G, Gbar, N),
        "split_F": lemmazero_identity_holds(Fbar, hF, b),
        "split_G": lemmazero_identity_holds(Gbar, hG, b),
        "no_short_orbits": all(of[n - 1] == og[n - 1] == 0 for n in range(1, N)),
        "discrepancy_kept": all(of[n - 1] - og[n - 1] == oF[n - 1] - oG[n - 1]
                                for n in range(N, D + 1)),
        "beta_floor": all(min(f[n], g[n]) >= ceil_power(beta, n) for n in range(N, D + 1)),
    }
    return GapPrep(f, g, N, chainF, chainG, b, Fbar, Gbar, checks)


# loops lemma -----------------------------------------------------------------------

class LoopsLemmaResult(NamedTuple):
    series: Series
    graph: LabeledLoopGraph | None
    magic: Loop | None
    code: BlockCode | None
    r: tuple = ()
    condition_star: bool | None = None
    deleted: tuple = ()


def deletion_lengths(R) -> tuple:
    """The nondecreasing sequence ``r_k`` with ``R_n`` copies of ``n``."""
    if isinstance(R, Mapping):
        items = sorted(R.items())
    else:
        items = list(enumerate(R, 1))
    out = []
    for n, c in items:
        if c < 0:
            raise ValueError("R must be nonnegative")
        out.extend([n] * c)
    return tuple(out)


def loops_lemma_series(f: Series, R) -> Series:
    """``f^{<inf>}`` by the recursion ``1 - f^{<k+1>} = (1 - f^{<k>}) / (1 - z^{r_k})``."""
    cur = f
    for k, r in enumerate(deletion_lengths(R), 1):
        if r > f.degree:
            break
        if cur[r] < 1:
            raise PositivityViolated(k, r)
        cur = divide_one_minus(cur, Series.monomial(r, f.degree))
    return cur


def loops_lemma_run(f: Series, R, budget: int | None = None, magic: bool = True,
                    restrict_to_r: bool = False) -> LoopsLemmaResult:
    """Delete ``R_n`` loops of each length ``n``, shortest first.

    With ``magic=True`` the deleted loops are loops of the original graph
    other than ``W``, the smallest loop of length ``r_1``, so ``W`` stays a
    magic word.  ``restrict_to_r`` takes them from a fixed sub-collection
    with ``R_n`` loops of length ``n``, which plays the role of ``sigma_R``.
    """
    r = deletion_lengths(R)
    R_counts = [0] * (f.degree + 1)
    for x in r:
        if x <= f.degree:
            R_counts[x] += 1
    series = loops_lemma_series(f, R)
    if magic:
        bad = [n for n in range(1, f.degree + 1) if R_counts[n] > f[n]]
        if bad:
            raise MagicWordUnavailable(f"R_n exceeds f_n at n={bad[0]}")
        if r and R_counts[r[0]] >= f[r[0]]:
            raise MagicWordUnavailable(f"no loop of length r_1={r[0]} survives to serve as W")
    if budget is None:
        return LoopsLemmaResult(series, None, None, None, r)

    _check_budget(f, budget)
    G = from_series(f, budget)
    base_ids = list(G.base_lengths())
    if not G.loops:
        raise Degenerate("loop graph is empty up to the budget")
    r1 = r[0] if r else G.loops[0].length
    if magic and r1 > budget:
        raise BudgetExceeded(f"budget {budget} is below r_1={r1}")
    W = G.loops_of_length(r1)[0] if magic else None

    pool: dict[int, list] = {}
    if magic:
        for n in range(1, budget + 1):
            cands = [lp for lp in G.loops_of_length(n) if lp != W]
            pool[n] = cands[:R_counts[n]] if restrict_to_r else cands
    deleted = []
    for x in r:
        if x > budget:
            break
        if magic:
            l = pool[x].pop(0)
        else:
            l = G.loops_of_length(x)[0]
        G = delete_loop_step(G, l)
        deleted.append(l)

    if magic:
        gone = {lp.word[0] for lp in deleted}
        heads = [b for b in base_ids if b not in gone]
        code = BlockCode.from_graph(G, W.word[0], heads, name="loops-lemma")
        star_ok = check_condition_star(G, W)
    else:
        code = BlockCode.from_graph(G, None, (), name="loops-lemma")
        star_ok = None
    return LoopsLemmaResult(series, G, W, code, r, star_ok, tuple(deleted))


def loops_lemma_identity_holds(f: Series, R, f_inf: Series) -> bool:
    """``(1 - f^{<inf>}) prod (1 - z^n)^{R_n} == 1 - f`` to the degree of ``f``."""
    D = f.degree
    counts: dict = {}
    for x in deletion_lengths(R):
        if x <= D:
            counts[x] = counts.get(x, 0) + 1
    prod = product_one_minus_powers(counts, D)
    return poly_mul(one_minus(f_inf), prod, D) == one_minus(f)


# almost isomorphism ---------------------------------------------------------------------

@dataclass
class AlmostIsoConfig:
    budget: int | None = None
    build_codes: bool = True
    tol: float = 1e-9
    entropy_slack: float = 1e-6
    margin: float = 0.05
    beta: Fraction | None = None
    max_denominator: int = 64
    window: float = 0.5
    require_spr: bool = True
    accept_inconclusive: bool = False
    magic_search: int = 8


@dataclass
class PipelineResult:
    common: Series
    period: int
    beta: Fraction
    N: int
    gamma: float
    R_f: list
    R_g: list
    left_chain: list
    right_chain: list
    diagnostics: dict
    left_stages: list = field(default_factory=list, repr=False)
    right_stages: list = field(default_factory=list, repr=False)
    _composites: dict = field(default_factory=dict, repr=False)

    def composite(self, side: str) -> BlockCode | None:
        chain_ = self.left_chain if side == "left" else self.right_chain
        if not chain_:
            return None
        if side not in self._composites:
            self._composites[side] = compose_chain(chain_)
        return self._composites[side]

    @property
    def left_code(self):
        return self.composite("left")

    @property
    def right_code(self):
        return self.composite("right")

    @property
    def magic_words(self) -> dict:
        out = {}
        for side in ("left", "right"):
            code = self.composite(side)
            out[side] = code.magic if code is not None else None
        return out


def choose_beta(gamma: float, lam_lo: float, max_denominator: int = 64) -> Fraction:
    """Rational ``beta >= 1`` near ``(gamma + lam_lo) / 2`` with ``gamma < beta < lam_lo``."""
    target = (gamma + lam_lo) / 2
    beta = max(Fraction(target).limit_denominator(max_denominator), Fraction(1))
    if not (gamma < beta < lam_lo):
        raise NoValidBeta(f"no rational beta in ({gamma:.6g}, {lam_lo:.6g}) with beta >= 1")
    return beta


def _spr_gate(report, side: str, config: AlmostIsoConfig, log: list):
    v = report.spr
    log.append(f"{side}: lambda in [{float(report.lambda_.lo):.12g}, "
               f"{float(report.lambda_.hi):.12g}] ({report.lambda_.method}), SPR {v.value}")
    if v is SPRVerdict.YES or not config.require_spr:
        return
    if v is SPRVerdict.INCONCLUSIVE and config.accept_inconclusive:
        return
    raise NotSPR(side, v.value)


def almost_iso(F: Series, G: Series, config: AlmostIsoConfig | None = None) -> PipelineResult:
    """Build a common loop shift with magic-word codes into ``sigma_F`` and ``sigma_G``."""
    config = config or AlmostIsoConfig()
    log: list[str] = []
    D = min(F.degree, G.degree)
    F, G = F.truncate(D), G.truncate(D)

    pF, pG = period(F), period(G)
    if pF != pG:
        off = next((n for n in (F.support() + G.support()) if n % max(pF, pG)), None)
        raise PeriodMismatch(f"periods differ: {pF} and {pG}", off)
    p = pF
    a, b = strip_period(F, p), strip_period(G, p)
    log.append(f"period {p}; working with degree {a.degree}")

    encA = entropy(a, tol=config.tol, margin=config.margin)
    encB = entropy(b, tol=config.tol, margin=config.margin)
    if not encA.overlaps(encB, slack=config.entropy_slack):
        raise EntropyMismatch(f"lambda(F) ~ {encA.mid:.12g} but lambda(G) ~ {encB.mid:.12g}")
    repA = classify(a, encA, tol=config.tol, margin=config.margin)
    repB = classify(b, encB, tol=config.tol, margin=config.margin)
    _spr_gate(repA, "F", config, log)
    _spr_gate(repB, "G", config, log)

    gamma = discrepancy_growth(a, b, window=config.window)
    lam_lo = float(min(encA.lo, encB.lo))
    if config.beta is not None:
        beta = Fraction(config.beta)
        if not (beta >= 1 and gamma < beta < lam_lo):
            raise NoValidBeta(f"beta={beta} is not in ({gamma:.6g}, {lam_lo:.6g}) or below 1")
    else:
        beta = choose_beta(gamma, lam_lo, config.max_denominator)
    start = max(1, a.degree - max(1, round(config.window * a.degree)) + 1)
    log.append(f"discrepancy growth {gamma:.6g} on window [{start}, {a.degree}]; beta = {beta}")

    budget = None
    if config.build_codes:
        budget = a.degree if config.budget is None else config.budget // p
    gp = gapprep(a, b, beta, budget, discrepancy_bound=True)
    log.append(f"N = {gp.N}")

    of, og = orbit_series_counts(gp.f), orbit_series_counts(gp.g)
    R_f = [max(0, x - y) for x, y in zip(of, og)]
    R_g = [max(0, y - x) for x, y in zip(of, og)]
    lf = loops_lemma_run(gp.f, R_f, budget, magic=True, restrict_to_r=True)
    lg = loops_lemma_run(gp.g, R_g, budget, magic=True, restrict_to_r=True)
    if lf.series != lg.series:
        n = next(i for i, (x, y) in enumerate(zip(lf.series, lg.series), 1) if x != y)
        raise CommonSeriesMismatch(n)

    diagnostics = {
        "log": log,
        "lambda": {"F": [float(encA.lo), float(encA.hi)], "G": [float(encB.lo), float(encB.hi)]},
        "spr": {"F": repA.spr.value, "G": repB.spr.value},
        "window": [start, a.degree],
        "budget": None if budget is None else budget * p,
        "gapprep": dict(gp.checks),
        "loops_lemma": {
            "F": loops_lemma_identity_holds(gp.f, R_f, lf.series),
            "G": loops_lemma_identity_holds(gp.g, R_g, lg.series),
        },
    }

    left_stages, right_stages = [], []
    if budget is not None:
        for side, run, chain_ in (("F", lf, gp.left_chain), ("G", lg, gp.right_chain)):
            ll = Stage(run.code, "loops-lemma", run.magic, run.condition_star,
                       run.graph.census() == run.series.truncate(budget))
            stages = [ll] + list(chain_)
            for st in stages:
                st.code = st.code.inflate(p)
            (left_stages if side == "F" else right_stages).extend(stages)
        diagnostics["condition_star"] = {
            "F": [s.condition_star for s in left_stages],
            "G": [s.condition_star for s in right_stages],
        }
        diagnostics["census"] = {
            "F": [s.census_ok for s in left_stages],
            "G": [s.census_ok for s in right_stages],
        }

    common = inflate_period(lf.series, p, degree=D)
    result = PipelineResult(common, p, beta, gp.N, gamma, R_f, R_g,
                            [s.code for s in left_stages], [s.code for s in right_stages],
                            diagnostics, left_stages, right_stages)
    if budget is not None:
        lam_orig = min(encA.mid, encB.mid) ** (1.0 / p)
        magic_log = {}
        for side, key in (("left", "F"), ("right", "G")):
            code = result.composite(side)
            entry = {"composed": list(code.magic),
                     "composed_certified": is_boundary_marking(code, code.magic)}
            found = find_magic_word(code, config.magic_search, lam_orig) if config.magic_search else None
            if found is not None and found.weight > 0:
                code = code.with_magic(found.word)
                result._composites[side] = code
                entry["searched"] = list(found.word)
                entry["searched_weight"] = found.weight
            magic_log[key] = entry
        diagnostics["magic"] = magic_log
    return result


def verify_identities(result: PipelineResult) -> bool:
    d = result.diagnostics
    ok = all(d["gapprep"].values()) and all(d["loops_lemma"].values())
    if "condition_star" in d:
        ok = ok and all(all(v) for v in d["condition_star"].values())
        ok = ok and all(all(v) for v in d["census"].values())
    return ok
