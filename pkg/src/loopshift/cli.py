"""Command line front end.

Exit codes: 0 success, 1 unexpected internal error, 2 usage or parse error,
3 file system error, 4 a verification step reported a failure, and 10-32
for the library errors listed in :mod:`loopshift.errors`.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .codec import (BlockCode, coding_time_stats, return_time_tail,
                    verify_injectivity_periodic)
from .errors import LoopShiftError, ParseError
from .series import Series
from .spectral import classify, entropy
from .specfile import ShiftSpec, load, loads, spec_from_series
from .transform import (AlmostIsoConfig, almost_iso, choose_beta, gapprep,
                        loops_lemma_identity_holds, loops_lemma_run, verify_identities)
from .zeta import discrepancy_growth, fix_counts, orbit_counts, product_formula_residual

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_VERIFY = 4

BUNDLE_VERSION = 1


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"


def dumps_compact(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, Series):
        return list(x.coeffs)
    if isinstance(x, (set, frozenset, tuple)):
        return sorted(x) if isinstance(x, (set, frozenset)) else list(x)
    if hasattr(x, "item"):
        return x.item()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _emit(args, report: dict, text: str):
    """Human text on stdout, JSON too with ``--json``; ``--output`` gets the JSON."""
    if args.output:
        Path(args.output).write_text(dumps(report), encoding="utf-8")
    if getattr(args, "json", False):
        sys.stdout.write(dumps(report))
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _series(args, path) -> tuple[ShiftSpec, Series]:
    spec = load(path, args.degree)
    return spec, spec.series()


def _fmt(x) -> str:
    return f"{float(x):.12g}"


# analyze ------------------------------------------------------------------------

def analyze_report(f: Series, tol: float, name: str = "") -> dict:
    enc = entropy(f, tol=tol)
    rep = classify(f, enc, tol=tol)
    fix = fix_counts(f)
    orb = orbit_counts(fix)
    resid = product_formula_residual(f, orb)
    return {
        "name": name,
        "degree": f.degree,
        "coeffs": list(f.coeffs),
        "lambda": {"lo": _fmt(enc.lo), "hi": _fmt(enc.hi), "method": enc.method},
        "entropy": _fmt(math.log(enc.mid)) if enc.mid > 0 else None,
        "period": rep.period,
        "class": rep.vere_jones.value,
        "spr": rep.spr.value,
        "fix": fix,
        "orbits": orb,
        "residual_ok": all(r == 0 for r in resid),
    }


def cmd_analyze(args) -> int:
    spec, f = _series(args, args.spec)
    r = analyze_report(f, args.tol, spec.name)
    lines = [
        f"shift {r['name'] or '-'}  degree {r['degree']}",
        f"lambda   in [{r['lambda']['lo']}, {r['lambda']['hi']}] ({r['lambda']['method']})",
        f"entropy  {r['entropy']}",
        f"period   {r['period']}",
        f"class    {r['class']}",
        f"SPR      {r['spr']}",
        f"residual {'OK' if r['residual_ok'] else 'NONZERO'}",
        "",
        f"{'n':>4} {'f_n':>12} {'Fix_n':>14} {'O_n':>12}",
    ]
    for n in range(1, f.degree + 1):
        lines.append(f"{n:>4} {f[n]:>12} {r['fix'][n - 1]:>14} {r['orbits'][n - 1]:>12}")
    _emit(args, r, "\n".join(lines))
    return EXIT_OK if r["residual_ok"] else EXIT_VERIFY


# almost-iso -----------------------------------------------------------------------

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _stage_record(stage, side: str, index: int) -> dict:
    return {
        "side": side,
        "index": index,
        "kind": stage.kind,
        "condition_star": stage.condition_star,
        "census_ok": stage.census_ok,
        "code": stage.code.to_dict(),
    }


def write_bundle(out: Path, result, specF: ShiftSpec, specG: ShiftSpec, checks: dict) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    files: dict[str, str] = {}

    def put(rel: str, text: str):
        p = out / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, encoding="utf-8")
        files[rel] = _sha256(p)

    put("common.json", spec_from_series(result.common, "common").dumps())
    d = result.diagnostics
    put("summary.json", dumps({
        "period": result.period, "beta": result.beta, "N": result.N,
        "gamma": result.gamma, "R_f": result.R_f, "R_g": result.R_g,
        "lambda": d["lambda"], "spr": d["spr"], "window": d["window"],
        "budget": d["budget"],
    }))
    stages = {"left": result.left_stages, "right": result.right_stages}
    for side, lst in stages.items():
        for i, st in enumerate(lst):
            put(f"stages/{side}-{i:02d}.json", dumps_compact(_stage_record(st, side, i)))
        code = result.composite(side)
        if code is not None:
            put(f"codes/{side}.json", dumps_compact(code.to_dict()))
    put("magic.json", dumps({"words": result.magic_words, "search": d.get("magic", {})}))

    log = list(d["log"])
    for name, ok in sorted(checks.items()):
        log.append(f"{name}: {'PASS' if ok else 'FAIL'}")
    put("verification.log", "\n".join(log) + "\n")

    manifest = {
        "version": BUNDLE_VERSION,
        "tool": f"loopshift {__version__}",
        "inputs": {"F": specF.to_dict(), "G": specG.to_dict()},
        "stages": {side: [f"stages/{side}-{i:02d}.json" for i in range(len(lst))]
                   for side, lst in stages.items()},
        "files": files,
    }
    (out / "manifest.json").write_text(dumps(manifest), encoding="utf-8")
    return manifest


def _bundle_checks(result, verify_period: int) -> dict:
    d = result.diagnostics
    checks = {f"gapprep.{k}": v for k, v in d["gapprep"].items()}
    checks.update({f"loops_lemma.{k}": v for k, v in d["loops_lemma"].items()})
    for key in ("condition_star", "census"):
        for side, vals in d.get(key, {}).items():
            checks[f"{key}.{side}"] = all(vals)
    checks["identities"] = verify_identities(result)
    if verify_period:
        for side in ("left", "right"):
            code = result.composite(side)
            if code is not None:
                rep = verify_injectivity_periodic(code, verify_period)
                checks[f"injectivity.{side}.period<={verify_period}"] = rep.ok
    return checks


def cmd_almost_iso(args) -> int:
    specF, F = _series(args, args.spec_f)
    specG, G = _series(args, args.spec_g)
    config = AlmostIsoConfig(budget=args.budget, tol=args.tol,
                             beta=None if args.beta is None else Fraction(args.beta))
    result = almost_iso(F, G, config)
    checks = _bundle_checks(result, args.verify_period)
    out = Path(args.output or "bundle")
    manifest = write_bundle(out, result, specF, specG, checks)
    ok = all(checks.values())
    lines = [
        f"bundle   {out}",
        f"period   {result.period}",
        f"beta     {result.beta}",
        f"N        {result.N}",
        f"common   {result.common!r}",
        f"magic    F: {' '.join(result.magic_words['left'] or ())}",
        f"         G: {' '.join(result.magic_words['right'] or ())}",
        f"checks   {sum(checks.values())}/{len(checks)} passed",
        f"files    {len(manifest['files']) + 1}",
    ]
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_VERIFY


# simulate -------------------------------------------------------------------------

def load_bundle(path: Path, check: bool = True) -> dict:
    """Manifest plus parsed common series and composite codes."""
    try:
        manifest = json.loads((path / "manifest.json").read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"manifest: {e.msg}", e.lineno, e.colno) from None
    if check:
        for rel, digest in manifest["files"].items():
            if _sha256(path / rel) != digest:
                raise ParseError(f"checksum mismatch for {rel}")
    common = load(path / "common.json").series()
    codes = {}
    for side in ("left", "right"):
        p = path / "codes" / f"{side}.json"
        if p.exists():
            codes[side] = BlockCode.from_dict(json.loads(p.read_text(encoding="utf-8")),
                                              validate=False)
    return {"manifest": manifest, "common": common, "codes": codes}


def cmd_simulate(args) -> int:
    target = Path(args.target)
    bundle = load_bundle(target) if target.is_dir() else None
    f = bundle["common"] if bundle else _series(args, target)[1]
    report: dict = {"mode": args.mode, "seed": args.seed}
    lines = [f"mode {args.mode}"]
    status = EXIT_OK

    if args.mode == "return-times":
        enc = entropy(f, tol=args.tol)
        n_max = args.n_max or max(2, f.degree // 4)
        t = return_time_tail(f, enc, n_max=n_max, normalize=True)
        report.update({"n_max": n_max, "window": t.window, "ratio": t.ratio,
                       "ratio_bounds": list(t.ratio_bounds), "exponential": t.exponential,
                       "tails": [_fmt(x) for x in t.tails]})
        lines += [f"n_max {n_max}  window {t.window}",
                  f"tail ratio {t.ratio:.6f}  ({'exponential' if t.exponential else 'not exponential'})"]
    elif bundle is None:
        raise ParseError(f"mode {args.mode} needs a bundle directory, not a spec file")
    elif args.mode == "coding-times":
        lam = entropy(f, tol=args.tol).mid
        for side, code in sorted(bundle["codes"].items()):
            s = coding_time_stats(code, f, lam, args.samples, args.seed)
            report[side] = {"samples": s.samples, "mean": s.mean, "tail_ratio": s.tail_ratio,
                            "censored": s.censored, "quantiles": {str(k): v for k, v in s.quantiles.items()},
                            "histogram": {str(k): v for k, v in s.histogram.items()}}
            lines.append(f"{side}: mean {s.mean:.4f}  tail ratio {s.tail_ratio:.6f}  "
                         f"censored {s.censored}")
    else:
        for side, code in sorted(bundle["codes"].items()):
            rep = verify_injectivity_periodic(code, args.period)
            report[side] = {"max_period": rep.max_period, "sequences": rep.sequences,
                            "with_magic": rep.with_magic, "passed": rep.passed,
                            "failures": [repr(x) for x in rep.failures[:10]]}
            lines.append(f"{side}: {rep.passed}/{rep.with_magic} periodic points with the "
                         f"magic word decode correctly (period <= {rep.max_period})")
            if not rep.ok:
                status = EXIT_VERIFY
    _emit(args, report, "\n".join(lines))
    return status


# loops-lemma, gapprep, first-return ------------------------------------------------

def _parse_int_list(text: str, what: str) -> list[int]:
    try:
        vals = json.loads(text) if text.strip().startswith("[") else \
            [int(x) for x in text.split(",") if x.strip()]
    except (ValueError, json.JSONDecodeError):
        raise ParseError(f"{what} must be a comma separated list of integers") from None
    if not all(isinstance(v, int) and v >= 0 for v in vals):
        raise ParseError(f"{what} must hold nonnegative integers")
    return vals


def cmd_loops_lemma(args) -> int:
    spec, f = _series(args, args.spec)
    R = _parse_int_list(args.r, "--r")
    run = loops_lemma_run(f, R, args.budget, magic=args.budget is not None)
    ok = loops_lemma_identity_holds(f, R, run.series)
    ef, eg = entropy(f, tol=args.tol), entropy(run.series, tol=args.tol)
    same = ef.overlaps(eg, slack=2 * args.tol)
    report = {"name": spec.name, "R": R, "deleted": list(run.deleted),
              "series": list(run.series.coeffs), "identity": ok,
              "entropy_preserved": same, "condition_star": run.condition_star,
              "magic": None if run.magic is None else list(run.magic.label)}
    lines = [f"deleted lengths {list(run.deleted)}",
             f"f_inf {run.series!r}",
             f"identity {'PASS' if ok else 'FAIL'}",
             f"entropy  {'PASS' if same else 'FAIL'}"]
    if run.magic is not None:
        lines.append(f"magic {' '.join(run.magic.label)}  W-prefix condition "
                     f"{'PASS' if run.condition_star else 'FAIL'}")
    _emit(args, report, "\n".join(lines))
    return EXIT_OK if ok and same and run.condition_star is not False else EXIT_VERIFY


def cmd_gapprep(args) -> int:
    _, F = _series(args, args.spec_f)
    _, G = _series(args, args.spec_g)
    if args.beta is not None:
        beta = Fraction(args.beta)
    else:
        lam = min(entropy(F, tol=args.tol).lo, entropy(G, tol=args.tol).lo)
        beta = choose_beta(discrepancy_growth(F, G), float(lam))
    gp = gapprep(F, G, beta, args.budget, discrepancy_bound=True)
    report = {"beta": beta, "N": gp.N, "b": gp.b, "f": gp.f, "g": gp.g,
              "Fbar": gp.Fbar, "Gbar": gp.Gbar, "checks": gp.checks}
    lines = [f"beta {beta}  N {gp.N}", f"b {gp.b!r}", f"f {gp.f!r}", f"g {gp.g!r}"]
    lines += [f"{k}: {'PASS' if v else 'FAIL'}" for k, v in sorted(gp.checks.items())]
    _emit(args, report, "\n".join(lines))
    return EXIT_OK if all(gp.checks.values()) else EXIT_VERIFY


def cmd_first_return(args) -> int:
    degree = args.degree or 12
    if args.spec:
        spec = load(args.spec)
        if spec.matrix is None:
            raise ParseError("spec has no matrix")
        matrix, vertex = spec.matrix, spec.vertex
        degree = args.degree or spec.degree
    elif args.matrix:
        try:
            matrix = json.loads(args.matrix)
        except json.JSONDecodeError as e:
            raise ParseError(f"--matrix: {e.msg}", e.lineno, e.colno) from None
        vertex = args.vertex
    else:
        raise ParseError("give a spec file or --matrix")
    text = dumps({"version": 1, "name": "first-return", "degree": degree,
                  "generator": {"tag": "matrix-first-return"},
                  "matrix": matrix, "vertex": vertex})
    spec = loads(text)
    f = spec.series()
    out = spec.expanded()
    if args.output:
        Path(args.output).write_text(out.dumps(), encoding="utf-8")
    sys.stdout.write(f"{f!r}\n" if not args.json else out.dumps())
    return EXIT_OK


# parser ---------------------------------------------------------------------------

def _global_flags(p: argparse.ArgumentParser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--degree", type=int, default=d(None), help="truncation degree (overrides the spec)")
    p.add_argument("--budget", type=int, default=d(None), help="loop length budget for code construction")
    p.add_argument("--tol", type=float, default=d(1e-9), help="entropy tolerance")
    p.add_argument("--seed", type=int, default=d(0), help="random seed for simulations")
    p.add_argument("--beta", default=d(None), help="rational beta, e.g. 3/2")
    p.add_argument("--output", default=d(None), help="output file, or bundle directory")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    parser = argparse.ArgumentParser(prog="loopshift", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"loopshift {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="entropy, class and orbit tables")
    p.add_argument("spec")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("almost-iso", parents=[common], help="build the common extension and write a bundle")
    p.add_argument("spec_f")
    p.add_argument("spec_g")
    p.add_argument("--verify-period", type=int, default=8,
                   help="check injectivity on periodic points up to this period (0 skips)")
    p.set_defaults(func=cmd_almost_iso)

    p = sub.add_parser("simulate", parents=[common], help="return times, coding times, injectivity")
    p.add_argument("target", help="spec file or bundle directory")
    p.add_argument("--mode", choices=["return-times", "coding-times", "injectivity"],
                   default="return-times")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--period", type=int, default=8)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("loops-lemma", parents=[common], help="delete orbits given by R")
    p.add_argument("spec")
    p.add_argument("--r", required=True, help="R_1,R_2,... orbit counts to remove")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_loops_lemma)

    p = sub.add_parser("gapprep", parents=[common], help="remove short loops and split")
    p.add_argument("spec_f")
    p.add_argument("spec_g")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_gapprep)

    p = sub.add_parser("first-return", parents=[common], help="first-return series of a matrix")
    p.add_argument("spec", nargs="?")
    p.add_argument("--matrix", help="JSON adjacency matrix")
    p.add_argument("--vertex", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_first_return)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LoopShiftError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except (ValueError, ZeroDivisionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
