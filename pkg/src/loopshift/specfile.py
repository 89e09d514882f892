"""Shift spec files.

A spec is a JSON object::

    {"version": 1, "name": "golden", "degree": 30, "coeffs": [1, 1]}
    {"version": 1, "name": "renewal", "degree": 30,
     "generator": {"tag": "constant", "value": 1}}
    {"version": 1, "name": "graph", "degree": 12,
     "generator": {"tag": "matrix-first-return"},
     "matrix": [[1, 1], [1, 0]], "vertex": 0}

``coeffs[i]`` is the coefficient of ``z^(i+1)``; missing coefficients up to
``degree`` are zero.  Generator tags and their expansions:

``constant``               ``f_n = value`` for every n
``geometric``              ``f_n = value * ratio**(n-1)``
``floor-power-over-cube``  ``f_n = floor(base**n / (scale * n**3))``
``matrix-first-return``    first-return loop counts of ``matrix`` at ``vertex``

Any generator may carry ``"stride": p``, which expands the generator to
degree ``degree // p`` and then spreads it onto multiples of ``p``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ParseError
from .loopgraph import first_return_series
from .series import Series
from .spectral import inflate_period

VERSION = 1

_GEN_PARAMS = {
    "constant": {"value": 1},
    "geometric": {"value": 1, "ratio": 2},
    "floor-power-over-cube": {"base": 2, "scale": 8},
    "matrix-first-return": {},
}


@dataclass(frozen=True)
class ShiftSpec:
    name: str
    degree: int
    coeffs: tuple | None = None
    generator: dict | None = field(default=None, hash=False)
    matrix: tuple | None = None
    vertex: int | None = None
    version: int = VERSION

    def series(self) -> Series:
        if self.coeffs is not None:
            return Series.from_coeffs(self.coeffs, self.degree)
        gen = self.generator
        stride = gen.get("stride", 1)
        f = _expand(gen, self, self.degree // stride)
        if stride > 1:
            f = inflate_period(f, stride, self.degree)
        return f

    def expanded(self) -> "ShiftSpec":
        """The same shift written as an explicit coefficient list."""
        return ShiftSpec(self.name, self.degree, tuple(self.series().coeffs))

    def to_dict(self) -> dict:
        d = {"version": self.version, "name": self.name, "degree": self.degree}
        if self.coeffs is not None:
            d["coeffs"] = list(self.coeffs)
        else:
            d["generator"] = dict(self.generator)
        if self.matrix is not None:
            d["matrix"] = [list(r) for r in self.matrix]
            d["vertex"] = self.vertex
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _expand(gen: dict, spec: ShiftSpec, degree: int) -> Series:
    tag = gen["tag"]
    p = {**_GEN_PARAMS[tag], **gen}
    if degree < 1:
        raise ValueError("degree is smaller than the stride")
    if tag == "constant":
        return Series.from_function(lambda n: p["value"], degree)
    if tag == "geometric":
        return Series.from_function(lambda n: p["value"] * p["ratio"] ** (n - 1), degree)
    if tag == "floor-power-over-cube":
        return Series.from_function(lambda n: p["base"] ** n // (p["scale"] * n ** 3), degree)
    return first_return_series(spec.matrix, spec.vertex, degree)


def spec_from_series(f: Series, name: str = "") -> ShiftSpec:
    return ShiftSpec(name, f.degree, tuple(f.coeffs))


# parsing ------------------------------------------------------------------------

def _where(text: str, key: str) -> tuple[int, int]:
    i = text.find(f'"{key}"')
    if i < 0:
        return 1, 1
    line = text.count("\n", 0, i) + 1
    return line, i - (text.rfind("\n", 0, i) + 1) + 1


def _nonneg_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool) and v >= 0


def loads(text: str, degree: int | None = None) -> ShiftSpec:
    """Parse spec text; ``degree`` overrides the file's degree when given."""
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from None

    def fail(msg, key=None):
        raise ParseError(msg, *(_where(text, key) if key else (1, 1)))

    if not isinstance(d, dict):
        fail("spec must be a JSON object")
    allowed = {"version", "name", "degree", "coeffs", "generator", "matrix", "vertex"}
    for k in d:
        if k not in allowed:
            fail(f"unknown field {k!r}", k)
    if d.get("version") != VERSION:
        fail(f"unsupported or missing version (expected {VERSION})", "version")
    name = d.get("name", "")
    if not isinstance(name, str):
        fail("name must be a string", "name")
    deg = d.get("degree") if degree is None else degree
    if not _nonneg_int(deg) or deg < 1:
        fail("degree must be a positive integer", "degree")
    if ("coeffs" in d) == ("generator" in d):
        fail("exactly one of coeffs and generator is required")

    matrix = vertex = None
    if "matrix" in d or "vertex" in d:
        m = d.get("matrix")
        if not (isinstance(m, list) and m and all(isinstance(r, list) and len(r) == len(m) for r in m)
                and all(_nonneg_int(x) for r in m for x in r)):
            fail("matrix must be a square list of nonnegative integers", "matrix")
        vertex = d.get("vertex", 0)
        if not _nonneg_int(vertex) or vertex >= len(m):
            fail("vertex out of range", "vertex")
        matrix = tuple(tuple(r) for r in m)

    if "coeffs" in d:
        c = d["coeffs"]
        if not isinstance(c, list) or not all(_nonneg_int(x) for x in c):
            fail("coeffs must be a list of nonnegative integers", "coeffs")
        if len(c) > deg:
            c = c[:deg]
        return ShiftSpec(name, deg, tuple(c), None, matrix, vertex)

    gen = d["generator"]
    if isinstance(gen, str):
        gen = {"tag": gen}
    if not isinstance(gen, dict) or gen.get("tag") not in _GEN_PARAMS:
        fail(f"generator tag must be one of {sorted(_GEN_PARAMS)}", "generator")
    known = set(_GEN_PARAMS[gen["tag"]]) | {"tag", "stride"}
    for k, v in gen.items():
        if k not in known:
            fail(f"unknown generator parameter {k!r}", k)
        if k != "tag" and (not _nonneg_int(v) or (k in ("stride", "ratio", "base", "scale") and v < 1)):
            fail(f"generator parameter {k!r} must be a positive integer", k)
    if gen["tag"] == "matrix-first-return" and matrix is None:
        fail("matrix-first-return needs matrix and vertex", "generator")
    if gen.get("stride", 1) > deg:
        fail("stride exceeds degree", "stride")
    return ShiftSpec(name, deg, None, dict(gen), matrix, vertex)


def load(path, degree: int | None = None) -> ShiftSpec:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read(), degree)
