"""Interval quadruples a < b < c < d certifying the two-map IFS {psi, psi^-1}.

The four covering conditions, for increasing psi:

1. psi^2 maps [a, b] into (b, c)
2. psi^-1 maps [b, c] into (a, c)
3. psi^-2 maps [c, d] into (b, c)
4. psi maps [b, c] into (b, d)

Monotonicity reduces each to two endpoint inequalities.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import fiber as fb
from .errors import NoInverse, NotMonotone, OutOfDomain
from .fiber import FiberMap

__all__ = [
    "IfsQuadruple",
    "QuadrupleCheck",
    "INEQUALITIES",
    "check_conditions",
    "find_quadruple",
    "verify_quadruple",
    "interior_violations",
    "three_step_returns",
]

STRICT = 1e-12

# name -> (condition number, description)
INEQUALITIES = {
    "fwd2(a) > b": 1,
    "fwd2(b) < c": 1,
    "bwd(b) > a": 2,
    "bwd(c) < c": 2,
    "bwd2(c) > b": 3,
    "bwd2(d) < c": 3,
    "fwd(b) > b": 4,
    "fwd(c) < d": 4,
}


@dataclass(frozen=True)
class IfsQuadruple:
    a: float
    b: float
    c: float
    d: float
    swapped: bool = False
    evidence: dict = field(default_factory=dict, compare=False)
    conditions: tuple = (True, True, True, True)

    def __post_init__(self):
        if not -1.0 < self.a < self.b < self.c < self.d < 1.0:
            raise ValueError(f"need -1 < a < b < c < d < 1, got {(self.a, self.b, self.c, self.d)}")

    @property
    def points(self):
        return self.a, self.b, self.c, self.d

    def oriented(self, psi: FiberMap):
        """``(forward, backward)`` maps after applying the swap flag."""
        return (fb.inverse(psi), psi) if self.swapped else (psi, fb.inverse(psi))

    def to_json(self):
        return {
            "a": self.a,
            "b": self.b,
            "c": self.c,
            "d": self.d,
            "swapped": self.swapped,
            "conditions": list(self.conditions),
            "evidence": dict(self.evidence),
        }


@dataclass
class QuadrupleCheck:
    ok: bool
    conditions: tuple
    slacks: dict
    evidence: dict

    @property
    def min_slack(self):
        return min(self.slacks.values())

    def failed(self):
        return [i + 1 for i, good in enumerate(self.conditions) if not good]


def _ev(f, x):
    try:
        v = float(fb.evaluate(f, x))
    except OutOfDomain:
        return np.nan
    return v if -1.0 < v < 1.0 else np.nan


def check_conditions(fwd: FiberMap, bwd: FiberMap, a, b, c, d, strict: float = STRICT) -> QuadrupleCheck:
    """Evaluate the eight endpoint inequalities for a map pair (not necessarily exact inverses)."""
    fwd2 = fb.compose(fwd, fwd)
    bwd2 = fb.compose(bwd, bwd)
    ev = {
        "fwd2(a)": _ev(fwd2, a),
        "fwd2(b)": _ev(fwd2, b),
        "bwd(b)": _ev(bwd, b),
        "bwd(c)": _ev(bwd, c),
        "bwd2(c)": _ev(bwd2, c),
        "bwd2(d)": _ev(bwd2, d),
        "fwd(b)": _ev(fwd, b),
        "fwd(c)": _ev(fwd, c),
    }
    slacks = {
        "fwd2(a) > b": ev["fwd2(a)"] - b,
        "fwd2(b) < c": c - ev["fwd2(b)"],
        "bwd(b) > a": ev["bwd(b)"] - a,
        "bwd(c) < c": c - ev["bwd(c)"],
        "bwd2(c) > b": ev["bwd2(c)"] - b,
        "bwd2(d) < c": c - ev["bwd2(d)"],
        "fwd(b) > b": ev["fwd(b)"] - b,
        "fwd(c) < d": d - ev["fwd(c)"],
    }
    # NaN (escape) compares False, so it fails its condition
    good = {name: bool(s > strict) for name, s in slacks.items()}
    conds = tuple(all(good[n] for n, k in INEQUALITIES.items() if k == i) for i in range(1, 5))
    slacks = {n: (float(s) if not np.isnan(s) else -np.inf) for n, s in slacks.items()}
    return QuadrupleCheck(all(conds), conds, slacks, ev)


def verify_quadruple(psi: FiberMap, q: IfsQuadruple, strict: float = STRICT) -> QuadrupleCheck:
    if not q.a < q.b < q.c < q.d:
        raise ValueError("quadruple must satisfy a < b < c < d")
    fwd, bwd = q.oriented(psi)
    return check_conditions(fwd, bwd, *q.points, strict=strict)


def _longest_run(mask):
    best, start = (0, -1, -1), None
    for i, m in enumerate(list(mask) + [False]):
        if m and start is None:
            start = i
        elif not m and start is not None:
            if i - start > best[0]:
                best = (i - start, start, i - 1)
            start = None
    return best


def find_quadruple(psi: FiberMap, margin: float = None, grid: int = 4096):
    """Construct a quadruple for ``psi`` (or ``psi^-1``, flagged ``swapped``); None if none found.

    Picks the longest run of grid points where the map moves points right by
    at least ``margin`` (default: half the largest displacement), starts ``a``
    a sixteenth of the way into it and places ``b, c, d`` at midpoints of
    consecutive iterates. Up to 16 attempts move ``a`` back toward the start
    of the run.
    """
    if not fb.is_monotone_on(psi, -1.0, 1.0, grid):
        raise NotMonotone(repr(psi))
    xs = np.linspace(-1.0, 1.0, grid)
    try:
        back = fb.evaluate(fb.inverse(psi), xs)
        image = fb.evaluate(psi, xs)
    except OutOfDomain as exc:
        raise NoInverse(f"map or its inverse is partial on [-1, 1]: {exc}") from None
    if np.max(np.abs(back)) > 1.0 + fb.HULL_TOL or np.max(np.abs(image)) > 1.0 + fb.HULL_TOL:
        raise NoInverse("map or its inverse leaves [-1, 1]")
    disp = image - xs

    swapped = bool(np.max(-disp) > np.max(disp))
    fwd, bwd = (fb.inverse(psi), psi) if swapped else (psi, fb.inverse(psi))
    if swapped:
        disp = fb.evaluate(fwd, xs) - xs
    top = float(np.max(disp))
    if margin is None:
        margin = 0.5 * top
    if not (top > 0 and margin > 0):
        return None
    length, i0, i1 = _longest_run(disp >= margin)
    if length == 0:
        return None
    s, u = xs[i0], xs[i1]

    for j in range(16):
        target = s + (u - s) / 16 * (1 - j / 16)
        a = float(xs[int(np.argmin(np.abs(xs - target)))])
        try:
            fa = float(fb.evaluate(fwd, a))
            b = 0.5 * (fa + float(fb.evaluate(fwd, fa)))
            b2 = float(fb.evaluate(fwd, fb.evaluate(fwd, b)))
            c = 0.5 * (b2 + float(fb.evaluate(fwd, b2)))
            fc = float(fb.evaluate(fwd, c))
            d = 0.5 * (fc + float(fb.evaluate(fwd, fc)))
        except OutOfDomain:
            continue
        if not -1.0 < a < b < c < d < 1.0:
            continue
        chk = check_conditions(fwd, bwd, a, b, c, d)
        if chk.ok:
            return IfsQuadruple(a, b, c, d, swapped, chk.evidence, chk.conditions)
    return None


def interior_violations(fwd: FiberMap, bwd: FiberMap, q: IfsQuadruple, n: int = 1000) -> int:
    """Count interior sample points whose image breaks one of the interval conditions."""
    a, b, c, d = q.points
    fwd2, bwd2 = fb.compose(fwd, fwd), fb.compose(bwd, bwd)
    checks = [(fwd2, a, b, b, c), (bwd, b, c, a, c), (bwd2, c, d, b, c), (fwd, b, c, b, d)]
    bad = 0
    for f, lo, hi, tlo, thi in checks:
        y = fb.evaluate(f, np.linspace(lo, hi, n))
        bad += int(np.sum(~((y > tlo) & (y < thi))))
    return bad


def three_step_returns(fwd: FiberMap, bwd: FiberMap, q: IfsQuadruple, n_points: int = 64) -> np.ndarray:
    """For sample points of [b, c], the number of three-map words that return to [b, c]
    while staying in [a, d]."""
    a, b, c, d = q.points
    out = []
    for x in np.linspace(b, c, n_points):
        count = 0
        for word in itertools.product((fwd, bwd), repeat=3):
            v, alive = x, True
            for f in word:
                v = float(fb.evaluate(f, v))
                if not a <= v <= d:
                    alive = False
                    break
            count += alive and b <= v <= c
        out.append(count)
    return np.array(out)
