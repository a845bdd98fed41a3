"""Good-cylinder counting and the bounded-versus-drifting certification pipeline.

A word over {1, 2} (1 applies the right-moving map, 2 the left-moving one) is
*good* when every partial orbit value of the start point stays in (a, d).
Good words are grown by the extension rules

* value in (b, c): both ``w1`` and ``w2`` are good,
* value >= c:      ``w22`` is good and lands back in (b, c),
* value <= b:      ``w11`` is good and lands back in (b, c),

so every word branches at least once every three symbols and
``|B_{i+3}| >= 2 |B_i|``, i.e. entropy at least ln(2)/3.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import fiber as fb
from .errors import EmptyCounts, NotReversible, OutOfDomain, RuleViolation
from .fiber import FiberMap
from .ifs_cert import IfsQuadruple, check_conditions, find_quadruple
from .scattering import ScatteringMap, find_small_scattering
from .skewprod import DriftWitness, SkewSystem, bounded_orbit_tree, drift_search, itinerary_map, validate_reversible
from .symbolic import involute, sft_entropy

__all__ = [
    "GoodCylinderTree",
    "EntropyEstimate",
    "EntropyReport",
    "grow_good_cylinders",
    "good_counts_brute",
    "entropy_estimate",
    "block_maps",
    "certify",
    "CASE1",
    "CASE2",
    "INCONCLUSIVE",
    "SCHEMA",
]

CASE1 = "Case1_bounded"
CASE2 = "Case2_certified"
INCONCLUSIVE = "Inconclusive"
SCHEMA = "revskew.entropy-report/1"
LOWER_BOUND_CASE2 = math.log(2.0) / 3.0
MAX_WORD_LEN = 62


@dataclass
class GoodCylinderTree:
    """Good words grown level by level.

    Words are packed into int64 codes, first symbol most significant, bit 1
    meaning symbol 2; numeric order of codes is lexicographic order of words.
    """

    quadruple: IfsQuadruple
    forward: FiberMap
    backward: FiberMap
    start: float = 0.0
    codes: list = field(default_factory=list)
    values: list = field(default_factory=list)
    forced: list = field(default_factory=list)

    @property
    def counts(self):
        """``[|B_1|, |B_2|, ...]`` for the levels grown so far."""
        return [len(c) for c in self.codes[1:]]

    def words(self, n):
        """Stored words of length ``n`` as tuples over {1, 2}."""
        return [tuple(1 + ((int(code) >> (n - 1 - j)) & 1) for j in range(n)) for code in self.codes[n]]

    def replay(self, word):
        v = self.start
        for s in word:
            v = float(fb.evaluate(self.forward if s == 1 else self.backward, v))
        return v


def grow_good_cylinders(tree: GoodCylinderTree, max_len: int) -> list:
    """Grow ``tree`` to words of length ``max_len`` and return the counts ``|B_1| .. |B_max_len|``.

    Raises ValueError if the quadruple conditions fail for the tree's maps and
    :class:`RuleViolation` if an extension the rules call good escapes.
    """
    if not 1 <= max_len <= MAX_WORD_LEN:
        raise ValueError(f"max_len must lie in [1, {MAX_WORD_LEN}]")
    q = tree.quadruple
    a, b, c, d = q.points
    chk = check_conditions(tree.forward, tree.backward, a, b, c, d)
    if not chk.ok:
        raise ValueError(f"quadruple conditions {chk.failed()} fail for these maps")
    if not tree.codes:
        inside = a < tree.start < d
        tree.codes.append(np.zeros(int(inside), dtype=np.int64))
        tree.values.append(np.full(int(inside), float(tree.start)))
        tree.forced.append(np.zeros(int(inside), dtype=np.int8))
    while len(tree.codes) <= max_len:
        code, v, forced = tree.codes[-1], tree.values[-1], tree.forced[-1]
        free = forced == 0
        s1 = (forced == 1) | (free & (v < c))
        s2 = (forced == 2) | (free & (v > b))
        v1 = fb.evaluate(tree.forward, v[s1]) if s1.any() else np.zeros(0)
        v2 = fb.evaluate(tree.backward, v[s2]) if s2.any() else np.zeros(0)
        f1 = np.where(free[s1] & (v[s1] <= b), 1, 0).astype(np.int8)
        f2 = np.where(free[s2] & (v[s2] >= c), 2, 0).astype(np.int8)
        new_code = np.concatenate([code[s1] << 1, (code[s2] << 1) | 1])
        new_v = np.concatenate([np.atleast_1d(v1), np.atleast_1d(v2)])
        new_f = np.concatenate([f1, f2])
        closing = np.concatenate([forced[s1] != 0, forced[s2] != 0])
        if new_v.size:
            if not np.all((new_v > a) & (new_v < d)):
                raise RuleViolation(f"an extension left (a, d) at length {len(tree.codes)}")
            cv = new_v[closing]
            if not np.all((cv > b) & (cv < c)):
                raise RuleViolation(f"a double extension missed (b, c) at length {len(tree.codes)}")
        order = np.argsort(new_code, kind="stable")
        tree.codes.append(new_code[order])
        tree.values.append(new_v[order])
        tree.forced.append(new_f[order])
    return tree.counts[:max_len]


def good_counts_brute(forward: FiberMap, backward: FiberMap, q: IfsQuadruple, start: float, max_len: int):
    """All words over {1, 2} filtered by the goodness predicate alone.

    Returns ``(counts, codes)`` where ``codes[n]`` are the good words of length
    ``n`` in the same packing as :class:`GoodCylinderTree`.
    """
    a, d = q.a, q.d
    all_codes = np.zeros(1, dtype=np.int64)
    codes = [all_codes[[a < start < d]]]
    vals = np.array([start])
    alive = np.array([a < start < d])
    counts = []
    for _ in range(max_len):
        all_codes = np.concatenate([all_codes << 1, (all_codes << 1) | 1])
        safe = np.where(alive, vals, 0.0)
        nv = np.concatenate([fb.evaluate(forward, safe), fb.evaluate(backward, safe)])
        alive = np.concatenate([alive, alive]) & (nv > a) & (nv < d)
        vals = nv
        good = np.sort(all_codes[alive])
        codes.append(good)
        counts.append(int(good.size))
    return counts, codes


@dataclass
class EntropyEstimate:
    value: float
    length: int
    series: np.ndarray


def entropy_estimate(counts) -> EntropyEstimate:
    """``ln(counts[n]) / n`` at the largest recorded length ``n`` (counts[0] is length 1)."""
    counts = list(counts)
    if not counts or counts[-1] < 1:
        raise EmptyCounts("need a nonempty count list ending in a positive count")
    n = len(counts)
    with np.errstate(divide="ignore"):
        series = np.log(np.asarray(counts, dtype=float)) / np.arange(1, n + 1)
    return EntropyEstimate(float(series[-1]), n, series)


def block_maps(sys: SkewSystem, source) -> tuple:
    """Fiber maps of one pass through the excursion of ``source`` and of its mirror image.

    Each block is padded by 2m-1 background symbols, so successive blocks never
    share a context window and the composed maps are exactly those the system
    applies between visits to the background.
    """
    m = sys.context_half
    pad = (0,) * (2 * m - 1)
    there = itinerary_map(sys, pad + source.support + pad)
    back = itinerary_map(sys, pad + involute(source).support + pad)
    return there, back


@dataclass
class EntropyReport:
    case_label: str
    drift: DriftWitness | None = None
    scattering: ScatteringMap | None = None
    quadruple: IfsQuadruple | None = None
    counts: list = field(default_factory=list)
    entropy_estimate: float | None = None
    certified_lower_bound: float = 0.0
    budgets: dict = field(default_factory=dict)
    failed_stage: str | None = None
    evidence: dict = field(default_factory=dict)

    def to_json(self, sys: SkewSystem = None):
        return {
            "schema": SCHEMA,
            "case_label": self.case_label,
            "failed_stage": self.failed_stage,
            "certified_lower_bound": self.certified_lower_bound,
            "entropy_estimate": self.entropy_estimate,
            "counts": list(self.counts),
            "drift": self.drift.to_json(sys) if self.drift else None,
            "scattering": self.scattering.to_json() if self.scattering else None,
            "quadruple": self.quadruple.to_json() if self.quadruple else None,
            "budgets": dict(self.budgets),
            "evidence": dict(self.evidence),
        }

    def counts_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "|B_i|", "ln|B_i|/i"])
        for i, n in enumerate(self.counts, start=1):
            w.writerow([i, n, repr(math.log(n) / i) if n > 0 else ""])
        return buf.getvalue()


def certify(
    sys: SkewSystem,
    t: float = 0.5,
    depth: int = 40,
    delta: float = 0.5,
    max_support: int = 6,
    max_len: int = 30,
    exhaustive_depth: int = 12,
    budget: int = 10**6,
    tol: float = 1e-10,
    threads: int = 1,
    grid: int = 4096,
) -> EntropyReport:
    """Run the dichotomy: bounded orbits everywhere (case 1) or a drift that
    yields a near-identity scattering map and a certified IFS (case 2).

    Raises :class:`NotReversible` when the system fails the reversibility check.
    """
    if not 1 <= exhaustive_depth <= 14:
        raise ValueError("exhaustive_depth must lie in [1, 14]")
    budgets = dict(
        t=t, depth=depth, delta=delta, max_support=max_support, max_len=max_len,
        exhaustive_depth=exhaustive_depth, budget=budget, tol=tol, grid=grid,
    )
    cert = validate_reversible(sys, tol)
    if not cert.verified:
        raise NotReversible(cert)

    search = drift_search(sys, t, depth, budget)
    evidence = {"search_nodes": search.nodes, "search_exhausted": search.exhausted}
    report = EntropyReport(INCONCLUSIVE, budgets=budgets, evidence=evidence)

    if search.witness is None:
        if depth < exhaustive_depth:
            # a miss shallower than the exhaustive tree says nothing beyond it
            report.failed_stage = "drift_search"
            return report
        tree = bounded_orbit_tree(sys, t, exhaustive_depth, threads=threads)
        evidence.update(
            bounded_counts=tree.bounded, admissible_counts=tree.admissible, max_abs_value=tree.max_abs,
            depth_limited=True,
        )
        if not tree.full_branching:
            report.failed_stage = "bounded_tree"
            return report
        report.case_label = CASE1
        report.certified_lower_bound = sft_entropy(sys.base)
        report.counts = list(tree.bounded)
        report.entropy_estimate = entropy_estimate(tree.bounded).value
        return report

    report.drift = search.witness
    found = find_small_scattering(sys, delta, max_support, t, depth, witness=search.witness, threads=threads)
    if found is None:
        report.failed_stage = "scattering"
        return report
    source, smap = found
    report.scattering = smap

    q = find_quadruple(smap.map, grid=grid)
    if q is None:
        report.failed_stage = "quadruple"
        return report
    report.quadruple = q

    there, back = block_maps(sys, source)
    fwd, bwd = (back, there) if q.swapped else (there, back)
    psi_fwd, psi_bwd = q.oriented(smap.map)
    slack = check_conditions(psi_fwd, psi_bwd, *q.points).min_slack
    allowance = 0.1 * slack
    try:
        gap = max(fb.c1_distance(fwd, psi_fwd), fb.c1_distance(bwd, psi_bwd))
    except OutOfDomain:
        gap = math.inf
    evidence.update(reduction_gap=gap, reduction_allowance=allowance)
    if not gap <= allowance or not check_conditions(fwd, bwd, *q.points).ok:
        report.failed_stage = "reduction"
        return report

    start = 0.0 if q.a < 0.0 < q.d else 0.5 * (q.b + q.c)
    evidence["start_point"] = start
    tree = GoodCylinderTree(q, fwd, bwd, start)
    try:
        counts = grow_good_cylinders(tree, max_len)
    except RuleViolation as exc:
        report.failed_stage = "good_cylinders"
        evidence["rule_violation"] = str(exc)
        return report
    report.counts = counts
    full = [1] + counts
    branching = all(full[i + 3] >= 2 * full[i] for i in range(len(full) - 3))
    evidence["branching_law"] = branching
    report.entropy_estimate = entropy_estimate(counts).value
    if not branching:
        report.failed_stage = "branching"
        return report
    report.case_label = CASE2
    report.certified_lower_bound = LOWER_BOUND_CASE2
    return report
