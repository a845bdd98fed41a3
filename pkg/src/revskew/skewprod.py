"""Finite-context skew products ``F(w, x) = (shift w, f_w(x))`` over a shift space.

The fiber map at step ``i`` depends on the even-length context
``w[i-m+1] ... w[i+m]``. With the base involution ``S(w, x) = (reflect w, x)``,
``S F S = F^-1`` holds exactly when ``table[reversed(d)] == table[d]^-1`` for
every context ``d`` and palindromic contexts carry the identity; that is the
finite condition :func:`validate_reversible` checks.
"""
from __future__ import annotations

import heapq
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import fiber as fb
from .errors import InadmissibleContext, InvalidParams, OutOfDomain
from .fiber import IDENTITY, FiberMap, Inverse, Moebius, QuadraticDrift
from .symbolic import Alphabet, Sft, SymbolicSequence, Word, enumerate_words, sft_from_json, sft_to_json

__all__ = [
    "SkewSystem",
    "ReversibilityCertificate",
    "DriftWitness",
    "DriftSearch",
    "Orbit",
    "fiber_for",
    "itinerary_map",
    "validate_reversible",
    "orbit",
    "drift_search",
    "find_drift",
    "bounded_orbit_tree",
    "make_model_family",
    "three_symbol_table",
    "system_to_json",
    "system_from_json",
]


@dataclass(frozen=True)
class SkewSystem:
    alphabet: Alphabet
    context_half: int
    table: dict
    base: Sft = None

    def __post_init__(self):
        alphabet = self.alphabet if isinstance(self.alphabet, Alphabet) else Alphabet(int(self.alphabet))
        m = int(self.context_half)
        if m < 1:
            raise InvalidParams("context_half must be >= 1")
        base = self.base if self.base is not None else Sft(alphabet)
        if base.alphabet != alphabet:
            raise InvalidParams("base SFT alphabet differs from system alphabet")
        table = {tuple(int(a) for a in k): v for k, v in dict(self.table).items()}
        for ctx, f in table.items():
            if len(ctx) != 2 * m:
                raise InvalidParams(f"context {ctx} has length {len(ctx)}, expected {2 * m}")
            alphabet.check(ctx)
            if not isinstance(f, FiberMap):
                raise InvalidParams(f"table[{ctx}] is not a FiberMap")
        missing = [w.symbols for w in enumerate_words(base, 2 * m) if w.symbols not in table]
        if missing:
            raise InvalidParams(f"table misses admissible contexts, e.g. {missing[0]}")
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "context_half", m)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "table", table)

    @property
    def contexts(self):
        """Base-admissible contexts in lexicographic order."""
        return sorted(c for c in self.table if self.base.is_admissible(c))

    def entry(self, ctx) -> FiberMap:
        ctx = tuple(ctx)
        if ctx not in self.table or not self.base.is_admissible(ctx):
            raise InadmissibleContext(f"context {ctx} is not base-admissible")
        return self.table[ctx]

    def max_entry_distance(self, grid_size=1024) -> float:
        """``|F - I|_1`` over the table, i.e. the largest d1 of an entry to the identity."""
        return max(fb.c1_distance(self.table[c], IDENTITY, grid_size) for c in self.contexts)


def fiber_for(sys: SkewSystem, s: SymbolicSequence, i: int) -> FiberMap:
    """Fiber map applied at step ``i`` along ``s``: the entry for ``s[i-m+1 .. i+m]``."""
    m = sys.context_half
    return sys.entry(s.window(i - m + 1, i + m + 1))


def itinerary_map(sys: SkewSystem, symbols) -> FiberMap:
    """Composition of the entries for each length-2m window of ``symbols``, first window first."""
    n = 2 * sys.context_half
    symbols = tuple(symbols)
    return fb.compose_all(sys.entry(symbols[j:j + n]) for j in range(len(symbols) - n + 1))


# --- reversibility -----------------------------------------------------------


@dataclass
class ReversibilityCertificate:
    verified: bool
    tolerance: float
    worst_pair: tuple
    residuals: dict
    palindrome_residuals: dict

    def to_json(self):
        ctx, res = self.worst_pair
        return {
            "verified": self.verified,
            "tolerance": self.tolerance,
            "worst_pair": {"context": list(ctx) if ctx is not None else None, "residual": _finite(res)},
            "residuals": [{"context": list(c), "residual": _finite(r)} for c, r in sorted(self.residuals.items())],
            "palindrome_residuals": [
                {"context": list(c), "residual": _finite(r)} for c, r in sorted(self.palindrome_residuals.items())
            ],
        }


def _finite(x):
    return x if math.isfinite(x) else None


def _residual(f, grid_size):
    try:
        return fb.c1_distance(f, IDENTITY, grid_size)
    except OutOfDomain:
        return math.inf


def validate_reversible(sys: SkewSystem, tol: float = 1e-10, grid_size: int = 1024) -> ReversibilityCertificate:
    """Check ``table[rev d] o table[d] = id`` for all contexts and ``table[d] = id`` for palindromes."""
    if not tol > 0:
        raise ValueError("tol must be > 0")
    residuals, palindromes = {}, {}
    for d in sys.contexts:
        r = d[::-1]
        if r not in sys.table or not sys.base.is_admissible(r):
            residuals[d] = math.inf
        else:
            residuals[d] = _residual(fb.compose(sys.table[r], sys.table[d]), grid_size)
        if r == d:
            palindromes[d] = _residual(sys.table[d], grid_size)
    worst = (None, 0.0)
    for d, res in list(residuals.items()) + list(palindromes.items()):
        if res > worst[1]:
            worst = (d, res)
    verified = all(v <= tol for v in residuals.values()) and all(v <= tol for v in palindromes.values())
    return ReversibilityCertificate(verified, tol, worst, residuals, palindromes)


# --- orbits --------------------------------------------------------------------


@dataclass
class Orbit:
    """Values ``f^i_w(x0)`` for ``i_from <= i <= i_to``; NaN past the first escape each way."""

    i_from: int
    i_to: int
    values: np.ndarray

    def __getitem__(self, i):
        if not self.i_from <= i <= self.i_to:
            raise IndexError(i)
        return float(self.values[i - self.i_from])

    @property
    def indices(self):
        return np.arange(self.i_from, self.i_to + 1)

    @property
    def defined(self):
        return ~np.isnan(self.values)


def _step(f, v):
    if not -1.0 <= v <= 1.0:
        return math.nan
    try:
        return float(fb.evaluate(f, v))
    except OutOfDomain:
        return math.nan


def orbit(sys: SkewSystem, s: SymbolicSequence, x0: float, i_from: int, i_to: int) -> Orbit:
    """Forward and backward fiber orbit of ``x0`` along ``s``.

    A value outside J is recorded once; iteration in that direction stops there.
    """
    if not i_from <= 0 <= i_to:
        raise ValueError("need i_from <= 0 <= i_to")
    if not -1.0 <= x0 <= 1.0:
        raise OutOfDomain(-1, x0)
    vals = np.full(i_to - i_from + 1, np.nan)
    vals[-i_from] = x0
    v = x0
    for i in range(0, i_to):
        v = _step(fiber_for(sys, s, i), v)
        if math.isnan(v):
            break
        vals[i + 1 - i_from] = v
        if not -1.0 <= v <= 1.0:
            break
    v = x0
    for i in range(-1, i_from - 1, -1):
        v = _step(fb.inverse(fiber_for(sys, s, i)), v)
        if math.isnan(v):
            break
        vals[i - i_from] = v
        if not -1.0 <= v <= 1.0:
            break
    return Orbit(i_from, i_to, vals)


# --- drift search ---------------------------------------------------------------


@dataclass
class DriftWitness:
    """``|f^h(0)| > t`` along ``itinerary`` (anchored so that symbols[0] is index 1-m)."""

    itinerary: Word
    hit_index: int
    value: float
    context_half: int

    def replay(self, sys: SkewSystem, x0: float = 0.0):
        """Orbit values ``f^0(x0) .. f^h(x0)`` recomputed along the itinerary."""
        n = 2 * self.context_half
        w = self.itinerary.symbols
        out = [x0]
        v = x0
        for j in range(self.hit_index):
            v = float(fb.evaluate(sys.entry(w[j:j + n]), v))
            out.append(v)
        return out

    def to_json(self, sys: SkewSystem = None):
        obj = {
            "itinerary": list(self.itinerary.symbols),
            "anchor": self.itinerary.anchor,
            "hit_index": self.hit_index,
            "value": self.value,
        }
        if sys is not None:
            obj["orbit"] = self.replay(sys)
        return obj


@dataclass
class DriftSearch:
    witness: DriftWitness | None
    nodes: int
    exhausted: bool
    depth: int
    threshold: float


def drift_search(sys: SkewSystem, t: float, depth: int, budget: int = 10**6, x0: float = 0.0) -> DriftSearch:
    """Best-first search (priority ``|value|``) for an itinerary driving ``x0`` beyond ``t``.

    ``exhausted`` is True when every admissible itinerary up to ``depth`` steps
    was covered (states repeating with equal value are visited once) before
    the node budget ran out. A miss is only ever a bounded-depth report.
    """
    if not 0 < t < 1:
        raise ValueError("need 0 < t < 1")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    m = sys.context_half
    n = 2 * m
    heap = []
    seen = {}
    nodes = 0

    def push(word, v, h):
        key = (word[len(word) - n + 1:], round(v, 12))
        if seen.get(key, depth + 1) <= h:
            return
        seen[key] = h
        heapq.heappush(heap, (-abs(v), h, word, v))

    for ctx in sys.contexts:
        v = float(fb.evaluate(sys.table[ctx], x0))
        nodes += 1
        if abs(v) > t:
            return DriftSearch(DriftWitness(Word(ctx, 1 - m), 1, v, m), nodes, False, depth, t)
        push(ctx, v, 1)
    while heap:
        if nodes >= budget:
            return DriftSearch(None, nodes, False, depth, t)
        _, h, word, v = heapq.heappop(heap)
        if h >= depth:
            continue
        for a in sys.alphabet.symbols:
            w = word + (a,)
            if not sys.base._ends_clean(w):
                continue
            v2 = float(fb.evaluate(sys.table[w[-n:]], v))
            nodes += 1
            if abs(v2) > t:
                return DriftSearch(DriftWitness(Word(w, 1 - m), h + 1, v2, m), nodes, False, depth, t)
            push(w, v2, h + 1)
    return DriftSearch(None, nodes, True, depth, t)


def find_drift(sys: SkewSystem, t: float, depth: int, budget: int = 10**6):
    """First itinerary found with ``|f^h(0)| > t``, ``h <= depth``; None if the bounded search misses."""
    return drift_search(sys, t, depth, budget).witness


@dataclass
class BoundedTree:
    """Level counts of the exhaustive bounded-orbit tree."""

    depth: int
    threshold: float
    bounded: list
    admissible: list
    max_abs: float

    @property
    def full_branching(self):
        return self.bounded == self.admissible


def bounded_orbit_tree(sys: SkewSystem, t: float, depth: int, x0: float = 0.0, threads: int = 1) -> BoundedTree:
    """Count, per step ``h <= depth``, itineraries whose orbit of ``x0`` stays in ``[-t, t]``.

    ``admissible`` holds the number of base-admissible one-step extensions of
    the surviving itineraries; full branching means nothing was lost.
    """
    m = sys.context_half
    roots = [w.symbols for w in enumerate_words(sys.base, 2 * m - 1)]
    if threads > 1 and len(roots) > 1:
        chunks = [roots[i::threads] for i in range(threads)]
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda r: _bounded_levels(sys, t, depth, x0, r), chunks))
    else:
        parts = [_bounded_levels(sys, t, depth, x0, roots)]
    bounded = [sum(p[0][h] for p in parts) for h in range(depth)]
    admissible = [sum(p[1][h] for p in parts) for h in range(depth)]
    return BoundedTree(depth, t, bounded, admissible, max(p[2] for p in parts))


def _bounded_levels(sys, t, depth, x0, roots):
    m = sys.context_half
    n = 2 * m
    k = sys.alphabet.size
    # a suffix of 2m-1 symbols is encoded base-k
    code = {s: sum(a * k ** (n - 2 - j) for j, a in enumerate(s)) for s in roots}
    states = np.array([code[s] for s in roots], dtype=np.int64)
    values = np.full(len(roots), float(x0))
    entries = [(c, sys.table[c]) for c in sys.contexts]
    bounded, admissible, max_abs = [], [], abs(x0)
    width = k ** (n - 1)
    for _ in range(depth):
        new_states, new_values, n_adm = [], [], 0
        for ctx, f in entries:
            head = sum(a * k ** (n - 2 - j) for j, a in enumerate(ctx[:-1]))
            sel = states == head
            if not sel.any():
                continue
            n_adm += int(sel.sum())
            v = fb.evaluate(f, values[sel])
            new_states.append(np.full(v.shape, (head * k + ctx[-1]) % width, dtype=np.int64))
            new_values.append(np.atleast_1d(v))
        states = np.concatenate(new_states) if new_states else np.zeros(0, dtype=np.int64)
        values = np.concatenate(new_values) if new_values else np.zeros(0)
        if values.size:
            max_abs = max(max_abs, float(np.abs(values).max()))
        keep = np.abs(values) <= t
        states, values = states[keep], values[keep]
        admissible.append(n_adm)
        bounded.append(int(keep.sum()))
    return bounded, admissible, max_abs


# --- model families -------------------------------------------------------------


def three_symbol_table(psi: FiberMap, chi: FiberMap, rho: FiberMap) -> dict:
    """Reversible m=1 table on {0,1,2}: (0,1)->psi, (0,2)->chi, (1,2)->rho, reverses inverted."""
    table = {(a, a): IDENTITY for a in range(3)}
    for (p, q), f in {(0, 1): psi, (0, 2): chi, (1, 2): rho}.items():
        table[(p, q)] = f
        table[(q, p)] = fb.inverse(f)
    return table


def _drift(eps):
    try:
        return QuadraticDrift(eps)
    except ValueError as exc:
        raise InvalidParams(str(exc)) from None


def make_model_family(kind: str, **params) -> SkewSystem:
    """Generate a reversible model system.

    ``near_identity``  k, eps=0.02, lam=0.5: drift amplitude eps * lam**(k/2)
    ``drifting``       eps=0.05: (0,1) -> x + eps(1-x^2), (1,2) -> its mirror's inverse;
                       the periodic itinerary (012) drifts upward
    ``coboundary``     g (symbol -> FiberMap) or eps=0.1, alphabet=3, context_half=1:
                       f_w = g(w_1) o g(w_0)^-1, which telescopes along every itinerary
    ``random``         alphabet=3, context_half=1, seed=0, depth=2, strength=0.2
    """
    allowed = {
        "near_identity": {"k", "eps", "lam"},
        "drifting": {"eps"},
        "coboundary": {"g", "eps", "alphabet", "context_half"},
        "random": {"alphabet", "context_half", "seed", "depth", "strength"},
    }
    if kind not in allowed:
        raise InvalidParams(f"unknown family {kind!r}; expected one of {sorted(allowed)}")
    extra = set(params) - allowed[kind]
    if extra:
        raise InvalidParams(f"unknown parameters for {kind}: {sorted(extra)}")

    if kind == "near_identity":
        k = params.get("k", 0)
        eps = params.get("eps", 0.02)
        lam = params.get("lam", 0.5)
        if int(k) != k or k < 0:
            raise InvalidParams("k must be a nonnegative integer")
        if not 0 < lam < 1:
            raise InvalidParams("lam must lie in (0, 1)")
        e = eps * lam ** (k / 2)
        table = three_symbol_table(_drift(e), Moebius.hyperbolic(e / 2), Inverse(_drift(-e)))
        return SkewSystem(3, 1, table)

    if kind == "drifting":
        eps = params.get("eps", 0.05)
        return SkewSystem(3, 1, three_symbol_table(_drift(eps), IDENTITY, Inverse(_drift(-eps))))

    if kind == "coboundary":
        n = params.get("alphabet", 3)
        m = params.get("context_half", 1)
        g = params.get("g")
        if g is None:
            eps = params.get("eps", 0.1)
            g = {0: IDENTITY, 1: _drift(eps), 2: _drift(-eps)}
            g = {a: g.get(a, _drift(eps * (a - 1) / max(n - 1, 1))) for a in range(n)}
        if set(g) != set(range(n)):
            raise InvalidParams("g must assign a map to every symbol")
        table = {}
        for w in enumerate_words(Sft(n), 2 * m):
            d = w.symbols
            table[d] = fb.compose(g[d[m]], fb.inverse(g[d[m - 1]]))
        return SkewSystem(n, m, table)

    n = params.get("alphabet", 3)
    m = params.get("context_half", 1)
    rng = np.random.default_rng(params.get("seed", 0))
    depth = params.get("depth", 2)
    strength = params.get("strength", 0.2)
    table = {}
    for w in enumerate_words(Sft(n), 2 * m):
        d = w.symbols
        r = d[::-1]
        if d == r:
            table[d] = IDENTITY
        elif d < r:
            f = fb.random_fiber_map(rng, depth, strength, fix_ends=True)
            table[d] = f
            table[r] = fb.inverse(f)
    return SkewSystem(n, m, table)


# --- JSON ------------------------------------------------------------------------


def system_to_json(sys: SkewSystem) -> dict:
    return {
        "alphabet": sys.alphabet.size,
        "context_half": sys.context_half,
        "base": {"forbidden": sft_to_json(sys.base)["forbidden"]},
        "table": [{"context": list(c), "map": fb.to_json(sys.table[c])} for c in sorted(sys.table)],
    }


def system_from_json(obj: dict) -> SkewSystem:
    """Parse a system config; unknown keys and malformed entries raise ValueError."""
    if not isinstance(obj, dict):
        raise ValueError("system config must be a JSON object")
    unknown = set(obj) - {"alphabet", "context_half", "base", "table"}
    if unknown:
        raise ValueError(f"unknown system keys: {sorted(unknown)}")
    try:
        n = obj["alphabet"]
        base = sft_from_json({"alphabet": n, **obj.get("base", {})})
        table = {}
        for item in obj["table"]:
            if set(item) != {"context", "map"}:
                raise ValueError(f"table entries need exactly 'context' and 'map', got {sorted(item)}")
            ctx = tuple(item["context"])
            if ctx in table:
                raise ValueError(f"duplicate context {ctx}")
            table[ctx] = fb.from_json(item["map"])
        return SkewSystem(n, obj["context_half"], table, base)
    except KeyError as exc:
        raise ValueError(f"missing key {exc}") from None
    except InvalidParams as exc:
        raise ValueError(str(exc)) from None
