"""Scattering maps of homoclinic itineraries.

For a homoclinic sequence (finite support over background 0) in a reversible
finite-context system, the fiber maps are the identity away from the
excursion, so the scattering map is the finite composition of the entries
whose windows meet the support.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import fiber as fb
from .errors import NotHomoclinic, NotSymmetric, TailUnstable, WrongShape, OutOfDomain
from .fiber import IDENTITY, FiberMap
from .skewprod import SkewSystem, fiber_for, find_drift
from .symbolic import FiniteSupport, SymbolicSequence, involute, is_symmetric, sequence_to_json

__all__ = [
    "ScatteringMap",
    "PhiAlgebraReport",
    "scattering_map",
    "check_phi_algebra",
    "symmetric_scattering_is_identity",
    "homoclinic_words",
    "truncate_witness",
    "find_small_scattering",
    "IDENTITY_FLOOR",
]

IDENTITY_FLOOR = 1e-9
TAIL_TOL = 1e-12


@dataclass(frozen=True)
class ScatteringMap:
    map: FiberMap
    source: FiniteSupport
    window: tuple
    d1_to_identity: float

    def to_json(self):
        return {
            "sequence": sequence_to_json(self.source),
            "fiber": fb.to_json(self.map),
            "window": list(self.window),
            "d1_to_identity": self.d1_to_identity,
        }


def _compose_window(sys, s, lo, hi):
    return fb.compose_all(fiber_for(sys, s, i) for i in range(lo, hi + 1))


def _check_homoclinic(s):
    if not isinstance(s, FiniteSupport):
        raise NotHomoclinic(f"{s!r} is not of finite support")
    if s.background != 0:
        raise NotHomoclinic(f"background must be 0, got {s.background}")


def scattering_map(sys: SkewSystem, s: SymbolicSequence, grid_size: int = 1024) -> ScatteringMap:
    """Compose the fiber maps over every window that meets the support of ``s``.

    The result is checked for tail stability: widening the window by 2 on both
    sides must not move the map by more than 1e-12 in d1.
    """
    _check_homoclinic(s)
    m = sys.context_half
    lo, hi = s.offset - m, s.offset + len(s.support) + m - 1
    psi = _compose_window(sys, s, lo, hi)
    wide = _compose_window(sys, s, lo - 2, hi + 2)
    if wide != psi:
        try:
            gap = fb.c1_distance(wide, psi, grid_size)
        except OutOfDomain:
            gap = float("inf")
        if gap > TAIL_TOL:
            raise TailUnstable(f"widening the window moves the map by {gap:.3e}")
    try:
        d1 = fb.c1_distance(psi, IDENTITY, grid_size)
    except OutOfDomain:
        d1 = float("inf")
    return ScatteringMap(psi, s, (lo, hi), d1)


@dataclass
class PhiAlgebraReport:
    residuals: dict

    @property
    def max_residual(self):
        return max(self.residuals.values())

    def violated(self, tol):
        return [name for name, r in self.residuals.items() if r > tol]


def check_phi_algebra(sys: SkewSystem, grid_size: int = 1024) -> PhiAlgebraReport:
    """Residuals of the leaf-map identities of the three-leaf model.

    In identified coordinates the identities read: opposite transitions are
    mutually inverse, ``table[(a,b)] o table[(b,a)] = id``, and staying on a
    leaf is the identity, ``table[(a,a)] = id``.
    """
    if sys.context_half != 1 or sys.alphabet.size != 3:
        raise WrongShape("the leaf-map model needs context_half 1 on three symbols")
    out = {}
    for a, b in itertools.combinations(range(3), 2):
        f = fb.compose(sys.table[(a, b)], sys.table[(b, a)])
        out[f"table[({a},{b})] o table[({b},{a})] = id"] = _d1_or_inf(f, grid_size)
    for a in range(3):
        out[f"table[({a},{a})] = id"] = _d1_or_inf(sys.table[(a, a)], grid_size)
    return PhiAlgebraReport(out)


def _d1_or_inf(f, grid_size):
    try:
        return fb.c1_distance(f, IDENTITY, grid_size)
    except OutOfDomain:
        return float("inf")


def symmetric_scattering_is_identity(sys: SkewSystem, s: SymbolicSequence, grid_size: int = 1024) -> float:
    """d1 from the identity of the scattering map of a symmetric homoclinic ``s``."""
    _check_homoclinic(s)
    reach = 2 * (abs(s.offset) + len(s.support)) + 1
    if is_symmetric(s, reach) is None:
        raise NotSymmetric(f"{s!r} is not symmetric")
    return scattering_map(sys, s, grid_size).d1_to_identity


def homoclinic_words(sys: SkewSystem, max_support: int):
    """Admissible homoclinic supports ordered by length, then lexicographically."""
    k = sys.alphabet.size
    pad = (0,) * max(2 * sys.context_half, sys.base.max_forbidden_len)
    for L in range(1, max_support + 1):
        for w in itertools.product(range(k), repeat=L):
            if w[0] == 0 or w[-1] == 0:
                continue
            if sys.base.is_admissible(pad + w + pad):
                yield w


def truncate_witness(witness, alphabet) -> FiniteSupport:
    """Keep the itinerary on steps ``0..h`` and put background 0 everywhere else."""
    anchor = witness.itinerary.anchor
    sym = witness.itinerary.symbols
    kept = [sym[i - anchor] for i in range(0, witness.hit_index + 1)]
    return FiniteSupport(alphabet, 0, kept, 0)


def _candidate(sys, w, grid_size):
    s = FiniteSupport(sys.alphabet, 0, w, 0)
    try:
        return s, scattering_map(sys, s, grid_size)
    except (TailUnstable, OutOfDomain):
        return s, None


def find_small_scattering(
    sys: SkewSystem,
    delta: float,
    max_support: int,
    t: float = 0.5,
    depth: int = 40,
    *,
    witness=None,
    floor: float = IDENTITY_FLOOR,
    threads: int = 1,
    grid_size: int = 1024,
):
    """A nonsymmetric homoclinic sequence whose scattering map ``psi`` has ``floor < d1(psi, id) < delta``.

    Needs a drift witness (found with :func:`find_drift` unless given). The
    witness truncated to a homoclinic sequence is kept as a fallback candidate
    after the ordered search over supports of length ``<= max_support``.
    Returns ``(sequence, ScatteringMap)`` or None.
    """
    if not delta > 0:
        raise ValueError("delta must be > 0")
    if witness is None:
        witness = find_drift(sys, t, depth)
    if witness is None:
        return None

    def ok(s, smap):
        if smap is None or not floor < smap.d1_to_identity < delta:
            return False
        reach = 2 * (abs(s.offset) + len(s.support)) + 1
        return is_symmetric(s, reach) is None

    words = list(homoclinic_words(sys, max_support))
    strata = {}
    for w in words:
        strata.setdefault(len(w), []).append(w)
    for L in sorted(strata):
        batch = strata[L]
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                results = list(pool.map(lambda w: _candidate(sys, w, grid_size), batch))
        else:
            results = [_candidate(sys, w, grid_size) for w in batch]
        for s, smap in results:
            if ok(s, smap):
                return s, smap

    trunc = truncate_witness(witness, sys.alphabet)
    pad = (0,) * max(2 * sys.context_half, sys.base.max_forbidden_len)
    if trunc.support and sys.base.is_admissible(pad + trunc.support + pad):
        s, smap = _candidate(sys, trunc.support, grid_size)
        if ok(s, smap):
            return s, smap
    return None


def inversion_residual(sys: SkewSystem, s: FiniteSupport, grid_size: int = 1024) -> float:
    """d1 of ``psi(reflect s) o psi(s)`` to the identity; zero for reversible systems."""
    f = scattering_map(sys, s, grid_size).map
    g = scattering_map(sys, involute(s), grid_size).map
    return _d1_or_inf(fb.compose(g, f), grid_size)
