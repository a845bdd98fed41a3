"""Shift spaces over finite alphabets.

Bi-infinite sequences come in two canonical flavours, periodic and
finite-support-over-a-background, which is all the homoclinic/periodic
bookkeeping needs. Subshifts of finite type are given by forbidden words;
their block counts and entropy come from a transfer matrix on (m-1)-grams.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import EmptySubshift

__all__ = [
    "Alphabet",
    "SymbolicSequence",
    "Periodic",
    "FiniteSupport",
    "Word",
    "Sft",
    "shift",
    "involute",
    "is_symmetric",
    "enumerate_words",
    "block_counts",
    "transfer_matrix",
    "sft_entropy",
    "sequence_to_json",
    "sequence_from_json",
    "sft_to_json",
    "sft_from_json",
]


@dataclass(frozen=True)
class Alphabet:
    size: int

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 2:
            raise ValueError(f"alphabet size must be an integer >= 2, got {self.size!r}")

    @property
    def symbols(self):
        return range(self.size)

    def check(self, symbols):
        for a in symbols:
            if not (0 <= a < self.size):
                raise ValueError(f"symbol {a!r} not in alphabet of size {self.size}")


def _as_alphabet(alphabet) -> Alphabet:
    return alphabet if isinstance(alphabet, Alphabet) else Alphabet(int(alphabet))


def _primitive_root(word):
    n = len(word)
    for p in range(1, n + 1):
        if n % p == 0 and word == word[:p] * (n // p):
            return word[:p]
    return word


def _least_rotation(word):
    # O(n^2) is plenty for the word lengths used here
    n = len(word)
    best = min(range(n), key=lambda r: word[r:] + word[:r])
    return best, word[best:] + word[:best]


class SymbolicSequence:
    """A bi-infinite sequence, indexable as ``seq[i]`` for any integer ``i``.

    Instances are immutable and stored in canonical form, so ``==`` decides
    equality of the underlying sequences exactly.
    """

    alphabet: Alphabet

    def __getitem__(self, i):
        raise NotImplementedError

    def window(self, start, stop):
        """Symbols at indices ``start <= i < stop`` as a tuple."""
        return tuple(self[i] for i in range(start, stop))

    def _key(self):
        raise NotImplementedError

    def __eq__(self, other):
        if not isinstance(other, SymbolicSequence):
            return NotImplemented
        return self.alphabet == other.alphabet and self._key() == other._key()

    def __hash__(self):
        return hash((self.alphabet, self._key()))


@dataclass(frozen=True, eq=False)
class Periodic(SymbolicSequence):
    """``seq[i] = word[(i + phase) % len(word)]``.

    Canonical form: ``word`` is primitive and the least of its rotations.
    """

    alphabet: Alphabet
    word: tuple
    phase: int = 0

    def __post_init__(self):
        alphabet = _as_alphabet(self.alphabet)
        word = tuple(int(a) for a in self.word)
        if not word:
            raise ValueError("periodic word must be nonempty")
        alphabet.check(word)
        word = _primitive_root(word)
        phase = int(self.phase) % len(word)
        r, word = _least_rotation(word)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "word", word)
        object.__setattr__(self, "phase", (phase - r) % len(word))

    @property
    def period(self):
        return len(self.word)

    def __getitem__(self, i):
        return self.word[(i + self.phase) % len(self.word)]

    def _key(self):
        if len(self.word) == 1:
            return ("const", self.word[0])
        return ("periodic", self.word, self.phase)


@dataclass(frozen=True, eq=False)
class FiniteSupport(SymbolicSequence):
    """``seq[i] = support[i - offset]`` on the support window, ``background`` elsewhere.

    Canonical form: ``support`` neither starts nor ends with ``background``;
    an empty support has ``offset == 0``.
    """

    alphabet: Alphabet
    background: int
    support: tuple = ()
    offset: int = 0

    def __post_init__(self):
        alphabet = _as_alphabet(self.alphabet)
        bg = int(self.background)
        support = [int(a) for a in self.support]
        alphabet.check(support + [bg])
        offset = int(self.offset)
        while support and support[0] == bg:
            support.pop(0)
            offset += 1
        while support and support[-1] == bg:
            support.pop()
        if not support:
            offset = 0
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "background", bg)
        object.__setattr__(self, "support", tuple(support))
        object.__setattr__(self, "offset", offset)

    @property
    def lo(self):
        """First index of the support (meaningless for an empty support)."""
        return self.offset

    @property
    def hi(self):
        """Last index of the support."""
        return self.offset + len(self.support) - 1

    def __getitem__(self, i):
        j = i - self.offset
        if 0 <= j < len(self.support):
            return self.support[j]
        return self.background

    def _key(self):
        if not self.support:
            return ("const", self.background)
        return ("finite", self.background, self.support, self.offset)


@dataclass(frozen=True)
class Word:
    """A finite block of symbols; ``anchor`` is the index of ``symbols[0]``."""

    symbols: tuple
    anchor: int = 0

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(a) for a in self.symbols))

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)


def shift(s: SymbolicSequence, n: int) -> SymbolicSequence:
    """Return the sequence ``i -> s[i + n]``."""
    if isinstance(s, Periodic):
        return Periodic(s.alphabet, s.word, s.phase + n)
    return FiniteSupport(s.alphabet, s.background, s.support, s.offset - n)


def involute(s: SymbolicSequence) -> SymbolicSequence:
    """Return the reflected sequence ``k -> s[-k]``."""
    if isinstance(s, Periodic):
        L = len(s.word)
        return Periodic(s.alphabet, s.word[::-1], (L - 1 - s.phase) % L)
    if not s.support:
        return s
    return FiniteSupport(s.alphabet, s.background, s.support[::-1], -s.hi)


def is_symmetric(s: SymbolicSequence, max_shift: int = 20):
    """Smallest ``|k| <= max_shift`` with ``involute(s) == shift(s, k)``, else None.

    Ties between ``k`` and ``-k`` resolve to the nonnegative one.
    """
    if max_shift < 0:
        raise ValueError("max_shift must be >= 0")
    r = involute(s)
    for k in range(max_shift + 1):
        if r == shift(s, k):
            return k
        if k and r == shift(s, -k):
            return -k
    return None


@dataclass(frozen=True)
class Sft:
    """Subshift of finite type: sequences avoiding every word in ``forbidden``."""

    alphabet: Alphabet
    forbidden: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        alphabet = _as_alphabet(self.alphabet)
        words = {tuple(int(a) for a in w) for w in self.forbidden}
        for w in words:
            if not w:
                raise ValueError("forbidden words must be nonempty")
            alphabet.check(w)
        # drop words that contain a shorter forbidden word
        keep = {w for w in words if not any(v != w and _contains(w, v) for v in words)}
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "forbidden", frozenset(keep))

    @classmethod
    def full(cls, alphabet):
        return cls(alphabet)

    @property
    def max_forbidden_len(self):
        return max((len(w) for w in self.forbidden), default=0)

    def is_admissible(self, word) -> bool:
        word = tuple(word)
        return not any(_contains(word, v) for v in self.forbidden)

    def _ends_clean(self, word) -> bool:
        # no forbidden word ends at the last position
        return not any(len(v) <= len(word) and word[len(word) - len(v):] == v for v in self.forbidden)

    def forbid(self, *words) -> "Sft":
        return Sft(self.alphabet, self.forbidden | {tuple(w) for w in words})


def _contains(word, sub):
    n = len(sub)
    return any(word[i:i + n] == sub for i in range(len(word) - n + 1))


def enumerate_words(t: Sft, length: int) -> list:
    """All admissible words of ``length`` in lexicographic order."""
    if length < 0:
        raise ValueError("length must be >= 0")
    out = []
    k = t.alphabet.size
    stack = [()]
    # depth-first with children pushed in reverse, so pops come out lexicographically
    while stack:
        w = stack.pop()
        if len(w) == length:
            out.append(Word(w))
            continue
        for a in range(k - 1, -1, -1):
            v = w + (a,)
            if t._ends_clean(v):
                stack.append(v)
    return out


def _state_len(t: Sft):
    return max(t.max_forbidden_len - 1, 1)


def transfer_matrix(t: Sft):
    """States (admissible q-grams, q = max(m-1, 1)) and the 0/1 transition matrix."""
    q = _state_len(t)
    states = [w.symbols for w in enumerate_words(t, q)]
    index = {s: i for i, s in enumerate(states)}
    A = np.zeros((len(states), len(states)), dtype=np.int64)
    for i, s in enumerate(states):
        for a in t.alphabet.symbols:
            v = s + (a,)
            if t._ends_clean(v) and t.is_admissible(v):
                A[i, index[v[1:]]] = 1
    return states, A


def block_counts(t: Sft, max_len: int) -> list:
    """``[|B_1|, ..., |B_max_len|]``, exact integers."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    q = _state_len(t)
    counts = [len(enumerate_words(t, i)) for i in range(1, min(q, max_len + 1))]
    if max_len < q:
        return counts
    states, A = transfer_matrix(t)
    succ = [np.flatnonzero(row).tolist() for row in A]
    vec = [1] * len(states)
    counts.append(sum(vec))
    for _ in range(q + 1, max_len + 1):
        nxt = [0] * len(states)
        for u, c in enumerate(vec):
            if c:
                for v in succ[u]:
                    nxt[v] += c
        vec = nxt
        counts.append(sum(vec))
    return counts


def _prune(A):
    alive = np.ones(A.shape[0], dtype=bool)
    while True:
        sub = A[np.ix_(alive, alive)]
        dead = (sub.sum(axis=0) == 0) | (sub.sum(axis=1) == 0)
        if not dead.any():
            return alive
        idx = np.flatnonzero(alive)
        alive[idx[dead]] = False


def _perron_root(B, tol, max_iter=100_000):
    """Spectral radius of an irreducible nonnegative matrix.

    Power iteration on ``B + I`` (primitive, same Perron vector) with
    Collatz-Wielandt bounds as the stopping rule.
    """
    M = B.astype(float) + np.eye(B.shape[0])
    x = np.ones(B.shape[0])
    lo, hi = 0.0, np.inf
    for _ in range(max_iter):
        y = M @ x
        ratios = y / x
        lo, hi = max(lo, ratios.min()), min(hi, ratios.max())
        rho = 0.5 * (lo + hi) - 1.0
        if 0.5 * (hi - lo) <= tol * max(rho, 1e-300):
            return rho
        x = y / y.max()
    raise RuntimeError("power iteration did not converge")


def sft_entropy(t: Sft, tol: float = 1e-10) -> float:
    """Topological entropy ``ln rho(A)`` of the pruned transfer matrix."""
    _, A = transfer_matrix(t)
    alive = _prune(A)
    if not alive.any():
        raise EmptySubshift(f"no bi-infinite sequence avoids {sorted(t.forbidden)}")
    A = A[np.ix_(alive, alive)]
    ncomp, labels = connected_components(csr_matrix(A), directed=True, connection="strong")
    rho = 0.0
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        B = A[np.ix_(idx, idx)]
        if B.sum() == 0:
            continue
        rho = max(rho, _perron_root(B, tol))
    return math.log(rho)


def sequence_to_json(s: SymbolicSequence) -> dict:
    if isinstance(s, Periodic):
        return {"kind": "periodic", "word": list(s.word), "phase": s.phase, "alphabet": s.alphabet.size}
    return {
        "kind": "finite",
        "background": s.background,
        "support": list(s.support),
        "offset": s.offset,
        "alphabet": s.alphabet.size,
    }


def sequence_from_json(obj: dict, alphabet=None) -> SymbolicSequence:
    kind = obj.get("kind")
    if kind == "periodic":
        symbols = list(obj["word"])
    elif kind == "finite":
        symbols = list(obj["support"]) + [obj["background"]]
    else:
        raise ValueError(f"unknown sequence kind {kind!r}")
    if alphabet is None:
        alphabet = obj.get("alphabet", max(max(symbols) + 1, 2))
    if kind == "periodic":
        return Periodic(alphabet, obj["word"], obj.get("phase", 0))
    return FiniteSupport(alphabet, obj["background"], obj["support"], obj.get("offset", 0))


def sft_to_json(t: Sft) -> dict:
    return {"alphabet": t.alphabet.size, "forbidden": [list(w) for w in sorted(t.forbidden)]}


def sft_from_json(obj: dict) -> Sft:
    unknown = set(obj) - {"alphabet", "forbidden"}
    if unknown:
        raise ValueError(f"unknown SFT keys: {sorted(unknown)}")
    return Sft(obj["alphabet"], frozenset(tuple(w) for w in obj.get("forbidden", [])))


def brute_force_words(t: Sft, length: int) -> list:
    """Filter all ``k**length`` words; the independent check on :func:`enumerate_words`."""
    return [w for w in itertools.product(t.alphabet.symbols, repeat=length) if t.is_admissible(w)]
