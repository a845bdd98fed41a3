"""Monotone C^1 interval maps on J = [-1, 1] as closed-form expression trees.

Primitives are Identity, Affine, QuadraticDrift (x + eps*(1 - x^2)) and
Moebius; trees are closed under Compose and Inverse. Every tree is flattened
to a chain of primitive steps (inverses pushed down to the leaves), which is
what evaluation, differentiation and exact inversion walk over.

All evaluation functions accept floats or numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import OutOfDomain, NotMonotone

__all__ = [
    "FiberMap",
    "Identity",
    "Affine",
    "QuadraticDrift",
    "Moebius",
    "Compose",
    "Inverse",
    "IDENTITY",
    "compose",
    "inverse",
    "compose_all",
    "evaluate",
    "deriv",
    "inv_eval",
    "c1_distance",
    "is_monotone_on",
    "to_json",
    "from_json",
    "random_fiber_map",
]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class FiberMap:
    """Base class of the expression tree. Subclasses are frozen dataclasses."""

    def __call__(self, x):
        return evaluate(self, x)

    def __matmul__(self, other):
        return compose(self, other)

    @cached_property
    def steps(self):
        """Primitive steps in application order, as ``(primitive, inverted)`` pairs."""
        return tuple(_flatten(self, False))

    def deriv(self, x):
        return deriv(self, x)

    def inv(self, y):
        return inv_eval(self, y)


class Primitive(FiberMap):
    def fwd(self, x):
        raise NotImplementedError

    def dfwd(self, x):
        raise NotImplementedError

    def bwd(self, y):
        raise NotImplementedError

    def dbwd(self, y):
        return 1.0 / self.dfwd(self.bwd(y))


@dataclass(frozen=True)
class Identity(Primitive):
    def fwd(self, x):
        return x

    def dfwd(self, x):
        return np.ones_like(x, dtype=float) if isinstance(x, np.ndarray) else 1.0

    def bwd(self, y):
        return y

    def dbwd(self, y):
        return self.dfwd(y)


IDENTITY = Identity()


@dataclass(frozen=True)
class Affine(Primitive):
    scale: float
    offset: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"Affine scale must be > 0, got {self.scale}")

    def fwd(self, x):
        return self.scale * x + self.offset

    def dfwd(self, x):
        return self.scale + 0.0 * x

    def bwd(self, y):
        return (y - self.offset) / self.scale


@dataclass(frozen=True)
class QuadraticDrift(Primitive):
    """``x -> x + eps * (1 - x**2)``; fixes both ends of J when ``|eps| < 1/2``."""

    eps: float

    def __post_init__(self):
        if not abs(self.eps) < 0.5:
            raise ValueError(f"QuadraticDrift needs |eps| < 1/2, got {self.eps}")

    def fwd(self, x):
        return x + self.eps * (1.0 - x * x)

    def dfwd(self, x):
        return 1.0 - 2.0 * self.eps * x

    def bwd(self, y):
        e = self.eps
        if e == 0.0:
            return y
        # root of e*x^2 - x + (y - e) = 0 on the increasing branch, cancellation-free form
        disc = 1.0 - 4.0 * e * (y - e)
        with np.errstate(invalid="ignore"):
            return 2.0 * (y - e) / (1.0 + np.sqrt(disc))


@dataclass(frozen=True)
class Moebius(Primitive):
    """``x -> (a*x + b) / (c*x + d)`` with ``a*d - b*c > 0`` and no pole on [-1, 1]."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not self.a * self.d - self.b * self.c > 0:
            raise ValueError("Moebius map needs ad - bc > 0")
        if not abs(self.d) > abs(self.c):
            raise ValueError("Moebius pole -d/c must lie outside [-1, 1]")

    @classmethod
    def hyperbolic(cls, tau):
        """``(x + tau) / (1 + tau*x)``: a self-map of [-1, 1] fixing both ends."""
        return cls(1.0, tau, tau, 1.0)

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    def fwd(self, x):
        return (self.a * x + self.b) / (self.c * x + self.d)

    def dfwd(self, x):
        return self.det / (self.c * x + self.d) ** 2

    def bwd(self, y):
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.d * y - self.b) / (self.a - self.c * y)


@dataclass(frozen=True)
class Compose(FiberMap):
    """``f o g``: apply ``g`` first."""

    f: FiberMap
    g: FiberMap


@dataclass(frozen=True)
class Inverse(FiberMap):
    f: FiberMap


def _flatten(node, inverted):
    if isinstance(node, Identity):
        return
    if isinstance(node, Primitive):
        yield (node, inverted)
    elif isinstance(node, Compose):
        first, second = (node.f, node.g) if inverted else (node.g, node.f)
        yield from _flatten(first, inverted)
        yield from _flatten(second, inverted)
    elif isinstance(node, Inverse):
        yield from _flatten(node.f, not inverted)
    else:
        raise TypeError(f"not a fiber map: {node!r}")


def inverse(f: FiberMap) -> FiberMap:
    if isinstance(f, Identity):
        return f
    if isinstance(f, Inverse):
        return f.f
    return Inverse(f)


def compose(f: FiberMap, g: FiberMap) -> FiberMap:
    """``f o g`` with structural simplification of identities and ``f o f^-1``."""
    if isinstance(f, Identity):
        return g
    if isinstance(g, Identity):
        return f
    if (isinstance(g, Inverse) and g.f == f) or (isinstance(f, Inverse) and f.f == g):
        return IDENTITY
    return Compose(f, g)


def compose_all(maps) -> FiberMap:
    """Compose maps given in application order: ``compose_all([f0, f1]) = f1 o f0``."""
    out = IDENTITY
    for m in maps:
        out = compose(m, out)
    return out


# round-off slack at the ends of J: values this close to the hull are snapped onto it
HULL_TOL = 1e-12


def _snap(v):
    if np.ndim(v):
        v = np.asarray(v, dtype=float)
        near = (np.abs(v) > 1.0) & (np.abs(v) <= 1.0 + HULL_TOL)
        if near.any():
            v = np.where(near, np.sign(v), v)
        return v
    if 1.0 < abs(v) <= 1.0 + HULL_TOL:
        return math.copysign(1.0, v)
    return v


def _outside(v):
    v = np.asarray(v)
    with np.errstate(invalid="ignore"):
        bad = ~((v >= -1.0) & (v <= 1.0))
    return bool(np.any(bad)), bad


def _first(v, bad):
    return float(np.asarray(v)[bad].flat[0]) if np.ndim(v) else float(v)


def _run(steps, x, check_last):
    v = x
    n = len(steps)
    for k, (p, inv) in enumerate(steps):
        v = p.bwd(v) if inv else p.fwd(v)
        if k < n - 1 or check_last:
            v = _snap(v)
            escaped, bad = _outside(v)
        else:
            bad = np.isnan(np.asarray(v))
            escaped = bool(np.any(bad))
        if escaped:
            raise OutOfDomain(k, _first(v, bad))
    return v


def _as_input(x):
    x = _snap(np.asarray(x, dtype=float) if not isinstance(x, (float, int)) else float(x))
    escaped, bad = _outside(x)
    if escaped:
        raise OutOfDomain(-1, _first(x, bad))
    return x


def evaluate(f: FiberMap, x):
    """Image of ``x`` in [-1, 1]; every intermediate must stay in [-1, 1].

    The final image may leave J. Raises :class:`OutOfDomain` otherwise.
    """
    return _run(f.steps, _as_input(x), check_last=False)


def deriv(f: FiberMap, x):
    """Chain-rule derivative of ``f`` at ``x``."""
    v = _as_input(x)
    steps = f.steps
    out = 1.0 + 0.0 * v
    n = len(steps)
    for k, (p, inv) in enumerate(steps):
        out = out * (p.dbwd(v) if inv else p.dfwd(v))
        v = p.bwd(v) if inv else p.fwd(v)
        if k < n - 1:
            v = _snap(v)
            escaped, bad = _outside(v)
            if escaped:
                raise OutOfDomain(k, _first(v, bad))
    return out


def _inverse_steps(steps):
    return tuple((p, not inv) for p, inv in reversed(steps))


def _bracketed_newton(f, y, lo=-1.0, hi=1.0, tol=1e-13, max_iter=200):
    """Solve ``f(x) = y`` for increasing ``f`` on ``[lo, hi]`` (Newton, bisection-guarded)."""
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        r = evaluate(f, x) - y
        if r > 0:
            hi = x
        else:
            lo = x
        d = deriv(f, x)
        step = x - r / d
        x_new = step if lo < step < hi else 0.5 * (lo + hi)
        if abs(x_new - x) <= tol or hi - lo <= tol:
            return x_new
        x = x_new
    return x


def inv_eval(f: FiberMap, y):
    """The ``x`` in [-1, 1] with ``f(x) = y``.

    Walks the inverted chain in closed form. When that fails but ``y`` lies in
    the image of [-1, 1] (round-off at the hull), falls back to a bracketed
    Newton solve.
    """
    steps = _inverse_steps(f.steps)
    try:
        return _run(steps, y if np.ndim(y) == 0 else np.asarray(y, dtype=float), check_last=True)
    except OutOfDomain as exc:
        failure = exc
    if np.ndim(y):
        return np.array([inv_eval(f, float(v)) for v in np.ravel(y)]).reshape(np.shape(y))
    try:
        lo, hi = evaluate(f, -1.0), evaluate(f, 1.0)
    except OutOfDomain:
        raise failure from None
    if not lo <= y <= hi:
        raise failure
    return _bracketed_newton(f, float(y))


def _golden_max(obj, lo, hi, tol=1e-8):
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = obj(c), obj(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = obj(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = obj(d)
    return max(fc, fd)


def c1_distance(f: FiberMap, g: FiberMap, grid_size: int = 1024) -> float:
    """Grid-plus-golden-section estimate of ``sup max(|f - g|, |f' - g'|)`` on [-1, 1]."""
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    if f == g:
        return 0.0

    def obj(x):
        return np.maximum(np.abs(evaluate(f, x) - evaluate(g, x)), np.abs(deriv(f, x) - deriv(g, x)))

    xs = np.linspace(-1.0, 1.0, grid_size)
    vals = obj(xs)
    k = int(np.argmax(vals))
    best = float(vals[k])
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, grid_size - 1)]
    return max(best, float(_golden_max(lambda x: float(obj(x)), lo, hi)))


def _orientation_preserving(p):
    if isinstance(p, Affine):
        return p.scale > 0
    if isinstance(p, Moebius):
        return p.det > 0
    if isinstance(p, QuadraticDrift):
        return abs(p.eps) < 0.5
    return isinstance(p, Identity)


def is_monotone_on(f: FiberMap, lo: float = -1.0, hi: float = 1.0, grid_size: int = 1024) -> bool:
    if not -1.0 <= lo < hi <= 1.0:
        raise ValueError("need -1 <= lo < hi <= 1")
    if not all(_orientation_preserving(p) for p, _ in f.steps):
        return False
    return bool(np.all(deriv(f, np.linspace(lo, hi, grid_size)) > 0))


def check_monotone(f: FiberMap, grid_size: int = 1024):
    if not is_monotone_on(f, -1.0, 1.0, grid_size):
        raise NotMonotone(repr(f))


def to_json(f: FiberMap) -> dict:
    if isinstance(f, Identity):
        return {"op": "identity"}
    if isinstance(f, Affine):
        return {"op": "affine", "scale": f.scale, "offset": f.offset}
    if isinstance(f, QuadraticDrift):
        return {"op": "qdrift", "eps": f.eps}
    if isinstance(f, Moebius):
        return {"op": "moebius", "a": f.a, "b": f.b, "c": f.c, "d": f.d}
    if isinstance(f, Compose):
        return {"op": "compose", "f": to_json(f.f), "g": to_json(f.g)}
    if isinstance(f, Inverse):
        return {"op": "inverse", "f": to_json(f.f)}
    raise TypeError(f"not a fiber map: {f!r}")


_FIELDS = {
    "identity": (),
    "affine": ("scale", "offset"),
    "qdrift": ("eps",),
    "moebius": ("a", "b", "c", "d"),
    "compose": ("f", "g"),
    "inverse": ("f",),
}


def from_json(obj: dict) -> FiberMap:
    """Build a tree from its JSON form; raises ValueError on malformed input."""
    if not isinstance(obj, dict) or obj.get("op") not in _FIELDS:
        raise ValueError(f"bad fiber map JSON: {obj!r}")
    op = obj["op"]
    fields = _FIELDS[op]
    if set(obj) != {"op", *fields}:
        raise ValueError(f"fiber op {op!r} expects keys {sorted(fields)}, got {sorted(set(obj) - {'op'})}")
    if op == "identity":
        return IDENTITY
    if op == "compose":
        return Compose(from_json(obj["f"]), from_json(obj["g"]))
    if op == "inverse":
        return Inverse(from_json(obj["f"]))
    args = [float(obj[k]) for k in fields]
    return {"affine": Affine, "qdrift": QuadraticDrift, "moebius": Moebius}[op](*args)


def random_fiber_map(rng: np.random.Generator, depth: int = 3, strength: float = 0.3, fix_ends: bool = False) -> FiberMap:
    """A random tree of increasing primitives.

    With ``fix_ends`` every leaf is a diffeomorphism of [-1, 1] fixing both
    ends (drifts and hyperbolic Moebius maps), so any tree is one too.
    """
    if depth <= 0 or rng.random() < 0.3:
        kind = rng.integers(2 if fix_ends else 4)
        if kind == 0:
            return QuadraticDrift(float(rng.uniform(-strength, strength)))
        if kind == 1:
            return Moebius.hyperbolic(float(rng.uniform(-strength, strength)))
        if kind == 2:
            s = float(rng.uniform(0.2, 0.9))
            return Affine(s, float(rng.uniform(-(1 - s), 1 - s)))
        t1, t2 = rng.uniform(-strength, strength, size=2)
        return Moebius(1.0, float(t1), float(t2), 1.0)
    if rng.random() < 0.25:
        return Inverse(random_fiber_map(rng, depth - 1, strength, fix_ends))
    return Compose(
        random_fiber_map(rng, depth - 1, strength, fix_ends), random_fiber_map(rng, depth - 1, strength, fix_ends)
    )
