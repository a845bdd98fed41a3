import numpy as np
from hypothesis import strategies as st

from revskew.fiber import Affine, Compose, IDENTITY, Inverse, Moebius, QuadraticDrift
from revskew.symbolic import FiniteSupport, Periodic

symbols3 = st.integers(0, 2)


@st.composite
def sequences(draw, k=3):
    if draw(st.booleans()):
        word = draw(st.lists(st.integers(0, k - 1), min_size=1, max_size=6))
        return Periodic(k, word, draw(st.integers(-10, 10)))
    support = draw(st.lists(st.integers(0, k - 1), max_size=8))
    return FiniteSupport(k, draw(st.integers(0, k - 1)), support, draw(st.integers(-10, 10)))


@st.composite
def homoclinic(draw, k=3, max_support=8):
    support = draw(st.lists(st.integers(0, k - 1), max_size=max_support))
    return FiniteSupport(k, 0, support, draw(st.integers(-5, 5)))


small_eps = st.floats(-0.3, 0.3, allow_nan=False).filter(lambda e: abs(e) > 1e-3)


@st.composite
def fiber_trees(draw, depth=3):
    """Trees of self-maps of [-1, 1]: every leaf fixes both endpoints."""
    if depth == 0 or draw(st.integers(0, 3)) == 0:
        kind = draw(st.integers(0, 2))
        if kind == 0:
            return IDENTITY
        if kind == 1:
            return QuadraticDrift(draw(small_eps))
        return Moebius.hyperbolic(draw(st.floats(-0.4, 0.4, allow_nan=False)))
    if draw(st.booleans()):
        return Inverse(draw(fiber_trees(depth - 1)))
    return Compose(draw(fiber_trees(depth - 1)), draw(fiber_trees(depth - 1)))


def rng(seed=0):
    return np.random.default_rng(seed)
