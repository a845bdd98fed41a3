import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import sequences
from revskew.errors import EmptySubshift
from revskew.symbolic import (
    Alphabet,
    FiniteSupport,
    Periodic,
    Sft,
    block_counts,
    brute_force_words,
    enumerate_words,
    involute,
    is_symmetric,
    sequence_from_json,
    sequence_to_json,
    sft_entropy,
    sft_from_json,
    sft_to_json,
    shift,
    transfer_matrix,
)

GOLDEN = math.log((1 + math.sqrt(5)) / 2)


def pointwise(s, lo=-20, hi=20):
    return [s[i] for i in range(lo, hi + 1)]


# --- sequences ---------------------------------------------------------------


def test_alphabet_needs_two_symbols():
    with pytest.raises(ValueError):
        Alphabet(1)


def test_periodic_canonical_form():
    # same bi-infinite sequence, different presentations
    assert Periodic(2, [0, 1, 0, 1], 0) == Periodic(2, [0, 1], 0)
    assert Periodic(2, [1, 0], 0) == Periodic(2, [0, 1], 1)
    assert pointwise(Periodic(2, [1, 0], 0)) == pointwise(Periodic(2, [0, 1], 1))


def test_finite_support_trims_background():
    s = FiniteSupport(3, 0, [0, 0, 1, 2, 0], 4)
    assert s.support == (1, 2) and s.offset == 6
    assert s == FiniteSupport(3, 0, [1, 2], 6)


def test_constant_sequences_agree_across_classes():
    assert FiniteSupport(3, 2, [], 0) == Periodic(3, [2])
    assert hash(FiniteSupport(3, 2, [], 5)) == hash(Periodic(3, [2], 1))


def test_symbols_checked():
    with pytest.raises(ValueError):
        FiniteSupport(2, 0, [2], 0)
    with pytest.raises(ValueError):
        Periodic(2, [])


def test_shift_examples():
    assert shift(Periodic(2, [0, 1], 0), 1) == Periodic(2, [0, 1], 1)
    assert shift(FiniteSupport(2, 0, [1], 0), 3) == FiniteSupport(2, 0, [1], -3)


@given(sequences(), st.integers(-15, 15))
def test_shift_is_index_translation(s, n):
    t = shift(s, n)
    assert all(t[i] == s[i + n] for i in range(-20, 21))


@given(sequences())
def test_shift_group_action(s):
    assert shift(shift(s, 2), -2) == s


def test_involute_example():
    s = FiniteSupport(2, 0, [1, 1, 0, 1], 0)
    assert involute(s) == FiniteSupport(2, 0, [1, 0, 1, 1], -3)


@given(sequences())
def test_involute_is_reflection_and_involution(s):
    r = involute(s)
    assert all(r[k] == s[-k] for k in range(-20, 21))
    assert involute(r) == s


@given(sequences())
def test_involute_conjugates_shift(s):
    # (R sigma s)_k = s_{1-k}
    lhs = involute(shift(s, 1))
    rhs = shift(involute(s), -1)
    assert pointwise(lhs) == pointwise(rhs)
    assert all(lhs[k] == s[1 - k] for k in range(-20, 21))


def test_is_symmetric_examples():
    assert is_symmetric(FiniteSupport(2, 0, [1, 1, 1], -1)) == 0
    assert is_symmetric(FiniteSupport(2, 0, [1, 1, 0, 1], 0), 20) is None
    assert is_symmetric(Periodic(2, [0, 1])) is not None


def test_is_symmetric_against_direct_comparison():
    s = FiniteSupport(2, 0, [1, 1, 0, 1], 0)
    assert not any(pointwise(involute(s), -40, 40) == pointwise(shift(s, k), -40, 40) for k in range(-20, 21))
    p = Periodic(2, [0, 1])
    assert any(pointwise(involute(p)) == pointwise(shift(p, k)) for k in range(2))


@given(sequences(), st.integers(-6, 6))
def test_symmetric_shift_is_genuine(s, n):
    k = is_symmetric(shift(s, n), 40)
    if k is not None:
        t = shift(s, n)
        assert involute(t) == shift(t, k)


# --- subshifts ---------------------------------------------------------------


def test_forbidden_superwords_dropped():
    t = Sft(2, frozenset({(1, 1), (0, 1, 1)}))
    assert t.forbidden == frozenset({(1, 1)})


def test_enumerate_examples():
    assert len(enumerate_words(Sft(2), 3)) == 8
    assert len(enumerate_words(Sft(2, frozenset({(0, 1, 0), (1, 0, 1)})), 4)) == 10
    assert len(enumerate_words(Sft(2, frozenset({(1, 1)})), 5)) == 13


def test_enumerate_is_lexicographic():
    t = Sft(3, frozenset({(1, 2), (2, 2)}))
    words = [w.symbols for w in enumerate_words(t, 4)]
    assert words == sorted(words)
    assert words == brute_force_words(t, 4)


forbidden_sets = st.frozensets(
    st.lists(st.integers(0, 2), min_size=1, max_size=3).map(tuple), max_size=4
)


@settings(max_examples=40, deadline=None)
@given(forbidden_sets, st.integers(1, 6))
def test_enumerate_matches_brute_force(forbidden, n):
    t = Sft(3, forbidden)
    assert [w.symbols for w in enumerate_words(t, n)] == brute_force_words(t, n)


def test_block_count_examples():
    assert block_counts(Sft(2), 5) == [2, 4, 8, 16, 32]
    assert block_counts(Sft(2, frozenset({(1, 1)})), 5) == [2, 3, 5, 8, 13]
    assert block_counts(Sft(2, frozenset({(0, 1, 0), (1, 0, 1)})), 5) == [2, 4, 6, 10, 16]


@settings(max_examples=40, deadline=None)
@given(forbidden_sets)
def test_block_counts_match_brute_force(forbidden):
    t = Sft(3, forbidden)
    assert block_counts(t, 6) == [len(brute_force_words(t, n)) for n in range(1, 7)]


def test_block_counts_exact_beyond_float():
    counts = block_counts(Sft(2), 80)
    assert counts[-1] == 2**80 and isinstance(counts[-1], int)


def test_transfer_matrix_full_shift():
    states, A = transfer_matrix(Sft(2, frozenset({(1, 1, 1)})))
    assert A.shape == (4, 4) and len(states) == 4
    assert int(A.sum()) == 7


def test_entropy_examples():
    assert abs(sft_entropy(Sft(2)) - math.log(2)) < 1e-10
    assert abs(sft_entropy(Sft(2, frozenset({(1, 1)}))) - GOLDEN) < 1e-10
    assert abs(sft_entropy(Sft(2, frozenset({(0, 1, 0), (1, 0, 1)}))) - GOLDEN) < 1e-10


def test_entropy_against_block_count_fit():
    for forbidden in ({(1, 1)}, {(0, 1, 0), (1, 0, 1)}):
        t = Sft(2, frozenset(forbidden))
        c = block_counts(t, 24)
        # ratio of successive counts converges to the spectral radius
        assert abs(math.log(c[-1] / c[-2]) - sft_entropy(t)) < 1e-8


def test_entropy_against_dense_eigenvalues():
    t = Sft(3, frozenset({(1, 2), (2, 2), (0, 1, 1)}))
    rho = max(abs(np.linalg.eigvals(transfer_matrix(t)[1].astype(float))))
    assert abs(sft_entropy(t) - math.log(rho)) < 1e-10


def test_entropy_reducible_graph():
    # two disjoint components: the full shift on {0} and the golden mean shift on {1, 2}
    t = Sft(3, frozenset({(0, 1), (0, 2), (1, 0), (2, 0), (2, 2)}))
    assert abs(sft_entropy(t) - GOLDEN) < 1e-10


def test_entropy_single_periodic_orbit_is_zero():
    t = Sft(2, frozenset({(0, 0), (1, 1)}))
    assert abs(sft_entropy(t)) < 1e-12


def test_empty_subshift():
    with pytest.raises(EmptySubshift):
        sft_entropy(Sft(2, frozenset({(0,), (1,)})))
    # finite words exist but no bi-infinite sequence
    with pytest.raises(EmptySubshift):
        sft_entropy(Sft(2, frozenset({(0, 0), (1, 1), (0, 1)})))


def test_sequence_json_round_trip():
    for s in (Periodic(3, [0, 1, 2], 2), FiniteSupport(3, 0, [1, 2], -4)):
        assert sequence_from_json(sequence_to_json(s)) == s


def test_sft_json_round_trip_and_unknown_keys():
    t = Sft(3, frozenset({(1, 2), (0, 0, 1)}))
    assert sft_from_json(sft_to_json(t)) == t
    with pytest.raises(ValueError):
        sft_from_json({"alphabet": 2, "forbidden": [], "extra": 1})


def test_admissibility_of_window():
    t = Sft(2, frozenset({(1, 1)}))
    assert t.is_admissible((0, 1, 0, 1))
    assert not t.is_admissible((0, 1, 1))
    assert all(t.is_admissible(w) for w in itertools.product((0,), repeat=5))
