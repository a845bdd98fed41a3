import json
import math

import numpy as np
import pytest

from revskew import fiber as fb
from revskew.entropy_cert import (
    CASE1,
    CASE2,
    INCONCLUSIVE,
    GoodCylinderTree,
    block_maps,
    certify,
    entropy_estimate,
    good_counts_brute,
    grow_good_cylinders,
)
from revskew.errors import EmptyCounts, NotReversible
from revskew.fiber import IDENTITY, Affine, Inverse, QuadraticDrift
from revskew.ifs_cert import IfsQuadruple, find_quadruple
from revskew.scattering import scattering_map
from revskew.skewprod import SkewSystem, make_model_family
from revskew.symbolic import FiniteSupport, Sft, block_counts, sft_entropy

LN2_3 = math.log(2) / 3


@pytest.fixture(scope="module")
def drift_tree():
    psi = QuadraticDrift(0.05)
    q = find_quadruple(psi)
    tree = GoodCylinderTree(q, psi, Inverse(psi), 0.0 if q.a < 0 < q.d else 0.5 * (q.b + q.c))
    counts = grow_good_cylinders(tree, 30)
    return tree, counts


def test_branching_law(drift_tree):
    _, counts = drift_tree
    full = [1] + counts
    assert all(full[i + 3] >= 2 * full[i] for i in range(len(full) - 3))
    assert entropy_estimate(counts).value >= LN2_3 - 0.02


def test_brute_force_dominates_tree(drift_tree):
    tree, counts = drift_tree
    brute, codes = good_counts_brute(tree.forward, tree.backward, tree.quadruple, tree.start, 15)
    assert all(b >= c for b, c in zip(brute, counts[:15]))
    # every tree word is good: its codes are a subset of the brute-force set
    for n in range(1, 16):
        assert np.isin(tree.codes[n], codes[n]).all()


def test_tree_words_replay_inside(drift_tree):
    tree, _ = drift_tree
    a, d = tree.quadruple.a, tree.quadruple.d
    for w in tree.words(8):
        v, vals = tree.start, []
        for s in w:
            v = float(fb.evaluate(tree.forward if s == 1 else tree.backward, v))
            vals.append(v)
        assert all(a < x < d for x in vals)
        assert v == pytest.approx(tree.replay(w), abs=1e-15)


def test_tree_words_sorted(drift_tree):
    tree, _ = drift_tree
    words = tree.words(10)
    assert words == sorted(words)
    assert len(set(words)) == len(words)


def test_start_outside_gives_empty_levels():
    psi = QuadraticDrift(0.05)
    q = find_quadruple(psi)
    tree = GoodCylinderTree(q, psi, Inverse(psi), 0.5 * (q.d + 1.0))
    assert grow_good_cylinders(tree, 10) == [0] * 10


def test_identity_maps_fail_precondition():
    with pytest.raises(ValueError):
        grow_good_cylinders(GoodCylinderTree(IfsQuadruple(-0.6, -0.2, 0.2, 0.6), IDENTITY, IDENTITY), 5)


def test_max_len_bounds():
    psi = QuadraticDrift(0.05)
    with pytest.raises(ValueError):
        grow_good_cylinders(GoodCylinderTree(find_quadruple(psi), psi, Inverse(psi)), 63)


def test_entropy_estimate_examples():
    est = entropy_estimate([2**i for i in range(1, 21)])
    assert np.allclose(est.series, math.log(2), atol=1e-15)
    fib = block_counts(Sft(2, frozenset({(1, 1)})), 24)
    assert fib[:5] == [2, 3, 5, 8, 13]
    golden = sft_entropy(Sft(2, frozenset({(1, 1)})))
    assert abs(entropy_estimate(fib).value - golden) < 0.02
    with pytest.raises(EmptyCounts):
        entropy_estimate([])
    with pytest.raises(EmptyCounts):
        entropy_estimate([3, 0])


def test_block_maps_are_scattering_maps():
    sys = make_model_family("drifting", eps=0.05)
    s = FiniteSupport(3, 0, [1, 2], 0)
    there, back = block_maps(sys, s)
    xs = np.linspace(-1, 1, 201)
    smap = scattering_map(sys, s).map
    assert np.allclose(fb.evaluate(there, xs), fb.evaluate(smap, xs), atol=1e-14)
    assert np.allclose(fb.evaluate(back, fb.evaluate(there, xs)), xs, atol=1e-12)


def test_certify_coboundary_case1():
    rep = certify(make_model_family("coboundary"), depth=40, exhaustive_depth=12)
    assert rep.case_label == CASE1
    assert rep.drift is None
    assert rep.evidence["bounded_counts"] == rep.evidence["admissible_counts"]
    assert len(rep.counts) == 12
    assert rep.certified_lower_bound == pytest.approx(math.log(3))


def test_certify_drifting_case2():
    sys = make_model_family("drifting", eps=0.05)
    rep = certify(sys)
    assert rep.case_label == CASE2
    assert rep.certified_lower_bound == LN2_3
    assert round(rep.certified_lower_bound, 4) == 0.2310
    assert len(rep.counts) == 30
    assert rep.evidence["branching_law"]
    assert rep.evidence["reduction_gap"] <= rep.evidence["reduction_allowance"]
    obj = rep.to_json(sys)
    assert obj["drift"]["orbit"][-1] == pytest.approx(rep.drift.value)
    lines = rep.counts_csv().splitlines()
    assert lines[0] == "i,|B_i|,ln|B_i|/i" and len(lines) == 31


def test_certify_under_budget_is_inconclusive():
    rep = certify(make_model_family("drifting", eps=0.05), depth=1)
    assert rep.case_label == INCONCLUSIVE and rep.failed_stage == "drift_search"


def test_certify_small_delta_is_inconclusive():
    rep = certify(make_model_family("drifting", eps=0.05), delta=1e-6)
    assert rep.case_label == INCONCLUSIVE and rep.failed_stage == "scattering"


def test_certify_rejects_irreversible():
    table = {(0, 0): IDENTITY, (1, 1): IDENTITY, (0, 1): Affine(1.0, 0.01), (1, 0): IDENTITY}
    with pytest.raises(NotReversible) as exc:
        certify(SkewSystem(2, 1, table))
    assert not exc.value.certificate.verified


def test_certify_threads_bit_identical():
    sys = make_model_family("drifting", eps=0.05)
    a = json.dumps(certify(sys, threads=1).to_json(sys), sort_keys=True)
    b = json.dumps(certify(sys, threads=4).to_json(sys), sort_keys=True)
    assert a == b
