import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from qwork import bosonic_codes as bc

rng = np.random.default_rng(11)

CODES = bc.example_codes()


def logical_key(code):
    return sorted(tuple(sorted(q.occupations for q, _ in states))
                  for states in code.logicals)


# ---------------------------------------------------------------------------
# combinatorics


def test_partitions_values():
    assert bc.partitions(6, 3) == 28
    assert bc.partitions(0, 5) == 1
    assert bc.partitions(9, 1) == 1
    with pytest.raises(ValueError):
        bc.partitions(-1, 2)


def test_occupation_vectors_complete():
    vecs = bc.occupation_vectors(4, 3)
    assert len(vecs) == bc.partitions(4, 3)
    assert len(set(vecs)) == len(vecs)
    assert all(sum(v) == 4 for v in vecs)
    assert vecs == sorted(vecs)


def test_distance_values():
    assert bc.qcs_distance((4, 0), (0, 4)) == 4
    assert bc.qcs_distance((1, 2, 3), (1, 2, 3)) == 0
    assert CODES["ex1"].distance() == 2
    with pytest.raises(ValueError):
        bc.qcs_distance((1, 2), (1, 2, 3))


@given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30),
                          st.integers(0, 30)), min_size=3, max_size=3))
def test_distance_metric_axioms(pts):
    u, v, w = pts
    assert bc.qcs_distance(u, v) == bc.qcs_distance(v, u)
    assert (bc.qcs_distance(u, v) == 0) == (u == v)
    assert bc.qcs_distance(u, w) <= bc.qcs_distance(u, v) + bc.qcs_distance(v, w)


# ---------------------------------------------------------------------------
# criteria on the worked examples


@pytest.mark.parametrize("name", sorted(CODES))
def test_examples_pass_both_criteria(name):
    code = CODES[name]
    report = bc.check_nondeformation(code)
    assert report.passed
    assert report.max_discrepancy == 0.0  # exact rational weights
    assert bc.check_orthogonality(code)


def test_example_column_means():
    report = bc.check_nondeformation(CODES["ex1"], t=1)
    assert report.moments[(0,)] == [2.0, 2.0]
    assert report.moments[(1,)] == [2.0, 2.0]


def test_unequal_totals_fail():
    code = bc.BosonicCode(2, 0, [[((1, 1), 1)], [((2, 2), 1)]]).validate()
    report = bc.check_nondeformation(code, t=0)
    assert not report.uniform_total
    assert not report.passed


def test_orthogonality_depends_on_t():
    assert bc.check_orthogonality(CODES["ex4"], t=2)
    assert not bc.check_orthogonality(CODES["ex1"], t=2)
    single = bc.BosonicCode(2, 1, [[((2, 2), 1)]]).validate()
    assert bc.check_orthogonality(single, t=5)  # nothing to collide with


def test_validation_rejects_bad_codes():
    with pytest.raises(ValueError):
        bc.Qcs((1, -2))
    with pytest.raises(ValueError):
        bc.BosonicCode(2, 1, [[((1, 1), 0.5), ((1, 1), 0.5)]]).validate()
    with pytest.raises(ValueError):
        bc.BosonicCode(2, 1, [[((1, 1), 0.7)]]).validate()


# ---------------------------------------------------------------------------
# constructions


def test_construct_t1_matches_worked_codes():
    assert logical_key(bc.construct_t1(2, 2)) == logical_key(CODES["ex1"])
    assert logical_key(bc.construct_t1(3, 3)) == logical_key(CODES["ex3"])
    assert logical_key(bc.construct_t1(6, 3)) == logical_key(CODES["ex2"])
    assert bc.construct_t1(6, 3).n_levels == 10


@pytest.mark.parametrize("n,m", [(2, 2), (3, 3), (4, 2), (5, 4), (6, 3)])
def test_construct_t1_properties(n, m):
    code = bc.construct_t1(n, m)
    assert bc.check_nondeformation(code, t=1).passed
    assert bc.check_orthogonality(code, t=1)
    # orbits partition the layer
    assert sum(len(states) for states in code.logicals) == bc.partitions(n, m)
    # disjoint supports across logicals
    supports = [frozenset(q.occupations for q, _ in states)
                for states in code.logicals]
    for a, b in zip(supports, supports[1:]):
        assert not (a & b)
    # rotation averaging pins every column mean at 2n/m
    report = bc.check_nondeformation(code, t=1)
    for combo, vals in report.moments.items():
        assert np.allclose(vals, 2 * n / m)


def test_construct_t2_matches_worked_code():
    assert logical_key(bc.construct_t2((1, 0, 2))) == logical_key(CODES["ex4"])


def test_construct_t2_reversal_symmetry():
    code = bc.construct_t2((0, 1, 3, 2))
    rev = [tuple(reversed(q.occupations)) for q, _ in code.logicals[0]]
    sup1 = {q.occupations for q, _ in code.logicals[1]}
    assert set(rev) == sup1


@settings(deadline=None, max_examples=40)
@given(st.integers(3, 5).flatmap(
    lambda m: st.lists(st.integers(0, 4), min_size=m, max_size=m)))
def test_construct_t2_random_orbits(x):
    x = tuple(x)
    rots = {x[r:] + x[:r] for r in range(len(x))}
    assume(len(rots) == len(x))
    assume(x[::-1] not in rots)
    code = bc.construct_t2(x)
    assert bc.check_nondeformation(code, t=2).passed
    assert bc.check_orthogonality(code, t=2)


def test_construct_t2_rejects_degenerate():
    with pytest.raises(ValueError):
        bc.construct_t2((1, 1, 1))
    with pytest.raises(ValueError):
        bc.construct_t2((1, 0, 1))  # reversal equals the vector itself
    with pytest.raises(ValueError):
        bc.construct_t2((1, 2))


# ---------------------------------------------------------------------------
# fidelity


def test_fidelity_small_gamma_expansion():
    for g in (0.001, 0.01, 0.05):
        f = bc.code_fidelity(4, 1, g)
        assert abs(f - (1 - 6 * g ** 2 + 8 * g ** 3 - 3 * g ** 4)) < 1e-14


def test_leading_coefficients():
    assert bc.leading_term(4, 1) == 6
    assert bc.leading_term(6, 1) == 15
    assert bc.leading_term(9, 2) == 84
    assert bc.leading_term(16, 3) == 1820
    assert bc.leading_term(20, 3) == 4845
    assert bc.leading_term(50, 4) == 2118760


def test_loss_weight_identity():
    for s in (1, 2):
        vals, target = bc.loss_weight_identity(CODES["ex8"], s)
        assert target == math.comb(9, s)
        assert all(v == target for v in vals)
    for s in (1, 2):
        vals, target = bc.loss_weight_identity(CODES["ex11"], s)
        assert target == math.comb(50, s)
        assert all(v == target for v in vals)  # exact Fractions


@pytest.mark.parametrize("name", ["ex1", "ex3", "ex4", "ex7", "ex8"])
def test_channel_agreement(name):
    code = CODES[name]
    for g in (0.005, 0.01, 0.02):
        chk = bc.verify_by_channel(code, g)
        assert chk.verdict == "exact"
        assert chk.difference < 1e-12
        assert chk.passed


def test_channel_agreement_large_examples():
    for name in ("ex9", "ex10", "ex11"):
        chk = bc.verify_by_channel(CODES[name], 0.01)
        assert chk.verdict == "exact"
        assert chk.difference < 1e-9


def test_m_independence():
    # same total quanta and loss order, different register counts
    g = 0.013
    vals = [bc.verify_by_channel(CODES[n], g).numeric_fidelity
            for n in ("ex4", "ex7", "ex8")]
    assert np.ptp(vals) < 1e-12
    assert abs(vals[0] - bc.code_fidelity(9, 2, g)) < 1e-12


def test_channel_dimension_cap():
    big = bc.BosonicCode(3, 1, [[((30, 0, 0), 1)]]).validate()
    with pytest.raises(ValueError):
        bc.verify_by_channel(big, 0.01)


# ---------------------------------------------------------------------------
# existence bound and rate


def test_existence_values():
    assert bc.existence_min_NT(0, 2, 1) == 2
    assert bc.existence_min_NT(1, 2, 1) == 8
    # two-register closed form
    for t in range(4):
        for lo in range(1, 4):
            need = 1 + lo + lo * (t + 1) * (t + 2) // 2
            assert bc.existence_min_NT(t, 2, lo) == (t + 1) * (need - 1)


def test_existence_monotone():
    grid = [(t, m, lo) for t in range(3) for m in range(2, 5)
            for lo in range(1, 4)]
    for t, m, lo in grid:
        base = bc.existence_min_NT(t, m, lo)
        assert bc.existence_min_NT(t + 1, m, lo) >= base
        assert bc.existence_min_NT(t, m, lo + 1) >= base
        # more registers give more room, never require more quanta
        assert bc.existence_min_NT(t, m + 1, lo) <= base


def test_rate_first_example():
    r = bc.rate(CODES["ex1"])
    assert abs(r - 1 / (2 * math.log2(5))) < 1e-12
    assert round(r, 2) == 0.22


# ---------------------------------------------------------------------------
# weight solving and serialization


def test_balance_weights_recovers_printed():
    w = bc.balance_weights([[(9, 0), (3, 6)], [(0, 9), (6, 3)]], 2)
    assert np.allclose(w[0], [0.25, 0.75], atol=1e-9)
    assert np.allclose(w[1], [0.25, 0.75], atol=1e-9)


def test_balance_weights_rejects():
    with pytest.raises(ValueError):
        bc.balance_weights([[(0, 4), (1, 3)], [(3, 1)]], 1)  # needs w < 0
    with pytest.raises(ValueError):
        bc.balance_weights([[(0, 4), (4, 0)], [(2, 2)]], 2)  # inconsistent


def test_json_round_trip():
    for name in ("ex1", "ex7", "ex10"):
        code = CODES[name]
        back = bc.BosonicCode.from_json(code.to_json())
        assert back.m == code.m and back.t == code.t
        assert logical_key(back) == logical_key(code)
        for sa, sb in zip(code.logicals, back.logicals):
            for (qa, ma), (qb, mb) in zip(sa, sb):
                assert qa == qb
                assert abs(float(ma) - mb) < 1e-12
        assert bc.check_nondeformation(back).passed


def test_qcs_helpers():
    q = bc.Qcs((1, 2, 0))
    assert q.total == 3 and q.m == 3
    assert q.scaled(3).occupations == (3, 6, 0)
    assert list(q) == [1, 2, 0]
    assert q[1] == 2
