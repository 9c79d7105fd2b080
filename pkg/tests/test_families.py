import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from nonlinfo.families import (
    Alphabet,
    EnumeratedChannel,
    EnumeratedFamily,
    FamilyError,
    FiniteDistribution,
    GridFamily,
    IntervalBernoulli,
    IntervalBSC,
    IntervalCategorical,
    capacity,
    channel_from_dict,
    conjugate_expectation,
    family_from_dict,
    sequential_expectation,
    sublinear_expectation,
)

values = st.lists(st.floats(-10, 10, allow_nan=False), min_size=3, max_size=3)


@st.composite
def finite_families(draw, k=3):
    m = draw(st.integers(1, 4))
    raw = np.array(draw(st.lists(st.lists(st.floats(0.01, 1), min_size=k, max_size=k), min_size=m, max_size=m)))
    return EnumeratedFamily(raw / raw.sum(axis=1, keepdims=True))


@st.composite
def box_families(draw, k=3):
    centre = np.array(draw(st.lists(st.floats(0.05, 1), min_size=k, max_size=k)))
    centre /= centre.sum()
    width = draw(st.floats(0, 0.2))
    return IntervalCategorical(np.clip(centre - width, 0, 1), np.clip(centre + width, 0, 1))


# ---------------------------------------------------------------- basics


def test_alphabet_rejects_duplicates_and_empty():
    with pytest.raises(FamilyError):
        Alphabet((0, 0))
    with pytest.raises(FamilyError):
        Alphabet(())


def test_alphabet_index_and_unknown_symbol():
    a = Alphabet(("a", "b", "c"))
    assert a.index("c") == 2
    with pytest.raises(FamilyError):
        a.index("z")


def test_finite_distribution_validates_and_is_read_only():
    d = FiniteDistribution.of([0.25, 0.75], Alphabet(("h", "t")))
    assert d.prob("t") == 0.75
    assert d.expect({"h": 4.0, "t": 0.0}) == 1.0
    with pytest.raises(ValueError):
        d.probs[0] = 0.5
    with pytest.raises(FamilyError):
        FiniteDistribution.of([0.5, 0.6])
    with pytest.raises(FamilyError):
        FiniteDistribution.of([1.5, -0.5])


def test_interval_bernoulli_bounds():
    fam = IntervalBernoulli(0.4167, 0.0833)
    assert fam.lo == pytest.approx(1 / 3, abs=1e-4) and fam.hi == pytest.approx(0.5)
    assert IntervalBernoulli.from_bounds(0.2, 0.4).p == pytest.approx(0.3)
    assert IntervalBernoulli(0.05, 0.1).bounds == pytest.approx((0.0, 0.15))
    with pytest.raises(FamilyError):
        IntervalBernoulli(1.2, 0.1)
    with pytest.raises(FamilyError):
        IntervalBernoulli(0.5, -0.1)
    with pytest.raises(FamilyError):
        IntervalBernoulli.from_bounds(0.6, 0.4)


def test_interval_bernoulli_member_is_distribution():
    fam = IntervalBernoulli.from_bounds(0.2, 0.6)
    params, probs = fam.members(11)
    assert params[0] == 0.2 and params[-1] == 0.6
    np.testing.assert_allclose(probs.sum(axis=1), 1.0)
    np.testing.assert_allclose(probs[:, 0], params)


def test_enumerated_family_rejects_mixed_lengths():
    with pytest.raises((FamilyError, ValueError)):
        EnumeratedFamily([[0.5, 0.5], [0.2, 0.3, 0.5]])


def test_channel_families():
    ch = IntervalBSC(0.1, 0.02)
    W = ch.member(0.09)
    np.testing.assert_allclose(W, [[0.91, 0.09], [0.09, 0.91]])
    assert ch.row_family(0).bounds == pytest.approx((0.88, 0.92))
    with pytest.raises(FamilyError):
        EnumeratedChannel([[[0.5, 0.6], [0.5, 0.5]]])


# ---------------------------------------------------- expectation properties


@settings(max_examples=60, deadline=None)
@given(finite_families(), values, values)
def test_sub_additive(fam, f, g):
    f, g = np.array(f), np.array(g)
    assert sublinear_expectation(fam, f + g) <= sublinear_expectation(fam, f) + sublinear_expectation(fam, g) + 1e-9


@settings(max_examples=60, deadline=None)
@given(box_families(), values, st.floats(0, 50))
def test_positive_homogeneity(fam, f, lam):
    f = np.array(f)
    assert sublinear_expectation(fam, lam * f) == pytest.approx(lam * sublinear_expectation(fam, f), abs=1e-8)


@settings(max_examples=60, deadline=None)
@given(finite_families(), values, st.lists(st.floats(0, 5), min_size=3, max_size=3), st.floats(-5, 5))
def test_monotone_and_constant_preserving(fam, f, bump, c):
    f = np.array(f)
    assert sublinear_expectation(fam, f + np.array(bump)) >= sublinear_expectation(fam, f) - 1e-12
    assert sublinear_expectation(fam, np.full(3, c)) == pytest.approx(c)
    assert sublinear_expectation(fam, f + c) == pytest.approx(sublinear_expectation(fam, f) + c, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(box_families(), values)
def test_duality_exact(fam, f):
    f = np.array(f)
    assert conjugate_expectation(fam, f) == -sublinear_expectation(fam, -f)
    assert conjugate_expectation(fam, f) <= sublinear_expectation(fam, f) + 1e-12


@settings(max_examples=60, deadline=None)
@given(box_families(), values)
def test_box_upper_matches_linear_program(fam, f):
    f = np.array(f)
    res = linprog(-f, A_eq=np.ones((1, 3)), b_eq=[1.0], bounds=list(zip(fam.lower, fam.upper_bounds)),
                  method="highs")
    assert sublinear_expectation(fam, f) == pytest.approx(-res.fun, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 0.5), st.floats(0.0, 0.5), st.floats(-3, 3), st.floats(-3, 3))
def test_interval_upper_matches_dense_grid(lo, width, a, b):
    fam = IntervalBernoulli.from_bounds(lo, lo + width)
    grid = np.linspace(fam.lo, fam.hi, 10_001)
    assert sublinear_expectation(fam, [a, b]) == pytest.approx(np.max(grid * a + (1 - grid) * b), abs=1e-12)


def test_uncertain_mean():
    fam = IntervalBernoulli.from_bounds(1 / 3, 1 / 2)
    assert sublinear_expectation(fam, [0, 1]) == pytest.approx(2 / 3)
    assert conjugate_expectation(fam, [0, 1]) == pytest.approx(1 / 2)


def test_capacity_pair():
    fam = IntervalBernoulli.from_bounds(0.2, 0.5)
    V, v = capacity(fam, [0])
    assert (V, v) == pytest.approx((0.5, 0.2))
    V1, v1 = capacity(fam, [1])
    assert V + v1 == pytest.approx(1.0) and v + V1 == pytest.approx(1.0)
    assert capacity(fam, [0, 1]) == (1.0, 1.0)
    assert capacity(fam, []) == (0.0, 0.0)


@settings(max_examples=40, deadline=None)
@given(finite_families(), st.sets(st.integers(0, 2)))
def test_capacity_duality_random(fam, event):
    V, v = capacity(fam, event)
    Vc, vc = capacity(fam, set(range(3)) - event)
    assert 0 <= v <= V <= 1
    assert V == pytest.approx(1 - vc, abs=1e-15)


def test_sequential_expectation_order_matters():
    # X is in {0,1} with P(X=1) in [0.2, 0.8]; phi(x, y) = x * y - y / 2
    fam = IntervalBernoulli.from_bounds(0.2, 0.8)
    table = np.array([[0.0, -0.5], [0.0, 0.5]])
    # inner: sup over q of E[phi(x, Y)] for fixed x -> x=0: max(-0.5*P(Y=1)) = -0.1, x=1: 0.5*0.8 = 0.4
    # outer: sup over members of p(0)*(-0.1) + p(1)*0.4 = 0.8*0.4 + 0.2*(-0.1) = 0.3
    assert sequential_expectation(fam, fam, table) == pytest.approx(0.3)
    assert sequential_expectation(fam, fam, lambda x, y: table[x, y]) == pytest.approx(0.3)
    with pytest.raises(FamilyError):
        sequential_expectation(fam, fam, np.zeros((3, 2)))


def test_sequential_expectation_asymmetric_example():
    outer = IntervalBernoulli.from_bounds(0.5, 0.5)
    inner = IntervalBernoulli.from_bounds(0.1, 0.9)
    phi = np.array([[1.0, -1.0], [-1.0, 1.0]])
    # outer singleton: average of the inner sups (0.8 each) = 0.8
    assert sequential_expectation(outer, inner, phi) == pytest.approx(0.8)
    # swapped: inner singleton gives row means 0; outer sup of 0 = 0
    assert sequential_expectation(inner, outer, phi.T) == pytest.approx(0.0)


def test_grid_family_is_finite_subset():
    base = IntervalBernoulli.from_bounds(0.3, 0.4)
    g = GridFamily(base, 5)
    params, probs = g.members()
    np.testing.assert_allclose(probs[:, 0], np.linspace(0.3, 0.4, 5))
    assert not g.continuous


def test_box_family_vertices_and_max_entropy():
    fam = IntervalCategorical([0.1, 0.1, 0.1], [0.6, 0.6, 0.6])
    _, verts = fam.extreme_points()
    assert len(verts) == 6
    np.testing.assert_allclose(fam.max_entropy_member(), [1 / 3] * 3)
    with pytest.raises(FamilyError):
        IntervalCategorical([0.5, 0.6], [0.7, 0.8])


@pytest.mark.parametrize("fam", [
    IntervalBernoulli(0.3, 0.1),
    EnumeratedFamily([[0.2, 0.8], [0.5, 0.5]]),
    EnumeratedFamily.singleton([0.25, 0.75]),
    IntervalCategorical([0.1, 0.2, 0.3], [0.5, 0.5, 0.5]),
    GridFamily(IntervalBernoulli(0.3, 0.1), 7),
])
def test_family_json_roundtrip(fam):
    again = family_from_dict(json.loads(json.dumps(fam.to_dict())))
    np.testing.assert_allclose(again.members(31)[1], fam.members(31)[1])


@pytest.mark.parametrize("ch", [IntervalBSC(0.1, 0.02), EnumeratedChannel([[[0.9, 0.1], [0.2, 0.8]]])])
def test_channel_json_roundtrip(ch):
    again = channel_from_dict(json.loads(json.dumps(ch.to_dict())))
    np.testing.assert_allclose(again.members(11)[1], ch.members(11)[1])


def test_loaders_reject_unknown_fields():
    with pytest.raises(FamilyError):
        family_from_dict({"kind": "singleton", "probs": [1.0], "colour": "red"})
    with pytest.raises(FamilyError):
        family_from_dict({"kind": "mystery"})
    with pytest.raises(FamilyError):
        channel_from_dict({"kind": "bsc", "p": 0.1, "extra": 1})
    np.testing.assert_allclose(channel_from_dict({"kind": "identity", "size": 3}).member(0), np.eye(3))
