import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlinfo import classical
from nonlinfo.families import EnumeratedFamily, FamilyError, IntervalBernoulli
from nonlinfo.optimize import (
    DEFAULT,
    ConvergenceError,
    InfeasibleDistortion,
    OptimizerConfig,
    blahut_arimoto,
    blahut_arimoto_batch,
    blahut_rate_distortion,
    golden_section,
    inf_over_family,
    minimax_over_Q,
    sup_information,
    sup_over_family,
    worst_distortion,
)

HAMMING = 1 - np.eye(2)


def hb(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(grid_points=1)
    with pytest.raises(ValueError):
        OptimizerConfig(ba_tol=0)
    assert DEFAULT.grid_points == 2001


def test_golden_section_quadratic():
    x, fx = golden_section(lambda t: -(t - 0.3) ** 2, 0.0, 1.0, 1e-12)
    assert x == pytest.approx(0.3, abs=1e-6) and fx == pytest.approx(0.0, abs=1e-12)
    x, _ = golden_section(lambda t: t, 0.0, 1.0)
    assert x == 1.0
    with pytest.raises(ValueError):
        golden_section(lambda t: t, 1.0, 0.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.9), st.floats(0.01, 0.1), st.floats(0.0, 1.0))
def test_sup_matches_million_point_grid(lo, width, peak):
    fam = IntervalBernoulli.from_bounds(lo, lo + width)

    def obj(stack):
        q = stack[:, 0]
        return -np.abs(q - peak) ** 1.5 + np.sin(3 * q)

    r = sup_over_family(fam, obj, unimodal=True, vectorized=True)
    grid = np.linspace(fam.lo, fam.hi, 1_000_001)
    oracle = np.max(-np.abs(grid - peak) ** 1.5 + np.sin(3 * grid))
    assert r.value >= oracle - 1e-9
    assert r.value <= oracle + 1e-6
    assert obj(fam.member(r.witness)[None])[0] == pytest.approx(r.value, abs=1e-12)


def test_inf_over_family_enumerated():
    fam = EnumeratedFamily([[0.1, 0.9], [0.5, 0.5], [0.3, 0.7]])
    r = inf_over_family(fam, classical.entropy, vectorized=True)
    assert r.witness == 0 and r.value == pytest.approx(hb(0.1))


def test_non_unimodal_reports_grid_resolution():
    fam = IntervalBernoulli.from_bounds(0.0, 1.0)
    r = sup_over_family(fam, lambda m: m[0], OptimizerConfig(grid_points=11))
    assert r.value == 1.0 and r.resolution == pytest.approx(0.1)


@pytest.mark.parametrize("e", [0.0, 0.05, 0.1, 0.3, 0.5])
def test_ba_binary_symmetric(e):
    W = np.array([[1 - e, e], [e, 1 - e]])
    cap = blahut_arimoto(W)
    expect = 1 - (hb(e) if 0 < e < 1 else 0.0)
    assert cap.capacity == pytest.approx(expect, abs=1e-9)
    assert 0 <= cap.bracket <= 1e-9
    assert cap.capacity <= expect + 1e-12


@pytest.mark.parametrize("e", [0.1, 0.4])
def test_ba_z_channel_closed_form(e):
    W = np.array([[1.0, 0.0], [e, 1 - e]])
    expect = math.log2(1 + (1 - e) * e ** (e / (1 - e)))
    cap = blahut_arimoto(W)
    assert cap.capacity == pytest.approx(expect, abs=1e-9)
    assert classical.mutual_information(cap.input.probs, W) == pytest.approx(cap.capacity, abs=1e-12)


def test_ba_erasure_and_batch():
    a = 0.25
    erasure = np.array([[1 - a, a, 0.0], [0.0, a, 1 - a]])
    caps, _, gaps, _ = blahut_arimoto_batch(np.stack([erasure, erasure[:, ::-1]]), 1e-10)
    np.testing.assert_allclose(caps, 1 - a, atol=1e-10)
    assert np.all(gaps <= 1e-10)


def test_ba_cap_and_validation():
    W = np.array([[0.6, 0.4], [0.4, 0.6]])
    with pytest.raises(ConvergenceError) as info:
        blahut_arimoto_batch(np.array([[[0.5, 0.3, 0.2], [0.1, 0.1, 0.8], [0.3, 0.3, 0.4]]]), 1e-15, 2)
    assert info.value.bracket > 0
    with pytest.raises(FamilyError):
        blahut_arimoto(W * 1.1)


@pytest.mark.parametrize("p,D", [(0.3, 0.1), (0.3, 0.2), (0.5, 0.05), (0.2, 0.15)])
def test_minimax_singleton_matches_classical(p, D):
    res = minimax_over_Q(EnumeratedFamily.singleton([1 - p, p]), HAMMING, D)
    assert res.value == pytest.approx(hb(p) - hb(D), abs=1e-6)
    assert res.value == pytest.approx(blahut_rate_distortion([1 - p, p], HAMMING, D), abs=1e-6)
    assert worst_distortion(EnumeratedFamily.singleton([1 - p, p]), HAMMING, res.Q) <= D + 1e-7


@pytest.mark.parametrize("D", [0.05, 0.1, 0.2])
def test_minimax_dominates_every_member(D):
    fam = IntervalBernoulli.from_bounds(0.2, 0.35)
    res = minimax_over_Q(fam, HAMMING, D, bruteforce=True)
    for q in np.linspace(0.2, 0.35, 7):
        assert res.value >= blahut_rate_distortion([q, 1 - q], HAMMING, D) - 1e-6
    assert not res.mismatch
    assert worst_distortion(fam, HAMMING, res.Q) <= D + 1e-7
    assert sup_information(fam, res.Q, DEFAULT).value == pytest.approx(res.value, abs=1e-6)


def test_minimax_interval_containing_half():
    # any family containing the uniform source has value 1 - H_b(D)
    res = minimax_over_Q(IntervalBernoulli.from_bounds(0.4, 0.5), HAMMING, 0.1)
    assert res.value == pytest.approx(1 - hb(0.1), abs=1e-6)


def test_minimax_edges():
    fam = IntervalBernoulli.from_bounds(0.2, 0.4)
    assert minimax_over_Q(fam, HAMMING, 0.45).value == pytest.approx(0.0, abs=1e-9)
    d = np.array([[0.1, 1.0], [1.0, 0.1]])
    with pytest.raises(InfeasibleDistortion) as info:
        minimax_over_Q(fam, d, 0.05)
    assert info.value.min_distortion == pytest.approx(0.1)
    with pytest.raises(FamilyError):
        minimax_over_Q(fam, np.zeros((3, 2)), 0.1)


def test_rd_result_unpacks():
    value, Q = minimax_over_Q(EnumeratedFamily.singleton([0.7, 0.3]), HAMMING, 0.1)
    assert Q.shape == (2, 2)
    np.testing.assert_allclose(Q.sum(axis=1), 1.0)
