import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlinfo import classical
from nonlinfo.optimize import blahut_rate_distortion


def hb(p):
    return 0.0 if p in (0, 1) else -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def bsc(e):
    return np.array([[1 - e, e], [e, 1 - e]])


def test_entropy_values():
    assert classical.entropy([0.25] * 4) == pytest.approx(2.0)
    assert classical.entropy([1.0, 0.0]) == 0.0
    np.testing.assert_allclose(classical.entropy(np.array([[0.5, 0.5], [1.0, 0.0]])), [1.0, 0.0])


@pytest.mark.parametrize("p", [0.0, 0.1, 0.3, 0.5, 0.97])
def test_binary_entropy_closed_form(p):
    assert classical.binary_entropy(p) == pytest.approx(hb(p), abs=1e-15)


def test_bsc_information_closed_form():
    assert classical.mutual_information([0.5, 0.5], bsc(0.1)) == pytest.approx(1 - hb(0.1))
    assert classical.mutual_information([0.5, 0.5], bsc(0.1)) == pytest.approx(0.531004406, abs=1e-9)


def test_chain_rule_and_output():
    p = np.array([0.2, 0.5, 0.3])
    W = np.array([[0.7, 0.3], [0.1, 0.9], [0.5, 0.5]])
    assert classical.joint_entropy(p, W) == pytest.approx(classical.entropy(p) + classical.conditional_entropy(p, W))
    np.testing.assert_allclose(classical.output(p, W), p @ W)
    post = classical.posterior(p, W)
    np.testing.assert_allclose(post.sum(axis=1), 1.0)
    np.testing.assert_allclose(classical.output(p, W) @ post, p)


def test_information_with_zero_input_mass():
    W = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
    assert classical.mutual_information([0.5, 0.5, 0.0], W) == pytest.approx(1.0)


def test_kl():
    assert classical.kl([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert classical.kl([1.0, 0.0], [0.5, 0.5]) == pytest.approx(1.0)
    assert classical.kl([0.5, 0.5], [1.0, 0.0]) == math.inf


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.0, 0.5))
def test_bernoulli_rate_distortion_matches_blahut(p, D):
    expect = max(hb(p) - hb(D), 0.0) if D < min(p, 1 - p) else 0.0
    assert classical.bernoulli_rate_distortion(p, D) == pytest.approx(expect, abs=1e-12)
    if 0.02 < D < min(p, 1 - p) - 0.02:
        assert blahut_rate_distortion([1 - p, p], 1 - np.eye(2), D) == pytest.approx(expect, abs=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 1), min_size=2, max_size=5))
def test_entropy_bounds(w):
    p = np.array(w) / sum(w)
    h = classical.entropy(p)
    assert -1e-12 <= h <= math.log2(len(p)) + 1e-12
