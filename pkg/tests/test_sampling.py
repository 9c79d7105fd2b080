import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binomtest

from nonlinfo.families import EnumeratedFamily, FamilyError, IntervalBernoulli
from nonlinfo.rng import shard_sizes, stream, streams
from nonlinfo.sampling import (
    Drift,
    Fixed,
    PerBlockExtremes,
    PerBlockUniform,
    PerSymbolUniform,
    bernoulli_fit_confidence,
    lln_experiment,
    max_mean_estimate,
    policy_from_dict,
    policy_to_dict,
    sample_source,
    to_text,
    to_u8,
    window_stats,
)

FAM = IntervalBernoulli.from_bounds(1 / 3, 1 / 2)


# ------------------------------------------------------------------- rng


def test_streams_are_deterministic_and_distinct():
    a = stream(3, 0).random(4)
    np.testing.assert_array_equal(a, stream(3, 0).random(4))
    assert not np.array_equal(a, stream(3, 1).random(4))
    assert not np.array_equal(a, stream(4, 0).random(4))
    np.testing.assert_array_equal(streams(3, 2, offset=1)[0].random(4), stream(3, 1).random(4))
    with pytest.raises(ValueError):
        stream(-1)
    with pytest.raises(ValueError):
        stream(1 << 64)


@given(st.integers(0, 10**6), st.integers(1, 64))
def test_shard_sizes_partition(total, shards):
    sizes = shard_sizes(total, shards)
    assert sum(sizes) == total and len(sizes) == shards
    assert max(sizes) - min(sizes) <= 1


# -------------------------------------------------------------- policies


@pytest.mark.parametrize("policy", [PerSymbolUniform(), PerBlockExtremes(7), PerBlockUniform(7), Drift(50),
                                    Fixed(0.4)])
def test_sampler_reproducible_and_in_family(policy):
    a = sample_source(FAM, policy, 300, seed=11)
    b = sample_source(FAM, policy, 300, seed=11)
    np.testing.assert_array_equal(a.symbols, b.symbols)
    assert np.all((a.thetas >= 1 / 3 - 1e-15) & (a.thetas <= 0.5 + 1e-15))
    assert set(np.unique(a.symbols)) <= {0, 1}
    assert policy_from_dict(policy_to_dict(policy)) == policy


def test_block_policies_hold_parameter_within_block():
    s = sample_source(FAM, PerBlockUniform(10), 100, seed=1)
    assert np.all(s.thetas.reshape(10, 10) == s.thetas.reshape(10, 10)[:, :1])
    e = sample_source(FAM, PerBlockExtremes(5), 20, seed=1)
    np.testing.assert_allclose(e.thetas, np.repeat([1 / 3, 0.5, 1 / 3, 0.5], 5))


def test_symbol_convention_matches_first_symbol_probability():
    s = sample_source(IntervalBernoulli(0.8, 0.0), Fixed(0.8), 200_000, seed=0)
    assert np.mean(s.symbols == 0) == pytest.approx(0.8, abs=0.005)


def test_finite_family_sampling():
    fam = EnumeratedFamily([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    s = sample_source(fam, PerBlockExtremes(3), 12, seed=2)
    np.testing.assert_array_equal(s.symbols, [0, 0, 0, 2, 2, 2, 0, 0, 0, 2, 2, 2])
    with pytest.raises(FamilyError):
        sample_source(fam, Fixed(5), 3)
    with pytest.raises(FamilyError):
        sample_source(FAM, Fixed(0.9), 3)


def test_policy_validation():
    with pytest.raises(ValueError):
        PerBlockUniform(0)
    with pytest.raises(ValueError):
        policy_from_dict({"kind": "chaotic"})
    with pytest.raises(ValueError):
        policy_from_dict({"kind": "drift", "speed": 3})


# ------------------------------------------------------------ estimators


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=12, max_size=60), st.integers(1, 4), st.integers(1, 3))
def test_max_mean_invariants(x, n_block, m_blocks):
    if len(x) < n_block * m_blocks:
        with pytest.raises(ValueError):
            max_mean_estimate(x, n_block, m_blocks)
        return
    hi, lo = max_mean_estimate(x, n_block, m_blocks)
    used = np.array(x[: n_block * m_blocks])
    assert used.min() - 1e-12 <= lo <= used.mean() + 1e-12 <= hi + 2e-12 <= used.max() + 3e-12
    if m_blocks == 1:
        assert hi == pytest.approx(lo)


def test_max_mean_recovers_endpoints():
    x = sample_source(FAM, PerBlockExtremes(2000), 20_000, seed=0).symbols
    hi, lo = max_mean_estimate(x, 2000, 10)
    assert hi == pytest.approx(2 / 3, abs=0.04) and lo == pytest.approx(0.5, abs=0.04)


def _naive_windows(x, window, sub, count):
    out = []
    for n in range(window, len(x) + 1):
        means = [np.mean(x[n - window + i * sub: n - window + (i + 1) * sub]) for i in range(count)]
        out.append((n, max(means), min(means)))
    return out


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=20, max_size=60), st.sampled_from([(12, 4, 3), (20, 5, 4)]))
def test_window_stats_match_naive(x, shape):
    window, sub, count = shape
    if len(x) < window:
        return
    ws = window_stats(x, window, sub, count)
    for (n, u, l), w in zip(_naive_windows(np.array(x, float), window, sub, count), ws):
        assert w.n_index == n and w.upper_mean == pytest.approx(u) and w.lower_mean == pytest.approx(l)
    assert np.all(ws.gap >= 0)


def test_window_stats_float_samples_and_csv():
    x = np.linspace(0, 1, 30)
    ws = window_stats(x, 10, 5, 2)
    assert ws.n[0] == 10 and ws.n[-1] == 30
    assert ws.to_csv().startswith("n,upper_mean,lower_mean\r\n")
    with pytest.raises(ValueError):
        window_stats(x, 10, 3, 3)
    with pytest.raises(ValueError):
        window_stats(x[:5], 10, 5, 2)


def test_bernoulli_fit_matches_scipy_binomtest():
    x = sample_source(FAM, PerBlockUniform(128), 1024, seed=4).symbols
    grid = np.round(np.arange(1, 100) / 100, 2)
    fit = bernoulli_fit_confidence(x, grid)
    k = int(x.sum())
    for p, c in fit:
        assert c == pytest.approx(binomtest(k, len(x), p).pvalue, rel=1e-9, abs=1e-300)
    with pytest.raises(ValueError):
        bernoulli_fit_confidence([0, 2])


def test_lln_targets_are_reached():
    rep = lln_experiment(FAM, [0, 1], 0.6, n_max=20_000, seed=1)
    assert rep.lower == pytest.approx(0.5) and rep.upper == pytest.approx(2 / 3)
    assert rep.min_distance < 0.01
    assert rep.argmin_n >= rep.burn_in
    with pytest.warns(UserWarning):
        lln_experiment(FAM, [0, 1], 0.9, n_max=2000)


def test_lln_with_policy_is_reproducible():
    a = lln_experiment(FAM, [0, 1], 0.55, n_max=3000, seed=2, policy=PerSymbolUniform())
    b = lln_experiment(FAM, [0, 1], 0.55, n_max=3000, seed=2, policy=PerSymbolUniform())
    assert a.to_dict() == b.to_dict()


def test_exports():
    assert to_text([0, 1, 1]) == "0\n1\n1\n"
    assert to_u8([0, 1, 255]) == b"\x00\x01\xff"
    with pytest.raises(ValueError):
        to_u8([256])
