"""Sample paths from families under selection policies, block max/min mean
estimates, sliding-window upper/lower means, and the law-of-large-numbers and
Bernoulli-fit experiments.

A policy picks the member used for each symbol. For interval families the
choice is the parameter itself; for finite families it is a member index.
Symbols are returned as alphabet indices.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.stats import binom

from nonlinfo.families import DistributionFamily, FamilyError, values_on
from nonlinfo.rng import stream


# ------------------------------------------------------------------ policies


@dataclass(frozen=True)
class PerSymbolUniform:
    kind: str = field(default="per_symbol_uniform", init=False)


@dataclass(frozen=True)
class PerBlockExtremes:
    block_len: int = 500
    kind: str = field(default="per_block_extremes", init=False)

    def __post_init__(self):
        if self.block_len < 1:
            raise ValueError("block_len must be at least 1")


@dataclass(frozen=True)
class PerBlockUniform:
    block_len: int = 500
    kind: str = field(default="per_block_uniform", init=False)

    def __post_init__(self):
        if self.block_len < 1:
            raise ValueError("block_len must be at least 1")


@dataclass(frozen=True)
class Drift:
    period: int = 1000
    kind: str = field(default="drift", init=False)

    def __post_init__(self):
        if self.period < 1:
            raise ValueError("period must be at least 1")


@dataclass(frozen=True)
class Fixed:
    theta: float
    kind: str = field(default="fixed", init=False)


SelectionPolicy = PerSymbolUniform | PerBlockExtremes | PerBlockUniform | Drift | Fixed

_POLICIES = {
    "per_symbol_uniform": PerSymbolUniform,
    "per_block_extremes": PerBlockExtremes,
    "per_block_uniform": PerBlockUniform,
    "drift": Drift,
    "fixed": Fixed,
}


def policy_from_dict(d: dict) -> SelectionPolicy:
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in _POLICIES:
        raise ValueError(f"unknown policy kind {kind!r}")
    try:
        return _POLICIES[kind](**d)
    except TypeError as e:
        raise ValueError(f"policy {kind}: {e}") from None


def policy_to_dict(policy: SelectionPolicy) -> dict:
    out = {"kind": policy.kind}
    out.update({k: v for k, v in policy.__dict__.items() if k != "kind"})
    return out


class Sample(NamedTuple):
    symbols: np.ndarray
    thetas: np.ndarray


def _choices(family: DistributionFamily, policy, length: int, rng) -> np.ndarray:
    if family.continuous:
        lo, hi = family.bounds
        pick_uniform = lambda size: rng.uniform(lo, hi, size)  # noqa: E731
        ends = (lo, hi)
    else:
        m = len(family.members()[0])
        lo, hi = 0, m - 1
        pick_uniform = lambda size: rng.integers(0, m, size)  # noqa: E731
        ends = (0, m - 1)
    i = np.arange(length)
    if isinstance(policy, Fixed):
        t = policy.theta
        if family.continuous:
            if not lo - 1e-15 <= t <= hi + 1e-15:
                raise FamilyError(f"fixed parameter {t} outside [{lo}, {hi}]")
        elif t != int(t) or not 0 <= t <= hi:
            raise FamilyError(f"fixed member index {t} outside 0..{hi}")
        return np.full(length, t, dtype=float)
    if isinstance(policy, PerSymbolUniform):
        return pick_uniform(length).astype(float)
    if isinstance(policy, PerBlockExtremes):
        block = i // policy.block_len
        return np.where(block % 2 == 0, ends[0], ends[1]).astype(float)
    if isinstance(policy, PerBlockUniform):
        nblocks = -(-length // policy.block_len)
        return pick_uniform(nblocks).astype(float)[i // policy.block_len]
    if isinstance(policy, Drift):
        s = (1 - np.cos(2 * np.pi * i / policy.period)) / 2
        t = lo + (hi - lo) * s
        return t if family.continuous else np.rint(t)
    raise TypeError(f"unsupported policy {policy!r}")


def _draw(family, thetas, u) -> np.ndarray:
    if family.continuous and len(family.alphabet) == 2:
        return (u >= thetas).astype(np.int64)
    if family.continuous:
        probs = np.stack([family.member(t) for t in thetas])
    else:
        _, members = family.members()
        probs = members[thetas.astype(np.int64)]
    cum = np.cumsum(probs, axis=1)[:, :-1]
    return (u[:, None] >= cum).sum(axis=1).astype(np.int64)


def sample_source(family: DistributionFamily, policy: SelectionPolicy, length: int, seed: int = 0) -> Sample:
    """Symbols (alphabet indices) and the per-symbol member choice.

    Substream 0 of ``seed`` drives the policy, substream 1 the symbol draws.
    """
    if length < 1:
        raise ValueError("length must be at least 1")
    thetas = _choices(family, policy, length, stream(seed, 0))
    u = stream(seed, 1).random(length)
    return Sample(_draw(family, thetas, u), thetas)


# ---------------------------------------------------------------- estimators


def max_mean_estimate(samples, n_block: int, m_blocks: int) -> tuple[float, float]:
    """Largest and smallest of ``m_blocks`` consecutive block means."""
    x = np.asarray(samples, dtype=float)
    if n_block < 1 or m_blocks < 1:
        raise ValueError("block size and count must be positive")
    if len(x) < n_block * m_blocks:
        raise ValueError(f"need {n_block * m_blocks} samples, got {len(x)}")
    means = x[: n_block * m_blocks].reshape(m_blocks, n_block).mean(axis=1)
    return float(means.max()), float(means.min())


@dataclass(frozen=True)
class WindowStats:
    n_index: int
    upper_mean: float
    lower_mean: float


@dataclass(frozen=True)
class WindowSeries:
    n: np.ndarray
    upper: np.ndarray
    lower: np.ndarray

    def __len__(self) -> int:
        return len(self.n)

    def __getitem__(self, i) -> WindowStats:
        return WindowStats(int(self.n[i]), float(self.upper[i]), float(self.lower[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def gap(self) -> np.ndarray:
        return self.upper - self.lower

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["n", "upper_mean", "lower_mean"])
        for n, u, l in zip(self.n, self.upper, self.lower):
            w.writerow([int(n), repr(float(u)), repr(float(l))])
        return buf.getvalue()


def window_stats(samples, window: int = 5000, sub: int = 500, count: int = 10) -> WindowSeries:
    """Max and min of the ``count`` sub-window means of the window ending at n.

    n runs from ``window`` to ``len(samples)`` (1-based); sub-window i covers
    samples n - window + (i-1)*sub + 1 ... n - window + i*sub.
    """
    x = np.asarray(samples, dtype=float)
    if sub * count != window:
        raise ValueError(f"window {window} is not {count} sub-windows of {sub}")
    if len(x) < window:
        raise ValueError(f"need at least {window} samples, got {len(x)}")
    # exact integer prefix sums for integer-valued samples
    if np.all(x == np.round(x)):
        S = np.concatenate([[0], np.cumsum(x.astype(np.int64))])
    else:
        S = np.concatenate([[0.0], np.cumsum(x)])
    sub_means = (S[sub:] - S[:-sub]) / sub  # mean of x[j : j+sub] at index j
    ends = np.arange(window, len(x) + 1)
    starts = (ends - window)[:, None] + sub * np.arange(count)[None, :]
    m = sub_means[starts]
    return WindowSeries(ends, m.max(axis=1), m.min(axis=1))


# --------------------------------------------------------------- experiments


@dataclass
class LLNReport:
    b: float
    lower: float
    upper: float
    min_distance: float
    argmin_n: int
    final_distance: float
    n_max: int
    burn_in: int
    trajectory_n: np.ndarray
    trajectory: np.ndarray

    def to_dict(self) -> dict:
        return {
            "b": self.b,
            "lower": self.lower,
            "upper": self.upper,
            "min_distance": self.min_distance,
            "argmin_n": self.argmin_n,
            "final_distance": self.final_distance,
            "n_max": self.n_max,
            "burn_in": self.burn_in,
        }


def lln_experiment(
    family: DistributionFamily,
    f,
    b: float,
    n_max: int = 100000,
    seed: int = 0,
    policy: SelectionPolicy | None = None,
    burn_in: int = 1000,
    trajectory_points: int = 200,
) -> LLNReport:
    """Running mean of f(X_i) and its closest approach to ``b`` after ``burn_in``.

    Without a ``policy`` each symbol's member is chosen greedily among the
    extreme members so that the expected updated running mean is as close to b
    as possible.
    """
    vals = values_on(family.alphabet, f)
    lower = -family.upper(-vals)
    upper = family.upper(vals)
    if not lower - 1e-12 <= b <= upper + 1e-12:
        import warnings

        warnings.warn(f"target {b} lies outside [{lower}, {upper}]")
    if policy is not None:
        xs = sample_source(family, policy, n_max, seed).symbols
        fx = vals[xs]
    else:
        params, probs = family.extreme_points()
        means = probs @ vals
        cums = np.cumsum(probs, axis=1)[:, :-1]
        u = stream(seed, 1).random(n_max)
        fx = np.empty(n_max)
        s = 0.0
        for i in range(n_max):
            j = int(np.argmin(np.abs((s + means) / (i + 1) - b)))
            x = int(np.count_nonzero(u[i] >= cums[j]))
            fx[i] = vals[x]
            s += fx[i]
    running = np.cumsum(fx) / np.arange(1, n_max + 1)
    dist = np.abs(running - b)
    start = min(burn_in, n_max - 1)
    k = start + int(np.argmin(dist[start:]))
    idx = np.unique(np.linspace(0, n_max - 1, min(trajectory_points, n_max)).astype(int))
    return LLNReport(float(b), float(lower), float(upper), float(dist[k]), k + 1, float(dist[-1]),
                     n_max, burn_in, idx + 1, running[idx])


DEFAULT_P_GRID = np.round(np.arange(1, 100) / 100, 2)


def bernoulli_fit_confidence(samples, p_grid=DEFAULT_P_GRID) -> list[tuple[float, float]]:
    """Two-sided exact binomial p-value of the count of ones under each p.

    The p-value sums the probabilities of all counts no more likely than the
    observed one (relative tolerance 1e-7 on ties).
    """
    x = np.asarray(samples)
    if x.size and not np.all((x == 0) | (x == 1)):
        raise ValueError("samples must be binary (0/1)")
    p_grid = np.asarray(p_grid, dtype=float)
    if np.any(p_grid <= 0) or np.any(p_grid >= 1):
        raise ValueError("p_grid must lie in (0, 1)")
    n, k = x.size, int(x.sum())
    j = np.arange(n + 1)
    pmf = binom.pmf(j[None, :], n, p_grid[:, None])
    obs = pmf[:, k][:, None]
    pv = np.where(pmf <= obs * (1 + 1e-7), pmf, 0.0).sum(axis=1)
    return [(float(p), float(min(v, 1.0))) for p, v in zip(p_grid, pv)]


# ------------------------------------------------------------------- export


def to_text(symbols, alphabet=None) -> str:
    labels = alphabet.symbols if alphabet is not None else None
    return "".join(f"{labels[s] if labels else s}\n" for s in np.asarray(symbols))


def to_u8(symbols) -> bytes:
    s = np.asarray(symbols)
    if s.size and (s.min() < 0 or s.max() > 255):
        raise ValueError("symbols do not fit in u8")
    return s.astype(np.uint8).tobytes()
