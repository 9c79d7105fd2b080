"""Coding machinery: source-rate bounds and typical-set codes, channel-rate
bounds and threshold decoding, rate-distortion curves and threshold encoding.

Error probabilities are evaluated under every member of a parameter grid
(default 101 points); "max" and "min" errors are the extremes over that grid.
"""

from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from nonlinfo import classical
from nonlinfo.families import (
    ChannelFamily,
    DistributionFamily,
    FamilyError,
    capacity,
    conjugate_expectation,
)
from nonlinfo.measures import MeasureResult
from nonlinfo.optimize import (
    DEFAULT,
    InfeasibleDistortion,
    OptimizerConfig,
    blahut_arimoto,
    blahut_arimoto_batch,
    golden_section,
    minimax_over_Q,
    sup_information,
)
from nonlinfo.rng import shard_sizes, stream

MAX_SEQUENCES = 10**7
MAX_OUTPUT_SPACE = 1 << 22
DEFAULT_GRID = 101


class EmptyCodeSet(ValueError):
    """The typical set is empty for this block length and tolerance."""


@dataclass
class CodingReport:
    rate_bits: float
    max_error: float
    min_error: float
    n: int
    method: str
    seed: int | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.min_error <= self.max_error + 1e-15 or self.max_error > 1.0 + 1e-12:
            raise ValueError(f"inconsistent error pair ({self.min_error}, {self.max_error})")

    def to_dict(self) -> dict:
        return {
            "rate_bits": self.rate_bits,
            "max_error": self.max_error,
            "min_error": self.min_error,
            "n": self.n,
            "method": self.method,
            "seed": self.seed,
            **self.details,
        }


def parameter_grid(family, points: int = DEFAULT_GRID):
    """Parameters and members used as the adversary's choices."""
    return family.members(points) if family.continuous else family.members()


# ------------------------------------------------------------ source coding


def symbol_capacities(family: DistributionFamily) -> np.ndarray:
    return np.array([capacity(family, [s])[0] for s in family.alphabet])


def source_cluster_rate(family: DistributionFamily) -> float:
    """inf over the family of sum_x p(x) log2(1 / V({x}))."""
    V = symbol_capacities(family)
    # V({x}) = 0 forces p(x) = 0 for every member, so the term vanishes.
    y = np.where(V > 0, -np.log2(np.where(V > 0, V, 1.0)), 0.0)
    return conjugate_expectation(family, y)


def compositions(n: int, k: int) -> np.ndarray:
    """All count vectors of length k summing to n, one per row."""
    rows = []
    for bars in itertools.combinations(range(n + k - 1), k - 1):
        edges = (-1,) + bars + (n + k - 1,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(k)])
    return np.array(rows, dtype=np.int64)


def _log_type_sizes(types: np.ndarray) -> np.ndarray:
    n = types.sum(axis=1)
    return gammaln(n + 1) - gammaln(types + 1).sum(axis=1)


def _type_log_probs(types: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """log2 p(x^n) for one sequence of each type, under each member: (members, types)."""
    with np.errstate(divide="ignore"):
        logp = np.log2(probs)
    terms = np.where(types[None, :, :] > 0, types[None, :, :] * logp[:, None, :], 0.0)
    return terms.sum(axis=2)


@dataclass
class SourceCode:
    """Index code for the sequences of a set of type classes.

    Sequences outside the set are sent to index 0, which decodes to the first
    codeword; that is the error event.
    """

    n: int
    alphabet_size: int
    types: np.ndarray

    @cached_property
    def codewords(self) -> np.ndarray:
        wanted = {tuple(t) for t in self.types}
        words = [w for w in itertools.product(range(self.alphabet_size), repeat=self.n)
                 if tuple(np.bincount(w, minlength=self.alphabet_size)) in wanted]
        return np.array(words, dtype=np.int64).reshape(-1, self.n)

    @cached_property
    def _index(self) -> dict:
        return {tuple(w): i for i, w in enumerate(self.codewords)}

    @property
    def index_set_size(self) -> int:
        return int(np.exp(_log_type_sizes(self.types)).round().sum())

    @property
    def rate_bits(self) -> float:
        return math.log2(self.index_set_size) / self.n

    def encoder(self, x) -> int:
        return self._index.get(tuple(int(s) for s in x), 0)

    def decoder(self, w: int) -> np.ndarray:
        return self.codewords[w]


def _source_sets(family, n, epsilon, criterion, mu, theta_points):
    k = len(family.alphabet)
    if k ** n > MAX_SEQUENCES:
        raise ValueError(f"{k}^{n} sequences exceed the enumeration limit {MAX_SEQUENCES}")
    types = compositions(n, k)
    params, probs = parameter_grid(family, theta_points)
    if criterion == "min":
        V = symbol_capacities(family)
        with np.errstate(divide="ignore"):
            y = -np.log2(V)
        y_seq = np.where(types > 0, types * y, 0.0).sum(axis=1) / n
        if mu is None:
            mu = source_cluster_rate(family)
        lo = conjugate_expectation(family, np.where(V > 0, y, 0.0))
        hi = family.upper(np.where(V > 0, y, 0.0))
        if not lo - 1e-12 <= mu <= hi + 1e-12:
            warnings.warn(f"mu={mu} lies outside the cluster interval [{lo}, {hi}]")
        member = np.abs(y_seq - mu) <= epsilon
        extra = {"mu": float(mu)}
    elif criterion == "max":
        lp = _type_log_probs(types, probs)
        H = classical.entropy(probs)
        dev = np.abs(-lp / n - H[:, None])
        member = np.any(np.isfinite(lp) & (dev < epsilon), axis=0)
        extra = {}
    else:
        raise ValueError(f"criterion must be 'min' or 'max', got {criterion!r}")
    return types, probs, member, extra


def build_source_code(family, n, epsilon, criterion="min", mu=None, theta_points=DEFAULT_GRID) -> SourceCode:
    types, _, member, _ = _source_sets(family, n, epsilon, criterion, mu, theta_points)
    if not member.any():
        raise EmptyCodeSet(f"typical set is empty for n={n}, epsilon={epsilon}")
    return SourceCode(n, len(family.alphabet), types[member])


def simulate_source_coding(
    family: DistributionFamily,
    n: int,
    epsilon: float,
    criterion: str = "min",
    mu: float | None = None,
    theta_points: int = DEFAULT_GRID,
) -> CodingReport:
    """Typical-set code by exact enumeration of type classes.

    ``criterion="min"`` codes the set of sequences whose per-symbol
    -log2 V(x^n) (V multiplicative over symbols) is within ``epsilon`` of
    ``mu`` (default: the source cluster rate). ``criterion="max"`` codes the
    union over the parameter grid of the classical typical sets. The error
    probability is one minus the probability of the coded set, evaluated under
    every grid member.
    """
    if n < 1:
        raise ValueError("block length must be positive")
    types, probs, member, extra = _source_sets(family, n, epsilon, criterion, mu, theta_points)
    if not member.any():
        raise EmptyCodeSet(f"typical set is empty for n={n}, epsilon={epsilon}")
    log_sizes = _log_type_sizes(types)
    size = float(np.exp(log_sizes[member]).sum())
    lp = _type_log_probs(types, probs)
    with np.errstate(over="ignore"):
        p_types = np.exp2(lp + log_sizes[None, :] / np.log(2))
    p_set = np.clip(p_types[:, member].sum(axis=1), 0.0, 1.0)
    return CodingReport(
        rate_bits=math.log2(round(size)) / n,
        max_error=float(1.0 - p_set.min()),
        min_error=float(1.0 - p_set.max()),
        n=n,
        method="enumeration",
        details={"criterion": criterion, "epsilon": epsilon, "set_size": int(round(size)),
                 "grid_points": len(probs), **extra},
    )


# ----------------------------------------------------------- channel coding


def channel_rate_bound(channel: ChannelFamily, config: OptimizerConfig = DEFAULT) -> MeasureResult:
    """sup over the channel family of the Blahut-Arimoto capacity."""
    params, mats = channel.members(config.grid_points)
    caps, inputs, gaps, _ = blahut_arimoto_batch(mats, config.ba_tol, config.ba_max_iter)
    i = int(np.argmax(caps))
    lam, cap, p, gap = params[i].item(), float(caps[i]), inputs[i], float(gaps[i])
    if channel.continuous and params[0] != params[-1]:
        a = float(params[max(i - 1, 0)])
        b = float(params[min(i + 1, len(params) - 1)])
        x, fx = golden_section(lambda t: blahut_arimoto(channel.member(t), config).capacity, a, b,
                               config.refine_tol)
        if fx > cap:
            res = blahut_arimoto(channel.member(x), config)
            lam, cap, p, gap = x, res.capacity, res.input.probs, res.bracket
    witness = {"lambda": lam, "input": [float(v) for v in p], "bracket": gap}
    return MeasureResult(cap, witness, max(gap, config.refine_tol))


def _joint_counts(a: np.ndarray, b: np.ndarray, ka: int, kb: int) -> np.ndarray:
    """Counts of symbol pairs along the last axis: (..., ka*kb)."""
    idx = a * kb + b
    return (idx[..., None] == np.arange(ka * kb)).sum(axis=-2)


def _all_sequences(k: int, n: int) -> np.ndarray:
    digits = np.arange(k ** n)[:, None] // (k ** np.arange(n - 1, -1, -1))[None, :]
    return (digits % k).astype(np.int64)


def channel_density_table(mats: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Per-pair log-density terms log2 W(b|a) - log2 r(b), one row per member.

    The information density of (x^n, y^n) under a member is the joint-count
    vector dotted with its row; -inf marks impossible pairs.
    """
    r = np.einsum("x,mxy->my", p, mats)
    with np.errstate(divide="ignore"):
        L = np.log2(mats) - np.log2(r)[:, None, :]
    return L.reshape(len(mats), -1)


def _sup_density(counts: np.ndarray, L: np.ndarray) -> np.ndarray:
    flat = counts.reshape(-1, counts.shape[-1])
    keys, inv = np.unique(flat, axis=0, return_inverse=True)
    with np.errstate(invalid="ignore"):
        terms = np.where(keys[:, None, :] > 0, keys[:, None, :] * L[None, :, :], 0.0)
    sup = terms.sum(axis=2).max(axis=1)
    return sup[inv.ravel()].reshape(counts.shape[:-1])


def decode_table(codebook: np.ndarray, channel: ChannelFamily, p: np.ndarray, R_prime: float,
                 lambda_points: int = DEFAULT_GRID, typical: np.ndarray | None = None) -> np.ndarray:
    """Decision for every output sequence: the unique candidate index, or -1.

    A message is a candidate for y^n when the sup over the channel grid of its
    codeword's information density exceeds n R' (and the codeword is in the
    admissible input set ``typical``, a boolean per codeword, when given).
    """
    M, n = codebook.shape
    kx, ky = len(channel.input), len(channel.output)
    if ky ** n > MAX_OUTPUT_SPACE:
        raise ValueError(f"output space {ky}^{n} too large to tabulate")
    if M == 1:
        return np.zeros(ky ** n, dtype=np.int64)
    _, mats = parameter_grid(channel, lambda_points)
    L = channel_density_table(mats, p)
    ys = _all_sequences(ky, n)
    counts = _joint_counts(codebook[None, :, :], ys[:, None, :], kx, ky)  # (Y, M, kx*ky)
    cand = _sup_density(counts, L) > n * R_prime
    if typical is not None:
        cand &= np.asarray(typical, dtype=bool)[None, :]
    single = cand.sum(axis=1) == 1
    return np.where(single, np.argmax(cand, axis=1), -1)


def _sequence_index(seq: np.ndarray, k: int) -> np.ndarray:
    n = seq.shape[-1]
    return seq @ (k ** np.arange(n - 1, -1, -1))


def _mc_shard(rng, codebook, cums, table, trials, ky):
    M, n = codebook.shape
    msgs = rng.integers(0, M, size=trials)
    U = rng.random((trials, n))
    x = codebook[msgs]
    errs = np.empty(len(cums))
    for j, cum in enumerate(cums):
        thresholds = cum[x]  # (trials, n, ky)
        y = (U[..., None] >= thresholds[..., :-1]).sum(axis=-1)
        errs[j] = np.count_nonzero(table[_sequence_index(y, ky)] != msgs)
    return errs


def simulate_channel_coding(
    channel: ChannelFamily,
    M: int,
    n: int,
    R_prime: float,
    trials: int = 100000,
    seed: int = 0,
    lambda_points: int = DEFAULT_GRID,
    method: str = "monte-carlo",
    codebook=None,
    input_dist=None,
    shards: int = 8,
    threads: int | None = None,
    config: OptimizerConfig = DEFAULT,
) -> CodingReport:
    """Random code with the unique-candidate threshold decoder.

    The codebook (substream 0 of ``seed``) is drawn i.i.d. from the
    capacity-achieving input of the rate-bound witness unless given. Messages
    are uniform. ``monte-carlo`` shares the same messages and uniforms across
    the channel grid (substreams 1..shards, one per shard); ``enumeration``
    sums exactly over all output sequences. The grid extremes of the average
    error give ``max_error`` and ``min_error``.
    """
    if M < 1 or n < 1:
        raise ValueError("need M >= 1 and n >= 1")
    if method == "monte-carlo" and trials < 100:
        raise ValueError("at least 100 trials are required")
    bound = channel_rate_bound(channel, config)
    if R_prime >= bound.value:
        warnings.warn(f"threshold rate {R_prime} is not below the rate bound {bound.value:.6f}; "
                      "the candidate set is degenerate")
    p = np.asarray(input_dist if input_dist is not None else bound.witness["input"], dtype=float)
    kx, ky = len(channel.input), len(channel.output)
    if codebook is None:
        codebook = stream(seed, 0).choice(kx, size=(M, n), p=p / p.sum())
    codebook = np.asarray(codebook, dtype=np.int64)
    if codebook.shape != (M, n):
        raise ValueError(f"codebook must have shape {(M, n)}")
    table = decode_table(codebook, channel, p, R_prime, lambda_points)
    params, mats = parameter_grid(channel, lambda_points)
    details = {"M": M, "R_prime": R_prime, "grid_points": len(params), "rate_bound": bound.value}

    if method == "enumeration":
        ys = _all_sequences(ky, n)
        counts = _joint_counts(codebook[None], ys[:, None], kx, ky)  # (Y, M, kx*ky)
        with np.errstate(divide="ignore"):
            logW = np.log2(mats).reshape(len(mats), -1)
        terms = np.where(counts[None] > 0, counts[None] * logW[:, None, None, :], 0.0)
        prob = np.exp2(terms.sum(axis=-1))  # (members, Y, M)
        wrong = table[:, None] != np.arange(M)[None, :]
        err = (prob * wrong[None]).sum(axis=1).mean(axis=1)
        se = np.zeros_like(err)
    elif method == "monte-carlo":
        cums = np.cumsum(mats, axis=2)
        sizes = shard_sizes(trials, shards)
        jobs = [(stream(seed, 1 + s), sz) for s, sz in enumerate(sizes) if sz]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda j: _mc_shard(j[0], codebook, cums, table, j[1], ky), jobs))
        err = np.sum(parts, axis=0) / trials
        se = np.sqrt(err * (1 - err) / trials)
        details["shards"] = shards
    else:
        raise ValueError(f"unknown method {method!r}")
    err = np.clip(err, 0.0, 1.0)
    imax, imin = int(np.argmax(err)), int(np.argmin(err))
    details.update({
        "max_error_se": float(se[imax]),
        "min_error_se": float(se[imin]),
        "argmax_lambda": params[imax].item(),
        "argmin_lambda": params[imin].item(),
        "trials": trials if method == "monte-carlo" else None,
    })
    return CodingReport(math.log2(M) / n, float(err[imax]), float(err[imin]), n, method, seed, details)


# ---------------------------------------------------------- rate-distortion


@dataclass(frozen=True)
class RDPoint:
    D: float
    value: float | None
    feasible: bool
    bruteforce: float | None = None
    mismatch: bool = False
    min_distortion: float | None = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("D", "value", "feasible", "bruteforce", "mismatch", "min_distortion")}


def rate_distortion_curve(source: DistributionFamily, distortion, D_grid, config: OptimizerConfig = DEFAULT,
                          bruteforce: bool | None = None) -> list[RDPoint]:
    D_grid = [float(D) for D in D_grid]
    if any(b < a for a, b in zip(D_grid, D_grid[1:])):
        raise ValueError("distortion grid must be sorted ascending")
    out = []
    for D in D_grid:
        try:
            r = minimax_over_Q(source, distortion, D, config, bruteforce=bruteforce)
        except InfeasibleDistortion as e:
            out.append(RDPoint(D, None, False, min_distortion=e.min_distortion))
            continue
        out.append(RDPoint(D, r.value, True, r.bruteforce, r.mismatch, r.min_distortion))
    return out


def simulate_rate_distortion(
    source: DistributionFamily,
    distortion,
    D: float,
    R_s: float,
    n: int,
    seed: int = 0,
    epsilon: float = 0.05,
    R_prime: float | None = None,
    theta_points: int = DEFAULT_GRID,
    typical=None,
    config: OptimizerConfig = DEFAULT,
) -> CodingReport:
    """Random reproduction codebook with the smallest-index threshold encoder.

    ``2^(n R_s)`` (rounded up) reproduction words are drawn from the output
    marginal of the optimal test channel Q* under the worst-case member. A source
    word is encoded to the first codeword whose inf-over-grid information
    density is below n R' and whose per-letter distortion lies within epsilon/3
    of the expected distortion under Q*; index 0 when there is none. ``typical``
    optionally restricts the admissible source words (a predicate on index
    arrays); the default admits all. Expected distortions are exact sums over
    all source words, under every grid member.
    """
    d = np.asarray(distortion, dtype=float)
    k, kh = d.shape
    if k ** n > MAX_SEQUENCES // 10:
        raise ValueError(f"{k}^{n} source words exceed the enumeration limit")
    rd = minimax_over_Q(source, d, D, config)
    if not R_s > rd.value:
        raise ValueError(f"R_s={R_s} must exceed the rate-distortion value {rd.value:.6f}")
    if R_prime is None:
        R_prime = (rd.value + R_s) / 2
    Q = rd.Q
    params, probs = parameter_grid(source, theta_points)
    _, worst = _worst_member(source, Q, config)
    r = worst @ Q
    K = max(1, math.ceil(2 ** (n * R_s) - 1e-9))
    book = stream(seed, 0).choice(kh, size=(K, n), p=r / r.sum())

    xs = _all_sequences(k, n)
    counts = _joint_counts(xs[:, None, :], book[None, :, :], k, kh)  # (S, K, k*kh)
    rth = probs @ Q
    with np.errstate(divide="ignore"):
        L = (np.log2(Q)[None, :, :] - np.log2(rth)[:, None, :]).reshape(len(probs), -1)
    inf_dens = -_sup_density(counts, -L)
    dist = counts @ d.ravel()
    expected_d = rd.achieved_distortion
    ok = (inf_dens < n * R_prime) & (np.abs(dist / n - expected_d) < epsilon / 3)
    if typical is not None:
        ok &= np.asarray([bool(typical(x)) for x in xs])[:, None]
    idx = np.where(ok.any(axis=1), np.argmax(ok, axis=1), 0)
    chosen = dist[np.arange(len(xs)), idx] / n
    x_counts = np.stack([(xs == a).sum(axis=1) for a in range(k)], axis=1)
    lp = _type_log_probs(x_counts, probs)
    px = np.exp2(lp)  # (members, S)
    per_member = px @ chosen
    return CodingReport(
        rate_bits=math.log2(K) / n,
        max_error=float(np.clip(1.0 - (px @ ok.any(axis=1)).min(), 0, 1)),
        min_error=float(np.clip(1.0 - (px @ ok.any(axis=1)).max(), 0, 1)),
        n=n,
        method="enumeration",
        seed=seed,
        details={
            "D": D,
            "R_s": R_s,
            "R_prime": R_prime,
            "epsilon": epsilon,
            "rd_value": rd.value,
            "codebook_size": K,
            "expected_distortion_Q": expected_d,
            "lower_distortion": float(per_member.min()),
            "upper_distortion": float(per_member.max()),
            "grid_points": len(probs),
        },
    )


def _worst_member(source, Q, config):
    r = sup_information(source, Q, config)
    return r.witness, source.member(r.witness)
