"""Entropy and mutual information of distribution families, in bits.

Each measure is the sup over the family (or over source and channel families
jointly) of its classical counterpart; the result carries the maximizing
parameters so the value can be re-evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from nonlinfo import classical
from nonlinfo.families import (
    ChannelFamily,
    DistributionFamily,
    EnumeratedChannel,
    FamilyError,
    IntervalBernoulli,
)
from nonlinfo.optimize import DEFAULT, OptimizerConfig, sup_over_family, sup_over_pair


@dataclass(frozen=True)
class MeasureResult:
    value: float
    witness: object
    tolerance: float

    @property
    def value_bits(self) -> float:
        return self.value

    def to_dict(self) -> dict:
        return {"value_bits": self.value, "witness": _jsonable(self.witness), "tolerance": self.tolerance}


def _jsonable(w):
    if isinstance(w, dict):
        return {k: _jsonable(v) for k, v in w.items()}
    if isinstance(w, (list, tuple)):
        return [_jsonable(v) for v in w]
    if isinstance(w, np.generic):
        return w.item()
    return w


def _tolerance(*families, config: OptimizerConfig) -> float:
    return config.refine_tol if any(f.continuous for f in families) else 1e-12


def _check_pair(source: DistributionFamily, channel: ChannelFamily):
    if len(channel.input) != len(source.alphabet):
        raise FamilyError(
            f"channel input has {len(channel.input)} symbols, source has {len(source.alphabet)}"
        )


def nonlinear_entropy(family: DistributionFamily, config: OptimizerConfig = DEFAULT) -> MeasureResult:
    if isinstance(family, IntervalBernoulli):
        # H_b is concave with its peak at 1/2: take the closest admissible q.
        q = min(max(0.5, family.lo), family.hi)
        return MeasureResult(float(classical.binary_entropy(q)), q, 1e-12)
    r = sup_over_family(family, classical.entropy, config, unimodal=True, vectorized=True)
    return MeasureResult(r.value, r.witness, _tolerance(family, config=config))


def nonlinear_joint_entropy(source: DistributionFamily, channel: ChannelFamily,
                            config: OptimizerConfig = DEFAULT) -> MeasureResult:
    _check_pair(source, channel)

    def table(A, B):
        return classical.joint_entropy(A[:, None, :], B[None])

    r = sup_over_pair(source, channel, table, config)
    return MeasureResult(r.value, r.witness, _tolerance(source, channel, config=config))


def row_entropy_sups(channel: ChannelFamily, config: OptimizerConfig = DEFAULT):
    """For each input x, sup over the channel family of H(Y | X = x)."""
    out = []
    for i in range(len(channel.input)):
        out.append(sup_over_family(
            channel, lambda s, i=i: classical.entropy(s[:, i, :]), config, unimodal=True, vectorized=True
        ))
    return out


def nonlinear_conditional_entropy(source: DistributionFamily, channel: ChannelFamily,
                                  config: OptimizerConfig = DEFAULT) -> MeasureResult:
    """sup_theta sum_x p_theta(x) [sup_lambda H(P_lambda(.|x))].

    The inner sup is taken separately for every x, so the maximizing channel
    parameter may differ between inputs.
    """
    _check_pair(source, channel)
    rows = row_entropy_sups(channel, config)
    g = np.array([r.value for r in rows])
    params, probs = source.extreme_points()
    vals = probs @ g
    k = int(np.argmax(vals))
    witness = {"theta": params[k].item(), "lambda": [r.witness for r in rows]}
    return MeasureResult(float(vals[k]), witness, _tolerance(channel, config=config))


def nonlinear_mutual_information(source: DistributionFamily, channel: ChannelFamily,
                                 config: OptimizerConfig = DEFAULT) -> MeasureResult:
    _check_pair(source, channel)

    def table(A, B):
        return classical.mutual_information(A[:, None, :], B[None])

    r = sup_over_pair(source, channel, table, config)
    return MeasureResult(max(r.value, 0.0), r.witness, _tolerance(source, channel, config=config))


def nonlinear_backward_conditional_entropy(source: DistributionFamily, channel: ChannelFamily,
                                           config: OptimizerConfig = DEFAULT) -> MeasureResult:
    """Entropy of the input given the output.

    Every (theta, lambda) pair induces a joint law and hence a backward channel
    p(x|y); the value is the sup over those pairs of the classical H(X|Y).
    """
    _check_pair(source, channel)

    def table(A, B):
        AB = A[:, None, :]
        return classical.joint_entropy(AB, B[None]) - classical.entropy(classical.output(AB, B[None]))

    r = sup_over_pair(source, channel, table, config)
    return MeasureResult(max(r.value, 0.0), r.witness, _tolerance(source, channel, config=config))


def _slice_channel(channel: ChannelFamily, rows: list[int], config: OptimizerConfig) -> EnumeratedChannel:
    _, mats = channel.members(config.grid_points)
    return EnumeratedChannel(mats[:, rows, :], output=channel.output)


def nonlinear_conditional_mutual_information(cond_channel_XZ: ChannelFamily, cond_channel_YXZ: ChannelFamily,
                                             z, config: OptimizerConfig = DEFAULT,
                                             pair_order: str = "xz") -> MeasureResult:
    """Mutual information of X and Y given Z = z.

    ``cond_channel_XZ`` maps Z to X. ``cond_channel_YXZ`` maps pairs to Y; its
    input symbols are the tuples (x, z), or (z, x) with ``pair_order="zx"``.
    """
    if pair_order not in ("xz", "zx"):
        raise ValueError("pair_order must be 'xz' or 'zx'")
    x_symbols = cond_channel_XZ.output.symbols
    key = (lambda x: (x, z)) if pair_order == "xz" else (lambda x: (z, x))
    try:
        rows = [cond_channel_YXZ.input.index(key(x)) for x in x_symbols]
    except FamilyError:
        raise FamilyError(f"Y-channel input alphabet lacks the pairs (x, {z!r})") from None
    source = cond_channel_XZ.row_family(z)
    return nonlinear_mutual_information(source, _slice_channel(cond_channel_YXZ, rows, config), config)


def fano_bound(error_probs: Iterable[float], alphabet_size: int, interval: bool = False) -> float:
    """sup H_b(Pe) + sup Pe * log2(K - 1), the two sups taken separately.

    ``error_probs`` is a finite set of error probabilities, or (lo, hi) with
    ``interval=True``.
    """
    pe = np.asarray(list(error_probs), dtype=float)
    if pe.size == 0:
        raise ValueError("empty set of error probabilities")
    if np.any(pe < 0) or np.any(pe > 1) or not np.all(np.isfinite(pe)):
        raise ValueError("error probabilities must lie in [0, 1]")
    if alphabet_size < 2:
        raise ValueError("alphabet size must be at least 2")
    if interval:
        if pe.size != 2 or pe[0] > pe[1]:
            raise ValueError("an interval is given as (lo, hi) with lo <= hi")
        hb = float(classical.binary_entropy(min(max(0.5, pe[0]), pe[1])))
    else:
        hb = float(np.max(classical.binary_entropy(pe)))
    return hb + float(pe.max()) * float(np.log2(alphabet_size - 1))
