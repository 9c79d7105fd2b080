"""Classical (single-distribution) information quantities in bits.

All functions broadcast over leading axes: the last axis indexes symbols and,
for channels, the last two axes are (input, output).
"""

from __future__ import annotations

import numpy as np


def _xlog2x(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log2(p[pos])
    return out


def entropy(p) -> np.ndarray | float:
    """Shannon entropy along the last axis, with 0 log 0 = 0."""
    h = -_xlog2x(p).sum(axis=-1)
    return h if np.ndim(h) else float(h)


def binary_entropy(q) -> np.ndarray | float:
    q = np.asarray(q, dtype=float)
    h = -(_xlog2x(q) + _xlog2x(1.0 - q))
    return h if np.ndim(h) else float(h)


def joint(p, W) -> np.ndarray:
    """Joint pmf p(x) W(y|x)."""
    p = np.asarray(p, dtype=float)
    return p[..., :, None] * np.asarray(W, dtype=float)


def joint_entropy(p, W):
    P = joint(p, W)
    h = -_xlog2x(P).sum(axis=(-2, -1))
    return h if np.ndim(h) else float(h)


def conditional_entropy(p, W):
    """H(Y|X) = sum_x p(x) H(W[x])."""
    h = (np.asarray(p, dtype=float) * entropy(W)).sum(axis=-1)
    return h if np.ndim(h) else float(h)


def output(p, W) -> np.ndarray:
    return np.einsum("...x,...xy->...y", np.asarray(p, float), np.asarray(W, float))


def mutual_information(p, W):
    """I(X;Y) for input pmf p and channel W; terms with W(y|x)=0 are dropped."""
    p = np.asarray(p, dtype=float)
    W = np.asarray(W, dtype=float)
    r = output(p, W)
    P = joint(p, W)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(P > 0, W / r[..., None, :], 1.0)
        terms = np.where(P > 0, P * np.log2(ratio), 0.0)
    i = np.maximum(terms.sum(axis=(-2, -1)), 0.0)
    return i if np.ndim(i) else float(i)


def kl(p, q):
    """D(p||q) in bits along the last axis (inf when supp p is not in supp q)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(p / q), 0.0)
    d = terms.sum(axis=-1)
    return d if np.ndim(d) else float(d)


def posterior(p, W) -> np.ndarray:
    """Backward channel p(x|y) as a |Y| x |X| matrix.

    Outputs with zero probability get the prior as their row so the result stays
    row-stochastic.
    """
    p = np.asarray(p, dtype=float)
    P = joint(p, W)
    r = P.sum(axis=-2)
    back = np.swapaxes(P, -1, -2)
    with np.errstate(divide="ignore", invalid="ignore"):
        back = np.where(r[..., :, None] > 0, back / r[..., :, None], p[..., None, :])
    return back


def bernoulli_rate_distortion(p: float, D: float) -> float:
    """Classical R(D) of a Bernoulli(p) source under Hamming distortion."""
    pm = min(p, 1.0 - p)
    if D >= pm:
        return 0.0
    return float(binary_entropy(p) - binary_entropy(D))
