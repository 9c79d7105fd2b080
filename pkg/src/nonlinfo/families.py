"""Finite alphabets, distribution and channel families, and the upper/lower
expectations and capacities they induce.

A family is a set of probability vectors {p_t}. Its upper expectation is
``sup_t E_t[f]`` and its lower (conjugate) expectation ``inf_t E_t[f]``.
Interval kinds are one-parameter continua; linear functionals over them are
evaluated in closed form at the extreme points, never on a grid.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

SIMPLEX_TOL = 1e-12
# Largest alphabet for which box credal sets get a full vertex enumeration.
MAX_VERTEX_ALPHABET = 8


class FamilyError(ValueError):
    """Invalid family definition or alphabet mismatch."""


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple

    def __post_init__(self):
        syms = tuple(self.symbols)
        if not syms:
            raise FamilyError("alphabet must have at least one symbol")
        if len(set(syms)) != len(syms):
            raise FamilyError(f"alphabet symbols must be distinct: {syms}")
        object.__setattr__(self, "symbols", syms)

    @classmethod
    def of_size(cls, k: int) -> "Alphabet":
        return cls(tuple(range(k)))

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __contains__(self, s) -> bool:
        return s in self.symbols

    def index(self, symbol) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise FamilyError(f"symbol {symbol!r} not in alphabet {self.symbols}") from None

    def to_list(self) -> list:
        return list(self.symbols)


BINARY = Alphabet((0, 1))


def _check_simplex(probs: np.ndarray, what: str = "distribution") -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 1:
        raise FamilyError(f"{what} must be a vector")
    if not np.all(np.isfinite(probs)):
        raise FamilyError(f"{what} has non-finite entries")
    if np.any(probs < 0) or np.any(probs > 1):
        raise FamilyError(f"{what} entries must lie in [0, 1]: {probs}")
    if abs(probs.sum() - 1.0) > SIMPLEX_TOL:
        raise FamilyError(f"{what} sums to {float(probs.sum())!r}, not 1")
    return probs


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteDistribution:
    alphabet: Alphabet
    probs: np.ndarray

    def __post_init__(self):
        probs = _check_simplex(self.probs)
        if len(probs) != len(self.alphabet):
            raise FamilyError(
                f"{len(probs)} probabilities for an alphabet of {len(self.alphabet)}"
            )
        object.__setattr__(self, "probs", _frozen(probs))

    @classmethod
    def of(cls, probs: Sequence[float], alphabet: Alphabet | None = None) -> "FiniteDistribution":
        probs = np.asarray(probs, dtype=float)
        return cls(alphabet or Alphabet.of_size(len(probs)), probs)

    def prob(self, symbol) -> float:
        return float(self.probs[self.alphabet.index(symbol)])

    def expect(self, f) -> float:
        return float(self.probs @ values_on(self.alphabet, f))


def values_on(alphabet: Alphabet, f) -> np.ndarray:
    """Evaluate ``f`` (callable, mapping or sequence) on every symbol."""
    if callable(f):
        return np.array([float(f(s)) for s in alphabet], dtype=float)
    if isinstance(f, Mapping):
        if set(f) != set(alphabet.symbols):
            raise FamilyError(
                f"function domain {sorted(map(str, f))} does not match alphabet {alphabet.symbols}"
            )
        return np.array([float(f[s]) for s in alphabet], dtype=float)
    vals = np.asarray(f, dtype=float)
    if vals.shape != (len(alphabet),):
        raise FamilyError(f"function has shape {vals.shape}, alphabet has {len(alphabet)} symbols")
    return vals


class DistributionFamily:
    """Base class. Subclasses define the member set and its extreme points."""

    alphabet: Alphabet
    kind: str = "abstract"
    # True for one-parameter continua (parameter range given by ``bounds``).
    continuous: bool = False

    @property
    def bounds(self) -> tuple[float, float]:
        raise FamilyError(f"{self.kind} family has no parameter interval")

    def member(self, t) -> np.ndarray:
        raise NotImplementedError

    def members(self, points: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """(parameters, probability rows). ``points`` sizes the grid of continua."""
        raise NotImplementedError

    def extreme_points(self) -> tuple[np.ndarray, np.ndarray]:
        """Members at which every linear functional attains its sup and inf."""
        return self.members()

    @property
    def is_singleton(self) -> bool:
        params, probs = self.extreme_points()
        return bool(np.all(np.abs(probs - probs[0]) == 0))

    def upper(self, f) -> float:
        _, probs = self.extreme_points()
        return float(np.max(probs @ values_on(self.alphabet, f)))

    def distribution(self, t) -> FiniteDistribution:
        return FiniteDistribution(self.alphabet, self.member(t))

    def to_dict(self) -> dict:
        raise NotImplementedError


class EnumeratedFamily(DistributionFamily):
    kind = "enumerated"

    def __init__(self, members: Iterable, alphabet: Alphabet | None = None):
        rows = []
        for m in members:
            if isinstance(m, FiniteDistribution):
                if alphabet is None:
                    alphabet = m.alphabet
                elif m.alphabet != alphabet:
                    raise FamilyError("members use different alphabets")
                rows.append(np.asarray(m.probs))
            else:
                rows.append(_check_simplex(m, "family member"))
        if not rows:
            raise FamilyError("empty family")
        k = len(rows[0])
        if any(len(r) != k for r in rows):
            raise FamilyError("members have different lengths")
        self.alphabet = alphabet or Alphabet.of_size(k)
        if len(self.alphabet) != k:
            raise FamilyError(f"members have {k} entries, alphabet has {len(self.alphabet)}")
        self._probs = _frozen(np.vstack(rows))

    @classmethod
    def singleton(cls, probs, alphabet: Alphabet | None = None) -> "EnumeratedFamily":
        return cls([np.asarray(probs, dtype=float)], alphabet)

    def __len__(self) -> int:
        return len(self._probs)

    def member(self, t) -> np.ndarray:
        return self._probs[int(t)]

    def members(self, points=None):
        return np.arange(len(self._probs)), self._probs

    def to_dict(self) -> dict:
        return {
            "kind": "enumerated",
            "alphabet": self.alphabet.to_list(),
            "members": self._probs.tolist(),
        }

    def __repr__(self) -> str:
        return f"EnumeratedFamily({self._probs.tolist()})"


class IntervalBernoulli(DistributionFamily):
    """Bernoulli members (q, 1-q) for q in [max(p-eps, 0), min(p+eps, 1)].

    The parameter q is the probability of the first symbol.
    """

    kind = "interval_bernoulli"
    continuous = True

    def __init__(self, p: float, eps: float = 0.0, alphabet: Alphabet = BINARY):
        if not 0.0 <= p <= 1.0:
            raise FamilyError(f"center p={p} outside [0, 1]")
        if eps < 0:
            raise FamilyError(f"radius eps={eps} is negative")
        self._set(max(p - eps, 0.0), min(p + eps, 1.0), alphabet)
        self.p, self.eps = float(p), float(eps)

    @classmethod
    def from_bounds(cls, lo: float, hi: float, alphabet: Alphabet = BINARY) -> "IntervalBernoulli":
        if not 0.0 <= lo <= hi <= 1.0:
            raise FamilyError(f"need 0 <= lo <= hi <= 1, got [{lo}, {hi}]")
        fam = cls.__new__(cls)
        fam._set(float(lo), float(hi), alphabet)
        fam.p, fam.eps = (lo + hi) / 2, (hi - lo) / 2
        return fam

    def _set(self, lo, hi, alphabet):
        if len(alphabet) != 2:
            raise FamilyError("an interval Bernoulli family needs a binary alphabet")
        self.alphabet = alphabet
        self.lo, self.hi = lo, hi

    @property
    def bounds(self):
        return self.lo, self.hi

    @property
    def is_singleton(self) -> bool:
        return self.lo == self.hi

    def member(self, t) -> np.ndarray:
        t = float(t)
        if not self.lo - 1e-15 <= t <= self.hi + 1e-15:
            raise FamilyError(f"parameter {t} outside [{self.lo}, {self.hi}]")
        return np.array([t, 1.0 - t])

    def members(self, points: int | None = None):
        qs = np.linspace(self.lo, self.hi, points or 2001)
        return qs, np.column_stack([qs, 1.0 - qs])

    def extreme_points(self):
        qs = np.array([self.lo, self.hi])
        return qs, np.column_stack([qs, 1.0 - qs])

    def to_dict(self) -> dict:
        return {
            "kind": "interval_bernoulli",
            "alphabet": self.alphabet.to_list(),
            "lo": self.lo,
            "hi": self.hi,
        }

    def __repr__(self) -> str:
        return f"IntervalBernoulli(lo={self.lo!r}, hi={self.hi!r})"


class IntervalCategorical(DistributionFamily):
    """Box credal set {p : lower <= p <= upper, sum p = 1}.

    Linear functionals use the greedy vertex method and are exact. Nonlinear
    objectives are evaluated on a representative finite set (vertices, edge
    midpoints and the maximum-entropy member), which is not a certified sup.
    """

    kind = "interval_categorical"

    def __init__(self, lower, upper, alphabet: Alphabet | None = None):
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise FamilyError("lower and upper must be vectors of equal length")
        if np.any(lo < 0) or np.any(hi > 1) or np.any(lo > hi):
            raise FamilyError("need 0 <= lower <= upper <= 1 for every symbol")
        if lo.sum() > 1 + SIMPLEX_TOL or hi.sum() < 1 - SIMPLEX_TOL:
            raise FamilyError("credal set is empty: need sum(lower) <= 1 <= sum(upper)")
        self.alphabet = alphabet or Alphabet.of_size(len(lo))
        if len(self.alphabet) != len(lo):
            raise FamilyError("bounds and alphabet differ in length")
        self.lower, self.upper_bounds = _frozen(lo), _frozen(hi)
        self._vertices = _frozen(self._enumerate_vertices())
        self._reps = _frozen(self._representatives())

    def _greedy(self, order) -> np.ndarray:
        p = np.array(self.lower)
        rem = 1.0 - p.sum()
        for x in order:
            add = min(self.upper_bounds[x] - self.lower[x], rem)
            p[x] += add
            rem -= add
        return p

    def _enumerate_vertices(self) -> np.ndarray:
        k = len(self.lower)
        if k <= MAX_VERTEX_ALPHABET:
            orders = itertools.permutations(range(k))
        else:
            orders = [[x] + [y for y in range(k) if y != x] for x in range(k)]
        verts = {tuple(np.round(self._greedy(o), 15)): self._greedy(o) for o in orders}
        return np.vstack(list(verts.values()))

    def max_entropy_member(self) -> np.ndarray:
        a, b = 0.0, 1.0
        for _ in range(200):
            c = (a + b) / 2
            if np.clip(c, self.lower, self.upper_bounds).sum() < 1.0:
                a = c
            else:
                b = c
        p = np.clip((a + b) / 2, self.lower, self.upper_bounds)
        return p / p.sum()

    def _representatives(self) -> np.ndarray:
        v = self._vertices
        mids = [(v[i] + v[j]) / 2 for i in range(len(v)) for j in range(i + 1, len(v))]
        return np.vstack([v, *mids[:2000], self.max_entropy_member()])

    def upper(self, f) -> float:
        vals = values_on(self.alphabet, f)
        p = self._greedy(np.argsort(-vals, kind="stable"))
        return float(p @ vals)

    def member(self, t) -> np.ndarray:
        return self._reps[int(t)]

    def members(self, points=None):
        return np.arange(len(self._reps)), self._reps

    def extreme_points(self):
        return np.arange(len(self._vertices)), self._vertices

    def to_dict(self) -> dict:
        return {
            "kind": "interval_categorical",
            "alphabet": self.alphabet.to_list(),
            "lower": self.lower.tolist(),
            "upper": self.upper_bounds.tolist(),
        }


class GridFamily(DistributionFamily):
    """Finite discretization of an interval family with ``points`` members."""

    kind = "grid"

    def __init__(self, base: IntervalBernoulli, points: int):
        if not base.continuous:
            raise FamilyError("a grid family discretizes an interval family")
        if points < 2:
            raise FamilyError("a grid needs at least 2 points")
        self.base, self.points = base, int(points)
        self.alphabet = base.alphabet
        self._params, self._probs = base.members(self.points)

    def member(self, t) -> np.ndarray:
        return self._probs[int(t)]

    def parameter(self, t) -> float:
        return float(self._params[int(t)])

    def members(self, points=None):
        return np.arange(self.points), self._probs

    def to_dict(self) -> dict:
        return {"kind": "grid", "base": self.base.to_dict(), "points": self.points}


# ---------------------------------------------------------------- channels


def _check_channel(W, what="channel matrix") -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.ndim != 2:
        raise FamilyError(f"{what} must be 2-D")
    if not np.all(np.isfinite(W)) or np.any(W < 0) or np.any(W > 1):
        raise FamilyError(f"{what} entries must lie in [0, 1]")
    if np.any(np.abs(W.sum(axis=1) - 1.0) > SIMPLEX_TOL):
        raise FamilyError(f"{what} is not row-stochastic: row sums {W.sum(axis=1)}")
    return W


class ChannelFamily:
    input: Alphabet
    output: Alphabet
    kind: str = "abstract"
    continuous: bool = False

    @property
    def bounds(self) -> tuple[float, float]:
        raise FamilyError(f"{self.kind} channel family has no parameter interval")

    def member(self, t) -> np.ndarray:
        raise NotImplementedError

    def members(self, points: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def row_family(self, x) -> DistributionFamily:
        """Family of output laws given input symbol ``x`` (rows vary freely)."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    @property
    def is_singleton(self) -> bool:
        _, mats = self.members(2)
        return bool(np.all(mats == mats[0]))


class EnumeratedChannel(ChannelFamily):
    kind = "enumerated"

    def __init__(self, matrices: Iterable, input: Alphabet | None = None, output: Alphabet | None = None):
        mats = [_check_channel(W) for W in matrices]
        if not mats:
            raise FamilyError("empty channel family")
        if any(W.shape != mats[0].shape for W in mats):
            raise FamilyError("channel matrices differ in shape")
        nx, ny = mats[0].shape
        self.input = input or Alphabet.of_size(nx)
        self.output = output or Alphabet.of_size(ny)
        if (len(self.input), len(self.output)) != (nx, ny):
            raise FamilyError("channel shape does not match its alphabets")
        self._mats = _frozen(np.stack(mats))

    @classmethod
    def singleton(cls, W, input=None, output=None) -> "EnumeratedChannel":
        return cls([W], input, output)

    def __len__(self) -> int:
        return len(self._mats)

    def member(self, t) -> np.ndarray:
        return self._mats[int(t)]

    def members(self, points=None):
        return np.arange(len(self._mats)), self._mats

    def row_family(self, x) -> DistributionFamily:
        i = self.input.index(x)
        return EnumeratedFamily(self._mats[:, i, :], self.output)

    def to_dict(self) -> dict:
        return {
            "kind": "enumerated",
            "input": self.input.to_list(),
            "output": self.output.to_list(),
            "matrices": self._mats.tolist(),
        }


class IntervalBSC(ChannelFamily):
    """Binary symmetric channels with crossover lam in [max(p-eps,0), min(p+eps,1)]."""

    kind = "interval_bsc"
    continuous = True

    def __init__(self, p: float, eps: float = 0.0, input: Alphabet = BINARY, output: Alphabet = BINARY):
        if not 0.0 <= p <= 1.0:
            raise FamilyError(f"crossover center p={p} outside [0, 1]")
        if eps < 0:
            raise FamilyError(f"radius eps={eps} is negative")
        if len(input) != 2 or len(output) != 2:
            raise FamilyError("an interval BSC family needs binary alphabets")
        self.p, self.eps = float(p), float(eps)
        self.lo, self.hi = max(p - eps, 0.0), min(p + eps, 1.0)
        self.input, self.output = input, output

    @property
    def bounds(self):
        return self.lo, self.hi

    @property
    def is_singleton(self) -> bool:
        return self.lo == self.hi

    def member(self, t) -> np.ndarray:
        t = float(t)
        return np.array([[1.0 - t, t], [t, 1.0 - t]])

    def members(self, points: int | None = None):
        lams = np.linspace(self.lo, self.hi, points or 2001)
        mats = np.empty((len(lams), 2, 2))
        mats[:, 0, 0] = mats[:, 1, 1] = 1.0 - lams
        mats[:, 0, 1] = mats[:, 1, 0] = lams
        return lams, mats

    def row_family(self, x) -> DistributionFamily:
        i = self.input.index(x)
        if i == 0:
            return IntervalBernoulli.from_bounds(1.0 - self.hi, 1.0 - self.lo, self.output)
        return IntervalBernoulli.from_bounds(self.lo, self.hi, self.output)

    def to_dict(self) -> dict:
        return {"kind": "interval_bsc", "p": self.p, "eps": self.eps}

    def __repr__(self) -> str:
        return f"IntervalBSC(p={self.p!r}, eps={self.eps!r})"


# ------------------------------------------------------------- functionals


def sublinear_expectation(family: DistributionFamily, f) -> float:
    """sup over members of E_p[f]."""
    return family.upper(f)


def conjugate_expectation(family: DistributionFamily, f) -> float:
    """inf over members of E_p[f], computed as -sup E[-f]."""
    vals = values_on(family.alphabet, f)
    return -family.upper(-vals)


def capacity(family: DistributionFamily, event: Iterable) -> tuple[float, float]:
    """Upper and lower probabilities (V(A), v(A)) of an event A."""
    idx = {family.alphabet.index(s) for s in event}
    k = len(family.alphabet)
    ind = np.zeros(k)
    ind[list(idx)] = 1.0
    if len(idx) == k:
        return 1.0, 1.0
    if not idx:
        return 0.0, 0.0
    V = min(max(family.upper(ind), 0.0), 1.0)
    v = 1.0 - min(max(family.upper(1.0 - ind), 0.0), 1.0)
    return V, min(v, V)


def sequential_expectation(outer: DistributionFamily, inner: DistributionFamily, phi) -> float:
    """sup_{outer} sum_x p(x) [sup_{inner} sum_y q(y) phi(x, y)].

    The inner variable is the one declared independent of the outer; swapping the
    arguments generally changes the value.
    """
    if callable(phi):
        table = np.array([[float(phi(x, y)) for y in inner.alphabet] for x in outer.alphabet])
    else:
        table = np.asarray(phi, dtype=float)
    if table.shape != (len(outer.alphabet), len(inner.alphabet)):
        raise FamilyError(
            f"phi has shape {table.shape}, expected {(len(outer.alphabet), len(inner.alphabet))}"
        )
    g = np.array([inner.upper(row) for row in table])
    return outer.upper(g)


# ---------------------------------------------------------------- JSON I/O


def _alphabet(d: Mapping, key: str, default: Alphabet | None) -> Alphabet | None:
    if key in d:
        return Alphabet(tuple(d[key]))
    return default


def _require(d: Mapping, allowed: set, required: set, what: str):
    unknown = set(d) - allowed
    if unknown:
        raise FamilyError(f"{what}: unknown field(s) {sorted(unknown)}")
    missing = required - set(d)
    if missing:
        raise FamilyError(f"{what}: missing field(s) {sorted(missing)}")


def family_from_dict(d: Mapping[str, Any]) -> DistributionFamily:
    kind = d.get("kind")
    if kind == "interval_bernoulli":
        _require(d, {"kind", "p", "eps", "lo", "hi", "alphabet"}, set(), "interval_bernoulli")
        alpha = _alphabet(d, "alphabet", BINARY)
        if "lo" in d or "hi" in d:
            return IntervalBernoulli.from_bounds(float(d["lo"]), float(d["hi"]), alpha)
        if "p" not in d:
            raise FamilyError("interval_bernoulli: give p (and eps) or lo and hi")
        return IntervalBernoulli(float(d["p"]), float(d.get("eps", 0.0)), alpha)
    if kind == "enumerated":
        _require(d, {"kind", "members", "alphabet"}, {"members"}, "enumerated")
        return EnumeratedFamily(d["members"], _alphabet(d, "alphabet", None))
    if kind == "singleton":
        _require(d, {"kind", "probs", "alphabet"}, {"probs"}, "singleton")
        return EnumeratedFamily.singleton(d["probs"], _alphabet(d, "alphabet", None))
    if kind == "interval_categorical":
        _require(d, {"kind", "lower", "upper", "alphabet"}, {"lower", "upper"}, "interval_categorical")
        return IntervalCategorical(d["lower"], d["upper"], _alphabet(d, "alphabet", None))
    if kind == "grid":
        _require(d, {"kind", "base", "points"}, {"base", "points"}, "grid")
        return GridFamily(family_from_dict(d["base"]), int(d["points"]))
    raise FamilyError(f"unknown family kind {kind!r}")


def channel_from_dict(d: Mapping[str, Any]) -> ChannelFamily:
    kind = d.get("kind")
    if kind in ("interval_bsc", "bsc"):
        _require(d, {"kind", "p", "eps"}, {"p"}, kind)
        return IntervalBSC(float(d["p"]), float(d.get("eps", 0.0)))
    if kind == "enumerated":
        _require(d, {"kind", "matrices", "input", "output"}, {"matrices"}, "enumerated channel")
        return EnumeratedChannel(
            d["matrices"], _alphabet(d, "input", None), _alphabet(d, "output", None)
        )
    if kind == "identity":
        _require(d, {"kind", "size"}, {"size"}, "identity")
        return EnumeratedChannel.singleton(np.eye(int(d["size"])))
    raise FamilyError(f"unknown channel kind {kind!r}")
