"""Executable property suites over randomly generated finite families.

Every case draws its own generator (substream ``case`` of the suite seed), so a
violating case can be rebuilt from (seed, case) alone; the serialized families
are also stored in the violation record.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from nonlinfo import classical
from nonlinfo.coding import source_cluster_rate
from nonlinfo.families import Alphabet, EnumeratedChannel, EnumeratedFamily, IntervalBernoulli, IntervalBSC
from nonlinfo.measures import (
    fano_bound,
    nonlinear_backward_conditional_entropy,
    nonlinear_conditional_entropy,
    nonlinear_conditional_mutual_information,
    nonlinear_entropy,
    nonlinear_joint_entropy,
    nonlinear_mutual_information,
)
from nonlinfo.rng import stream

TOL = 1e-9


@dataclass
class SuiteReport:
    suite: str
    cases: int
    seed: int
    checks: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "cases": self.cases,
            "seed": self.seed,
            "checks": self.checks,
            "passed": self.passed,
            "violations": self.violations,
        }


class _Recorder:
    def __init__(self, report: SuiteReport):
        self.report = report

    def check(self, name, case, ok, lhs, rhs, **families):
        self.report.checks[name] = self.report.checks.get(name, 0) + 1
        if not ok:
            self.report.violations.append({
                "check": name,
                "case": case,
                "lhs": float(lhs),
                "rhs": float(rhs),
                "families": {k: v.to_dict() for k, v in families.items()},
            })


def random_distributions(rng, k: int, m: int) -> np.ndarray:
    """m points drawn uniformly from the (k-1)-simplex."""
    p = rng.dirichlet(np.ones(k), size=m)
    # absorb rounding so rows sum to 1 within the construction tolerance
    p[:, -1] = 1.0 - p[:, :-1].sum(axis=1)
    return np.clip(p, 0.0, 1.0)


def random_family(rng, k=None, m=None, alphabet=None) -> EnumeratedFamily:
    k = k or int(rng.integers(2, 6))
    m = m or int(rng.integers(1, 5))
    return EnumeratedFamily(random_distributions(rng, k, m), alphabet)


def random_channel(rng, kx, ky=None, m=None, input=None) -> EnumeratedChannel:
    ky = ky or int(rng.integers(2, 6))
    m = m or int(rng.integers(1, 5))
    mats = np.stack([random_distributions(rng, ky, kx) for _ in range(m)])
    return EnumeratedChannel(mats, input=input)


def _pairs(a: Alphabet, b: Alphabet) -> Alphabet:
    return Alphabet(tuple((x, y) for x in a for y in b))


def product_family(source: EnumeratedFamily, channel: EnumeratedChannel) -> EnumeratedFamily:
    """All joint laws p(x) W(y|x) over the pair alphabet."""
    _, P = source.members()
    _, Ws = channel.members()
    rows = [(p[:, None] * W).ravel() for p in P for W in Ws]
    rows = [r / r.sum() for r in rows]
    return EnumeratedFamily(rows, _pairs(source.alphabet, channel.output))


def compose(first: EnumeratedChannel, second: EnumeratedChannel) -> EnumeratedChannel:
    _, A = first.members()
    _, B = second.members()
    return EnumeratedChannel([a @ b for a in A for b in B], first.input, second.output)


def marginalize(channel12: EnumeratedChannel, channelY: EnumeratedChannel) -> EnumeratedChannel:
    """Channel X1 -> Y induced by X1 -> X2 and (X1, X2) -> Y, for every member pair."""
    _, A = channel12.members()
    _, B = channelY.members()
    k1, k2 = A.shape[1], A.shape[2]
    mats = []
    for a in A:
        for b in B:
            b3 = b.reshape(k1, k2, -1)
            mats.append(np.einsum("xz,xzy->xy", a, b3))
    return EnumeratedChannel(mats, channel12.input, channelY.output)


def induced_output(source: EnumeratedFamily, channel: EnumeratedChannel) -> EnumeratedFamily:
    _, P = source.members()
    _, Ws = channel.members()
    return EnumeratedFamily([p @ W for p in P for W in Ws], channel.output)


# -------------------------------------------------------------- theorem suite


def _case_theorems(case: int, seed: int, rec: _Recorder):
    rng = stream(seed, case)
    S = random_family(rng)
    kx = len(S.alphabet)
    C = random_channel(rng, kx)
    singleton = len(S) == 1 and len(C) == 1

    hx = nonlinear_entropy(S).value
    hyx = nonlinear_conditional_entropy(S, C).value
    hxy = nonlinear_joint_entropy(S, C).value
    rec.check("joint<=entropy+conditional", case, hxy <= hx + hyx + TOL, hxy, hx + hyx, source=S, channel=C)
    if singleton:
        rec.check("joint=entropy+conditional (singleton)", case, abs(hxy - hx - hyx) <= TOL, hxy, hx + hyx,
                  source=S, channel=C)

    ixy = nonlinear_mutual_information(S, C).value
    hx_y = nonlinear_backward_conditional_entropy(S, C).value
    rec.check("information>=entropy-equivocation", case, ixy >= hx - hx_y - TOL, ixy, hx - hx_y, source=S, channel=C)
    if singleton:
        rec.check("information=entropy-equivocation (singleton)", case, abs(ixy - hx + hx_y) <= TOL, ixy,
                  hx - hx_y, source=S, channel=C)

    # three-variable chain rule
    C2 = random_channel(rng, kx * len(C.output), input=_pairs(S.alphabet, C.output))
    P12 = product_family(S, C)
    h123 = nonlinear_joint_entropy(P12, C2).value
    rhs = hx + hyx + nonlinear_conditional_entropy(P12, C2).value
    rec.check("chain rule n=3", case, h123 <= rhs + TOL, h123, rhs, source=S, channel=C, channel2=C2)

    # two-input information bound
    ky = int(rng.integers(2, 6))
    CY = random_channel(rng, kx * len(C.output), ky, input=_pairs(S.alphabet, C.output))
    i12 = nonlinear_mutual_information(P12, CY).value
    i1 = nonlinear_mutual_information(S, marginalize(C, CY)).value
    cond = np.array([nonlinear_conditional_mutual_information(C, CY, z, pair_order="zx").value for z in S.alphabet])
    i2_1 = S.upper(cond)
    rec.check("joint information bound", case, i12 <= i1 + i2_1 + TOL, i12, i1 + i2_1,
              source=S, channel=C, channelY=CY)

    # Fano: estimator channel on the same alphabet
    E = random_channel(rng, kx, kx)
    _, P = S.members()
    _, Es = E.members()
    pe = [float(p @ (1 - np.diag(W))) for p in P for W in Es]
    pe = [min(max(v, 0.0), 1.0) for v in pe]
    lhs = nonlinear_backward_conditional_entropy(S, E).value
    rhs = fano_bound(pe, kx)
    rec.check("fano", case, lhs <= rhs + TOL, lhs, rhs, source=S, estimator=E)

    # data processing
    B = random_channel(rng, len(C.output))
    ixz = nonlinear_mutual_information(S, compose(C, B)).value
    iyz = nonlinear_mutual_information(induced_output(S, C), B).value
    rec.check("data processing", case, ixz <= min(ixy, iyz) + TOL, ixz, min(ixy, iyz), source=S, channel=C, channel2=B)


def theorem_suite(cases: int = 1000, seed: int = 7) -> SuiteReport:
    if cases < 1:
        raise ValueError("cases must be at least 1")
    report = SuiteReport("theorems", cases, seed)
    rec = _Recorder(report)
    for case in range(cases):
        _case_theorems(case, seed, rec)
    return report


# ---------------------------------------------------------- degeneration suite


def degeneration_suite(cases: int = 200, seed: int = 7) -> SuiteReport:
    """Singleton families against classical formulas."""
    report = SuiteReport("degeneration", cases, seed)
    rec = _Recorder(report)
    for case in range(cases):
        rng = stream(seed, case)
        S = random_family(rng, m=1)
        C = random_channel(rng, len(S.alphabet), m=1)
        p, W = S.member(0), C.member(0)
        pairs = [
            ("entropy", nonlinear_entropy(S).value, classical.entropy(p)),
            ("joint", nonlinear_joint_entropy(S, C).value, classical.joint_entropy(p, W)),
            ("conditional", nonlinear_conditional_entropy(S, C).value, classical.conditional_entropy(p, W)),
            ("mutual", nonlinear_mutual_information(S, C).value, classical.mutual_information(p, W)),
            ("cluster rate", source_cluster_rate(S), classical.entropy(p)),
        ]
        for name, got, want in pairs:
            rec.check(name, case, abs(got - want) <= TOL, got, want, source=S, channel=C)
        q = float(rng.uniform())
        lam = float(rng.uniform(0, 0.5))
        B = IntervalBernoulli(q, 0.0)
        rec.check("interval entropy eps=0", case,
                  abs(nonlinear_entropy(B).value - classical.binary_entropy(q)) <= TOL,
                  nonlinear_entropy(B).value, classical.binary_entropy(q), source=B)
        got = nonlinear_mutual_information(EnumeratedFamily.singleton([0.5, 0.5]), IntervalBSC(lam, 0.0)).value
        want = 1 - classical.binary_entropy(lam)
        rec.check("bsc eps=0", case, abs(got - want) <= TOL, got, want, channel=IntervalBSC(lam, 0.0))
    return report


# -------------------------------------------------------------- coding suite


def coding_suite(cases: int = 200, seed: int = 7) -> SuiteReport:
    """cluster rate <= inf H <= sup H on random finite families."""
    report = SuiteReport("coding", cases, seed)
    rec = _Recorder(report)
    for case in range(cases):
        rng = stream(seed, case)
        S = random_family(rng)
        _, P = S.members()
        hs = classical.entropy(P)
        cr = source_cluster_rate(S)
        hi = nonlinear_entropy(S).value
        rec.check("cluster<=inf entropy", case, cr <= hs.min() + TOL, cr, hs.min(), source=S)
        rec.check("inf entropy<=sup entropy", case, hs.min() <= hi + TOL, hs.min(), hi, source=S)
    return report


SUITES = {"theorems": theorem_suite, "degeneration": degeneration_suite, "coding": coding_suite}
