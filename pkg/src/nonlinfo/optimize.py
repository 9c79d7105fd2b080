"""Numerical engines for the nested sup/inf problems.

* grid search over a family with optional golden-section refinement,
* Blahut-Arimoto channel capacity with a certified stopping bracket,
* the inf-over-Q / sup-over-family rate-distortion problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import linprog, minimize

from nonlinfo import classical
from nonlinfo.families import (
    ChannelFamily,
    DistributionFamily,
    FamilyError,
    FiniteDistribution,
    SIMPLEX_TOL,
)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OptimizerConfig:
    grid_points: int = 2001
    refine_tol: float = 1e-10
    ba_tol: float = 1e-9
    ba_max_iter: int = 10000
    seed: int = 0

    def __post_init__(self):
        if self.grid_points < 2:
            raise ValueError("grid_points must be at least 2")
        if self.refine_tol <= 0 or self.ba_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.ba_max_iter < 1:
            raise ValueError("ba_max_iter must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


DEFAULT = OptimizerConfig()


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, bracket: float):
        super().__init__(f"{message} (bracket width {bracket:.3e})")
        self.bracket = bracket


class Extremum(NamedTuple):
    value: float
    witness: object
    # Grid spacing of the witness; 0 when refined or exact.
    resolution: float = 0.0


# ------------------------------------------------------------ 1-D search


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10):
    """Maximize a unimodal ``f`` on [a, b]; returns (x*, f(x*)).

    The endpoints are compared against the interior optimum so monotone
    functions return the right endpoint exactly.
    """
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    lo, hi = a, b
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
    x = (lo + hi) / 2
    best = (f(x), x)
    for e in (a, b):
        fe = f(e)
        if fe > best[0]:
            best = (fe, e)
    return best[1], best[0]


# ------------------------------------------------------- family searches


def _evaluate(objective, stack, vectorized):
    if vectorized:
        return np.asarray(objective(stack), dtype=float)
    return np.array([float(objective(m)) for m in stack])


def sup_over_family(
    family: DistributionFamily | ChannelFamily,
    objective: Callable,
    config: OptimizerConfig = DEFAULT,
    unimodal: bool = False,
    vectorized: bool = False,
) -> Extremum:
    """Maximize ``objective(member)`` over a family.

    Finite families are searched exhaustively. Interval families are searched on
    ``config.grid_points`` parameters; with ``unimodal`` the best grid point is
    refined by golden section inside its neighbouring grid cells, otherwise the
    grid spacing is reported as the resolution. ``vectorized`` objectives take a
    stack of members and return one value per member.
    """
    params, stack = family.members(config.grid_points)
    if len(params) == 0:
        raise FamilyError("empty family")
    vals = _evaluate(objective, stack, vectorized)
    i = int(np.argmax(vals))
    if not family.continuous:
        return Extremum(float(vals[i]), params[i].item(), 0.0)
    if len(params) == 1 or params[0] == params[-1]:
        return Extremum(float(vals[i]), float(params[i]), 0.0)
    step = float(params[1] - params[0])
    if not unimodal:
        return Extremum(float(vals[i]), float(params[i]), step)

    def scalar(t):
        m = family.member(t)
        return float(objective(m[None])[0]) if vectorized else float(objective(m))

    a = float(params[max(i - 1, 0)])
    b = float(params[min(i + 1, len(params) - 1)])
    x, fx = golden_section(scalar, a, b, config.refine_tol)
    if fx >= vals[i]:
        return Extremum(fx, x, 0.0)
    return Extremum(float(vals[i]), float(params[i]), 0.0)


def inf_over_family(family, objective, config: OptimizerConfig = DEFAULT, unimodal=False, vectorized=False) -> Extremum:
    """Minimize ``objective``; ``unimodal`` here means unimodal in the minimum."""
    if vectorized:
        neg = lambda s: -np.asarray(objective(s), dtype=float)  # noqa: E731
    else:
        neg = lambda m: -float(objective(m))  # noqa: E731
    r = sup_over_family(family, neg, config, unimodal, vectorized)
    return Extremum(-r.value, r.witness, r.resolution)


def sup_over_pair(
    fa,
    fb,
    objective: Callable[[np.ndarray, np.ndarray], np.ndarray],
    config: OptimizerConfig = DEFAULT,
    points: int = 201,
    rounds: int = 4,
) -> Extremum:
    """Maximize ``objective(A, B)`` jointly over two families.

    ``objective`` takes stacks A (m, ...) and B (k, ...) and returns an (m, k)
    table. Interval coordinates use ``points`` grid values followed by a few
    rounds of coordinate-wise golden-section polishing around the best cell.
    The witness is the parameter pair.
    """
    pa, sa = fa.members(min(points, config.grid_points))
    pb, sb = fb.members(min(points, config.grid_points))
    table = np.asarray(objective(sa, sb), dtype=float)
    i, j = np.unravel_index(int(np.argmax(table)), table.shape)
    best = float(table[i, j])
    ta, tb = pa[i].item(), pb[j].item()

    def one(t_a, t_b):
        return float(objective(fa.member(t_a)[None], fb.member(t_b)[None])[0, 0])

    def bracket(params, k):
        return float(params[max(k - 1, 0)]), float(params[min(k + 1, len(params) - 1)])

    res = 0.0
    if fa.continuous and pa[0] != pa[-1]:
        ra = bracket(pa, i)
    else:
        ra = None
    if fb.continuous and pb[0] != pb[-1]:
        rb = bracket(pb, j)
    else:
        rb = None
    for _ in range(rounds if (ra or rb) else 0):
        if ra:
            x, fx = golden_section(lambda t: one(t, tb), *ra, tol=config.refine_tol)
            if fx > best:
                best, ta = fx, x
        if rb:
            y, fy = golden_section(lambda t: one(ta, t), *rb, tol=config.refine_tol)
            if fy > best:
                best, tb = fy, y
    return Extremum(best, (ta, tb), res)


# --------------------------------------------------------- Blahut-Arimoto


class Capacity(NamedTuple):
    capacity: float
    input: FiniteDistribution
    bracket: float
    iterations: int


def _row_divergence(W: np.ndarray, r: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(W > 0, W * np.log2(W / r[:, None, :]), 0.0)
    return terms.sum(axis=-1)


def blahut_arimoto_batch(Ws: np.ndarray, tol: float = 1e-9, max_iter: int = 10000):
    """Capacities of a stack of channels (m, X, Y).

    Stops when every channel's bracket max_x D(W_x || r) - I(p; W) is at most
    ``tol``; the reported capacity is the lower end of the bracket. Returns
    (capacities, inputs, brackets, iterations).
    """
    Ws = np.asarray(Ws, dtype=float)
    m, nx, _ = Ws.shape
    p = np.full((m, nx), 1.0 / nx)
    for it in range(1, max_iter + 1):
        r = np.einsum("mx,mxy->my", p, Ws)
        Dx = _row_divergence(Ws, r)
        lower = (p * Dx).sum(axis=1)
        upper = Dx.max(axis=1)
        gap = upper - lower
        if np.all(gap <= tol):
            return np.maximum(lower, 0.0), p, np.maximum(gap, 0.0), it
        p = p * np.exp2(Dx - upper[:, None])
        p /= p.sum(axis=1, keepdims=True)
    raise ConvergenceError("Blahut-Arimoto iteration cap reached", float(gap.max()))


def check_stochastic(W) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or np.any(W < 0) or np.any(W > 1) or not np.all(np.isfinite(W)):
        raise FamilyError("channel matrix must be 2-D with entries in [0, 1]")
    if np.any(np.abs(W.sum(axis=1) - 1.0) > SIMPLEX_TOL):
        raise FamilyError(f"channel matrix is not row-stochastic: row sums {W.sum(axis=1)}")
    return W


def blahut_arimoto(W, config: OptimizerConfig = DEFAULT) -> Capacity:
    W = check_stochastic(W)
    caps, ps, gaps, it = blahut_arimoto_batch(W[None], config.ba_tol, config.ba_max_iter)
    return Capacity(float(caps[0]), FiniteDistribution.of(ps[0] / ps[0].sum()), float(gaps[0]), it)


# --------------------------------------------------------- rate-distortion


def blahut_rate_distortion(p, d, D: float, tol: float = 1e-12, max_iter: int = 200000) -> float:
    """Classical R(D) of a single source by slope bisection and Blahut iterations.

    Used as an independent reference for the family solver.
    """
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    dmin = float(p @ d.min(axis=1))
    dmax = float(np.min(p @ d))
    if D >= dmax:
        return 0.0
    if D < dmin - 1e-12:
        raise ValueError("distortion below the achievable minimum")

    def point(s):
        A = np.exp(-s * d)
        q = np.full(d.shape[1], 1.0 / d.shape[1])
        for _ in range(max_iter):
            Q = q * A
            Q /= Q.sum(axis=1, keepdims=True)
            q_new = p @ Q
            if np.max(np.abs(q_new - q)) < tol:
                q = q_new
                break
            q = q_new
        Q = q * A
        Q /= Q.sum(axis=1, keepdims=True)
        return float(p @ (Q * d).sum(axis=1)), float(classical.mutual_information(p, Q))

    lo, hi = 0.0, 1.0
    while point(hi)[0] > D and hi < 200:
        hi *= 2
    for _ in range(100):
        mid = (lo + hi) / 2
        if point(mid)[0] > D:
            lo = mid
        else:
            hi = mid
    return point(hi)[1]


class InfeasibleDistortion(ValueError):
    def __init__(self, D: float, min_distortion: float):
        super().__init__(
            f"distortion level {D} is infeasible; the smallest achievable worst-case "
            f"expected distortion is {min_distortion}"
        )
        self.D = D
        self.min_distortion = min_distortion


@dataclass
class RDResult:
    value: float
    Q: np.ndarray
    witnesses: list = field(default_factory=list)
    min_distortion: float = 0.0
    achieved_distortion: float = 0.0
    bruteforce: float | None = None
    mismatch: bool = False
    method: str = "exchange"

    def __iter__(self):
        yield self.value
        yield self.Q


def worst_distortion(source: DistributionFamily, d: np.ndarray, Q: np.ndarray) -> float:
    """sup over the family of the expected distortion under Q (linear, so exact)."""
    per_x = (np.asarray(Q) * d).sum(axis=1)
    return source.upper(per_x)


def _mi_and_grad(p: np.ndarray, Q: np.ndarray):
    r = p @ Q
    L = np.log2(np.maximum(Q, 1e-12) / np.maximum(r, 1e-300)[None, :])
    val = float(np.sum(np.where(Q > 0, p[:, None] * Q * L, 0.0)))
    return val, p[:, None] * L


def _restricted_minimax(P: np.ndarray, E: np.ndarray, d: np.ndarray, D: float, Q0: np.ndarray):
    """min over Q of max_s I(P[s]; Q) with max_e E[e] . (Q d) <= D (SLSQP, epigraph form)."""
    nx, ny = d.shape
    nq = nx * ny

    def unpack(z):
        return z[:nq].reshape(nx, ny)

    def mi_cons(z):
        Q = unpack(z)
        return np.array([z[-1] - _mi_and_grad(p, Q)[0] for p in P])

    def mi_jac(z):
        Q = unpack(z)
        rows = []
        for p in P:
            g = _mi_and_grad(p, Q)[1].ravel()
            rows.append(np.concatenate([-g, [1.0]]))
        return np.array(rows)

    dist_rows = np.array([np.concatenate([-(e[:, None] * d).ravel(), [0.0]]) for e in E])
    eq_rows = np.zeros((nx, nq + 1))
    for x in range(nx):
        eq_rows[x, x * ny:(x + 1) * ny] = 1.0

    t0 = max(_mi_and_grad(p, Q0)[0] for p in P) + 1e-3
    z0 = np.concatenate([Q0.ravel(), [t0]])
    cons = [
        {"type": "ineq", "fun": mi_cons, "jac": mi_jac},
        {"type": "ineq", "fun": lambda z: D + dist_rows @ z, "jac": lambda z: dist_rows},
        {"type": "eq", "fun": lambda z: eq_rows @ z - 1.0, "jac": lambda z: eq_rows},
    ]
    obj_grad = np.zeros(nq + 1)
    obj_grad[-1] = 1.0
    res = minimize(
        lambda z: z[-1],
        z0,
        jac=lambda z: obj_grad,
        bounds=[(0.0, 1.0)] * nq + [(0.0, None)],
        constraints=cons,
        method="SLSQP",
        options={"ftol": 1e-15, "maxiter": 2000},
    )
    Q = np.clip(unpack(res.x), 0.0, 1.0)
    Q /= Q.sum(axis=1, keepdims=True)
    return Q


def sup_information(source: DistributionFamily, Q: np.ndarray, config: OptimizerConfig) -> Extremum:
    # I(p; Q) is concave in p, so golden refinement is valid on intervals.
    def obj(stack):
        return classical.mutual_information(stack, np.broadcast_to(Q, (len(stack),) + Q.shape))

    return sup_over_family(source, obj, config, unimodal=True, vectorized=True)


def _zero_rate(E: np.ndarray, d: np.ndarray, D: float):
    """Best output-independent Q (identical rows q): min_q max_e sum_xh q(xh) c_e(xh)."""
    C = E @ d  # (e, xh)
    ne, ny = C.shape
    # variables q (ny), s; minimize s s.t. C q - s <= 0, sum q = 1
    res = linprog(
        np.r_[np.zeros(ny), 1.0],
        A_ub=np.c_[C, -np.ones(ne)],
        b_ub=np.zeros(ne),
        A_eq=np.r_[np.ones(ny), 0.0][None],
        b_eq=[1.0],
        bounds=[(0, None)] * ny + [(None, None)],
        method="highs",
    )
    q = np.clip(res.x[:ny], 0.0, None)
    q /= q.sum()
    return float(res.x[-1]), q


def _bruteforce_2x2(source, d, D, E, step=1 / 400, theta_points=101):
    """min over a Q-grid of the max over a parameter grid of I(p; Q), 2x2 only.

    Q = [[1-a, a], [b, 1-b]]. For each a, the grid of b is augmented with the
    b values that put a distortion constraint exactly at D, so the optimum on the
    constraint boundary is not missed by the grid spacing.
    """
    a = np.arange(0.0, 1.0 + step / 2, step)
    bs = [np.broadcast_to(a, (len(a), len(a)))]
    # distortion under member e is alpha_e(a) + beta_e * b
    alpha = E[:, 0, None] * ((1 - a) * d[0, 0] + a * d[0, 1])[None] + E[:, 1, None] * d[1, 1]
    beta = E[:, 1] * (d[1, 0] - d[1, 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        for e in range(len(E)):
            if beta[e] != 0:
                be = (D - alpha[e]) / beta[e]
                bs.append(np.clip(be, 0.0, 1.0)[:, None])
    B = np.concatenate([np.broadcast_to(b, (len(a), b.shape[1])) for b in bs], axis=1)
    A = np.broadcast_to(a[:, None], B.shape)
    dist = (E[:, 0, None, None] * ((1 - A) * d[0, 0] + A * d[0, 1])[None]
            + E[:, 1, None, None] * (B * d[1, 0] + (1 - B) * d[1, 1])[None]).max(axis=0)
    feasible = dist <= D + 1e-12
    Qs = np.empty(A.shape + (2, 2))
    Qs[..., 0, 0], Qs[..., 0, 1] = 1 - A, A
    Qs[..., 1, 0], Qs[..., 1, 1] = B, 1 - B
    _, probs = source.members(theta_points) if source.continuous else source.members()
    worst = np.zeros(A.shape)
    for p in probs:
        worst = np.maximum(worst, classical.mutual_information(np.broadcast_to(p, A.shape + (2,)), Qs))
    worst = np.where(feasible, worst, np.inf)
    k = np.unravel_index(int(np.argmin(worst)), worst.shape)
    return float(worst[k]), Qs[k]


def minimax_over_Q(
    source: DistributionFamily,
    distortion,
    D: float,
    config: OptimizerConfig = DEFAULT,
    bruteforce: bool | None = None,
    max_rounds: int = 50,
) -> RDResult:
    """inf over channels Q with sup-expected distortion <= D of sup_p I(p; Q).

    Fast path: an exchange loop. A finite witness set of family members is kept;
    the restricted minimax problem over that set is solved exactly (SLSQP on the
    epigraph form), then the sup over the whole family at the new Q is
    recomputed and its maximizer added to the set. For 2x2 problems the dense
    Q-grid value is also computed and a disagreement above 1e-4 is flagged.
    """
    d = np.asarray(distortion, dtype=float)
    nx = len(source.alphabet)
    if d.ndim != 2 or d.shape[0] != nx:
        raise FamilyError(f"distortion must have {nx} rows")
    if np.any(d < 0) or not np.all(np.isfinite(d)):
        raise ValueError("distortion entries must be finite and nonnegative")
    if D < 0:
        raise ValueError("distortion level must be nonnegative")
    _, E = source.extreme_points()
    min_dist = float(np.max(E @ d.min(axis=1)))
    if D < min_dist - 1e-12:
        raise InfeasibleDistortion(D, min_dist)
    if bruteforce is None:
        bruteforce = d.shape == (2, 2)

    zero_dist, q = _zero_rate(E, d, D)
    if zero_dist <= D + 1e-12:
        Q = np.broadcast_to(q, d.shape).copy()
        return RDResult(0.0, Q, [], min_dist, worst_distortion(source, d, Q), 0.0 if bruteforce else None, False, "zero-rate")

    argmins = d == d.min(axis=1, keepdims=True)
    if D <= min_dist + 1e-12 and np.all(argmins.sum(axis=1) == 1):
        Q = argmins.astype(float)
        sup = sup_information(source, Q, config)
        bf = _bruteforce_2x2(source, d, D, E)[0] if bruteforce else None
        return RDResult(sup.value, Q, [sup.witness], min_dist, worst_distortion(source, d, Q), bf,
                        bf is not None and abs(bf - sup.value) > 1e-4, "deterministic")

    params, probs = source.members(config.grid_points)
    if source.continuous:
        lo, hi = source.bounds
        S_params = [lo, (lo + hi) / 2, hi]
        S = [source.member(t) for t in S_params]
    else:
        S_params = list(params)
        S = list(probs)
    Q = 0.5 * argmins / argmins.sum(axis=1, keepdims=True) + 0.5 / d.shape[1]
    best = None
    for _ in range(max_rounds):
        Q = _restricted_minimax(np.array(S), E, d, D, Q)
        restricted = max(classical.mutual_information(p, Q) for p in S)
        sup = sup_information(source, Q, config)
        if best is None or sup.value < best[0]:
            best = (sup.value, Q.copy())
        if sup.value <= restricted + 1e-10 or not source.continuous:
            break
        S_params.append(sup.witness)
        S.append(source.member(sup.witness))
    value, Q = best
    bf = None
    mismatch = False
    if bruteforce and d.shape == (2, 2):
        bf, Qb = _bruteforce_2x2(source, d, D, E)
        mismatch = abs(bf - value) > 1e-4
    return RDResult(value, Q, S_params, min_dist, worst_distortion(source, d, Q), bf, mismatch)
