"""Exact desk-scale ground truth for small TCP instances.

Support enumeration with damped-Newton root finding gives the full verified
solution list, the minimal cardinality, and the minimal-l_p selection; a
penalty minimizer of sum(u) over the feasible set computes the least element
of Z-tensor instances, cross-checked against the enumeration.
"""

from __future__ import annotations

import itertools
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .merit import residual_fb
from .regpath import lp_norm_p, q_tilde
from .tensors import (
    DenseTensor,
    Instance,
    ResidualReport,
    contract_m1,
    contract_m2,
    is_z_tensor,
    semi_symmetrize,
)

N_MAX = 8  # combinatorial guard for support enumeration


@dataclass
class OracleOptions:
    max_card: int | None = None
    newton_starts: int = 20
    tol: float = 1e-8
    seed: int = 0
    exhaustive: bool = False
    newton_iters: int = 60
    newton_tol: float = 1e-12
    dedup_tol: float = 1e-7
    budget_seconds: float | None = None
    tol_zero: float = 1e-9


@dataclass
class OracleResult:
    solutions: list  # (u, support tuple, ResidualReport), sorted by (card, lex)
    min_card: int | None
    sparse_solution: np.ndarray | None
    minimal_lp: dict = field(default_factory=dict)
    exhaustive: bool = False

    def to_dict(self) -> dict:
        return {
            "solutions": [
                {
                    "u": [float(x) for x in u],
                    "support": list(sup),
                    "residuals": rep.to_dict(),
                }
                for u, sup, rep in self.solutions
            ],
            "min_card": self.min_card,
            "sparse_solution": None
            if self.sparse_solution is None
            else [float(x) for x in self.sparse_solution],
            "minimal_lp": {str(p): [float(x) for x in u] for p, u in self.minimal_lp.items()},
            "exhaustive": self.exhaustive,
        }


def verify_solution(inst: Instance, u, tol: float, tol_zero: float = 1e-9):
    """Residual report plus pass/fail at tolerance tol.

    Passes iff u >= -tol componentwise, w = A u^{m-1} + q >= -tol componentwise,
    and |u^T w| <= tol.
    """
    if tol <= 0:
        raise ValueError(f"need tol > 0, got {tol}")
    u = np.asarray(u, dtype=float).reshape(-1)
    w = contract_m1(inst.tensor, u) + inst.q
    feas_u = max(0.0, -float(np.min(u)))
    feas_w = max(0.0, -float(np.min(w)))
    comp = abs(float(u @ w))
    fb = residual_fb(inst, u)
    report = ResidualReport(
        feas_u=feas_u,
        feas_w=feas_w,
        comp=comp,
        fb_norm=float(np.linalg.norm(fb)),
        support=tuple(int(i) for i in np.flatnonzero(np.abs(u) > tol_zero)),
        tol_zero=tol_zero,
    )
    passed = feas_u <= tol and feas_w <= tol and comp <= tol
    return report, passed


def _embed(x: np.ndarray, support, n: int) -> np.ndarray:
    u = np.zeros(n)
    u[list(support)] = x
    return u


def _restrict(inst: Instance, support) -> tuple[DenseTensor, np.ndarray]:
    """Sub-tensor and sub-vector over the support.

    For u supported on S, (A u^{m-1})_i with i in S equals the contraction of
    the restricted tensor with u_S, so the reduced square system lives entirely
    on the restriction.
    """
    support = list(support)
    arr = inst.tensor.as_array()[np.ix_(*([support] * inst.m))]
    sub = DenseTensor(inst.m, len(support), arr.reshape(-1))
    sub._semi_symmetric = inst.tensor._semi_symmetric
    return sub, inst.q[support]


def reduced_newton(inst: Instance, support, x0, iters: int = 60, tol: float = 1e-12):
    """Damped Newton for the square system w_i(u) = 0, i in support, u = 0 off it.

    The instance must hold a semi-symmetric tensor so that (m-1) contract_m2
    is the Jacobian of u -> A u^{m-1}.  Returns (x, status) with status one of
    "ok", "singular", "stalled".
    """
    support = list(support)
    sub, q_sub = _restrict(inst, support)
    mfac = inst.m - 1
    x = np.asarray(x0, dtype=float).copy()

    def w_s(xv):
        return contract_m1(sub, xv) + q_sub

    g = w_s(x)
    stale = 0
    best = float(np.max(np.abs(g)))
    for _ in range(iters):
        gn = float(np.max(np.abs(g)))
        if gn <= tol:
            return x, "ok"
        jac = mfac * contract_m2(sub, x)
        try:
            step = np.linalg.solve(jac, g)
        except np.linalg.LinAlgError:
            return x, "singular"
        if not np.all(np.isfinite(step)):
            return x, "singular"
        lam = 1.0
        base = float(np.linalg.norm(g))
        while lam > 1e-12:
            x_new = x - lam * step
            g_new = w_s(x_new)
            if np.all(np.isfinite(g_new)) and float(np.linalg.norm(g_new)) <= (1 - 0.5 * lam) * base:
                break
            lam *= 0.5
        else:
            return x, "stalled"
        x, g = x_new, g_new
        gn_new = float(np.max(np.abs(g)))
        if gn_new < 0.7 * best:
            best, stale = gn_new, 0
        else:
            stale += 1
            if stale >= 8:  # no real progress: a root is not nearby
                return x, "stalled"
    if float(np.max(np.abs(g))) <= tol:
        return x, "ok"
    return x, "stalled"


def brute_force_sparse(inst: Instance, opts: OracleOptions | None = None) -> OracleResult:
    """Exact sparse-solution search by support enumeration.

    Supports are visited by increasing cardinality, lexicographic within each
    size; each reduced polynomial system is attacked with seeded multi-start
    damped Newton, and every candidate must pass verify_solution on the
    original instance.  Stops at the first cardinality that yields a verified
    solution unless opts.exhaustive, in which case every support up to the
    size cap is searched.
    """
    opts = opts or OracleOptions()
    n = inst.n
    if n > N_MAX:
        raise ValueError(f"support enumeration is capped at n <= {N_MAX}, got n = {n}")
    work = inst
    if not inst.tensor.semi_symmetric():
        work = Instance(semi_symmetrize(inst.tensor), inst.q, inst.label, inst.source)
    rng = np.random.default_rng(opts.seed)
    max_card = n if opts.max_card is None else min(opts.max_card, n)
    deadline = None if opts.budget_seconds is None else time.monotonic() + opts.budget_seconds

    solutions = []
    aborted = False

    def known(u):
        return any(float(np.max(np.abs(u - u0))) < opts.dedup_tol for u0, _, _ in solutions)

    min_card = None
    for size in range(max_card + 1):
        for support in itertools.combinations(range(n), size):
            if deadline is not None and time.monotonic() > deadline:
                aborted = True
                break
            if size == 0:
                candidates = [np.zeros(0)]
            else:
                candidates = [rng.uniform(0.05, 2.0, size) for _ in range(opts.newton_starts)]
            for x0 in candidates:
                if size == 0:
                    u = np.zeros(n)
                else:
                    x, status = reduced_newton(
                        work, support, x0, iters=opts.newton_iters, tol=opts.newton_tol
                    )
                    if status != "ok":
                        continue
                    u = _embed(x, support, n)
                report, passed = verify_solution(inst, u, opts.tol, tol_zero=opts.tol_zero)
                if passed and not known(u):
                    solutions.append((u, report.support, report))
        if aborted:
            break
        if solutions and min_card is None:
            min_card = size
            if not opts.exhaustive:
                break

    solutions.sort(key=lambda entry: (len(entry[1]), tuple(entry[0])))
    if solutions and min_card is None:
        min_card = min(len(sup) for _, sup, _ in solutions)
    sparse = None
    if min_card is not None:
        for u, sup, _ in solutions:
            if len(sup) == min_card:
                sparse = u.copy()
                break
    # exhaustive: every support of every size was searched in full (no early
    # exit after the first hit, no budget abort, no size cap below n)
    no_early_exit = opts.exhaustive or min_card is None or min_card == max_card
    exhausted = (not aborted) and max_card == n and no_early_exit
    return OracleResult(
        solutions=solutions,
        min_card=min_card,
        sparse_solution=sparse,
        minimal_lp={},
        exhaustive=exhausted,
    )


def minimal_lp_select(result: OracleResult, p: float) -> np.ndarray:
    """Argmin of sum|u_i|^p over the enumerated solutions; lexicographic ties.

    On non-exhaustive results the selection is only approximate (a better
    solution could hide in an unsearched support) and a warning is emitted.
    """
    if not result.solutions:
        raise ValueError("empty solution list: nothing to select from")
    if not result.exhaustive:
        warnings.warn(
            "minimal_lp_select on a non-exhaustive enumeration is approximate",
            stacklevel=2,
        )
    best = min(result.solutions, key=lambda entry: (lp_norm_p(entry[0], p), tuple(entry[0])))
    u = best[0].copy()
    result.minimal_lp[p] = u
    return u


def sample_feasible(inst: Instance, count: int, seed: int = 0) -> list[np.ndarray]:
    """Up to `count` points of the feasible set {u >= 0, A u^{m-1} + q >= 0}.

    Mixes rejection sampling over scaled nonnegative draws, doubling lifts
    along e, a diagonal-anchored guess, and random-walk proposals around
    already-accepted points.  Every returned point satisfies both constraint
    blocks at tolerance 1e-10.  Returns fewer than `count` (possibly none)
    when the budget runs out.
    """
    rng = np.random.default_rng(seed)
    n, m = inst.n, inst.m
    A, q = inst.tensor, inst.q

    def feasible(u):
        if float(np.min(u)) < -1e-10:
            return False
        w = contract_m1(A, u) + q
        return float(np.min(w)) >= -1e-10

    found: list[np.ndarray] = []

    def accept(u):
        found.append(u.copy())

    # Cheap anchors: zero, diagonal-scaled guesses approaching the natural
    # magnitude (q~_i / a_ii)^(1/(m-1)) from above (the feasible margins off
    # the active rows can be thin, so small inflations go first), and e-lifts.
    anchors = [np.zeros(n)]
    qt = q_tilde(q)
    diag = np.array([A.as_array()[(i,) * m] for i in range(n)])
    pos = diag > 1e-9
    base_guess = np.zeros(n)
    base_guess[pos] = (qt[pos] / diag[pos]) ** (1.0 / (m - 1))
    base_guess[~pos] = qt[~pos]
    for inflate in (1e-9, 1e-6, 1e-4, 1e-3, 0.01, 0.03, 0.1, 0.3, 1.0):
        anchors.append(base_guess * (1.0 + inflate))
    c = 1.0
    for _ in range(18):
        anchors.append(np.full(n, c))
        c *= 2.0
    for u in anchors:
        if len(found) >= count:
            break
        if feasible(u):
            accept(u)

    walk_scales = (0.003, 0.01, 0.05, 0.2, 0.5)
    budget = max(60 * count, 3000)
    trials = 0
    while len(found) < count and trials < budget:
        trials += 1
        if found and trials % 4 != 0:
            base = found[int(rng.integers(0, len(found)))]
            scale = walk_scales[trials % len(walk_scales)]
            u = base * (1.0 + rng.uniform(-scale / 4.0, scale / 4.0, n))
            u = u + rng.uniform(0.0, scale, n)
        else:
            scale = (0.25, 0.5, 1.0, 2.0, 4.0)[trials % 5]
            u = scale * rng.uniform(0.0, 1.0, n)
        u = np.maximum(u, 0.0)
        if feasible(u):
            accept(u)
    return found


@dataclass
class LeastElementOptions:
    beta_ladder: tuple = (1e2, 1e4, 1e6, 1e8)
    starts: int = 4
    inner_iters: int = 400
    tol: float = 1e-8
    seed: int = 0
    support_tol: float = 1e-6
    newton_iters: int = 60


def _penalty_descent(inst: Instance, u0: np.ndarray, beta: float, iters: int) -> np.ndarray:
    """Projected gradient descent on sum(u) + beta * ||min(w, 0)||^2 over u >= 0."""
    A, q = inst.tensor, inst.q
    mfac = inst.m - 1

    def pval(u):
        w = contract_m1(A, u) + q
        wm = np.minimum(w, 0.0)
        return float(np.sum(u) + beta * (wm @ wm))

    def pgrad(u):
        w = contract_m1(A, u) + q
        wm = np.minimum(w, 0.0)
        jac = mfac * contract_m2(A, u)
        return 1.0 + 2.0 * beta * (jac.T @ wm)

    u = np.maximum(np.asarray(u0, dtype=float), 0.0)
    f = pval(u)
    prev_u = None
    prev_g = None
    for _ in range(iters):
        g = pgrad(u)
        if prev_g is not None:
            s = u - prev_u
            y = g - prev_g
            sy = float(s @ y)
            alpha = float(s @ s) / sy if sy > 1e-18 else 1.0 / (1.0 + float(np.linalg.norm(g)))
        else:
            alpha = 1.0 / (1.0 + float(np.linalg.norm(g)))
        alpha = min(max(alpha, 1e-16), 1e4)
        accepted = False
        for _ in range(50):
            u_new = np.maximum(u - alpha * g, 0.0)
            d = u_new - u
            dn = float(d @ d)
            if dn == 0.0:
                break
            f_new = pval(u_new)
            if f_new <= f - 1e-4 * dn / alpha:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        prev_u, prev_g = u, g
        u, f = u_new, f_new
        if float(np.max(np.abs(d))) < 1e-13:
            break
    return u


def least_element(inst: Instance, opts: LeastElementOptions | None = None) -> np.ndarray:
    """Least element of the feasible set for a feasible Z-tensor instance.

    Minimizes sum(u) over the feasible set by an increasing-penalty ladder
    from several feasible starts, extracts the support, polishes it with the
    reduced Newton solver, and cross-checks the result against the support
    enumeration: the least element must be a minimal-cardinality solution.
    """
    opts = opts or LeastElementOptions()
    if not is_z_tensor(inst.tensor):
        raise ValueError("not a Z-tensor: least element is not guaranteed to exist")
    work = inst
    if not inst.tensor.semi_symmetric():
        work = Instance(semi_symmetrize(inst.tensor), inst.q, inst.label, inst.source)

    feas = sample_feasible(inst, max(opts.starts * 4, 8), seed=opts.seed)
    if not feas:
        raise ValueError("feasibility not established: no feasible point found")
    feas.sort(key=lambda u: float(np.sum(u)))
    starts = feas[: opts.starts]

    best = None
    best_sum = np.inf
    for u0 in starts:
        u = u0
        for beta in opts.beta_ladder:
            u = _penalty_descent(work, u, beta, opts.inner_iters)
        support = [int(i) for i in np.flatnonzero(u > opts.support_tol)]
        if support:
            x, status = reduced_newton(work, support, u[support], iters=opts.newton_iters)
            if status == "ok":
                u = _embed(x, support, inst.n)
        _, passed = verify_solution(inst, u, opts.tol)
        if passed and float(np.sum(u)) < best_sum:
            best = u
            best_sum = float(np.sum(u))
    if best is None:
        raise RuntimeError("least-element search failed: no penalty start verified")

    bf = brute_force_sparse(
        inst, OracleOptions(seed=opts.seed, tol=opts.tol, newton_starts=20)
    )
    if bf.min_card is None:
        raise RuntimeError("least-element cross-check failed: enumeration found no solution")
    best_support = tuple(int(i) for i in np.flatnonzero(np.abs(best) > opts.support_tol))
    if len(best_support) != bf.min_card:
        raise RuntimeError(
            "least-element cross-check failed: penalty support size "
            f"{len(best_support)} != enumerated minimal cardinality {bf.min_card}"
        )
    matched = any(
        sup == best_support and float(np.max(np.abs(u - best))) < 1e-6
        for u, sup, _ in bf.solutions
    )
    if not matched:
        raise RuntimeError(
            "least-element cross-check failed: no enumerated minimal-cardinality "
            "solution matches the penalty candidate"
        )
    return best
