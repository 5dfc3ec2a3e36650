"""Smoothing gradient descent for the regularized objective, with continuation.

The nonsmooth term t * sum|u_i|^p is smoothed as t * sum (u_i^2 + eps^2)^(p/2)
and eps is annealed geometrically down to EPS_MIN inside each local solve, so
one descent loop covers every p in (0, 1).  The driver walks a decreasing
schedule of regularization weights with warm starts, thresholds the final
point by the closed-form magnitude floor L, and polishes the detected support
with Newton's method on the reduced square system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .merit import FbGradConfig, ObjectiveParams, grad_merit, merit_fb, objective
from .oracle import reduced_newton, verify_solution
from .regpath import (
    BoundInputs,
    Schedule,
    card,
    compute_Bbar,
    lower_bound_L,
    lp_norm_p,
    make_schedule,
    q_tilde,
    threshold_by_L,
)
from .tensors import Instance, ResidualReport, contract_m1, semi_symmetrize, tensor_norm

EPS_MIN = 1e-10


class DivergedError(RuntimeError):
    """Raised when the objective turns non-finite; carries the iterate."""

    def __init__(self, message, iterate=None):
        super().__init__(message)
        self.iterate = iterate


@dataclass
class SolveOptions:
    params: ObjectiveParams = field(default_factory=lambda: ObjectiveParams(t=0.1, p=0.5))
    schedule: Schedule = field(default_factory=lambda: make_schedule(0.1, 0.5, 12))
    eps0: float = 0.1
    eps_factor: float = 0.3
    max_outer: int = 25
    max_inner: int = 150
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    grad_tol: float = 1e-8
    residual_tol: float = 1e-6
    starts: int = 5
    seed: int = 0
    polish: bool = True
    grad_cfg: FbGradConfig = field(default_factory=FbGradConfig)

    def __post_init__(self):
        if self.eps0 <= 0 or self.grad_tol <= 0 or self.residual_tol <= 0:
            raise ValueError("eps0, grad_tol, residual_tol must be positive")
        for name in ("eps_factor", "armijo_c", "armijo_shrink"):
            val = getattr(self, name)
            if not 0.0 < val < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {val}")
        if self.max_outer < 1 or self.max_inner < 1 or self.starts < 1:
            raise ValueError("max_outer, max_inner, starts must be >= 1")

    def to_dict(self) -> dict:
        return {
            "t": self.params.t,
            "p": self.params.p,
            "t0": self.schedule.t0,
            "factor": self.schedule.factor,
            "steps": self.schedule.steps,
            "eps0": self.eps0,
            "eps_factor": self.eps_factor,
            "max_outer": self.max_outer,
            "max_inner": self.max_inner,
            "armijo_c": self.armijo_c,
            "armijo_shrink": self.armijo_shrink,
            "grad_tol": self.grad_tol,
            "residual_tol": self.residual_tol,
            "starts": self.starts,
            "seed": self.seed,
            "polish": self.polish,
            "rho": self.grad_cfg.rho,
            "xi": self.grad_cfg.xi,
        }


@dataclass
class SolveReport:
    u_final: np.ndarray
    residuals: ResidualReport
    support: tuple[int, ...]
    L_used: float | None
    f_history: list[float]
    t_history: list[float]
    converged: bool
    discrepancies: list[str]
    card: int
    lp_history: list[float]
    L_statement: float | None
    f0_used: float
    mu_used: float
    B_hat: float
    t_final: float
    per_start: list[dict]
    options: dict
    descent_trace: list[tuple[float, float]]

    def to_dict(self) -> dict:
        return {
            "u_final": [float(x) for x in self.u_final],
            "residuals": self.residuals.to_dict(),
            "support": list(self.support),
            "L_used": self.L_used,
            "f_history": self.f_history,
            "t_history": self.t_history,
            "converged": self.converged,
            "discrepancies": self.discrepancies,
            "card": self.card,
            "lp_history": self.lp_history,
            "L_statement": self.L_statement,
            "f0_used": self.f0_used,
            "mu_used": self.mu_used,
            "B_hat": self.B_hat,
            "t_final": self.t_final,
            "per_start": self.per_start,
            "options": self.options,
        }


def smooth_objective(inst: Instance, u, params: ObjectiveParams, eps: float) -> float:
    """merit_fb(u) + t * sum (u_i^2 + eps^2)^(p/2).

    Upper-bounds the true objective and exceeds it by at most t * n * eps^p.
    """
    if eps <= 0:
        raise ValueError(f"need eps > 0, got {eps}")
    u = np.asarray(u, dtype=float).reshape(-1)
    reg = float(np.sum((u * u + eps * eps) ** (params.p / 2.0)))
    return merit_fb(inst, u) + params.t * reg


def smooth_grad(
    inst: Instance,
    u,
    params: ObjectiveParams,
    eps: float,
    cfg: FbGradConfig = FbGradConfig(),
) -> np.ndarray:
    """Gradient of smooth_objective: merit gradient plus t*p*u*(u^2+eps^2)^(p/2-1)."""
    if eps <= 0:
        raise ValueError(f"need eps > 0, got {eps}")
    u = np.asarray(u, dtype=float).reshape(-1)
    reg_grad = params.t * params.p * u * (u * u + eps * eps) ** (params.p / 2.0 - 1.0)
    return grad_merit(inst, u, cfg) + reg_grad


def _eps_rounds(opts: SolveOptions) -> list[float]:
    rounds = []
    eps = opts.eps0
    for _ in range(opts.max_outer):
        rounds.append(eps)
        if eps <= EPS_MIN:
            break
        eps = max(eps * opts.eps_factor, EPS_MIN)
    return rounds


def _descend(inst, u0, params, opts, trace=None):
    """Annealed smoothing descent at fixed t.

    Returns (u, f_history_per_round, max_iterate_norm, grad_tol_hit).  The
    search direction is the gradient scaled by the diagonal curvature of the
    smoothing term, 1 + t*p*(u_i^2 + eps^2)^(p/2 - 1), which tames the stiff
    near-zero components without giving up the Armijo descent guarantee.  The
    smoothed objective is nonincreasing across accepted steps at fixed eps and
    can only drop when eps shrinks, so the true objective never rises by more
    than the smoothing slack t * n * eps^p between accepted iterates.
    """
    u = np.asarray(u0, dtype=float).copy()
    max_norm = float(np.linalg.norm(u))
    f_rounds = []
    hit = False
    for eps in _eps_rounds(opts):
        fs = smooth_objective(inst, u, params, eps)
        if not math.isfinite(fs):
            raise DivergedError(f"non-finite smoothed objective at iterate {u!r}", iterate=u)
        prev_u = None
        prev_d = None
        alpha_prev = None
        hit = False
        for _ in range(opts.max_inner):
            g = smooth_grad(inst, u, params, eps, opts.grad_cfg)
            gn = float(np.linalg.norm(g))
            if gn <= opts.grad_tol:
                hit = True
                break
            scale = 1.0 + params.t * params.p * (u * u + eps * eps) ** (params.p / 2.0 - 1.0)
            d = g / scale
            slope = float(g @ d)  # positive: d is a descent direction
            if prev_d is not None:
                s = u - prev_u
                y = d - prev_d
                sy = float(s @ y)
                alpha = float(s @ s) / sy if sy > 1e-300 else alpha_prev
                alpha = min(alpha, 4.0 * alpha_prev)
            else:
                alpha = 1.0
            alpha = min(max(alpha, 1e-18), 1e4)
            accepted = False
            for _ in range(70):
                u_new = u - alpha * d
                f_new = smooth_objective(inst, u_new, params, eps)
                if math.isfinite(f_new) and f_new <= fs - opts.armijo_c * alpha * slope:
                    accepted = True
                    break
                alpha *= opts.armijo_shrink
            if not accepted:
                break
            alpha_prev = alpha
            prev_u, prev_d = u, d
            step_inf = alpha * float(np.max(np.abs(d)))
            u, fs = u_new, f_new
            max_norm = max(max_norm, float(np.linalg.norm(u)))
            if trace is not None:
                trace.append((eps, objective(inst, u, params)))
            if step_inf < 1e-15 * (1.0 + float(np.max(np.abs(u)))):
                break  # progress below machine noise at this eps
        f_rounds.append(objective(inst, u, params))
    return u, f_rounds, max_norm, hit


def _support_tol(L: float | None) -> float:
    # dead zone tied to the magnitude floor, per the cardinality convention
    return max(L / 2.0, 1e-9) if L else 1e-9


def _make_report(inst, u, opts, t_final, f_hist, t_hist, lp_hist, L, L_stmt, f0, mu, B_hat,
                 discrepancies, per_start, trace):
    tol_zero = _support_tol(L)
    residuals, passed = verify_solution(inst, u, opts.residual_tol, tol_zero=tol_zero)
    converged = passed and residuals.fb_norm <= opts.residual_tol
    return SolveReport(
        u_final=u,
        residuals=residuals,
        support=residuals.support,
        L_used=L,
        f_history=f_hist,
        t_history=t_hist,
        converged=converged,
        discrepancies=discrepancies,
        card=card(u, tol_zero),
        lp_history=lp_hist,
        L_statement=L_stmt,
        f0_used=f0,
        mu_used=mu,
        B_hat=B_hat,
        t_final=t_final,
        per_start=per_start,
        options=opts.to_dict(),
        descent_trace=trace,
    )


def minimize_local(inst: Instance, u0, opts: SolveOptions) -> SolveReport:
    """Local minimization of the regularized objective at fixed t = opts.params.t."""
    if not inst.tensor.semi_symmetric():
        raise ValueError(
            "minimize_local requires a semi-symmetric tensor; apply semi_symmetrize first"
        )
    u0 = np.asarray(u0, dtype=float).reshape(-1)
    trace: list[tuple[float, float]] = []
    f0 = objective(inst, u0, opts.params)
    u, f_rounds, max_norm, _ = _descend(inst, u0, opts.params, opts, trace)
    B_hat = max(1.0, max_norm)
    mu = compute_Bbar(inst.n, opts.params.p, B_hat)
    L = L_stmt = None
    if f0 > 0.0:
        b = BoundInputs(opts.params.t, opts.params.p, inst.m, tensor_norm(inst.tensor), mu, f0)
        L = lower_bound_L(b)
        L_stmt = lower_bound_L(b, statement_form=True)
    return _make_report(
        inst, u, opts, opts.params.t, f_rounds, [opts.params.t],
        [lp_norm_p(u, opts.params.p)], L, L_stmt, f0, mu, B_hat, [], [], trace,
    )


def polish_on_support(inst: Instance, u, support, tol: float = 1e-12):
    """Newton refinement of u on a fixed support; returns (vector, flag).

    Solves w_i(u) = 0 for i in the support with the other components pinned to
    exactly zero.  Returns the input unchanged with a flag when the reduced
    Jacobian is singular ("singular"), Newton stalls ("not_converged"), a
    polished support component goes negative, or an off-support w_j drops
    below -tol (both "negative").
    """
    support = sorted(int(i) for i in support)
    if not support:
        raise ValueError("support must be nonempty")
    u = np.asarray(u, dtype=float).reshape(-1)
    work = inst
    if not inst.tensor.semi_symmetric():
        work = Instance(semi_symmetrize(inst.tensor), inst.q, inst.label, inst.source)
    x, status = reduced_newton(work, support, u[support], tol=tol)
    if status == "singular":
        return u.copy(), "singular"
    if status != "ok":
        return u.copy(), "not_converged"
    u_new = np.zeros_like(u)
    u_new[support] = x
    if np.any(x < 0.0):
        return u.copy(), "negative"
    w = contract_m1(inst.tensor, u_new) + inst.q
    off = np.ones(u.size, dtype=bool)
    off[support] = False
    if np.any(w[off] < -tol):
        return u.copy(), "negative"
    return u_new, "ok"


def _initial_point(qt: np.ndarray, rng: np.random.Generator, start: int, m: int) -> np.ndarray:
    # Starts alternate between the raw q~ scale and its (m-1)-th root (w scales
    # like u^(m-1), so the root is the natural magnitude of solution entries),
    # and the perturbation cycles over an octave ladder, so the starts explore
    # genuinely different basins instead of clustering.
    base = np.maximum(qt, 0.1)
    if start % 2 == 1:
        base = base ** (1.0 / (m - 1))
    scale = 0.1 * 2.0 ** (start % 5)
    return base + rng.uniform(0.0, scale, qt.size)


def solve_sparse_tcp(inst: Instance, opts: SolveOptions | None = None) -> SolveReport:
    """Continuation driver: descend along the t-schedule, threshold, polish.

    Each start walks the full schedule with warm starts, computes the
    magnitude floor L at the final t from the norms it actually observed,
    thresholds, and (optionally) polishes the detected support.  The best
    start wins by final objective, ties broken by smaller cardinality and
    then lexicographic order.
    """
    opts = opts or SolveOptions()
    if not inst.tensor.semi_symmetric():
        inst = Instance(semi_symmetrize(inst.tensor), inst.q, inst.label, inst.source)
    rng = np.random.default_rng(opts.seed)
    qt = q_tilde(inst.q)
    t_values = opts.schedule.values()
    t_final = t_values[-1]
    p = opts.params.p
    inner_opts = replace(opts, max_outer=min(opts.max_outer, 13))

    runs = []
    for start in range(opts.starts):
        u = _initial_point(qt, rng, start, inst.m)
        trace: list[tuple[float, float]] = []
        f_hist: list[float] = []
        lp_hist: list[float] = []
        notes: list[str] = []
        max_norm = max(1.0, float(np.linalg.norm(u)))
        f0_final = None
        for k, t in enumerate(t_values):
            params = ObjectiveParams(t=t, p=p)
            last = k == len(t_values) - 1
            if last:
                f0_final = objective(inst, u, params)
            u, f_rounds, mx, _ = _descend(
                inst, u, params, opts if last else inner_opts, trace
            )
            max_norm = max(max_norm, mx)
            f_hist.append(f_rounds[-1])
            lp_hist.append(lp_norm_p(u, p))

        B_hat = max(1.0, max_norm)
        mu = compute_Bbar(inst.n, p, B_hat)
        L = L_stmt = None
        if f0_final > 0.0:
            b = BoundInputs(t_final, p, inst.m, tensor_norm(inst.tensor), mu, f0_final)
            L = lower_bound_L(b)
            L_stmt = lower_bound_L(b, statement_form=True)
            u = threshold_by_L(u, L)
        support = [int(i) for i in np.flatnonzero(np.abs(u) > _support_tol(L))]
        if opts.polish and support:
            u_pol, flag = polish_on_support(inst, u, support)
            if flag == "ok":
                u = u_pol
            else:
                notes.append(f"start {start}: polish rejected ({flag})")
        f_final = objective(inst, u, ObjectiveParams(t=t_final, p=p))
        runs.append(
            {
                "start": start,
                "u": u,
                "f_final": f_final,
                "card": card(u, _support_tol(L)),
                "f_hist": f_hist,
                "lp_hist": lp_hist,
                "L": L,
                "L_stmt": L_stmt,
                "f0": f0_final,
                "mu": mu,
                "B_hat": B_hat,
                "notes": notes,
                "trace": trace,
            }
        )

    best = min(runs, key=lambda r: (r["f_final"], r["card"], tuple(r["u"])))
    per_start = [
        {
            "start": r["start"],
            "u_final": [float(x) for x in r["u"]],
            "f_final": r["f_final"],
            "card": r["card"],
            "notes": r["notes"],
        }
        for r in runs
    ]
    discrepancies = [note for r in runs for note in r["notes"]]
    return _make_report(
        inst,
        best["u"],
        opts,
        t_final,
        best["f_hist"],
        list(t_values),
        best["lp_hist"],
        best["L"],
        best["L_stmt"],
        best["f0"],
        best["mu"],
        best["B_hat"],
        discrepancies,
        per_start,
        best["trace"],
    )
