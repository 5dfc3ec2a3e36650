"""Fischer-Burmeister residual, merit function, gradient, and regularized objective.

The FB function phi(a, b) = sqrt(a^2 + b^2) - (a + b) vanishes exactly on the
complementarity set {a >= 0, b >= 0, ab = 0}, so the stacked residual over
(u_i, w_i) with w = A u^{m-1} + q vanishes exactly at TCP solutions.  The merit
function is half its squared norm; its gradient is smooth everywhere, with a
bounded subgradient choice (rho, xi) at points where (u_i, w_i) = (0, 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensors import Instance, contract_m1, contract_m2


@dataclass(frozen=True)
class FbGradConfig:
    """Subgradient parameters used at degenerate points (u_i, w_i) = (0, 0)."""

    rho: float = 0.0
    xi: float = 0.0

    def __post_init__(self):
        if math.hypot(self.rho, self.xi) > 1.0:
            raise ValueError(f"need ||(rho, xi)|| <= 1, got ({self.rho}, {self.xi})")


@dataclass(frozen=True)
class ObjectiveParams:
    """Regularization weight t > 0 and quasi-norm exponent p in (0, 1)."""

    t: float
    p: float

    def __post_init__(self):
        if not (self.t > 0 and math.isfinite(self.t)):
            raise ValueError(f"need t > 0, got {self.t}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"need p in (0, 1), got {self.p}")


def phi_fb(a: float, b: float) -> float:
    """sqrt(a^2 + b^2) - (a + b); zero iff a >= 0, b >= 0, and ab = 0."""
    return math.hypot(a, b) - (a + b)


def residual_fb(inst: Instance, u) -> np.ndarray:
    """Componentwise phi_fb(u_i, w_i) with w = A u^{m-1} + q."""
    u = np.asarray(u, dtype=float).reshape(-1)
    w = contract_m1(inst.tensor, u) + inst.q
    return np.hypot(u, w) - (u + w)


def merit_fb(inst: Instance, u) -> float:
    """Half squared norm of the FB residual; zero exactly at TCP solutions."""
    r = residual_fb(inst, u)
    return 0.5 * float(r @ r)


def grad_merit(inst: Instance, u, cfg: FbGradConfig = FbGradConfig()) -> np.ndarray:
    """Gradient of merit_fb for a semi-symmetric tensor.

    Equals D_v(u) Phi + (m-1) M(u)^T D_z(u) Phi, where M = contract_m2 gives the
    Jacobian rows of u -> A u^{m-1}, v_i = u_i / r_i - 1 and z_i = w_i / r_i - 1
    with r_i = ||(u_i, w_i)||, and (v_i, z_i) = (rho - 1, xi - 1) where r_i = 0.
    The Jacobian enters transposed: the chain rule applies row i of the Jacobian
    against component i of D_z Phi.
    """
    if not inst.tensor.semi_symmetric():
        raise ValueError(
            "grad_merit requires a semi-symmetric tensor; apply semi_symmetrize first"
        )
    u = np.asarray(u, dtype=float).reshape(-1)
    w = contract_m1(inst.tensor, u) + inst.q
    r = np.hypot(u, w)
    phi = r - (u + w)
    nondeg = r > 0.0
    r_safe = np.where(nondeg, r, 1.0)
    v = np.where(nondeg, u / r_safe, cfg.rho) - 1.0
    z = np.where(nondeg, w / r_safe, cfg.xi) - 1.0
    jac = (inst.m - 1) * contract_m2(inst.tensor, u)
    return v * phi + jac.T @ (z * phi)


def objective(inst: Instance, u, params: ObjectiveParams) -> float:
    """merit_fb(u) + t * sum_i |u_i|^p."""
    u = np.asarray(u, dtype=float).reshape(-1)
    return merit_fb(inst, u) + params.t * float(np.sum(np.abs(u) ** params.p))


def grad_check(
    inst: Instance, u, cfg: FbGradConfig = FbGradConfig(), step: float = 1e-5
) -> float:
    """Max relative deviation of grad_merit from central finite differences.

    Rejects points with a (near-)degenerate pair, where finite differences of
    the merit function are not trustworthy.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    w = contract_m1(inst.tensor, u) + inst.q
    r = np.hypot(u, w)
    if np.any(r <= 1e-12):
        idx = int(np.argmin(r))
        raise ValueError(
            f"degenerate pair (u_{idx}, w_{idx}) ~ (0, 0); finite differences invalid there"
        )
    g = grad_merit(inst, u, cfg)
    fd = np.empty_like(g)
    for i in range(u.size):
        up = u.copy()
        um = u.copy()
        up[i] += step
        um[i] -= step
        fd[i] = (merit_fb(inst, up) - merit_fb(inst, um)) / (2.0 * step)
    scale = max(1.0, float(np.max(np.abs(g))), float(np.max(np.abs(fd))))
    return float(np.max(np.abs(g - fd)) / scale)
