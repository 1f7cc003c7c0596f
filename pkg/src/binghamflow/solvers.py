"""Matrix-free Krylov solvers used by the scheme's three linear systems.

Operators are plain callables over numpy arrays (any shape).  Conjugate
gradients serves the symmetric positive semidefinite pressure problem,
whose constant nullspace is pinned by subtracting the mean from the
right-hand side and from the iterate at every step.  BiCGStab serves the
nonsymmetric transport and momentum systems, optionally with a Jacobi
(diagonal) preconditioner.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import Breakdown, IncompatibleRhs
from .grid import ScalarField

__all__ = ["SolverConfig", "SolveStats", "cg_solve", "bicgstab_solve"]

_MEAN_TOL = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    tol_rel: float = 1e-11
    tol_abs: float = 1e-14
    max_iter: int = 20000

    def __post_init__(self):
        if not 0.0 < self.tol_rel < 1.0:
            raise ValueError(f"tol_rel must lie in (0, 1), got {self.tol_rel}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class SolveStats:
    iterations: int
    final_residual: float
    converged: bool


def _norm(a: np.ndarray) -> float:
    return float(np.sqrt(np.vdot(a, a).real))


def cg_solve(apply: Callable[[np.ndarray], np.ndarray], rhs: ScalarField,
             cfg: SolverConfig):
    """Mean-zero CG solve of a symmetric positive semidefinite system.

    ``apply`` acts on cell arrays and must have the constants as its
    nullspace; the right-hand side must be compatible (zero mean).
    Returns the mean-zero solution and the solve statistics; the caller
    decides what a non-converged result means.
    """
    b = rhs.values.copy()
    scale = float(np.max(np.abs(b))) if b.size else 0.0
    mean = float(b.mean())
    if abs(mean) > _MEAN_TOL * max(1.0, scale):
        raise IncompatibleRhs(f"rhs mean {mean:.3e} exceeds compatibility tolerance")
    b -= b.mean()

    x = np.zeros_like(b)
    r = b.copy()
    r0_norm = _norm(r)
    threshold = max(cfg.tol_rel * r0_norm, cfg.tol_abs)
    if r0_norm <= threshold:
        return ScalarField(rhs.grid, x), SolveStats(0, r0_norm, True)

    p = r.copy()
    rr = float(np.vdot(r, r))
    res = r0_norm
    it = 0
    for it in range(1, cfg.max_iter + 1):
        ap = apply(p)
        denom = float(np.vdot(p, ap))
        if denom <= 0.0:
            break
        alpha = rr / denom
        x += alpha * p
        r -= alpha * ap
        x -= x.mean()
        r -= r.mean()
        res = _norm(r)
        if res <= threshold:
            break
        rr_new = float(np.vdot(r, r))
        p = r + (rr_new / rr) * p
        rr = rr_new

    # recompute the true residual so the reported value is trustworthy
    true_res = _norm(b - apply(x))
    return ScalarField(rhs.grid, x), SolveStats(it, true_res, true_res <= threshold)


def _bicgstab_cycle(apply, rhs, x, r, target, budget, precond):
    """One BiCGStab recurrence from iterate x with residual r.

    Runs until the recurrence residual drops below target, the iteration
    budget is exhausted, or the recurrence stagnates.  Returns
    (iterations used, 'converged' | 'budget' | 'stagnated').  x is
    updated in place.
    """
    r_shadow = r.copy()
    rho = alpha = omega = 1.0
    v = np.zeros_like(rhs)
    p = np.zeros_like(rhs)
    it = 0
    while it < budget:
        it += 1
        rho_new = float(np.vdot(r_shadow, r))
        if abs(rho_new) < 1e-300 or (it > 1 and abs(omega) < 1e-300):
            return it, "stagnated"
        beta = (rho_new / rho) * (alpha / omega) if it > 1 else 0.0
        rho = rho_new
        p = r + beta * (p - omega * v)
        phat = precond(p)
        v = apply(phat)
        denom = float(np.vdot(r_shadow, v))
        if abs(denom) < 1e-300:
            return it, "stagnated"
        alpha = rho / denom
        s = r - alpha * v
        if _norm(s) <= target:
            x += alpha * phat
            return it, "converged"
        shat = precond(s)
        t = apply(shat)
        tt = float(np.vdot(t, t))
        if tt < 1e-300:
            return it, "stagnated"
        omega = float(np.vdot(t, s)) / tt
        x += alpha * phat + omega * shat
        r[...] = s - omega * t
        if _norm(r) <= target:
            return it, "converged"
    return it, "budget"


def bicgstab_solve(apply: Callable[[np.ndarray], np.ndarray], rhs: np.ndarray,
                   cfg: SolverConfig, x0: Optional[np.ndarray] = None,
                   diag: Optional[np.ndarray] = None):
    """BiCGStab with optional Jacobi preconditioning.

    ``rhs`` and the iterates are numpy arrays of any common shape.
    Convergence is always certified against the recomputed true
    residual; the recurrence restarts from the current iterate when its
    internal residual drifts.  Raises ``Breakdown`` when the recurrence
    stagnates twice without measurable progress.
    """
    inv_diag = None if diag is None else 1.0 / diag

    def precond(z):
        return z if inv_diag is None else inv_diag * z

    x = np.zeros_like(rhs) if x0 is None else x0.astype(float, copy=True)
    r = rhs - apply(x)
    res = _norm(r)
    threshold = max(cfg.tol_rel * res, cfg.tol_abs)

    total_it = 0
    stagnations = 0
    while res > threshold and total_it < cfg.max_iter:
        used, status = _bicgstab_cycle(apply, rhs, x, r, 0.25 * threshold,
                                       cfg.max_iter - total_it, precond)
        total_it += used
        prev = res
        r = rhs - apply(x)
        res = _norm(r)
        if status == "stagnated":
            if res > 0.99 * prev:
                stagnations += 1
                if stagnations >= 2:
                    raise Breakdown(f"BiCGStab stagnated at residual {res:.3e}")
            else:
                stagnations = 0
    return x, SolveStats(total_it, res, res <= threshold)
