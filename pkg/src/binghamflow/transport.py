"""Implicit upwind transport of the density and coefficient evaluation.

The density is advanced with the solenoidal end-of-step velocity using
first-order upwinding in conservative flux form.  The resulting matrix
``I + dt * U`` is strictly diagonally dominant with non-positive
off-diagonal entries, so the solve preserves the initial density bounds
(up to linear-solver residual) and, because wall fluxes vanish, the
total mass exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import MaxPrincipleViolation, NonConvergence
from .grid import MacGrid, ScalarField, VelocityField
from .solvers import SolverConfig, bicgstab_solve

__all__ = ["FluidParams", "advect_density", "eval_coefficients", "upwind_apply"]

BOUND_TOL = 1e-12


@dataclass
class FluidParams:
    """Density bounds and the density-dependent viscosity / yield-stress laws."""

    rho1: float
    rho2: float
    mu_of_rho: Callable[[np.ndarray], np.ndarray]
    alpha_of_rho: Callable[[np.ndarray], np.ndarray]
    mu1: float
    mu2: float
    alpha1: float
    alpha2: float
    lipschitz_mu: float = 0.0
    lipschitz_alpha: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.rho1 <= self.rho2:
            raise ValueError(f"need 0 < rho1 <= rho2, got {self.rho1}, {self.rho2}")
        if not 0.0 < self.mu1 <= self.mu2:
            raise ValueError(f"need 0 < mu1 <= mu2, got {self.mu1}, {self.mu2}")
        if not 0.0 <= self.alpha1 <= self.alpha2:
            raise ValueError(f"need 0 <= alpha1 <= alpha2, got {self.alpha1}, {self.alpha2}")
        samples = np.linspace(self.rho1, self.rho2, 65)
        mu_s = np.asarray(self.mu_of_rho(samples))
        al_s = np.asarray(self.alpha_of_rho(samples))
        eps = 1e-12
        if np.any(mu_s < self.mu1 - eps) or np.any(mu_s > self.mu2 + eps):
            raise ValueError("mu_of_rho leaves [mu1, mu2] on the admissible density range")
        if np.any(al_s < self.alpha1 - eps) or np.any(al_s > self.alpha2 + eps):
            raise ValueError("alpha_of_rho leaves [alpha1, alpha2] on the admissible density range")

    @classmethod
    def affine(cls, rho1, rho2, mu1, mu2, alpha1, alpha2) -> "FluidParams":
        """Default law: linear interpolation between the endpoint values."""
        drho = rho2 - rho1

        def mu_of(rho):
            if drho == 0.0:
                return np.full_like(np.asarray(rho, dtype=float), mu1)
            return mu1 + (mu2 - mu1) * (np.asarray(rho) - rho1) / drho

        def alpha_of(rho):
            if drho == 0.0:
                return np.full_like(np.asarray(rho, dtype=float), alpha1)
            return alpha1 + (alpha2 - alpha1) * (np.asarray(rho) - rho1) / drho

        lip_mu = 0.0 if drho == 0.0 else abs(mu2 - mu1) / drho
        lip_al = 0.0 if drho == 0.0 else abs(alpha2 - alpha1) / drho
        return cls(rho1, rho2, mu_of, alpha_of, mu1, mu2, alpha1, alpha2, lip_mu, lip_al)


def _upwind_fluxes(rho: np.ndarray, u_hat: VelocityField):
    g = u_hat.grid
    up_x = np.maximum(u_hat.ux, 0.0)
    dn_x = np.minimum(u_hat.ux, 0.0)
    if g.periodic_x:
        fx = up_x * np.roll(rho, 1, axis=0) + dn_x * rho
    else:
        fx = np.zeros(g.shape_ux)
        fx[1:-1, :] = up_x[1:-1, :] * rho[:-1, :] + dn_x[1:-1, :] * rho[1:, :]
    fy = np.zeros(g.shape_uy)
    fy[:, 1:-1] = (np.maximum(u_hat.uy[:, 1:-1], 0.0) * rho[:, :-1]
                   + np.minimum(u_hat.uy[:, 1:-1], 0.0) * rho[:, 1:])
    return fx, fy


def upwind_apply(rho: np.ndarray, u_hat: VelocityField) -> np.ndarray:
    """Conservative upwind divergence of the advective flux; wall fluxes are zero."""
    g = u_hat.grid
    fx, fy = _upwind_fluxes(rho, u_hat)
    if g.periodic_x:
        ddx = (np.roll(fx, -1, axis=0) - fx) / g.hx
    else:
        ddx = (fx[1:, :] - fx[:-1, :]) / g.hx
    return ddx + (fy[:, 1:] - fy[:, :-1]) / g.hy


def _upwind_diagonal(u_hat: VelocityField, dt: float) -> np.ndarray:
    g = u_hat.grid
    if g.periodic_x:
        out_x = np.maximum(np.roll(u_hat.ux, -1, axis=0), 0.0) - np.minimum(u_hat.ux, 0.0)
    else:
        out_x = np.maximum(u_hat.ux[1:, :], 0.0) - np.minimum(u_hat.ux[:-1, :], 0.0)
    out_y = np.maximum(u_hat.uy[:, 1:], 0.0) - np.minimum(u_hat.uy[:, :-1], 0.0)
    return 1.0 + dt * (out_x / g.hx + out_y / g.hy)


def advect_density(rho_prev: ScalarField, u_hat: VelocityField, dt: float,
                   cfg: SolverConfig, rho_bounds=None) -> ScalarField:
    """One implicit upwind transport step with the solenoidal velocity.

    When ``rho_bounds = (rho1, rho2)`` is given the result is checked
    against the discrete maximum principle and a violation beyond
    tolerance aborts with ``MaxPrincipleViolation``.
    """
    def apply(vals):
        return vals + dt * upwind_apply(vals, u_hat)

    diag = _upwind_diagonal(u_hat, dt)
    vals, stats = bicgstab_solve(apply, rho_prev.values, cfg,
                                 x0=rho_prev.values, diag=diag)
    if not stats.converged:
        raise NonConvergence("density transport solve", stats)
    rho_new = ScalarField(rho_prev.grid, vals)
    if rho_bounds is not None:
        lo, hi = rho_bounds
        vmin, vmax = float(vals.min()), float(vals.max())
        if vmin < lo - BOUND_TOL or vmax > hi + BOUND_TOL:
            raise MaxPrincipleViolation(
                f"density left [{lo}, {hi}]: min {vmin!r}, max {vmax!r}")
    return rho_new


def eval_coefficients(rho: ScalarField, params: FluidParams):
    """Pointwise viscosity and yield stress fields from the density."""
    mu = ScalarField(rho.grid, np.asarray(params.mu_of_rho(rho.values), dtype=float))
    alpha = ScalarField(rho.grid, np.asarray(params.alpha_of_rho(rho.values), dtype=float))
    return mu, alpha
