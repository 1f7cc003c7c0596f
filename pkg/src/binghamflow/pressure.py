"""Pressure-correction step: Poisson solve, accumulation, velocity projection.

The pressure increment solves one constant-coefficient Neumann Poisson
problem per step, scaled by the *lower density bound* rather than the
local density, so a variable-density run costs exactly one standard
Poisson solve.  The corrected velocity has zero normal boundary faces
and a divergence bounded by the Poisson residual times ``dt / rho1``.
"""

from __future__ import annotations

from .errors import NonConvergence
from .grid import ScalarField, VelocityField
from .operators import divergence, gradient_to_faces, neg_laplacian
from .solvers import SolverConfig, SolveStats, cg_solve

__all__ = ["pressure_increment", "accumulate_pressure", "correct_velocity"]


def pressure_increment(u_new: VelocityField, rho1: float, dt: float,
                       cfg: SolverConfig):
    """Mean-zero increment q with div(grad q) = (rho1/dt) div(u_new), Neumann walls."""
    g = u_new.grid
    rhs = divergence(u_new)
    rhs.values *= -(rho1 / dt)

    def apply(vals):
        return neg_laplacian(ScalarField(g, vals)).values

    q, stats = cg_solve(apply, rhs, cfg)
    if not stats.converged:
        raise NonConvergence("pressure Poisson solve", stats)
    return q, stats


def accumulate_pressure(p_old: ScalarField, q_new: ScalarField) -> ScalarField:
    """Incremental update p + q; the mean-zero gauge of q preserves the gauge of p."""
    if p_old.grid is not q_new.grid and p_old.grid != q_new.grid:
        raise ValueError("pressure fields live on different grids")
    return ScalarField(p_old.grid, p_old.values + q_new.values)


def correct_velocity(u_new: VelocityField, q_new: ScalarField, rho1: float,
                     dt: float) -> VelocityField:
    """Subtract (dt/rho1) grad q; the result is solenoidal up to the Poisson residual."""
    gq = gradient_to_faces(q_new)
    scale = dt / rho1
    out = VelocityField(u_new.grid, u_new.ux - scale * gq.ux, u_new.uy - scale * gq.uy)
    out.enforce_wall_normals()
    return out
