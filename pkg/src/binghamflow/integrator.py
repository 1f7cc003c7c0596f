"""One full time step and whole-run orchestration.

A step advances, in order: density transport with the solenoidal
velocity, coefficient evaluation, the coupled momentum / plastic-tensor
fixed point, the pressure Poisson solve, pressure accumulation, and the
velocity correction.  Each step emits a report with the fixed-point
history, divergence residual, density bounds and the energy terms the
stability ledger tracks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from .errors import InvalidInitialDensity
from .grid import MacGrid, ScalarField, TensorField, VelocityField
from .momentum import FixedPointReport, SchemeParams, fixed_point_solve
from .operators import divergence, diffusion_quadratic_form, face_average, gradient_to_faces
from .pressure import accumulate_pressure, correct_velocity, pressure_increment
from .solvers import SolverConfig, SolveStats
from .transport import FluidParams, advect_density, eval_coefficients

__all__ = ["RunParams", "SimState", "StepReport", "initialize", "step", "run"]

Forcing = Union[None, VelocityField, Callable[[float, ScalarField], VelocityField]]


@dataclass(frozen=True)
class RunParams:
    fluid: FluidParams
    scheme: SchemeParams
    poisson: SolverConfig = SolverConfig(1e-11, 1e-13, 50000)
    krylov: SolverConfig = SolverConfig(1e-12, 1e-15, 4000)


@dataclass
class SimState:
    t: float
    n: int
    rho: ScalarField
    p: ScalarField
    q: ScalarField
    u: VelocityField
    u_hat: VelocityField
    sigma: TensorField

    @property
    def grid(self) -> MacGrid:
        return self.rho.grid

    def copy(self) -> "SimState":
        return SimState(self.t, self.n, self.rho.copy(), self.p.copy(),
                        self.q.copy(), self.u.copy(), self.u_hat.copy(),
                        self.sigma.copy())


@dataclass
class StepReport:
    n: int
    t: float
    fixed_point: FixedPointReport
    poisson: SolveStats
    div_residual: float
    rho_min: float
    rho_max: float
    sigma_max: float
    kinetic: float
    pressure_term: float
    sigma_term: float
    dissipation_increment: float
    dissipation_cum: float = 0.0
    total: float = 0.0


def kinetic_energy(rho: ScalarField, u: VelocityField) -> float:
    """Density-weighted velocity norm squared, with face-averaged density."""
    fx, fy = face_average(rho)
    return float((np.sum(fx * u.ux ** 2) + np.sum(fy * u.uy ** 2)) * rho.grid.cell_area)


def pressure_energy(p: ScalarField, dt: float, rho1: float) -> float:
    gp = gradient_to_faces(p)
    return dt ** 2 / rho1 * gp.inner(gp)


def sigma_energy(sigma: TensorField, theta: float, r: float, dt: float) -> float:
    return 2.0 * theta / r * dt * sigma.l2_norm() ** 2


def initialize(rho0: ScalarField, u0: VelocityField, params: RunParams) -> SimState:
    """Build the starting state; projects u0 once if it is not discretely solenoidal."""
    fluid = params.fluid
    lo, hi = float(rho0.values.min()), float(rho0.values.max())
    if lo < fluid.rho1 - 1e-12 or hi > fluid.rho2 + 1e-12:
        raise InvalidInitialDensity(
            f"initial density range [{lo}, {hi}] outside [{fluid.rho1}, {fluid.rho2}]")
    g = rho0.grid
    u = u0.copy()
    u.enforce_wall_normals()
    div = divergence(u)
    h = min(g.hx, g.hy)
    if div.linf() > max(1e-12, 1e-10 * u.linf() / h):
        q0, _ = pressure_increment(u, fluid.rho1, 1.0, params.poisson)
        u = correct_velocity(u, q0, fluid.rho1, 1.0)
    return SimState(t=0.0, n=0, rho=rho0.copy(), p=ScalarField.zeros(g),
                    q=ScalarField.zeros(g), u=u, u_hat=u.copy(),
                    sigma=TensorField.zeros(g))


def _forcing_field(forcing: Forcing, t: float, rho_new: ScalarField):
    if forcing is None:
        return None
    if isinstance(forcing, VelocityField):
        return forcing
    return forcing(t, rho_new)


def step(state: SimState, params: RunParams, forcing: Forcing = None):
    """Advance one time step; returns the new state and its report."""
    fluid, scheme = params.fluid, params.scheme
    dt = scheme.dt

    rho_new = advect_density(state.rho, state.u_hat, dt, params.krylov,
                             rho_bounds=(fluid.rho1, fluid.rho2))
    mu_new, alpha_new = eval_coefficients(rho_new, fluid)
    force = _forcing_field(forcing, state.t + dt, rho_new)
    u_new, sigma_new, fp_report = fixed_point_solve(
        state, rho_new, mu_new, alpha_new, scheme, params.krylov, forcing=force)
    q_new, poisson_stats = pressure_increment(u_new, fluid.rho1, dt, params.poisson)
    p_new = accumulate_pressure(state.p, q_new)
    u_hat_new = correct_velocity(u_new, q_new, fluid.rho1, dt)

    new_state = SimState(t=state.t + dt, n=state.n + 1, rho=rho_new, p=p_new,
                         q=q_new, u=u_new, u_hat=u_hat_new, sigma=sigma_new)

    div_res = divergence(u_hat_new).linf()
    diss = 0.5 * diffusion_quadratic_form(u_new, mu_new) * dt
    report = StepReport(
        n=new_state.n,
        t=new_state.t,
        fixed_point=fp_report,
        poisson=poisson_stats,
        div_residual=div_res,
        rho_min=float(rho_new.values.min()),
        rho_max=float(rho_new.values.max()),
        sigma_max=float(np.max(sigma_new.magnitude())),
        kinetic=kinetic_energy(rho_new, u_new),
        pressure_term=pressure_energy(p_new, dt, fluid.rho1),
        sigma_term=sigma_energy(sigma_new, scheme.theta, scheme.r, dt),
        dissipation_increment=diss,
        dissipation_cum=diss,
    )
    report.total = (report.kinetic + report.pressure_term + report.sigma_term
                    + report.dissipation_cum)
    return new_state, report


def run(state0: SimState, params: RunParams, t_end: float,
        observers: Sequence[Callable] = (), forcing: Forcing = None):
    """Repeat steps until t_end; observers see (state, report) after every step.

    Observers are also called once with ``(state0, None)`` before the
    first step.  ``t_end`` must be an integer multiple of the time step.
    """
    dt = params.scheme.dt
    if t_end <= 0.0:
        raise ValueError("t_end must be positive")
    n_steps = round(t_end / dt)
    if abs(n_steps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError(f"t_end = {t_end} is not a multiple of dt = {dt}")

    for obs in observers:
        obs(state0, None)

    state = state0
    reports: List[StepReport] = []
    diss_cum = 0.0
    for _ in range(n_steps):
        state, report = step(state, params, forcing=forcing)
        diss_cum += report.dissipation_increment
        report.dissipation_cum = diss_cum
        report.total = (report.kinetic + report.pressure_term + report.sigma_term
                        + diss_cum)
        reports.append(report)
        for obs in observers:
            obs(state, report)
    return state, reports
