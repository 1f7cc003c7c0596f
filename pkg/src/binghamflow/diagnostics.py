"""Stability ledger, plug detection, temporal-rate harness, channel reference.

The energy ledger tracks the quantity whose per-step non-increase the
scheme guarantees when ``theta <= 1/2`` and ``r alpha2^2/mu1 <= 3/2``:
density-weighted kinetic energy, the pressure-gradient term scaled by
``dt^2/rho1``, the plastic-tensor term scaled by ``2 theta dt / r``, and
the accumulated viscous dissipation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import HypothesisViolation
from .grid import MacGrid, ScalarField, TensorField, VelocityField
from .integrator import (RunParams, SimState, kinetic_energy, pressure_energy,
                         run, sigma_energy, step)
from .momentum import SchemeParams
from .operators import diffusion_quadratic_form
from .transport import FluidParams, eval_coefficients

__all__ = ["EnergyLedger", "LedgerEntry", "energy_ledger", "PlugMask", "plug_mask",
           "poiseuille_reference", "poiseuille_plug_half_width",
           "ConvergenceStudy", "temporal_convergence_study"]


@dataclass
class LedgerEntry:
    n: int
    kinetic: float
    pressure_term: float
    sigma_term: float
    dissipation_cum: float

    @property
    def total(self) -> float:
        return self.kinetic + self.pressure_term + self.sigma_term + self.dissipation_cum


EnergyLedger = List[LedgerEntry]


def energy_ledger(states: Sequence[SimState], fluid: FluidParams,
                  scheme: SchemeParams) -> EnergyLedger:
    """Ledger over a run history (state at every time level, including the initial one).

    Raises ``HypothesisViolation`` when the run's parameters sit outside
    the admissible region of the non-increase guarantee.
    """
    if scheme.theta > 0.5:
        raise HypothesisViolation(f"theta <= 1/2 required, got theta = {scheme.theta}")
    load = scheme.r * fluid.alpha2 ** 2 / fluid.mu1
    if load > 1.5 + 1e-12:
        raise HypothesisViolation(f"r*alpha2^2/mu1 <= 3/2 required, got {load:.6g}")

    entries: EnergyLedger = []
    diss_cum = 0.0
    for k, state in enumerate(states):
        if k > 0:
            mu_k, _ = eval_coefficients(state.rho, fluid)
            diss_cum += 0.5 * scheme.dt * diffusion_quadratic_form(state.u, mu_k)
        entries.append(LedgerEntry(
            n=k,
            kinetic=kinetic_energy(state.rho, state.u),
            pressure_term=pressure_energy(state.p, scheme.dt, fluid.rho1),
            sigma_term=sigma_energy(state.sigma, scheme.theta, scheme.r, scheme.dt),
            dissipation_cum=diss_cum,
        ))
    return entries


@dataclass
class PlugMask:
    """Cell partition into unyielded (plug) and yielded regions."""

    grid: MacGrid
    yielded: np.ndarray

    @property
    def plug(self) -> np.ndarray:
        return ~self.yielded


def plug_mask(sigma: TensorField, du: Optional[TensorField] = None,
              tol_plug: float = 1e-3) -> PlugMask:
    """Flag a cell as yielded when the plastic tensor sits on the constraint boundary."""
    mag = sigma.magnitude()
    return PlugMask(sigma.grid, mag >= 1.0 - tol_plug)


def poiseuille_plug_half_width(drive: float, alpha: float) -> float:
    return alpha / drive


def poiseuille_reference(half_width: float, drive: float, mu: float, alpha: float,
                         y: np.ndarray) -> np.ndarray:
    """Steady channel profile for a yield-stress fluid driven by a uniform force.

    ``y`` is measured from the centreline, walls at ``|y| = half_width``.
    In simple shear the plastic stress saturates at the yield stress, so
    the material flows only where ``drive * |y|`` exceeds ``alpha``; below
    the threshold everywhere (``drive * half_width <= alpha``) the profile
    is identically zero.
    """
    y = np.asarray(y, dtype=float)
    if drive <= 0.0 or mu <= 0.0:
        raise ValueError("drive and mu must be positive")
    if drive * half_width <= alpha:
        return np.zeros_like(y)
    y0 = alpha / drive
    ay = np.abs(y)
    sheared = (drive / (2.0 * mu)) * (half_width ** 2 - y ** 2) \
        - (alpha / mu) * (half_width - ay)
    plug_speed = (drive / (2.0 * mu)) * (half_width - y0) ** 2
    return np.where(ay >= y0, sheared, plug_speed)


@dataclass
class ConvergenceStudy:
    dts: List[float]
    errors_u: List[float]
    errors_rho: List[float]
    slope_u: float
    slope_rho: float
    dt_ref: float


def _lsq_slope(dts, errs) -> float:
    x = np.log(np.asarray(dts))
    y = np.log(np.asarray(errs))
    a = np.vstack([x, np.ones_like(x)]).T
    slope, _ = np.linalg.lstsq(a, y, rcond=None)[0]
    return float(slope)


def _velocity_error(u: VelocityField, u_ref: VelocityField) -> float:
    d = VelocityField(u.grid, u.ux - u_ref.ux, u.uy - u_ref.uy)
    return d.l2_norm()


def _scalar_error(s: ScalarField, s_ref: ScalarField) -> float:
    return ScalarField(s.grid, s.values - s_ref.values).l2_norm()


def temporal_convergence_study(state0: SimState, params: RunParams, t_end: float,
                               dt_list: Sequence[float],
                               theta_rule: Callable[[float], float] = lambda dt: dt,
                               dt_ref: Optional[float] = None,
                               forcing=None,
                               fp_max_iter: Optional[int] = None) -> ConvergenceStudy:
    """Self-convergence of the time discretisation on a fixed grid.

    Runs the same initial state at every requested step size (relaxation
    parameter set by ``theta_rule``) and once at a much finer reference
    step, then reports the terminal velocity and density errors against
    the reference together with their least-squares orders.
    """
    dts = sorted(dt_list, reverse=True)
    if dt_ref is None:
        dt_ref = min(dts) / 16.0
    if dt_ref > min(dts) / 16.0 + 1e-15:
        raise ValueError("reference step must be at least 16x finer than the smallest dt")

    def params_for(dt: float) -> RunParams:
        base = params.scheme
        scheme = SchemeParams(
            dt=dt, r=base.r, theta=theta_rule(dt), fp_tol=base.fp_tol,
            fp_max_iter=fp_max_iter or base.fp_max_iter,
            mu1=base.mu1, alpha2=base.alpha2, stability_mode=base.stability_mode)
        return RunParams(params.fluid, scheme, params.poisson, params.krylov)

    ref_state, _ = run(state0.copy(), params_for(dt_ref), t_end, forcing=forcing)

    errors_u, errors_rho = [], []
    for dt in dts:
        final, _ = run(state0.copy(), params_for(dt), t_end, forcing=forcing)
        errors_u.append(_velocity_error(final.u, ref_state.u))
        errors_rho.append(_scalar_error(final.rho, ref_state.rho))

    return ConvergenceStudy(
        dts=list(dts), errors_u=errors_u, errors_rho=errors_rho,
        slope_u=_lsq_slope(dts, errors_u), slope_rho=_lsq_slope(dts, errors_rho),
        dt_ref=dt_ref)
