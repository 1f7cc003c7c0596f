"""Initial conditions and body forces for the built-in scenarios.

All scenarios live in a closed box with impermeable no-slip walls, so
flows are driven by the initial velocity or by a body force:

* ``rest``      -- zero velocity, optionally a density blob.
* ``cavity``    -- an enclosed recirculating vortex (stream-function
                   initial data vanishing with its gradient on the
                   walls) that decays under viscosity and yield stress;
                   optionally a density blob.
* ``dambreak``  -- a heavy blob in lighter fluid, driven by buoyancy
                   relative to the light phase.
* ``poiseuille``-- an x-periodic channel spun up from rest by a uniform
                   streamwise force.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .grid import MacGrid, ScalarField, VelocityField
from .transport import FluidParams

__all__ = ["Scenario", "build_scenario", "vortex_velocity", "density_blob"]

Forcing = Union[None, VelocityField, Callable[[float, ScalarField], VelocityField]]


@dataclass
class Scenario:
    grid: MacGrid
    rho0: ScalarField
    u0: VelocityField
    forcing: Forcing


def vortex_velocity(grid: MacGrid, amplitude: float = 1.0) -> VelocityField:
    """Divergence-free vortex from psi = A (sin(pi x/lx) sin(pi y/ly))^2.

    Both velocity components and their tangential derivatives vanish on
    the walls, so the sampled field is no-slip; the small discrete
    divergence left by sampling is removed by the initial projection.
    """
    lx, ly = grid.lx, grid.ly
    kx, ky = math.pi / lx, math.pi / ly

    def fx(x, y):
        return amplitude * 2.0 * ky * np.sin(kx * x) ** 2 * np.sin(ky * y) * np.cos(ky * y)

    def fy(x, y):
        return -amplitude * 2.0 * kx * np.sin(kx * x) * np.cos(kx * x) * np.sin(ky * y) ** 2

    u = VelocityField.from_functions(grid, fx, fy)
    u.enforce_wall_normals()
    return u


def density_blob(grid: MacGrid, rho1: float, rho2: float,
                 cx: float = 0.5, cy: float = 0.5, radius: float = 0.2,
                 width: float = 0.05) -> ScalarField:
    """Smooth heavy blob: rho1 background, rho2 core, tanh transition."""
    def f(x, y):
        r = np.sqrt((x - cx * grid.lx) ** 2 + (y - cy * grid.ly) ** 2)
        s = 0.5 * (1.0 + np.tanh((radius - r) / width))
        return rho1 + (rho2 - rho1) * np.clip(s, 0.0, 1.0)

    return ScalarField.from_function(grid, f)


def _gravity_forcing(grid: MacGrid, rho1: float, g: float) -> Forcing:
    """Buoyancy relative to the light phase: -(rho - rho1) g on vertical faces."""
    def force(t: float, rho_new: ScalarField) -> VelocityField:
        v = VelocityField.zeros(grid)
        rho_f = 0.5 * (rho_new.values[:, :-1] + rho_new.values[:, 1:])
        v.uy[:, 1:-1] = -(rho_f - rho1) * g
        return v

    return force


def _constant_force_x(grid: MacGrid, gx: float) -> VelocityField:
    v = VelocityField.zeros(grid)
    v.ux[...] = gx
    v.enforce_wall_normals()
    return v


def build_scenario(name: str, grid: MacGrid, fluid: FluidParams,
                   options: Optional[dict] = None) -> Scenario:
    opts = dict(options or {})
    if name == "rest":
        rho0 = (density_blob(grid, fluid.rho1, fluid.rho2,
                             radius=opts.get("blob_radius", 0.2),
                             width=opts.get("blob_width", 0.05))
                if opts.get("blob", False)
                else ScalarField.full(grid, fluid.rho1))
        return Scenario(grid, rho0, VelocityField.zeros(grid), None)

    if name == "cavity":
        amp = float(opts.get("amplitude", 1.0))
        u0 = vortex_velocity(grid, amp)
        if opts.get("blob", True) and fluid.rho2 > fluid.rho1:
            rho0 = density_blob(grid, fluid.rho1, fluid.rho2,
                                cx=float(opts.get("blob_cx", 0.4)),
                                cy=float(opts.get("blob_cy", 0.6)),
                                radius=float(opts.get("blob_radius", 0.2)),
                                width=float(opts.get("blob_width", 0.08)))
        else:
            rho0 = ScalarField.full(grid, fluid.rho1)
        return Scenario(grid, rho0, u0, None)

    if name == "dambreak":
        rho0 = density_blob(grid, fluid.rho1, fluid.rho2,
                            cx=float(opts.get("blob_cx", 0.35)),
                            cy=float(opts.get("blob_cy", 0.65)),
                            radius=float(opts.get("blob_radius", 0.18)),
                            width=float(opts.get("blob_width", 0.06)))
        g = float(opts.get("gravity", 1.0))
        return Scenario(grid, rho0, VelocityField.zeros(grid),
                        _gravity_forcing(grid, fluid.rho1, g))

    if name == "poiseuille":
        if not grid.periodic_x:
            raise ValueError("poiseuille scenario requires a periodic_x grid")
        drive = float(opts.get("drive", 1.0))
        rho0 = ScalarField.full(grid, fluid.rho1)
        return Scenario(grid, rho0, VelocityField.zeros(grid),
                        _constant_force_x(grid, drive))

    raise ValueError(f"unknown scenario '{name}' "
                     "(expected rest | cavity | dambreak | poiseuille)")
