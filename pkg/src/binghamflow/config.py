"""Run configuration: INI-style text with flat sections.

Sections and keys (defaults in brackets):

    [grid]     nx, ny [64], lx, ly [1.0], periodic_x [false]
    [fluid]    rho1 [1.0], rho2 [1.0], mu1 [0.1], mu2 [mu1],
               alpha1 [0.0], alpha2 [alpha1], law [affine]
    [scheme]   dt [1e-3], r [auto], theta [0.25],
               fp_tol [1e-8 * sqrt(lx*ly)], fp_max_iter [200]
    [solver]   poisson_tol_rel [1e-11], poisson_tol_abs [1e-13],
               poisson_max_iter [50000], krylov_tol_rel [1e-12],
               krylov_tol_abs [1e-15], krylov_max_iter [4000]
    [run]      scenario [cavity], t_end [0.1], stability_mode [false]
    [scenario] free-form options forwarded to the scenario builder
    [output]   directory [out], snapshot_every [0], csv_every [1],
               figures [true]

When ``r`` is omitted it is chosen as ``mu1/alpha2^2`` (coupling load
one) or 1.0 for a fluid without yield stress.  Validation failures name
the violated inequality.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field as dc_field
from typing import Dict, Optional

from .errors import ParseError, ValidationError
from .grid import MacGrid
from .integrator import RunParams
from .momentum import SchemeParams
from .solvers import SolverConfig
from .transport import FluidParams

__all__ = ["OutputConfig", "RunConfig", "parse_config", "render_config"]

_SECTIONS = {"grid", "fluid", "scheme", "solver", "run", "scenario", "output"}
_LAWS = {"affine"}
_SCENARIOS = {"rest", "cavity", "dambreak", "poiseuille"}


@dataclass
class OutputConfig:
    directory: str = "out"
    snapshot_every: int = 0
    csv_every: int = 1
    figures: bool = True


@dataclass
class RunConfig:
    grid: MacGrid
    fluid: FluidParams
    scheme: SchemeParams
    poisson: SolverConfig
    krylov: SolverConfig
    scenario: str
    scenario_options: Dict[str, str]
    t_end: float
    stability_mode: bool
    output: OutputConfig
    law: str = "affine"

    def run_params(self) -> RunParams:
        return RunParams(self.fluid, self.scheme, self.poisson, self.krylov)


def _get(cp, section, key, conv, default):
    if not cp.has_section(section) or not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    try:
        if conv is bool:
            return cp.getboolean(section, key)
        return conv(raw)
    except (ValueError, TypeError):
        raise ParseError(f"[{section}] {key}", f"cannot parse {raw!r} as {conv.__name__}")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration; raises ParseError or ValidationError."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParseError("config", str(exc)) from exc

    unknown = set(cp.sections()) - _SECTIONS
    if unknown:
        raise ParseError("config", f"unknown sections: {sorted(unknown)}")

    nx = _get(cp, "grid", "nx", int, 64)
    ny = _get(cp, "grid", "ny", int, 64)
    lx = _get(cp, "grid", "lx", float, 1.0)
    ly = _get(cp, "grid", "ly", float, 1.0)
    periodic_x = _get(cp, "grid", "periodic_x", bool, False)
    try:
        grid = MacGrid(nx, ny, lx, ly, periodic_x)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc

    rho1 = _get(cp, "fluid", "rho1", float, 1.0)
    rho2 = _get(cp, "fluid", "rho2", float, rho1)
    mu1 = _get(cp, "fluid", "mu1", float, 0.1)
    mu2 = _get(cp, "fluid", "mu2", float, mu1)
    alpha1 = _get(cp, "fluid", "alpha1", float, 0.0)
    alpha2 = _get(cp, "fluid", "alpha2", float, alpha1)
    law = _get(cp, "fluid", "law", str, "affine")
    if law not in _LAWS:
        raise ValidationError(f"unknown coefficient law '{law}' (expected one of {sorted(_LAWS)})")
    try:
        fluid = FluidParams.affine(rho1, rho2, mu1, mu2, alpha1, alpha2)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc

    dt = _get(cp, "scheme", "dt", float, 1e-3)
    theta = _get(cp, "scheme", "theta", float, 0.25)
    default_r = mu1 / alpha2 ** 2 if alpha2 > 0.0 else 1.0
    r = _get(cp, "scheme", "r", float, default_r)
    fp_tol = _get(cp, "scheme", "fp_tol", float, 1e-8 * math.sqrt(lx * ly))
    fp_max_iter = _get(cp, "scheme", "fp_max_iter", int, 200)
    stability_mode = _get(cp, "run", "stability_mode", bool, False)
    scheme = SchemeParams(dt=dt, r=r, theta=theta, fp_tol=fp_tol,
                          fp_max_iter=fp_max_iter, mu1=mu1, alpha2=alpha2,
                          stability_mode=stability_mode)

    poisson = SolverConfig(_get(cp, "solver", "poisson_tol_rel", float, 1e-11),
                           _get(cp, "solver", "poisson_tol_abs", float, 1e-13),
                           _get(cp, "solver", "poisson_max_iter", int, 50000))
    krylov = SolverConfig(_get(cp, "solver", "krylov_tol_rel", float, 1e-12),
                          _get(cp, "solver", "krylov_tol_abs", float, 1e-15),
                          _get(cp, "solver", "krylov_max_iter", int, 4000))

    scenario = _get(cp, "run", "scenario", str, "cavity")
    if scenario not in _SCENARIOS:
        raise ValidationError(f"unknown scenario '{scenario}' (expected one of {sorted(_SCENARIOS)})")
    t_end = _get(cp, "run", "t_end", float, 0.1)
    if t_end <= 0.0:
        raise ValidationError(f"t_end > 0 violated: t_end = {t_end}")
    if scenario == "poiseuille" and not periodic_x:
        raise ValidationError("poiseuille scenario requires [grid] periodic_x = true")
    if scenario == "poiseuille":
        drive = float(cp.get("scenario", "drive", fallback="1.0"))
        if drive <= 0.0:
            raise ValidationError(f"poiseuille drive > 0 violated: drive = {drive}")

    scenario_options = dict(cp.items("scenario")) if cp.has_section("scenario") else {}

    output = OutputConfig(
        directory=_get(cp, "output", "directory", str, "out"),
        snapshot_every=_get(cp, "output", "snapshot_every", int, 0),
        csv_every=_get(cp, "output", "csv_every", int, 1),
        figures=_get(cp, "output", "figures", bool, True),
    )

    return RunConfig(grid=grid, fluid=fluid, scheme=scheme, poisson=poisson,
                     krylov=krylov, scenario=scenario,
                     scenario_options=scenario_options, t_end=t_end,
                     stability_mode=stability_mode, output=output, law=law)


def render_config(cfg: RunConfig) -> str:
    """Serialise the effective configuration (defaults filled in)."""
    cp = configparser.ConfigParser()
    cp["grid"] = {"nx": str(cfg.grid.nx), "ny": str(cfg.grid.ny),
                  "lx": repr(cfg.grid.lx), "ly": repr(cfg.grid.ly),
                  "periodic_x": str(cfg.grid.periodic_x).lower()}
    cp["fluid"] = {"rho1": repr(cfg.fluid.rho1), "rho2": repr(cfg.fluid.rho2),
                   "mu1": repr(cfg.fluid.mu1), "mu2": repr(cfg.fluid.mu2),
                   "alpha1": repr(cfg.fluid.alpha1), "alpha2": repr(cfg.fluid.alpha2),
                   "law": cfg.law}
    cp["scheme"] = {"dt": repr(cfg.scheme.dt), "r": repr(cfg.scheme.r),
                    "theta": repr(cfg.scheme.theta), "fp_tol": repr(cfg.scheme.fp_tol),
                    "fp_max_iter": str(cfg.scheme.fp_max_iter)}
    cp["solver"] = {"poisson_tol_rel": repr(cfg.poisson.tol_rel),
                    "poisson_tol_abs": repr(cfg.poisson.tol_abs),
                    "poisson_max_iter": str(cfg.poisson.max_iter),
                    "krylov_tol_rel": repr(cfg.krylov.tol_rel),
                    "krylov_tol_abs": repr(cfg.krylov.tol_abs),
                    "krylov_max_iter": str(cfg.krylov.max_iter)}
    cp["run"] = {"scenario": cfg.scenario, "t_end": repr(cfg.t_end),
                 "stability_mode": str(cfg.stability_mode).lower()}
    if cfg.scenario_options:
        cp["scenario"] = dict(cfg.scenario_options)
    cp["output"] = {"directory": cfg.output.directory,
                    "snapshot_every": str(cfg.output.snapshot_every),
                    "csv_every": str(cfg.output.csv_every),
                    "figures": str(cfg.output.figures).lower()}
    import io
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
