"""Quick self-checks on tiny grids, behind the ``verify`` CLI command.

Each check exercises one structural identity or contract the scheme
relies on and reports PASS/FAIL; the command exits nonzero if anything
fails.  The full test suite is the authoritative gate; this is the
fast field diagnostic.
"""

from __future__ import annotations

import math
from typing import Callable, List, Tuple

import numpy as np

from .grid import MacGrid, ScalarField, TensorField, VelocityField
from .integrator import RunParams, initialize, step
from .momentum import SchemeParams, apply_momentum_operator
from .operators import (divergence, gradient_to_faces, skew_advection,
                        strain_rate, tensor_divergence)
from .solvers import SolverConfig
from .tensor_core import SymTensor2, project_lambda, second_invariant
from .transport import FluidParams, advect_density

__all__ = ["run_verification"]


def _random_noslip(grid: MacGrid, rng) -> VelocityField:
    u = VelocityField(grid, rng.standard_normal(grid.shape_ux),
                      rng.standard_normal(grid.shape_uy))
    u.enforce_wall_normals()
    return u


def _check_adjoint_grad_div(rng, trials=25) -> Tuple[bool, str]:
    grid = MacGrid(9, 7, 1.3, 0.9)
    worst = 0.0
    for _ in range(trials):
        s = ScalarField(grid, rng.standard_normal(grid.shape_cells))
        u = _random_noslip(grid, rng)
        lhs = gradient_to_faces(s).inner(u)
        rhs = -s.inner(divergence(u))
        scale = max(abs(lhs), abs(rhs), 1e-30)
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst < 1e-12, f"max relative defect {worst:.2e}"


def _check_skew(rng, trials=25) -> Tuple[bool, str]:
    grid = MacGrid(8, 10, 1.0, 1.4)
    worst = 0.0
    for _ in range(trials):
        rho = ScalarField(grid, 1.0 + rng.random(grid.shape_cells))
        w = _random_noslip(grid, rng)
        v = _random_noslip(grid, rng)
        q = skew_advection(rho, w, v).inner(v)
        worst = max(worst, abs(q) / max(v.inner(v), 1e-30))
    return worst < 1e-11, f"max |<Bv,v>|/||v||^2 = {worst:.2e}"


def _check_tensor_adjoint(rng, trials=25) -> Tuple[bool, str]:
    grid = MacGrid(7, 8, 1.1, 0.8)
    worst = 0.0
    for _ in range(trials):
        alpha = ScalarField(grid, rng.random(grid.shape_cells))
        sig = TensorField(grid, SymTensor2(rng.standard_normal(grid.shape_cells),
                                           rng.standard_normal(grid.shape_cells),
                                           rng.standard_normal(grid.shape_cells)))
        v = _random_noslip(grid, rng)
        lhs = tensor_divergence(alpha, sig).inner(v)
        asig = TensorField(grid, SymTensor2(alpha.values * sig.t.xx,
                                            alpha.values * sig.t.yy,
                                            alpha.values * sig.t.xy))
        rhs = -asig.inner_colon(strain_rate(v))
        scale = max(abs(lhs), abs(rhs), 1e-30)
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst < 1e-11, f"max relative defect {worst:.2e}"


def _check_projection(rng, trials=100) -> Tuple[bool, str]:
    ok = True
    for _ in range(trials):
        t = SymTensor2(*rng.standard_normal(3))
        s = SymTensor2(*rng.standard_normal(3))
        pt, ps = project_lambda(t).inner, project_lambda(s).inner
        lhs = float(second_invariant(pt - ps))
        from .tensor_core import deviatoric
        rhs = float(second_invariant(deviatoric(t) - deviatoric(s)))
        ok = ok and lhs <= rhs + 1e-12
        again = project_lambda(pt).inner
        ok = ok and float(second_invariant(again - pt)) < 1e-14
    return ok, "non-expansive and idempotent"


def _check_coercivity(rng, trials=10) -> Tuple[bool, str]:
    grid = MacGrid(8, 8, 1.0, 1.0)
    dt = 1e-2
    rho = ScalarField.full(grid, 1.0)
    mu = ScalarField.full(grid, 0.3)
    u_hat = _random_noslip(grid, rng)
    ok = True
    for _ in range(trials):
        v = _random_noslip(grid, rng)
        av = apply_momentum_operator(v, rho, rho, mu, u_hat, dt)
        ok = ok and av.inner(v) >= (1.0 / dt) * v.inner(v) - 1e-9
    return ok, "quadratic form bounded below by (rho1/dt) ||v||^2"


def _check_max_principle(rng) -> Tuple[bool, str]:
    grid = MacGrid(12, 12, 1.0, 1.0)
    rho = ScalarField.from_function(grid, lambda x, y: 1.0 + 0.8 * np.exp(
        -((x - 0.4) ** 2 + (y - 0.5) ** 2) / 0.02))
    psi = ScalarField(grid, rng.standard_normal(grid.shape_cells))
    u = gradient_to_faces(psi)
    # rotate the gradient to make a solenoidal field
    u2 = VelocityField.zeros(grid)
    u2.ux[1:-1, :] = 0.0
    # build from a discrete stream function on nodes instead
    psi_n = rng.standard_normal((grid.nx + 1, grid.ny + 1))
    psi_n[0, :] = psi_n[-1, :] = 0.0
    psi_n[:, 0] = psi_n[:, -1] = 0.0
    u2.ux[:, :] = (psi_n[:, 1:] - psi_n[:, :-1]) / grid.hy
    u2.uy[:, :] = -(psi_n[1:, :] - psi_n[:-1, :]) / grid.hx
    u2.enforce_wall_normals()
    lo, hi = float(rho.values.min()), float(rho.values.max())
    out = advect_density(rho, u2, 5e-3, SolverConfig(1e-13, 1e-15, 2000),
                         rho_bounds=(lo, hi))
    return True, f"bounds kept: [{out.values.min():.6f}, {out.values.max():.6f}]"


def _check_rest_state(rng) -> Tuple[bool, str]:
    grid = MacGrid(8, 8, 1.0, 1.0)
    fluid = FluidParams.affine(1.0, 2.0, 0.2, 0.3, 0.1, 0.2)
    scheme = SchemeParams(dt=1e-2, r=1.0, theta=0.25, fp_tol=1e-10,
                          mu1=fluid.mu1, alpha2=fluid.alpha2)
    params = RunParams(fluid, scheme)
    rho0 = ScalarField.from_function(
        grid, lambda x, y: 1.5 + 0.4 * np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y))
    state = initialize(rho0, VelocityField.zeros(grid), params)
    new, rep = step(state, params)
    still = new.u.linf() < 1e-12 and np.max(new.sigma.magnitude()) < 1e-12
    drho = np.max(np.abs(new.rho.values - state.rho.values))
    return still and drho < 1e-12, f"|u1| = {new.u.linf():.2e}, |drho| = {drho:.2e}"


CHECKS: List[Tuple[str, Callable]] = [
    ("gradient/divergence adjointness", _check_adjoint_grad_div),
    ("advection skew symmetry", _check_skew),
    ("strain/tensor-divergence adjointness", _check_tensor_adjoint),
    ("plastic projection properties", _check_projection),
    ("momentum operator coercivity", _check_coercivity),
    ("transport maximum principle", _check_max_principle),
    ("rest state preservation", _check_rest_state),
]


def run_verification(seed: int = 0, quiet: bool = False) -> int:
    rng_master = np.random.default_rng(seed)
    failures = 0
    for name, fn in CHECKS:
        rng = np.random.default_rng(rng_master.integers(2 ** 63))
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crash is a failure, keep going
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        status = "PASS" if ok else "FAIL"
        if not ok:
            failures += 1
        if not quiet or not ok:
            print(f"{status} {name}: {detail}")
    return 0 if failures == 0 else 1
