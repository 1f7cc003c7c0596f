"""Discrete differential operators on the staggered grid.

The operators are built as adjoint pairs so that the identities the
scheme's stability rests on hold to machine precision:

* ``gradient_to_faces`` is the exact negative adjoint of ``divergence``
  over fields with zero normal boundary faces;
* ``tensor_divergence`` is the exact negative adjoint of ``strain_rate``
  over no-slip velocities (cell tensors paired with the full
  contraction, off-diagonal counted twice);
* ``skew_advection`` has an exactly vanishing quadratic form for any
  convecting field with zero normal boundary faces;
* ``diffusion_apply`` is the symmetric positive form "minus the
  divergence of twice viscosity times strain".

Strain components live at cell centres (diagonal) and nodes
(off-diagonal).  Node sums carry trapezoidal weights (quarter cell per
adjacent cell) which is exactly what makes the cell/node interpolation
pair adjoint.  Tangential wall values enter through ghost reflection, so
node shear rates next to a wall see twice the one-sided difference.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .grid import MacGrid, ScalarField, TensorField, VelocityField
from .tensor_core import SymTensor2

__all__ = [
    "divergence",
    "gradient_to_faces",
    "neg_laplacian",
    "strain_rate",
    "strain_components",
    "strain_transpose",
    "diffusion_apply",
    "diffusion_quadratic_form",
    "tensor_divergence",
    "skew_advection",
    "AdvectionCoefficients",
    "apply_advection",
    "face_average",
    "cell_mean_to_nodes",
    "harmonic_mu_nodes",
    "node_weights",
]


def divergence(u: VelocityField) -> ScalarField:
    """Cell-centred divergence of a face field."""
    g = u.grid
    if g.periodic_x:
        dx = (np.roll(u.ux, -1, axis=0) - u.ux) / g.hx
    else:
        dx = (u.ux[1:, :] - u.ux[:-1, :]) / g.hx
    dy = (u.uy[:, 1:] - u.uy[:, :-1]) / g.hy
    return ScalarField(g, dx + dy)


def gradient_to_faces(s: ScalarField) -> VelocityField:
    """Face-centred gradient; zero on boundary normal faces (homogeneous Neumann)."""
    g = s.grid
    v = s.values
    gy = np.zeros(g.shape_uy)
    gy[:, 1:-1] = (v[:, 1:] - v[:, :-1]) / g.hy
    if g.periodic_x:
        gx = (v - np.roll(v, 1, axis=0)) / g.hx
    else:
        gx = np.zeros(g.shape_ux)
        gx[1:-1, :] = (v[1:, :] - v[:-1, :]) / g.hx
    return VelocityField(g, gx, gy)


def neg_laplacian(s: ScalarField) -> ScalarField:
    """Minus the five-point Neumann Laplacian, assembled as -div(grad)."""
    d = divergence(gradient_to_faces(s))
    d.values *= -1.0
    return d


@lru_cache(maxsize=32)
def node_weights(grid: MacGrid) -> np.ndarray:
    """Quadrature weight per node: (adjacent cells)/4."""
    w = np.ones(grid.shape_nodes)
    w[:, 0] *= 0.5
    w[:, -1] *= 0.5
    if not grid.periodic_x:
        w[0, :] *= 0.5
        w[-1, :] *= 0.5
    return w


def _pad_reflect_y(a: np.ndarray) -> np.ndarray:
    """Ghost rows beyond the y walls with reflected sign (no-slip tangential)."""
    out = np.empty((a.shape[0], a.shape[1] + 2))
    out[:, 1:-1] = a
    out[:, 0] = -a[:, 0]
    out[:, -1] = -a[:, -1]
    return out


def _pad_reflect_x(a: np.ndarray) -> np.ndarray:
    out = np.empty((a.shape[0] + 2, a.shape[1]))
    out[1:-1, :] = a
    out[0, :] = -a[0, :]
    out[-1, :] = -a[-1, :]
    return out


def strain_raw(g: MacGrid, ux: np.ndarray, uy: np.ndarray):
    if g.periodic_x:
        dxx = (np.roll(ux, -1, axis=0) - ux) / g.hx
    else:
        dxx = (ux[1:, :] - ux[:-1, :]) / g.hx
    dyy = (uy[:, 1:] - uy[:, :-1]) / g.hy

    uxp = _pad_reflect_y(ux)
    dudy = (uxp[:, 1:] - uxp[:, :-1]) / g.hy
    if g.periodic_x:
        dvdx = (uy - np.roll(uy, 1, axis=0)) / g.hx
    else:
        uyp = _pad_reflect_x(uy)
        dvdx = (uyp[1:, :] - uyp[:-1, :]) / g.hx
    dxy = 0.5 * (dudy + dvdx)
    return dxx, dyy, dxy


def strain_components(u: VelocityField):
    """Raw strain entries: (dxx cells, dyy cells, dxy nodes)."""
    return strain_raw(u.grid, u.ux, u.uy)


def _nodes_to_cells(grid: MacGrid, a: np.ndarray) -> np.ndarray:
    """Average the four corner nodes of every cell."""
    if grid.periodic_x:
        b = a + np.roll(a, -1, axis=0)
    else:
        b = a[:-1, :] + a[1:, :]
    return 0.25 * (b[:, :-1] + b[:, 1:])


def strain_rate(u: VelocityField) -> TensorField:
    """Cell-centred symmetric strain rate; shear from node values averaged to cells."""
    dxx, dyy, dxy = strain_components(u)
    return TensorField(u.grid, SymTensor2(dxx, dyy, _nodes_to_cells(u.grid, dxy)))


def cell_mean_to_nodes(grid: MacGrid, c: np.ndarray) -> np.ndarray:
    """Mean of the (up to four) cells adjacent to every node."""
    if grid.periodic_x:
        cp = np.zeros((grid.nx, grid.ny + 2))
        cp[:, 1:-1] = c
        s = cp + np.roll(cp, 1, axis=0)
        raw = s[:, :-1] + s[:, 1:]
    else:
        cp = np.zeros((grid.nx + 2, grid.ny + 2))
        cp[1:-1, 1:-1] = c
        raw = (cp[:-1, :-1] + cp[1:, :-1] + cp[:-1, 1:] + cp[1:, 1:])
    return raw / (4.0 * node_weights(grid))


def harmonic_mu_nodes(mu: ScalarField) -> np.ndarray:
    """Harmonic mean of the adjacent cell viscosities at every node."""
    return 1.0 / cell_mean_to_nodes(mu.grid, 1.0 / mu.values)


def _edge_factors(n: int):
    """Ghost-reflection doubles the sensitivity of wall-node shear to the first face."""
    lo = np.ones(n)
    lo[0] = 2.0
    hi = np.ones(n)
    hi[-1] = 2.0
    return lo, hi


def strain_transpose(grid: MacGrid, txx: np.ndarray, tyy: np.ndarray,
                     txy_nodes: np.ndarray) -> VelocityField:
    """Adjoint of the strain map under the cell/node quadrature.

    Satisfies, for every no-slip velocity v,
    ``<strain_transpose(T), v>_faces = sum_c (Txx Dxx + Tyy Dyy) h^2
    + sum_n w_n 2 Txy Dxy h^2``.  Boundary normal faces of the result
    are zero.
    """
    hx, hy = grid.hx, grid.hy
    a = node_weights(grid) * txy_nodes

    cb, ct = _edge_factors(grid.ny)
    rx = np.zeros(grid.shape_ux)
    node_x = (a[:, :-1] * cb[None, :] - a[:, 1:] * ct[None, :]) / hy
    if grid.periodic_x:
        rx[:, :] = (np.roll(txx, 1, axis=0) - txx) / hx + node_x
    else:
        rx[1:-1, :] = (txx[:-1, :] - txx[1:, :]) / hx + node_x[1:-1, :]

    ry = np.zeros(grid.shape_uy)
    if grid.periodic_x:
        node_y = (a - np.roll(a, -1, axis=0)) / hx
    else:
        cl, cr = _edge_factors(grid.nx)
        node_y = (a[:-1, :] * cl[:, None] - a[1:, :] * cr[:, None]) / hx
    ry[:, 1:-1] = (tyy[:, :-1] - tyy[:, 1:]) / hy + node_y[:, 1:-1]
    return VelocityField(grid, rx, ry)


def diffusion_apply(u: VelocityField, mu: ScalarField) -> VelocityField:
    """Apply minus the viscous operator: -div(2 mu D u), positive semidefinite."""
    dxx, dyy, dxy = strain_components(u)
    mun = harmonic_mu_nodes(mu)
    return strain_transpose(u.grid, 2.0 * mu.values * dxx, 2.0 * mu.values * dyy,
                            2.0 * mun * dxy)


def diffusion_quadratic_form(u: VelocityField, mu: ScalarField) -> float:
    """<2 mu D u, D u> under the cell/node quadrature (twice the viscous dissipation rate)."""
    g = u.grid
    dxx, dyy, dxy = strain_components(u)
    mun = harmonic_mu_nodes(mu)
    cells = np.sum(2.0 * mu.values * (dxx ** 2 + dyy ** 2))
    nodes = np.sum(node_weights(g) * 4.0 * mun * dxy ** 2)
    return float((cells + nodes) * g.cell_area)


def tensor_divergence(alpha: ScalarField, sigma: TensorField) -> VelocityField:
    """Face field div(alpha Sigma), the exact negative adjoint of strain_rate.

    For random cell tensors T and no-slip v:
    ``<tensor_divergence(alpha, T), v> = -<alpha T, strain_rate(v)>``
    with the full-contraction cell inner product.
    """
    g = sigma.grid
    av = alpha.values
    txyn = cell_mean_to_nodes(g, av * sigma.t.xy)
    r = strain_transpose(g, av * sigma.t.xx, av * sigma.t.yy, txyn)
    r.ux *= -1.0
    r.uy *= -1.0
    return r


def face_average(s: ScalarField):
    """Arithmetic mean of a cell scalar at faces (boundary faces copy the adjacent cell)."""
    g = s.grid
    v = s.values
    if g.periodic_x:
        fx = 0.5 * (v + np.roll(v, 1, axis=0))
    else:
        fx = np.empty(g.shape_ux)
        fx[1:-1, :] = 0.5 * (v[:-1, :] + v[1:, :])
        fx[0, :] = v[0, :]
        fx[-1, :] = v[-1, :]
    fy = np.empty(g.shape_uy)
    fy[:, 1:-1] = 0.5 * (v[:, :-1] + v[:, 1:])
    fy[:, 0] = v[:, 0]
    fy[:, -1] = v[:, -1]
    return fx, fy


def _pad_zero_y(a: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0], a.shape[1] + 2))
    out[:, 1:-1] = a
    return out


def _pad_zero_x(a: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + 2, a.shape[1]))
    out[1:-1, :] = a
    return out


class AdvectionCoefficients:
    """Interpolated mass fluxes of a convecting field, fixed within a time step.

    ``fx_c``/``fy_n`` feed the x-component stencil (flux through cell
    centres / nodes); ``fx_n``/``fy_c`` feed the y-component stencil.
    ``div_x``/``div_y`` hold the flux divergence seen by each component.
    """

    def __init__(self, rho_conv: ScalarField, u_conv: VelocityField):
        g = rho_conv.grid
        hx, hy = g.hx, g.hy
        rho = rho_conv.values
        rfx, rfy = face_average(rho_conv)
        mx = rfx * u_conv.ux
        my = rfy * u_conv.uy

        if g.periodic_x:
            self.fx_c = rho * 0.5 * (u_conv.ux + np.roll(u_conv.ux, -1, axis=0))
            self.fy_n = 0.5 * (my + np.roll(my, 1, axis=0))         # nodes (nx, ny+1)
            self.div_x = (self.fx_c - np.roll(self.fx_c, 1, axis=0)) / hx \
                + (self.fy_n[:, 1:] - self.fy_n[:, :-1]) / hy
        else:
            self.fx_c = rho * 0.5 * (u_conv.ux[:-1, :] + u_conv.ux[1:, :])
            myp = _pad_zero_x(my)
            self.fy_n = 0.5 * (myp[:-1, :] + myp[1:, :])            # nodes (nx+1, ny+1)
            fx_p = _pad_zero_x(self.fx_c)
            self.div_x = (fx_p[1:, :] - fx_p[:-1, :]) / hx \
                + (self.fy_n[:, 1:] - self.fy_n[:, :-1]) / hy

        self.fy_c = rho * 0.5 * (u_conv.uy[:, :-1] + u_conv.uy[:, 1:])
        mxp = _pad_zero_y(mx)
        self.fx_n = 0.5 * (mxp[:, :-1] + mxp[:, 1:])
        fy_p = _pad_zero_y(self.fy_c)
        if g.periodic_x:
            self.div_y = (np.roll(self.fx_n, -1, axis=0) - self.fx_n) / hx \
                + (fy_p[:, 1:] - fy_p[:, :-1]) / hy
        else:
            self.div_y = (self.fx_n[1:, :] - self.fx_n[:-1, :]) / hx \
                + (fy_p[:, 1:] - fy_p[:, :-1]) / hy


def apply_advection(grid: MacGrid, co: AdvectionCoefficients, vx: np.ndarray,
                    vy: np.ndarray):
    """Skew-form advection of raw face arrays by precomputed coefficients."""
    hx, hy = grid.hx, grid.hy

    if grid.periodic_x:
        uxc = 0.5 * (vx + np.roll(vx, -1, axis=0))
        uxp = _pad_zero_y(vx)
        uxn = 0.5 * (uxp[:, :-1] + uxp[:, 1:])
        gx_c = co.fx_c * uxc
        gy = co.fy_n * uxn
        adv_x = (gx_c - np.roll(gx_c, 1, axis=0)) / hx \
            + (gy[:, 1:] - gy[:, :-1]) / hy - 0.5 * vx * co.div_x
    else:
        uxc = 0.5 * (vx[:-1, :] + vx[1:, :])
        uxp = _pad_zero_y(vx)
        uxn = 0.5 * (uxp[:, :-1] + uxp[:, 1:])
        gx_p = _pad_zero_x(co.fx_c * uxc)
        gy = co.fy_n * uxn
        adv_x = (gx_p[1:, :] - gx_p[:-1, :]) / hx \
            + (gy[:, 1:] - gy[:, :-1]) / hy - 0.5 * vx * co.div_x
        adv_x[0, :] = 0.0
        adv_x[-1, :] = 0.0

    uyc = 0.5 * (vy[:, :-1] + vy[:, 1:])
    if grid.periodic_x:
        uyn = 0.5 * (vy + np.roll(vy, 1, axis=0))
        gx_n = co.fx_n * uyn
        adv_y = (np.roll(gx_n, -1, axis=0) - gx_n) / hx
    else:
        uyp = _pad_zero_x(vy)
        uyn = 0.5 * (uyp[:-1, :] + uyp[1:, :])
        gx_n = co.fx_n * uyn
        adv_y = (gx_n[1:, :] - gx_n[:-1, :]) / hx
    gy_p = _pad_zero_y(co.fy_c * uyc)
    adv_y = adv_y + (gy_p[:, 1:] - gy_p[:, :-1]) / hy - 0.5 * vy * co.div_y
    adv_y[:, 0] = 0.0
    adv_y[:, -1] = 0.0
    return adv_x, adv_y


def skew_advection(rho_conv: ScalarField, u_conv: VelocityField,
                   v: VelocityField) -> VelocityField:
    """Skew-symmetric advection of v by the mass flux rho_conv * u_conv.

    Discretised as flux divergence with centred interpolation minus half
    the advected component times the flux divergence, which makes the
    quadratic form vanish identically whenever the convecting field has
    zero normal boundary faces.  Output boundary normal faces are zero.
    """
    co = AdvectionCoefficients(rho_conv, u_conv)
    ax, ay = apply_advection(v.grid, co, v.ux, v.uy)
    return VelocityField(v.grid, ax, ay)
