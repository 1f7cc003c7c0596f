"""Uniform staggered grid on a rectangle and its discrete fields.

Array convention: index ``[i, j]`` with axis 0 along x and axis 1 along
y.  Scalars live at cell centres ``((i+1/2)hx, (j+1/2)hy)``, the x
velocity component at vertical faces ``(i*hx, (j+1/2)hy)``, the y
component at horizontal faces, and symmetric tensors at cell centres.

Walls are impermeable and no-slip; normal velocity components on
boundary faces are identically zero.  The x direction may optionally be
periodic (used by channel scenarios), in which case the x-face array
drops the duplicate wrap-around column and has shape ``(nx, ny)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor_core import SymTensor2, second_invariant

__all__ = ["MacGrid", "ScalarField", "VelocityField", "TensorField"]


@dataclass(frozen=True)
class MacGrid:
    nx: int
    ny: int
    lx: float
    ly: float
    periodic_x: bool = False

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"grid needs nx, ny >= 4, got {self.nx} x {self.ny}")
        if self.lx <= 0 or self.ly <= 0:
            raise ValueError("domain lengths must be positive")

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def shape_cells(self):
        return (self.nx, self.ny)

    @property
    def shape_ux(self):
        return (self.nx if self.periodic_x else self.nx + 1, self.ny)

    @property
    def shape_uy(self):
        return (self.nx, self.ny + 1)

    @property
    def shape_nodes(self):
        return (self.nx if self.periodic_x else self.nx + 1, self.ny + 1)

    def cell_x(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.hx

    def cell_y(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.hy

    def xface_x(self) -> np.ndarray:
        n = self.nx if self.periodic_x else self.nx + 1
        return np.arange(n) * self.hx

    def yface_y(self) -> np.ndarray:
        return np.arange(self.ny + 1) * self.hy


@dataclass
class ScalarField:
    """Cell-centred scalar (density, pressure, viscosity, yield stress, ...)."""

    grid: MacGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape_cells:
            raise ValueError(f"expected shape {self.grid.shape_cells}, got {self.values.shape}")

    @classmethod
    def zeros(cls, grid: MacGrid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape_cells))

    @classmethod
    def full(cls, grid: MacGrid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape_cells, float(value)))

    @classmethod
    def from_function(cls, grid: MacGrid, f) -> "ScalarField":
        x, y = np.meshgrid(grid.cell_x(), grid.cell_y(), indexing="ij")
        return cls(grid, np.asarray(f(x, y), dtype=float))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def mean(self) -> float:
        return float(self.values.mean())

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.cell_area)

    def inner(self, other: "ScalarField") -> float:
        return float(np.vdot(self.values, other.values) * self.grid.cell_area)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.values ** 2) * self.grid.cell_area))

    def linf(self) -> float:
        return float(np.max(np.abs(self.values)))

    def validate_finite(self):
        if not np.all(np.isfinite(self.values)):
            raise FloatingPointError("scalar field contains non-finite entries")


@dataclass
class VelocityField:
    """Face-centred velocity; normal components on walls are held at zero."""

    grid: MacGrid
    ux: np.ndarray
    uy: np.ndarray

    def __post_init__(self):
        self.ux = np.asarray(self.ux, dtype=float)
        self.uy = np.asarray(self.uy, dtype=float)
        if self.ux.shape != self.grid.shape_ux or self.uy.shape != self.grid.shape_uy:
            raise ValueError(
                f"expected shapes {self.grid.shape_ux} / {self.grid.shape_uy}, "
                f"got {self.ux.shape} / {self.uy.shape}")

    @classmethod
    def zeros(cls, grid: MacGrid) -> "VelocityField":
        return cls(grid, np.zeros(grid.shape_ux), np.zeros(grid.shape_uy))

    @classmethod
    def from_functions(cls, grid: MacGrid, fx, fy) -> "VelocityField":
        xf, yc = np.meshgrid(grid.xface_x(), grid.cell_y(), indexing="ij")
        xc, yf = np.meshgrid(grid.cell_x(), grid.yface_y(), indexing="ij")
        return cls(grid, np.asarray(fx(xf, yc), dtype=float), np.asarray(fy(xc, yf), dtype=float))

    def copy(self) -> "VelocityField":
        return VelocityField(self.grid, self.ux.copy(), self.uy.copy())

    def enforce_wall_normals(self) -> "VelocityField":
        """Zero the normal components on boundary faces, in place."""
        if not self.grid.periodic_x:
            self.ux[0, :] = 0.0
            self.ux[-1, :] = 0.0
        self.uy[:, 0] = 0.0
        self.uy[:, -1] = 0.0
        return self

    def inner(self, other: "VelocityField") -> float:
        return float((np.vdot(self.ux, other.ux) + np.vdot(self.uy, other.uy))
                     * self.grid.cell_area)

    def l2_norm(self) -> float:
        return float(np.sqrt((np.sum(self.ux ** 2) + np.sum(self.uy ** 2))
                             * self.grid.cell_area))

    def linf(self) -> float:
        m = 0.0
        if self.ux.size:
            m = max(m, float(np.max(np.abs(self.ux))))
        if self.uy.size:
            m = max(m, float(np.max(np.abs(self.uy))))
        return m

    def cell_centered(self):
        """Interpolate both components to cell centres; returns (uc, vc)."""
        if self.grid.periodic_x:
            uc = 0.5 * (self.ux + np.roll(self.ux, -1, axis=0))
        else:
            uc = 0.5 * (self.ux[:-1, :] + self.ux[1:, :])
        vc = 0.5 * (self.uy[:, :-1] + self.uy[:, 1:])
        return uc, vc


@dataclass
class TensorField:
    """Cell-centred symmetric tensor field."""

    grid: MacGrid
    t: SymTensor2

    def __post_init__(self):
        for comp in (self.t.xx, self.t.yy, self.t.xy):
            if np.asarray(comp).shape != self.grid.shape_cells:
                raise ValueError("tensor components must be cell-shaped arrays")

    @classmethod
    def zeros(cls, grid: MacGrid) -> "TensorField":
        return cls(grid, SymTensor2.zeros_like(grid.shape_cells))

    def copy(self) -> "TensorField":
        return TensorField(self.grid, self.t.copy())

    def magnitude(self) -> np.ndarray:
        return np.asarray(second_invariant(self.t))

    def l2_norm(self) -> float:
        """Field norm built on the pointwise tensor magnitude."""
        m2 = 0.5 * (self.t.xx ** 2 + self.t.yy ** 2) + self.t.xy ** 2
        return float(np.sqrt(np.sum(m2) * self.grid.cell_area))

    def inner_colon(self, other: "TensorField") -> float:
        """Full-contraction inner product (off-diagonal counted twice)."""
        s = (np.vdot(self.t.xx, other.t.xx) + np.vdot(self.t.yy, other.t.yy)
             + 2.0 * np.vdot(self.t.xy, other.t.xy))
        return float(s * self.grid.cell_area)
