"""Output writers: legacy ASCII VTK snapshots and CSV time series.

Snapshots use the structured-points legacy format with one value set per
cell; floats are printed with 17 significant digits so a re-read
reproduces them bit-exactly.  Field names and order are fixed:
``rho, p, sigma_mag, plug, velocity``.
"""

from __future__ import annotations

import os
from typing import Dict, List, Sequence

import numpy as np

from .diagnostics import plug_mask
from .errors import IoError
from .grid import ScalarField
from .integrator import SimState, StepReport

__all__ = ["write_snapshot", "read_snapshot", "write_timeseries",
           "CSV_HEADER", "report_row"]

CSV_HEADER = ("n,t,fp_iters,fp_ratio,div_residual,kinetic,pressure_term,"
              "sigma_term,dissipation_cum,total,rho_min,rho_max")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_scalar(lines: List[str], name: str, values: np.ndarray, kind: str = "double"):
    lines.append(f"SCALARS {name} {kind} 1")
    lines.append("LOOKUP_TABLE default")
    # x varies fastest, per structured-points point ordering
    for j in range(values.shape[1]):
        row = values[:, j]
        if kind == "int":
            lines.append(" ".join(str(int(v)) for v in row))
        else:
            lines.append(" ".join(_fmt(v) for v in row))


def write_snapshot(state: SimState, path: str, tol_plug: float = 1e-3) -> None:
    """Write one legacy VTK snapshot with the fixed cell-data layout."""
    g = state.grid
    mask = plug_mask(state.sigma, tol_plug=tol_plug)
    uc, vc = state.u.cell_centered()

    lines = [
        "# vtk DataFile Version 3.0",
        f"binghamflow snapshot t={_fmt(state.t)} n={state.n}",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {g.nx} {g.ny} 1",
        f"ORIGIN {_fmt(0.5 * g.hx)} {_fmt(0.5 * g.hy)} 0",
        f"SPACING {_fmt(g.hx)} {_fmt(g.hy)} 1",
        f"CELL_DATA {g.nx * g.ny}",
    ]
    _write_scalar(lines, "rho", state.rho.values)
    _write_scalar(lines, "p", state.p.values)
    _write_scalar(lines, "sigma_mag", state.sigma.magnitude())
    _write_scalar(lines, "plug", mask.plug.astype(int), kind="int")
    lines.append("VECTORS velocity double")
    for j in range(g.ny):
        lines.append(" ".join(f"{_fmt(uc[i, j])} {_fmt(vc[i, j])} 0"
                              for i in range(g.nx)))
    lines.append("")
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines))
    except OSError as exc:
        raise IoError(f"cannot write snapshot {path}: {exc}") from exc


def read_snapshot(path: str) -> Dict[str, np.ndarray]:
    """Re-read a snapshot written by ``write_snapshot`` (exact round trip)."""
    try:
        with open(path) as fh:
            lines = [ln.rstrip("\n") for ln in fh]
    except OSError as exc:
        raise IoError(f"cannot read snapshot {path}: {exc}") from exc

    dims = None
    for ln in lines:
        if ln.startswith("DIMENSIONS"):
            dims = tuple(int(tok) for tok in ln.split()[1:])
            break
    if dims is None:
        raise IoError(f"{path}: no DIMENSIONS header")
    nx, ny = dims[0], dims[1]

    out: Dict[str, np.ndarray] = {}
    k = 0
    while k < len(lines):
        ln = lines[k]
        if ln.startswith("SCALARS"):
            name = ln.split()[1]
            kind = ln.split()[2]
            k += 2  # skip LOOKUP_TABLE
            vals = np.empty((nx, ny))
            for j in range(ny):
                vals[:, j] = [float(tok) for tok in lines[k + j].split()]
            out[name] = vals.astype(int) if kind == "int" else vals
            k += ny
        elif ln.startswith("VECTORS"):
            name = ln.split()[1]
            k += 1
            vx = np.empty((nx, ny))
            vy = np.empty((nx, ny))
            for j in range(ny):
                toks = lines[k + j].split()
                vx[:, j] = [float(t) for t in toks[0::3]]
                vy[:, j] = [float(t) for t in toks[1::3]]
            out[name + "_x"] = vx
            out[name + "_y"] = vy
            k += ny
        else:
            k += 1
    return out


def report_row(report: StepReport) -> str:
    ratio = report.fixed_point.observed_ratio
    return ",".join([
        str(report.n),
        _fmt(report.t),
        str(report.fixed_point.iterations),
        _fmt(ratio) if ratio == ratio else "nan",
        _fmt(report.div_residual),
        _fmt(report.kinetic),
        _fmt(report.pressure_term),
        _fmt(report.sigma_term),
        _fmt(report.dissipation_cum),
        _fmt(report.total),
        _fmt(report.rho_min),
        _fmt(report.rho_max),
    ])


def write_timeseries(reports: Sequence[StepReport], path: str) -> None:
    """CSV ledger with one row per step (header only for an empty run)."""
    lines = [CSV_HEADER]
    lines.extend(report_row(r) for r in reports)
    lines.append("")
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines))
    except OSError as exc:
        raise IoError(f"cannot write time series {path}: {exc}") from exc
