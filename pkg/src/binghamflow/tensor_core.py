"""Symmetric 2x2 tensor algebra and the projection onto the unit-ball constraint set.

Components may be floats or numpy arrays of a common shape, so a whole
cell-centred tensor field is processed with one call.  The tensor
magnitude used throughout is ``|t| = sqrt(tr(t^T t) / 2)``, which for a
symmetric 2x2 tensor reduces to ``sqrt((xx^2 + yy^2)/2 + xy^2)``.

The constraint set holds symmetric, trace-free tensors of magnitude at
most one.  Its projection first removes the trace, then rescales
anything outside the unit ball back onto it; rescaling alone would not
keep the trace-free invariant exactly in floating point when the input
carries a small spherical part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SymTensor2",
    "LambdaTensor",
    "second_invariant",
    "deviatoric",
    "project_lambda",
    "relaxed_projection_target",
]

TRACE_TOL = 1e-14
MAGNITUDE_TOL = 1e-12


@dataclass
class SymTensor2:
    """Symmetric 2x2 tensor; the off-diagonal entry is stored once."""

    xx: float | np.ndarray
    yy: float | np.ndarray
    xy: float | np.ndarray

    def trace(self):
        return self.xx + self.yy

    def copy(self) -> "SymTensor2":
        return SymTensor2(np.copy(self.xx), np.copy(self.yy), np.copy(self.xy))

    def __add__(self, other: "SymTensor2") -> "SymTensor2":
        return SymTensor2(self.xx + other.xx, self.yy + other.yy, self.xy + other.xy)

    def __sub__(self, other: "SymTensor2") -> "SymTensor2":
        return SymTensor2(self.xx - other.xx, self.yy - other.yy, self.xy - other.xy)

    def __mul__(self, c) -> "SymTensor2":
        return SymTensor2(c * self.xx, c * self.yy, c * self.xy)

    __rmul__ = __mul__

    @staticmethod
    def zeros_like(shape=()) -> "SymTensor2":
        return SymTensor2(np.zeros(shape), np.zeros(shape), np.zeros(shape))


@dataclass
class LambdaTensor:
    """A tensor certified to lie in the constraint set (trace-free, magnitude <= 1)."""

    inner: SymTensor2

    def __post_init__(self):
        tr = np.max(np.abs(np.asarray(self.inner.trace())))
        if tr > TRACE_TOL:
            raise ValueError(f"trace {tr:.3e} exceeds {TRACE_TOL:.0e}")
        mag = np.max(np.asarray(second_invariant(self.inner)))
        if mag > 1.0 + MAGNITUDE_TOL:
            raise ValueError(f"magnitude {mag!r} exceeds 1 + {MAGNITUDE_TOL:.0e}")


def second_invariant(t: SymTensor2):
    """Tensor magnitude sqrt((xx^2 + yy^2)/2 + xy^2); non-negative."""
    return np.sqrt(0.5 * (t.xx ** 2 + t.yy ** 2) + t.xy ** 2)


def deviatoric(t: SymTensor2) -> SymTensor2:
    """Remove the spherical part: t - (tr t / 2) I."""
    m = 0.5 * (t.xx + t.yy)
    return SymTensor2(t.xx - m, t.yy - m, np.copy(t.xy) if isinstance(t.xy, np.ndarray) else t.xy)


def project_lambda(t: SymTensor2) -> LambdaTensor:
    """Project onto the constraint set: deviatoric part, rescaled onto the unit ball if outside."""
    d = deviatoric(t)
    mag = second_invariant(d)
    scale = 1.0 / np.maximum(mag, 1.0)
    return LambdaTensor(SymTensor2(d.xx * scale, d.yy * scale, d.xy * scale))


def relaxed_projection_target(sigma_prev_iter: LambdaTensor,
                              sigma_time_prev: LambdaTensor,
                              du: SymTensor2,
                              r: float,
                              alpha_local,
                              theta: float) -> SymTensor2:
    """Argument fed to the projection in the relaxed plastic-tensor update.

    Combines the previous iterate, the strain-rate pull ``r * alpha * du``
    with the cell-local yield stress, and the pseudo-time relaxation
    ``theta * (previous time level - previous iterate)``.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    if r <= 0.0:
        raise ValueError(f"r must be positive, got {r}")
    if np.any(np.asarray(alpha_local) < 0.0):
        raise ValueError("alpha_local must be non-negative")
    s_it = sigma_prev_iter.inner
    s_tm = sigma_time_prev.inner
    ra = r * np.asarray(alpha_local)
    return SymTensor2(
        s_it.xx + ra * du.xx + theta * (s_tm.xx - s_it.xx),
        s_it.yy + ra * du.yy + theta * (s_tm.yy - s_it.yy),
        s_it.xy + ra * du.xy + theta * (s_tm.xy - s_it.xy),
    )
