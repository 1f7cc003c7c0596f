"""Incompressible Bingham-flow solver with variable density, viscosity and yield stress.

A fractional-step scheme on a staggered grid: implicit upwind density
transport with the solenoidal velocity, a coupled momentum /
plastic-tensor prediction solved by a relaxed-projection fixed point,
and an incremental pressure correction through a single constant
coefficient Poisson solve per step.
"""

from .config import RunConfig, parse_config
from .diagnostics import (ConvergenceStudy, LedgerEntry, PlugMask, energy_ledger,
                          plug_mask, poiseuille_reference,
                          temporal_convergence_study)
from .errors import (Breakdown, FixedPointStall, HypothesisViolation,
                     IncompatibleRhs, InvalidInitialDensity,
                     MaxPrincipleViolation, NonConvergence, ParseError,
                     ValidationError)
from .grid import MacGrid, ScalarField, TensorField, VelocityField
from .integrator import RunParams, SimState, StepReport, initialize, run, step
from .momentum import (FixedPointReport, SchemeParams, apply_momentum_operator,
                       assemble_momentum_rhs, fixed_point_solve)
from .operators import (divergence, gradient_to_faces, skew_advection,
                        strain_rate, tensor_divergence)
from .pressure import accumulate_pressure, correct_velocity, pressure_increment
from .scenarios import Scenario, build_scenario
from .solvers import SolveStats, SolverConfig, bicgstab_solve, cg_solve
from .tensor_core import (LambdaTensor, SymTensor2, deviatoric, project_lambda,
                          relaxed_projection_target, second_invariant)
from .transport import FluidParams, advect_density, eval_coefficients

__version__ = "0.1.0"
