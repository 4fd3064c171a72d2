"""Particle-spectral simulator for the kinetic Cucker-Smale model coupled with
non-stationary Stokes flow on a periodic box."""

from .alignment import AlignmentFields, alignment_force, compute_fields, compute_fields_celllist
from .config import ConfigError, KernelFamily, KernelSpec, Mode, SimConfig, WeightSpec, parse_config
from .coupling import coupling_force, deposit, interpolate
from .diagnostics import (
    DiagnosticsRecord,
    energy_budget,
    flocking_metrics,
    moment_growth_monitor,
    support_bound_check,
    weighted_norm_surrogate,
)
from .picard import coupled_step, run
from .state import FluidState, ParticleEnsemble, init_ensemble, init_fluid, wrap
from .stokes import leray_project, spacetime_norm_report, stokes_step, viscous_dissipation
from .transport import rhs, step_rk2, support_radius

__version__ = "0.1.0"
