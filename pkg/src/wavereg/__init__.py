"""Pseudo-spectral shallow-water solvers with a bounded nonlinear regularization."""

from .errors import (BlowUpError, ConfigError, ConvergenceError, DegenerateIterateError,
                     InvariantError, InvertibilityError, WaveregError)
from .spectral import Grid, MultiplierSymbol, Parity, apply_multiplier, inner_product, make_grid
from .systems import PhysParams, State, SystemKind, gaussian_ic, linear_propagator, nonlinear_tendency
from .timestepper import StepConfig, evolve, ifrk4_step, strang_step
from .diagnostics import EnergyReport, ReportRecorder, energy_norm, hamiltonian, report
from .solitary import SolitaryWave, SweepRow, petviashvili_solve, residual, sweep

__version__ = "0.1.0"

__all__ = [
    "BlowUpError", "ConfigError", "ConvergenceError", "DegenerateIterateError", "InvariantError",
    "InvertibilityError", "WaveregError", "Grid", "MultiplierSymbol", "Parity", "apply_multiplier",
    "inner_product", "make_grid", "PhysParams", "State", "SystemKind", "gaussian_ic",
    "linear_propagator", "nonlinear_tendency", "StepConfig", "evolve", "ifrk4_step", "strang_step",
    "EnergyReport", "ReportRecorder", "energy_norm", "hamiltonian", "report", "SolitaryWave", "SweepRow",
    "petviashvili_solve", "residual", "sweep",
]
