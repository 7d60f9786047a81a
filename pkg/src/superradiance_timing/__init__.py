"""Timing of coherence, correlation and entanglement in cavity superradiance."""

from .backends import simulate
from .liouvillian import ConfigError, ModelParams, build_generator
from .propagator import TimeGrid, evolve, initial_state
from .timing import find_extremum, find_gw, fit_alpha, gap_sweep

__all__ = [
    "ConfigError",
    "ModelParams",
    "TimeGrid",
    "build_generator",
    "evolve",
    "find_extremum",
    "find_gw",
    "fit_alpha",
    "gap_sweep",
    "initial_state",
    "simulate",
]
__version__ = "0.1.0"
