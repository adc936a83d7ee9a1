"""
apflow

Structure-preserving finite volume solver for the barotropic Euler equations
at low Mach number: an IMEX scheme with spectral solves of its implicit
operators, energy and identity diagnostics, and the standard benchmark problems.
"""

from .benchmarks import ProblemPreset, get_preset, list_presets
from .config import RunConfig, parse_config
from .diagnostics import EnergyRecord, EocRow, energies
from .grid import FaceRef, Grid, cell_center, make_grid
from .operators import ScalarField, VectorField, div_h, grad_h, lap_compact, lap_wide
from .scheme import FluidParams, LambdaMode, SchemeParams, State, run, step

__all__ = [
    'Grid',
    'FaceRef',
    'make_grid',
    'cell_center',
    'ScalarField',
    'VectorField',
    'div_h',
    'grad_h',
    'lap_compact',
    'lap_wide',
    'FluidParams',
    'SchemeParams',
    'LambdaMode',
    'State',
    'step',
    'run',
    'EnergyRecord',
    'EocRow',
    'energies',
    'ProblemPreset',
    'get_preset',
    'list_presets',
    'RunConfig',
    'parse_config',
]
