from __future__ import annotations

from typing import List, Tuple

import numpy as np
import pytest

from apflow.benchmarks import gresho_init, spp_init
from apflow.grid import Grid, make_grid
from apflow.scheme import FluidParams, SchemeParams, State, StepOutcome, advance


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def grid_1d() -> Grid:
    return make_grid(1, [16], [0.0], [1.0])


@pytest.fixture
def grid_2d() -> Grid:
    return make_grid(2, [8, 8], [0.0, 0.0], [1.0, 1.0])


@pytest.fixture
def spp_fluid() -> FluidParams:
    return FluidParams(kappa=1.0, gamma=2.0, epsilon=0.5, rho0=1.0)


@pytest.fixture
def gresho_fluid() -> FluidParams:
    return FluidParams(kappa=1.0, gamma=1.4, epsilon=0.1, rho0=1.0)


def trajectory(state: State, params: SchemeParams, fluid: FluidParams, steps: int) -> List[Tuple[State, StepOutcome]]:
    pairs = []
    for index in range(steps):
        outcome = advance(state, params, fluid, state.grid, index + 1)
        pairs.append((state, outcome))
        state = outcome.state
    return pairs


@pytest.fixture
def spp_steps(grid_1d: Grid, spp_fluid: FluidParams) -> List[Tuple[State, StepOutcome]]:
    """Five steps of the smooth periodic problem, ε = 0.5, N = 16."""
    return trajectory(spp_init(grid_1d, 0.5), SchemeParams(cfl=0.8, t_end=1.0), spp_fluid, 5)


@pytest.fixture
def gresho_steps(grid_2d: Grid, gresho_fluid: FluidParams) -> List[Tuple[State, StepOutcome]]:
    """Three adaptive-λ steps of the Gresho vortex on an 8 x 8 grid."""
    params = SchemeParams(cfl=0.5, t_end=1.0, lambda_mode="adaptive", c=100.0)
    return trajectory(gresho_init(grid_2d, 0.1), params, gresho_fluid, 3)
