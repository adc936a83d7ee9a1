"""
Initial data and parameter presets for the standard test problems.

Initial values are evaluated at cell centers. Every problem is periodic.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .errors import UnknownProblem, WrongDimension
from .grid import Grid
from .scheme import LambdaMode, State

logger = logging.getLogger(__name__)

GRESHO_RADIUS = 0.4
GRESHO_BACKGROUND = 0.1
VORTEX_BACKGROUND_RHO = 110.0
VORTEX_BACKGROUND_U = 0.6
VORTEX_STRENGTH = 1.5


def _require_dim(grid: Grid, dim: int, problem: str):
    if grid.dim != dim:
        raise WrongDimension(f"{problem} is a {dim}D problem, got a {grid.dim}D grid")


def spp_init(grid: Grid, epsilon: float, gamma: float = 2.0) -> State:
    """Smooth periodic problem on [0,1]."""
    _require_dim(grid, 1, "spp")
    (x,) = grid.centers()
    wave = np.sin(2.0 * np.pi * x)
    rho = 1.0 + epsilon ** 2 * wave
    u = 1.0 + epsilon * wave
    return State.from_primitive(grid, 0.0, rho, [u])


def caw_init(grid: Grid, epsilon: float, gamma: float = 1.4) -> State:
    """Colliding acoustic waves on [−1,1]; sign(0) is 0."""
    _require_dim(grid, 1, "caw")
    (x,) = grid.centers()
    bump = 1.0 - np.cos(2.0 * np.pi * x)
    rho = 0.955 + 0.5 * epsilon * bump
    u = -np.sign(x) * math.sqrt(gamma) * bump
    return State.from_primitive(grid, 0.0, rho, [u])


def riemann_init(grid: Grid, epsilon: float, gamma: float = 2.0) -> State:
    """Four-state periodic Riemann data on [0,1] with breakpoints 0.2, 0.3, 0.7, 0.8."""
    _require_dim(grid, 1, "riemann")
    (x,) = grid.centers()
    e2 = epsilon ** 2
    rho = np.ones_like(x)
    momentum = np.full_like(x, 1.0 - e2 / 2.0)

    second = (x > 0.2) & (x <= 0.3)
    third = (x > 0.3) & (x <= 0.7)
    fourth = (x > 0.7) & (x <= 0.8)
    rho[second] = 1.0 + e2
    momentum[second] = 1.0
    momentum[third] = 1.0 + e2 / 2.0
    rho[fourth] = 1.0 - e2
    momentum[fourth] = 1.0
    return State.from_primitive(grid, 0.0, rho, [momentum / rho])


def gresho_angular_velocity(r: np.ndarray, radius: float = GRESHO_RADIUS) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return np.where(
        r < radius / 2.0,
        2.0 * r / radius,
        np.where(r < radius, 2.0 * (1.0 - r / radius), 0.0),
    )


def gresho_pressure_deviation(r: np.ndarray, radius: float = GRESHO_RADIUS) -> np.ndarray:
    """Second-order pressure p₂(r) balancing the centrifugal force."""
    r = np.asarray(r, dtype=float)
    q = r / radius
    inner = 2.0 * q ** 2 + 2.0 - math.log(16.0)
    with np.errstate(divide="ignore"):
        ring = 2.0 * q ** 2 - 8.0 * q + 4.0 * np.log(np.where(q > 0, q, 1.0)) + 6.0
    return np.where(r < radius / 2.0, inner, np.where(r < radius, ring, 0.0))


def gresho_init(grid: Grid, epsilon: float, gamma: float = 1.4) -> State:
    """Gresho vortex on [0,1]² carried by a uniform background flow."""
    _require_dim(grid, 2, "gresho")
    x, y = grid.centers()
    dx, dy = x - 0.5, y - 0.5
    r = np.hypot(dx, dy)
    u_theta = gresho_angular_velocity(r)
    safe_r = np.where(r > 0, r, 1.0)
    u1 = GRESHO_BACKGROUND - np.where(r > 0, dy / safe_r * u_theta, 0.0)
    u2 = np.where(r > 0, dx / safe_r * u_theta, 0.0)
    rho = 1.0 + epsilon ** 2 * gresho_pressure_deviation(r) / gamma
    return State.from_primitive(grid, 0.0, rho, [u1, u2])


def vortex_profile(q: np.ndarray) -> np.ndarray:
    """k(q) = 2cos q + 2q sin q + cos(2q)/8 + q sin(2q)/4 + 3q²/4."""
    q = np.asarray(q, dtype=float)
    return (
        2.0 * np.cos(q)
        + 2.0 * q * np.sin(q)
        + np.cos(2.0 * q) / 8.0
        + q * np.sin(2.0 * q) / 4.0
        + 0.75 * q ** 2
    )


def vortex_init(grid: Grid, epsilon: float, gamma: float = 1.4) -> State:
    """Travelling vortex on [0,1]², one period at t = 1/0.6."""
    _require_dim(grid, 2, "vortex")
    x, y = grid.centers()
    r = 4.0 * np.pi * np.hypot(x - 0.5, y - 0.5)
    support = (r < np.pi).astype(float)
    rho = VORTEX_BACKGROUND_RHO + epsilon ** 2 * (VORTEX_STRENGTH / (4.0 * np.pi)) ** 2 * support * (
        vortex_profile(r) - vortex_profile(np.pi)
    )
    swirl = VORTEX_STRENGTH * (1.0 + np.cos(r)) * support
    u1 = VORTEX_BACKGROUND_U + swirl * (0.5 - y)
    u2 = swirl * (x - 0.5)
    return State.from_primitive(grid, 0.0, rho, [u1, u2])


@dataclass(frozen=True)
class ProblemPreset:
    name: str
    dim: int
    origin: Tuple[float, ...]
    length: Tuple[float, ...]
    kappa: float
    gamma: float
    rho0: Optional[float]  # None: mean of the initial density
    epsilons: Tuple[float, ...]
    cfl: Dict[float, float]
    lambda_mode: LambdaMode
    lambda0: float
    c: Dict[float, float] = field(default_factory=dict)
    default_n: int = 50
    background: Tuple[float, ...] = ()
    initializer: Callable[..., State] = spp_init

    def cfl_for(self, epsilon: float) -> float:
        return _lookup(self.cfl, epsilon)

    def c_for(self, epsilon: float) -> float:
        return _lookup(self.c, epsilon) if self.c else 1.0

    def t_end_for(self, epsilon: float) -> float:
        return convergence_time(self.name, epsilon)

    def initial_state(self, grid: Grid, epsilon: float, gamma: Optional[float] = None) -> State:
        return self.initializer(grid, epsilon, self.gamma if gamma is None else gamma)


def _lookup(table: Dict[float, float], epsilon: float) -> float:
    """Entry for the listed ε closest to ``epsilon`` on a log scale."""
    nearest = min(table, key=lambda e: abs(math.log(e) - math.log(epsilon)))
    return table[nearest]


PRESETS: Dict[str, ProblemPreset] = {
    "spp": ProblemPreset(
        name="spp", dim=1, origin=(0.0,), length=(1.0,), kappa=1.0, gamma=2.0, rho0=1.0,
        epsilons=(0.5, 0.1, 0.01), cfl={0.5: 0.8, 0.1: 0.8, 0.01: 0.1},
        lambda_mode=LambdaMode.CONSTANT, lambda0=1.0, default_n=50, initializer=spp_init,
    ),
    "caw": ProblemPreset(
        name="caw", dim=1, origin=(-1.0,), length=(2.0,), kappa=1.0, gamma=1.4, rho0=None,
        epsilons=(0.1,), cfl={0.1: 0.9},
        lambda_mode=LambdaMode.CONSTANT, lambda0=1.0, default_n=100, initializer=caw_init,
    ),
    "riemann": ProblemPreset(
        name="riemann", dim=1, origin=(0.0,), length=(1.0,), kappa=1.0, gamma=2.0, rho0=1.0,
        epsilons=(0.8, 0.3, 0.05), cfl={0.8: 0.1, 0.3: 0.5, 0.05: 0.5},
        lambda_mode=LambdaMode.CONSTANT, lambda0=1.0, default_n=1000, initializer=riemann_init,
    ),
    "gresho": ProblemPreset(
        name="gresho", dim=2, origin=(0.0, 0.0), length=(1.0, 1.0), kappa=1.0, gamma=1.4, rho0=1.0,
        epsilons=(0.1, 0.01, 0.001), cfl={0.1: 0.5, 0.01: 0.5, 0.001: 0.1},
        lambda_mode=LambdaMode.ADAPTIVE, lambda0=1.0, c={0.1: 100.0, 0.01: 200.0, 0.001: 200.0},
        default_n=50, background=(GRESHO_BACKGROUND, 0.0), initializer=gresho_init,
    ),
    "gresho-contour": ProblemPreset(
        name="gresho-contour", dim=2, origin=(0.0, 0.0), length=(1.0, 1.0), kappa=1.0, gamma=1.4, rho0=1.0,
        epsilons=(0.1, 0.01, 0.001), cfl={0.1: 0.5, 0.01: 0.5, 0.001: 0.1},
        lambda_mode=LambdaMode.ADAPTIVE, lambda0=1.0, c={0.1: 30.0, 0.01: 200.0, 0.001: 200.0},
        default_n=100, background=(GRESHO_BACKGROUND, 0.0), initializer=gresho_init,
    ),
    "vortex": ProblemPreset(
        name="vortex", dim=2, origin=(0.0, 0.0), length=(1.0, 1.0), kappa=1.0, gamma=1.4,
        rho0=VORTEX_BACKGROUND_RHO, epsilons=(0.1, 0.01), cfl={0.1: 0.5, 0.01: 0.5},
        lambda_mode=LambdaMode.ADAPTIVE, lambda0=1.0, c={0.1: 30.0, 0.01: 200.0},
        default_n=50, background=(VORTEX_BACKGROUND_U, 0.0), initializer=vortex_init,
    ),
}


def get_preset(name: str) -> ProblemPreset:
    try:
        return PRESETS[name.strip().lower()]
    except KeyError:
        raise UnknownProblem(f"unknown problem {name!r}; known problems: {', '.join(list_presets())}") from None


def list_presets() -> List[str]:
    return list(PRESETS)


def convergence_time(problem: str, epsilon: float) -> float:
    """End time used by convergence studies of each problem."""
    name = get_preset(problem).name
    if name == "spp":
        return 0.05 if epsilon <= 0.01 else 0.1
    if name == "caw":
        return 0.08
    if name == "riemann":
        return 0.05
    if name.startswith("gresho"):
        return GRESHO_RADIUS * math.pi
    return 1.0 / VORTEX_BACKGROUND_U
