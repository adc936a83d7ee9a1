"""
IMEX time stepper for the barotropic Euler equations at low Mach number.

Each step evolves the linearized system

    (ϱ' − ϱ)/Δt + div_h m' − λ h L_c ϱ' = 0
    (m' − m)/Δt + div_h(ϱ u ⊗ u) + p'(ϱ₀)/ε² grad_h ϱ' − λ h L_c m' = 0

with the convective flux explicit and everything else implicit. Substituting
the momentum update into the mass equation leaves one circulant solve for ϱ'
and two Helmholtz solves for the momentum, all done spectrally.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    InvalidParameters,
    NonPositiveDensity,
    PositivityLost,
    SchemeError,
    StepLimitExceeded,
)
from .grid import Grid
from .operators import (
    ScalarField,
    VectorField,
    avg_along,
    central_difference,
    div_array,
    grad_array,
    jump_along,
    lap_compact_array,
    shift,
)
from .settings import LOGGING_CONFIG, SOLVER_DEFAULTS, TOLERANCES
from .spectral import build_symbols, solve_helmholtz, solve_mass_operator

logger = logging.getLogger(__name__)


# Pressure law p(ϱ) = κϱ^γ

def _require_positive(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise NonPositiveDensity(f"density must be positive, min is {float(np.min(rho))!r}")
    return rho


def pressure(rho, fluid: "FluidParams"):
    rho = _require_positive(rho)
    return fluid.kappa * rho ** fluid.gamma


def pressure_potential(rho, fluid: "FluidParams"):
    """P(ϱ) = κϱ^γ/(γ − 1), so that ϱP' − P = p."""
    rho = _require_positive(rho)
    return fluid.kappa * rho ** fluid.gamma / (fluid.gamma - 1.0)


def pressure_derivative(rho, fluid: "FluidParams"):
    rho = _require_positive(rho)
    return fluid.kappa * fluid.gamma * rho ** (fluid.gamma - 1.0)


def pressure_potential_derivative(rho, fluid: "FluidParams"):
    rho = _require_positive(rho)
    return fluid.kappa * fluid.gamma * rho ** (fluid.gamma - 1.0) / (fluid.gamma - 1.0)


def pressure_potential_second(rho, fluid: "FluidParams"):
    rho = _require_positive(rho)
    return fluid.kappa * fluid.gamma * rho ** (fluid.gamma - 2.0)


@dataclass(frozen=True)
class FluidParams:
    kappa: float
    gamma: float
    epsilon: float
    rho0: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise InvalidParameters(f"kappa must be positive, got {self.kappa!r}")
        if not self.gamma > 1:
            raise InvalidParameters(f"gamma must exceed 1, got {self.gamma!r}")
        if not self.epsilon > 0:
            raise InvalidParameters(f"epsilon must be positive, got {self.epsilon!r}")
        if not self.rho0 > 0:
            raise InvalidParameters(f"rho0 must be positive, got {self.rho0!r}")

    def reference_slope(self) -> float:
        """p'(ϱ₀)."""
        return float(pressure_derivative(self.rho0, self))


@dataclass(frozen=True)
class State:
    t: float
    rho: ScalarField
    m: VectorField

    def __post_init__(self):
        if self.rho.grid != self.m.grid:
            raise SchemeError("density and momentum live on different grids")
        _require_positive(self.rho.values)

    @property
    def grid(self) -> Grid:
        return self.rho.grid

    def velocity(self) -> VectorField:
        return VectorField(self.grid, self.m.components / self.rho.values)

    def total_mass(self) -> float:
        return self.rho.integral()

    @classmethod
    def from_primitive(cls, grid: Grid, t: float, rho: np.ndarray, u: Sequence[np.ndarray]) -> "State":
        rho = np.asarray(rho, dtype=float)
        momentum = np.stack([rho * np.asarray(c, dtype=float) for c in u])
        return cls(t=float(t), rho=ScalarField(grid, rho), m=VectorField(grid, momentum))


class LambdaMode(str, Enum):
    CONSTANT = "constant"
    ADAPTIVE = "adaptive"
    BOUNDS = "bounds"


@dataclass(frozen=True)
class SchemeParams:
    cfl: float
    t_end: float
    lambda_mode: LambdaMode = LambdaMode.CONSTANT
    lambda0: float = 1.0
    c: float = 1.0
    max_steps: int = SOLVER_DEFAULTS["max_steps"]
    jump_floor: float = SOLVER_DEFAULTS["jump_floor"]

    def __post_init__(self):
        object.__setattr__(self, "lambda_mode", LambdaMode(self.lambda_mode))
        if not self.cfl > 0:
            raise InvalidParameters(f"CFL number must be positive, got {self.cfl!r}")
        if not self.lambda0 >= 0:
            raise InvalidParameters(f"lambda0 must be non-negative, got {self.lambda0!r}")
        if not self.c > 0:
            raise InvalidParameters(f"adaptive factor c must be positive, got {self.c!r}")
        if self.max_steps < 1:
            raise InvalidParameters(f"max_steps must be at least 1, got {self.max_steps!r}")


def compute_dt(state: State, params: SchemeParams, grid: Grid) -> float:
    """Δt = C h / max|u|, C h for a fluid at rest, clamped to land on t_end."""
    u_max = float(np.max(state.velocity().norm()))
    dt = params.cfl * grid.h / u_max if u_max > 0 else params.cfl * grid.h
    remaining = params.t_end - state.t
    return min(dt, remaining)


# λ selection

def _velocity_faces(u: np.ndarray, axis: int) -> Tuple[np.ndarray, np.ndarray]:
    """[u] per component and |[u]|² at the + faces along ``axis``."""
    du = np.stack([jump_along(c, axis) for c in u])
    return du, np.sum(du ** 2, axis=0)


def bregman_curvature(rho_from, rho_to, fluid: FluidParams) -> np.ndarray:
    """
    P''(ϱ*) from the mean value form P(to) − P(from) − P'(from)(to − from) = P''(ϱ*)(to − from)²/2.

    Small relative jumps use the binomial series of the power law, where the
    direct quotient loses every digit to cancellation.
    """
    rho_from = _require_positive(rho_from)
    rho_to = _require_positive(rho_to)
    g = fluid.gamma
    d_rho = rho_to - rho_from
    x = d_rho / rho_from
    series = 1.0 + (g - 2.0) * x / 3.0 * (1.0 + (g - 3.0) * x / 4.0 * (1.0 + (g - 4.0) * x / 5.0))
    small = np.abs(x) < SOLVER_DEFAULTS["curvature_series_cutoff"]
    safe = np.where(small, 1.0, d_rho)
    direct = 2.0 * (
        pressure_potential(rho_to, fluid)
        - pressure_potential(rho_from, fluid)
        - pressure_potential_derivative(rho_from, fluid) * safe
    ) / safe ** 2
    return np.where(small, pressure_potential_second(rho_from, fluid) * series, direct)


def potential_slope_jump(rho_from, rho_to, fluid: FluidParams) -> np.ndarray:
    """P'(to) − P'(from), free of cancellation for nearby densities."""
    rho_from = _require_positive(rho_from)
    rho_to = _require_positive(rho_to)
    ratio_log = np.log1p((rho_to - rho_from) / rho_from)
    return pressure_potential_derivative(rho_from, fluid) * np.expm1((fluid.gamma - 1.0) * ratio_log)


def internal_energy_requirement(
    rho: np.ndarray, u: np.ndarray, axis: int, fluid: FluidParams, floor: float
) -> np.ndarray:
    """
    Face-wise lower bound on λ that makes the internal-energy face terms
    non-positive; NaN where the jumps vanish. ``floor`` is relative to the
    larger density (and its P') at the face.
    """
    rho_k = rho
    rho_l = shift(rho, 1, axis)
    d_rho = rho_l - rho_k
    d_dpot = potential_slope_jump(rho_k, rho_l, fluid)
    rho_max = np.maximum(rho_k, rho_l)

    active = (np.abs(d_rho) > floor * rho_max) & (
        np.abs(d_dpot) > floor * pressure_potential_derivative(rho_max, fluid)
    )
    second_l = bregman_curvature(rho_k, rho_l, fluid)
    second_k = bregman_curvature(rho_l, rho_k, fluid)
    paired = second_l * shift(u[axis], 1, axis) - second_k * u[axis]
    # [ϱ]²·pair / (4[P'][ϱ]) with one [ϱ] cancelled
    required = np.where(active, d_rho, 0.0) * paired / (4.0 * np.where(active, d_dpot, 1.0))
    return np.where(active, required, np.nan)


def kinetic_energy_requirement(
    rho: np.ndarray,
    m: np.ndarray,
    u: np.ndarray,
    axis: int,
    floor: float,
    flux_rho: Optional[np.ndarray] = None,
    flux_u: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Face-wise lower bound on λ from the kinetic-energy balance; NaN where [u]
    vanishes. ``flux_rho``/``flux_u`` give the convective flux level (default:
    the same level as ``rho``, ``u``).

    At a single level the transport and convective terms combine exactly to
    ¼|[u]|²[m·n], so only the flux-level difference is evaluated term by term.
    """
    du, du_sq = _velocity_faces(u, axis)
    active = np.sqrt(du_sq) > floor

    numerator = 0.25 * du_sq * jump_along(m[axis], axis)
    if flux_rho is not None:
        for i in range(u.shape[0]):
            lagged = avg_along(flux_rho * flux_u[i] * flux_u[axis], axis)
            current = avg_along(rho * u[i] * u[axis], axis)
            numerator += du[i] * (lagged - current)
    denominator = avg_along(rho, axis) * np.where(active, du_sq, 1.0)
    return np.where(active, numerator / denominator, np.nan)


def bounds_lambda(rho_min: float, rho_max: float, u_max: float, s_min: float, fluid: FluidParams) -> float:
    """max{ P̄''ū / (2P̲''), 2ϱ̄ū² / (ϱ̲ s̲) } with P'' extrema over [ϱ̲, ϱ̄]."""
    second = pressure_potential_second(np.array([rho_min, rho_max]), fluid)
    second_low, second_high = float(np.min(second)), float(np.max(second))
    internal = second_high * u_max / (2.0 * second_low)
    kinetic = 2.0 * rho_max * u_max ** 2 / (rho_min * s_min)
    return max(internal, kinetic)


def compute_lambda(state: State, params: SchemeParams, fluid: FluidParams) -> float:
    if params.lambda_mode is LambdaMode.CONSTANT:
        return float(params.lambda0)

    grid = state.grid
    rho = state.rho.values
    m = state.m.components
    u = state.velocity().components
    floor = params.jump_floor

    if params.lambda_mode is LambdaMode.BOUNDS:
        jumps = []
        for axis in range(grid.dim):
            _, du_sq = _velocity_faces(u, axis)
            size = np.sqrt(du_sq)
            jumps.append(size[size > floor])
        jumps = np.concatenate(jumps)
        if jumps.size == 0:
            return float(params.lambda0)
        return bounds_lambda(
            float(np.min(rho)),
            float(np.max(rho)),
            float(np.max(state.velocity().norm())),
            float(np.min(jumps)),
            fluid,
        )

    worst = 0.0
    for axis in range(grid.dim):
        ie = internal_energy_requirement(rho, u, axis, fluid, floor)
        ke = kinetic_energy_requirement(rho, m, u, axis, floor)
        for required in (ie, ke):
            if np.any(np.isfinite(required)):
                worst = max(worst, float(np.nanmax(required)))
    return params.c * worst


# Step

@dataclass(frozen=True)
class StepOutcome:
    state: State
    dt: float
    lam: float


def convective_flux(state: State) -> np.ndarray:
    """conv_i = div_h(ϱ u_i u) for each component i."""
    grid = state.grid
    rho = state.rho.values
    m = state.m.components
    conv = np.zeros((grid.dim,) + grid.shape)
    for i in range(grid.dim):
        for j in range(grid.dim):
            conv[i] += central_difference(m[i] * m[j] / rho, j, grid.h)
    return conv


def advance(
    state: State,
    params: SchemeParams,
    fluid: FluidParams,
    grid: Grid,
    step_index: int = 0,
    check_residuals: bool = False,
) -> StepOutcome:
    """One step, returning the new state together with the Δt and λ it used."""
    dt = compute_dt(state, params, grid)
    lam = compute_lambda(state, params, fluid)
    if not np.isfinite(lam) or lam < 0:
        raise SchemeError(f"invalid numerical diffusion {lam!r} in step {step_index}")
    symbols = build_symbols(grid, dt, lam, fluid)

    explicit = state.m.components - dt * convective_flux(state)
    g = solve_helmholtz(VectorField(grid, explicit), symbols)
    rho_new = solve_mass_operator(
        ScalarField(grid, state.rho.values - dt * div_array(g.components, grid.h)), symbols
    )

    if np.any(rho_new.values <= 0):
        flat = int(np.argmin(rho_new.values))
        cell = tuple(int(k) for k in np.unravel_index(flat, grid.shape))
        raise PositivityLost(cell=cell, step=step_index, value=float(rho_new.values[cell]))

    pressure_gradient = (dt / fluid.epsilon ** 2) * fluid.reference_slope() * grad_array(rho_new.values, grid.h)
    m_new = solve_helmholtz(VectorField(grid, explicit - pressure_gradient), symbols)

    t_new = params.t_end if dt >= params.t_end - state.t else state.t + dt
    new_state = State(t=t_new, rho=rho_new, m=m_new)

    if check_residuals:
        mass_res, mom_res, scale = scheme_residuals(state, new_state, dt, lam, fluid, grid)
        bound = TOLERANCES["scheme_residual"] * scale
        if mass_res > bound or mom_res > bound:
            raise SchemeError(
                f"step {step_index} residuals mass={mass_res!r} momentum={mom_res!r} exceed {bound!r}"
            )

    if LOGGING_CONFIG["log_steps"]:
        logger.debug(f"step {step_index}: t={t_new!r} dt={dt!r} lambda={lam!r}")
    return StepOutcome(state=new_state, dt=dt, lam=lam)


def step(state: State, params: SchemeParams, fluid: FluidParams, grid: Grid) -> State:
    return advance(state, params, fluid, grid).state


def scheme_residuals(
    state_n: State, state_np1: State, dt: float, lam: float, fluid: FluidParams, grid: Grid
) -> Tuple[float, float, float]:
    """∞-norm residuals of the linearized mass and momentum equations and their scale."""
    h = grid.h
    rho, rho_new = state_n.rho.values, state_np1.rho.values
    m_new = state_np1.m.components

    mass_terms = [
        rho_new,
        -rho,
        dt * div_array(m_new, h),
        -dt * lam * h * lap_compact_array(rho_new, h),
    ]
    grad_rho = grad_array(rho_new, h)
    conv = convective_flux(state_n)
    mom_terms = [
        m_new,
        -state_n.m.components,
        dt * conv,
        (dt / fluid.epsilon ** 2) * fluid.reference_slope() * grad_rho,
        -dt * lam * h * np.stack([lap_compact_array(c, h) for c in m_new]),
    ]
    mass_res = float(np.max(np.abs(sum(mass_terms))))
    mom_res = float(np.max(np.abs(sum(mom_terms))))
    scale = max(float(np.max(np.abs(t))) for t in mass_terms + mom_terms)
    return mass_res, mom_res, scale


# Driver

Observer = Callable[[int, State, Optional[StepOutcome]], None]


@dataclass
class RunResult:
    initial: State
    final: State
    steps: int
    lambdas: List[float] = field(default_factory=list)
    dts: List[float] = field(default_factory=list)


def run(
    initial: State,
    params: SchemeParams,
    fluid: FluidParams,
    grid: Grid,
    observers: Sequence[Observer] = (),
    check_residuals: bool = False,
) -> RunResult:
    """
    Step from ``initial.t`` to ``params.t_end``.

    Observers are called as ``observer(0, initial, None)`` and then
    ``observer(k, state_k, outcome_k)`` after every accepted step.
    """
    if params.t_end < initial.t:
        raise InvalidParameters(f"t_end {params.t_end!r} precedes the initial time {initial.t!r}")

    for observer in observers:
        observer(0, initial, None)

    result = RunResult(initial=initial, final=initial, steps=0)
    state = initial
    while state.t < params.t_end:
        if result.steps >= params.max_steps:
            raise StepLimitExceeded(
                f"reached {params.max_steps} steps at t={state.t!r} before t_end={params.t_end!r}"
            )
        outcome = advance(state, params, fluid, grid, result.steps + 1, check_residuals)
        state = outcome.state
        result.steps += 1
        result.lambdas.append(outcome.lam)
        result.dts.append(outcome.dt)
        for observer in observers:
            observer(result.steps, state, outcome)

    result.final = state
    return result
