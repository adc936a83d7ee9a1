"""
Energy monitors, a-posteriori checks and convergence tables.

The two residual functions evaluate discrete identities that hold exactly for
any pair of states produced by one step, so their residuals only measure
round-off. They return the residual with a natural scale (the sum of the
magnitudes of every contribution) to compare against.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import NonNestedGrids
from .grid import Grid
from .operators import (
    ScalarField,
    VectorField,
    avg_along,
    div_array,
    jump_along,
    shift,
)
from .scheme import (
    FluidParams,
    State,
    StepOutcome,
    internal_energy_requirement,
    kinetic_energy_requirement,
    pressure,
    pressure_derivative,
    pressure_potential,
    pressure_potential_derivative,
)
from .settings import SOLVER_DEFAULTS

logger = logging.getLogger(__name__)

Field = Union[ScalarField, VectorField]


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    dt: float
    lam: float
    ke: float
    pe: float
    total: float
    min_rho: float
    div_u_l1: float

    def as_row(self) -> Dict[str, float]:
        return {
            "t": self.t,
            "dt": self.dt,
            "lambda": self.lam,
            "ke": self.ke,
            "pe": self.pe,
            "total": self.total,
            "min_rho": self.min_rho,
            "div_u_l1": self.div_u_l1,
        }


@dataclass(frozen=True)
class EocRow:
    n_cells: int
    h: float
    err_l2: float
    eoc: Optional[float] = None


@dataclass(frozen=True)
class IdentityResidual:
    residual: float
    scale: float
    pressure_gap: Optional[float] = None  # nonlinear minus linearized pressure work

    @property
    def relative(self) -> float:
        return self.residual / self.scale if self.scale > 0 else self.residual


def _divergence_of_velocity(state: State) -> np.ndarray:
    return div_array(state.velocity().components, state.grid.h)


def energies(state: State, fluid: FluidParams, dt: float = 0.0, lam: float = 0.0) -> EnergyRecord:
    grid = state.grid
    rho = state.rho.values
    volume = grid.cell_volume
    ke = volume * float(np.sum(0.5 * np.sum(state.m.components ** 2, axis=0) / rho))
    pe = volume * float(np.sum(pressure_potential(rho, fluid))) / fluid.epsilon ** 2
    div_u_l1 = volume * float(np.sum(np.abs(_divergence_of_velocity(state))))
    return EnergyRecord(
        t=state.t,
        dt=float(dt),
        lam=float(lam),
        ke=ke,
        pe=pe,
        total=ke + pe,
        min_rho=float(np.min(rho)),
        div_u_l1=div_u_l1,
    )


class _Balance:
    """Accumulates signed contributions Σ c_K and the magnitudes Σ |c_K|."""

    def __init__(self):
        self.value = 0.0
        self.scale = 0.0

    def add(self, contributions: np.ndarray, weight: float = 1.0):
        self.value += weight * float(np.sum(contributions))
        self.scale += abs(weight) * float(np.sum(np.abs(contributions)))


def renorm_residual(
    state_n: State,
    state_np1: State,
    lam: float,
    dt: float,
    B: Callable[[np.ndarray], np.ndarray],
    dB: Callable[[np.ndarray], np.ndarray],
) -> IdentityResidual:
    """
    Residual of the renormalized mass balance for a smooth function B:

        Σ|K|(B(ϱ') − B(ϱ))/Δt + Σ|K|(ϱ'B'(ϱ') − B(ϱ')) div_h u'
          = − Σ_σ |σ| λ [B'(ϱ')][ϱ'] − Σ|K|(B(ϱ) − B(ϱ') − B'(ϱ')(ϱ − ϱ'))/Δt
            + Σ_K Σ_{σ∈E(K)} |σ| ½([B(ϱ')]_{σ,K} − B'(ϱ'_K)[ϱ']_{σ,K}) u'_L·n_{σ,K}
    """
    grid = state_n.grid
    volume, area = grid.cell_volume, grid.face_area
    rho, rho_new = state_n.rho.values, state_np1.rho.values
    u_new = state_np1.velocity().components
    b_new, b_old, db_new = B(rho_new), B(rho), dB(rho_new)

    lhs = _Balance()
    lhs.add(b_new, volume / dt)
    lhs.add(b_old, -volume / dt)
    lhs.add((rho_new * db_new - b_new) * div_array(u_new, grid.h), volume)

    rhs = _Balance()
    for axis in range(grid.dim):
        rhs.add(jump_along(db_new, axis) * jump_along(rho_new, axis), -area * lam)
    rhs.add(b_old - b_new - db_new * (rho - rho_new), -volume / dt)
    for axis in range(grid.dim):
        for orientation in (1, -1):
            b_out = shift(b_new, orientation, axis)
            rho_out = shift(rho_new, orientation, axis)
            u_out = shift(u_new[axis], orientation, axis)
            pairing = (b_out - b_new - db_new * (rho_out - rho_new)) * u_out * orientation
            rhs.add(pairing, 0.5 * area)

    return IdentityResidual(residual=abs(lhs.value - rhs.value), scale=lhs.scale + rhs.scale)


def ke_balance_residual(
    state_n: State, state_np1: State, lam: float, dt: float, fluid: FluidParams
) -> IdentityResidual:
    """
    Residual of the kinetic-energy balance with linearized pressure work:

        Σ|K|(ϱ'|u'|² − ϱ|u|²)/(2Δt) − p'(ϱ₀)/ε² Σ|K| ϱ' div_h u'
          = − Σ|K| ϱ|u' − u|²/(2Δt)
            − Σ_σ |σ| (λ avg(ϱ')|[u']|² + avg(m')·n [|u'|²/2] − [u']·avg(ϱuu)·n)

    The nonlinear pressure work differs by (1/ε²) Σ|K|(p(ϱ') − p'(ϱ₀)ϱ') div_h u',
    reported as ``pressure_gap``.
    """
    grid = state_n.grid
    volume, area = grid.cell_volume, grid.face_area
    rho, rho_new = state_n.rho.values, state_np1.rho.values
    u = state_n.velocity().components
    u_new = state_np1.velocity().components
    m_new = state_np1.m.components
    speed_sq = np.sum(u ** 2, axis=0)
    speed_sq_new = np.sum(u_new ** 2, axis=0)
    div_u_new = div_array(u_new, grid.h)
    work_factor = fluid.reference_slope() / fluid.epsilon ** 2

    lhs = _Balance()
    lhs.add(rho_new * speed_sq_new, volume / (2.0 * dt))
    lhs.add(rho * speed_sq, -volume / (2.0 * dt))
    lhs.add(rho_new * div_u_new, -volume * work_factor)

    rhs = _Balance()
    rhs.add(rho * np.sum((u_new - u) ** 2, axis=0), -volume / (2.0 * dt))
    for axis in range(grid.dim):
        du = np.stack([jump_along(c, axis) for c in u_new])
        rhs.add(avg_along(rho_new, axis) * np.sum(du ** 2, axis=0), -area * lam)
        rhs.add(avg_along(m_new[axis], axis) * jump_along(0.5 * speed_sq_new, axis), -area)
        for i in range(grid.dim):
            rhs.add(du[i] * avg_along(rho * u[i] * u[axis], axis), area)

    gap = volume * float(np.sum((pressure(rho_new, fluid) - fluid.reference_slope() * rho_new) * div_u_new))
    return IdentityResidual(
        residual=abs(lhs.value - rhs.value),
        scale=lhs.scale + rhs.scale,
        pressure_gap=abs(gap) / fluid.epsilon ** 2,
    )


def internal_energy_production(state_n: State, state_np1: State, dt: float, fluid: FluidParams) -> float:
    """Σ|K|(P(ϱ') − P(ϱ))/Δt + Σ|K| p(ϱ') div_h u'; non-positive under the internal-energy λ-condition."""
    volume = state_n.grid.cell_volume
    rho, rho_new = state_n.rho.values, state_np1.rho.values
    change = np.sum(pressure_potential(rho_new, fluid) - pressure_potential(rho, fluid)) / dt
    work = np.sum(pressure(rho_new, fluid) * _divergence_of_velocity(state_np1))
    return float(volume * (change + work))


def kinetic_energy_production(state_n: State, state_np1: State, dt: float, fluid: FluidParams) -> float:
    """Σ|K|(ϱ'|u'|² − ϱ|u|²)/(2Δt) − p'(ϱ₀)/ε² Σ|K| ϱ' div_h u'."""
    volume = state_n.grid.cell_volume
    rho, rho_new = state_n.rho.values, state_np1.rho.values
    ke_old = rho * np.sum(state_n.velocity().components ** 2, axis=0)
    ke_new = rho_new * np.sum(state_np1.velocity().components ** 2, axis=0)
    work = fluid.reference_slope() / fluid.epsilon ** 2 * np.sum(rho_new * _divergence_of_velocity(state_np1))
    return float(volume * (np.sum(ke_new - ke_old) / (2.0 * dt) - work))


@dataclass
class LambdaConditionReport:
    """Face-wise λ requirements at the new time level; all arrays live on + faces, one per axis."""
    lam: float
    internal_energy: List[np.ndarray]
    kinetic_energy: List[np.ndarray]
    positivity: List[np.ndarray]

    @staticmethod
    def _max(arrays: Sequence[np.ndarray]) -> float:
        finite = [a[np.isfinite(a)] for a in arrays]
        finite = [a for a in finite if a.size]
        return max(float(np.max(a)) for a in finite) if finite else 0.0

    @property
    def internal_energy_margin(self) -> float:
        return self.lam - self._max(self.internal_energy)

    @property
    def kinetic_energy_margin(self) -> float:
        return self.lam - self._max(self.kinetic_energy)

    @property
    def positivity_margin(self) -> float:
        return self.lam - self._max(self.positivity)

    @property
    def worst_margin(self) -> float:
        return min(self.internal_energy_margin, self.kinetic_energy_margin, self.positivity_margin)

    def face_margins(self) -> List[np.ndarray]:
        margins = []
        for ie, ke, pos in zip(self.internal_energy, self.kinetic_energy, self.positivity):
            required = np.fmax(np.fmax(np.nan_to_num(ie, nan=-np.inf), np.nan_to_num(ke, nan=-np.inf)), pos)
            margins.append(self.lam - required)
        return margins


def check_lambda_conditions(
    state_n: State,
    state_np1: State,
    lam: float,
    fluid: FluidParams,
    jump_floor: float = SOLVER_DEFAULTS["jump_floor"],
) -> LambdaConditionReport:
    """Evaluate the positivity and energy conditions on λ a posteriori. Advisory only."""
    grid = state_n.grid
    rho_new = state_np1.rho.values
    u_new = state_np1.velocity().components
    u = state_n.velocity().components

    report = LambdaConditionReport(lam=float(lam), internal_energy=[], kinetic_energy=[], positivity=[])
    for axis in range(grid.dim):
        report.internal_energy.append(internal_energy_requirement(rho_new, u_new, axis, fluid, jump_floor))
        report.kinetic_energy.append(
            kinetic_energy_requirement(
                rho_new, state_np1.m.components, u_new, axis, jump_floor,
                flux_rho=state_n.rho.values, flux_u=u,
            )
        )
        normal = np.abs(u_new[axis])
        report.positivity.append(0.5 * np.maximum(normal, shift(normal, 1, axis)))
    return report


def ap_indicators(state: State, fluid: FluidParams) -> Dict[str, float]:
    grid = state.grid
    div_u_l1 = grid.cell_volume * float(np.sum(np.abs(_divergence_of_velocity(state))))
    return {
        "max_density_deviation": float(np.max(np.abs(state.rho.values - fluid.rho0))),
        "div_u_l1": div_u_l1,
        "div_u_l1_over_eps2": div_u_l1 / fluid.epsilon ** 2,
    }


def mach_number_ratio(state: State, fluid: FluidParams, background: Sequence[float]) -> ScalarField:
    """|u − u_background| / √(γ p / ϱ) per cell."""
    u = state.velocity().components
    offset = np.stack([u[i] - background[i] for i in range(state.grid.dim)])
    sound = np.sqrt(pressure_derivative(state.rho.values, fluid))
    return ScalarField(state.grid, np.sqrt(np.sum(offset ** 2, axis=0)) / sound)


def lambda_range(records: Iterable[EnergyRecord]) -> Tuple[float, float]:
    """Smallest and largest λ over the steps (the initial record carries none)."""
    values = [r.lam for r in records if r.dt > 0]
    if not values:
        return (0.0, 0.0)
    return (min(values), max(values))


# Convergence

def _block_factors(fine: Grid, coarse: Grid) -> Tuple[int, ...]:
    if fine.dim != coarse.dim or fine.origin != coarse.origin:
        raise NonNestedGrids("grids cover different domains")
    factors = []
    for n_fine, n_coarse, l_fine, l_coarse in zip(fine.n_cells, coarse.n_cells, fine.length, coarse.length):
        if not math.isclose(l_fine, l_coarse, rel_tol=1e-12) or n_fine % n_coarse:
            raise NonNestedGrids(f"{n_fine} fine cells do not nest into {n_coarse} coarse cells")
        factors.append(n_fine // n_coarse)
    return tuple(factors)


def _block_average(values: np.ndarray, coarse: Grid, factors: Tuple[int, ...]) -> np.ndarray:
    shape = []
    for n, r in zip(coarse.n_cells, factors):
        shape.extend([n, r])
    return values.reshape(shape).mean(axis=tuple(range(1, 2 * coarse.dim, 2)))


def restrict(fine: Field, coarse: Grid) -> Field:
    """Average each block of fine cells onto the coarse cell containing it."""
    factors = _block_factors(fine.grid, coarse)
    if isinstance(fine, VectorField):
        return VectorField(coarse, np.stack([_block_average(c, coarse, factors) for c in fine.components]))
    return ScalarField(coarse, _block_average(fine.values, coarse, factors))


def l2_error(
    coarse: Field,
    fine_reference: Field,
    restriction: Callable[[Field, Grid], Field] = restrict,
) -> float:
    """sqrt(Σ|K| |coarse − R(fine)|²), summed over components for vector fields."""
    reference = restriction(fine_reference, coarse.grid)
    if isinstance(coarse, VectorField):
        diff = coarse.components - reference.components
    else:
        diff = coarse.values - reference.values
    return math.sqrt(coarse.grid.cell_volume * float(np.sum(diff ** 2)))


def eoc_table(errors: Sequence[Tuple[int, float]], length: float = 1.0) -> List[EocRow]:
    """Rows with h = length/n; eoc_k = log(err_{k−1}/err_k) / log(h_{k−1}/h_k)."""
    rows: List[EocRow] = []
    for n, err in errors:
        h = length / n
        eoc = None
        if rows and err > 0 and rows[-1].err_l2 > 0:
            eoc = math.log(rows[-1].err_l2 / err) / math.log(rows[-1].h / h)
        rows.append(EocRow(n_cells=int(n), h=h, err_l2=float(err), eoc=eoc))
    return rows


# Observers

class EnergyRecorder:
    """Collects one EnergyRecord for the initial state and after every step."""

    def __init__(self, fluid: FluidParams):
        self.fluid = fluid
        self.records: List[EnergyRecord] = []

    def __call__(self, step_index: int, state: State, outcome: Optional[StepOutcome]):
        if outcome is None:
            self.records.append(energies(state, self.fluid))
        else:
            self.records.append(energies(state, self.fluid, outcome.dt, outcome.lam))

    def max_energy_increase(self) -> Tuple[float, float]:
        """Largest step-to-step increase of the total energy, absolute and relative."""
        worst_abs, worst_rel = float("-inf"), float("-inf")
        for before, after in zip(self.records, self.records[1:]):
            increase = after.total - before.total
            worst_abs = max(worst_abs, increase)
            worst_rel = max(worst_rel, increase / abs(before.total))
        if worst_abs == float("-inf"):
            return (0.0, 0.0)
        return (worst_abs, worst_rel)


@dataclass
class IdentityMaxima:
    renorm_rho: float = 0.0
    renorm_rho_squared: float = 0.0
    renorm_potential: float = 0.0
    ke_balance: float = 0.0
    pressure_gap: float = 0.0
    worst_lambda_margin: Optional[float] = None
    max_internal_energy_production: Optional[float] = None
    max_kinetic_energy_production: Optional[float] = None
    violations: int = field(default=0)

    def as_dict(self) -> Dict[str, Optional[float]]:
        return dict(self.__dict__)


class IdentityRecorder:
    """Evaluates the exact identities and λ-conditions for every step, keeping worst values."""

    def __init__(self, fluid: FluidParams, jump_floor: float = SOLVER_DEFAULTS["jump_floor"]):
        self.fluid = fluid
        self.jump_floor = jump_floor
        self.maxima = IdentityMaxima()
        self._previous: Optional[State] = None

    def __call__(self, step_index: int, state: State, outcome: Optional[StepOutcome]):
        previous, self._previous = self._previous, state
        if outcome is None or previous is None:
            return
        fluid, dt, lam = self.fluid, outcome.dt, outcome.lam
        maxima = self.maxima

        checks = {
            "renorm_rho": renorm_residual(previous, state, lam, dt, lambda r: r, np.ones_like),
            "renorm_rho_squared": renorm_residual(previous, state, lam, dt, lambda r: r ** 2, lambda r: 2.0 * r),
            "renorm_potential": renorm_residual(
                previous, state, lam, dt,
                lambda r: pressure_potential(r, fluid),
                lambda r: pressure_potential_derivative(r, fluid),
            ),
            "ke_balance": ke_balance_residual(previous, state, lam, dt, fluid),
        }
        for name, result in checks.items():
            setattr(maxima, name, max(getattr(maxima, name), result.relative))
        maxima.pressure_gap = max(maxima.pressure_gap, checks["ke_balance"].pressure_gap)

        margin = check_lambda_conditions(previous, state, lam, fluid, self.jump_floor).worst_margin
        if margin < 0:
            maxima.violations += 1
            logger.debug(f"⚠️ step {step_index}: lambda-condition margin {margin!r}")
        maxima.worst_lambda_margin = margin if maxima.worst_lambda_margin is None else min(maxima.worst_lambda_margin, margin)

        ie = internal_energy_production(previous, state, dt, fluid)
        ke = kinetic_energy_production(previous, state, dt, fluid)
        maxima.max_internal_energy_production = (
            ie if maxima.max_internal_energy_production is None else max(maxima.max_internal_energy_production, ie)
        )
        maxima.max_kinetic_energy_production = (
            ke if maxima.max_kinetic_energy_production is None else max(maxima.max_kinetic_energy_production, ke)
        )
