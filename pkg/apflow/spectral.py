"""
Direct solves of the implicit operators by Fourier diagonalization.

On the periodic uniform grid the stencil matrices of L_c, grad_h and L_w are
circulant (1D) or block circulant with circulant blocks (2D), so the discrete
Fourier transform diagonalizes

    H = I − Δt λ h L_c                      (symbol v)
    S = H − (Δt/ε)² p'(ϱ₀) L_w H⁻¹          (symbol s)

and both inverses are a forward transform, a division and an inverse transform.
"""

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Tuple, Union

import numpy as np
from scipy import fft

from .errors import EpsilonTooLarge, ImaginaryResidue, SpectralError
from .grid import Grid
from .operators import ScalarField, VectorField
from .settings import SOLVER_DEFAULTS

if TYPE_CHECKING:
    from .scheme import FluidParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Symbols:
    """Per-mode eigenvalues, arrays of shape ``grid.shape`` in transform order."""
    grid: Grid
    mu: np.ndarray
    eta: np.ndarray  # purely imaginary, one row per axis
    omega: np.ndarray
    v: np.ndarray
    s: np.ndarray
    dt: float
    lam: float
    epsilon: float
    slope: float  # p'(ϱ₀)

    def __post_init__(self):
        if np.any(self.mu > 0) or np.any(self.omega > 0):
            raise SpectralError("Laplacian symbols must be non-positive")
        if np.any(self.v < 1.0) or np.any(self.s < 1.0):
            raise SpectralError("Helmholtz and mass-operator symbols must be at least 1")


def mode_angles(grid: Grid) -> Tuple[np.ndarray, ...]:
    """θ = 2πj/N per axis, broadcast to the grid shape (signed so ±j give identical cosines)."""
    axes = [2.0 * np.pi * fft.fftfreq(n) for n in grid.n_cells]
    return tuple(np.meshgrid(*axes, indexing="ij"))


def build_symbols(grid: Grid, dt: float, lam: float, fluid: "FluidParams") -> Symbols:
    if not dt > 0:
        raise SpectralError(f"time step must be positive, got {dt!r}")
    if not lam >= 0 or not np.isfinite(lam):
        raise SpectralError(f"numerical diffusion must be finite and non-negative, got {lam!r}")

    h = grid.h
    thetas = mode_angles(grid)
    mu = np.zeros(grid.shape)
    omega = np.zeros(grid.shape)
    eta = np.zeros((grid.dim,) + grid.shape, dtype=complex)
    for axis, theta in enumerate(thetas):
        mu += (2.0 * np.cos(theta) - 2.0) / h ** 2
        sin_theta = np.sin(theta)
        eta[axis] = 1j * sin_theta / h
        omega -= sin_theta ** 2 / h ** 2

    slope = fluid.reference_slope()
    v = 1.0 - dt * lam * h * mu
    s = v + (dt / fluid.epsilon) ** 2 * slope * (-omega) / v

    return Symbols(
        grid=grid, mu=mu, eta=eta, omega=omega, v=v, s=s,
        dt=float(dt), lam=float(lam), epsilon=float(fluid.epsilon), slope=float(slope),
    )


def _divide_by_symbol(values: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    result = fft.ifftn(fft.fftn(values) / symbol)
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    residue = float(np.max(np.abs(result.imag))) if result.size else 0.0
    if residue > SOLVER_DEFAULTS["imag_tolerance"] * scale:
        raise ImaginaryResidue(
            f"imaginary residue {residue!r} exceeds {SOLVER_DEFAULTS['imag_tolerance']!r} x {scale!r}"
        )
    return np.ascontiguousarray(result.real)


def solve_helmholtz(
    b: Union[ScalarField, VectorField], symbols: Symbols
) -> Union[ScalarField, VectorField]:
    """Apply (I − Δt λ h L_c)⁻¹, componentwise for vector fields."""
    if isinstance(b, VectorField):
        parts = [_divide_by_symbol(c, symbols.v) for c in b.components]
        return VectorField(b.grid, np.stack(parts))
    return ScalarField(b.grid, _divide_by_symbol(b.values, symbols.v))


def solve_mass_operator(b: ScalarField, symbols: Symbols) -> ScalarField:
    return ScalarField(b.grid, _divide_by_symbol(b.values, symbols.s))


def projector_limit_check(
    grid: Grid, dt: float, lam: float, fluid: "FluidParams", b: ScalarField
) -> float:
    """
    ‖S⁻¹b − mean(b)‖∞, which shrinks like ε² as ε → 0.

    Checkerboard modes (θ = π on an even axis) lie in the kernel of L_w and are
    only damped by 1/v, so b should carry no such content on even grids.
    """
    limit = SOLVER_DEFAULTS["projector_max_epsilon"]
    if fluid.epsilon > limit:
        raise EpsilonTooLarge(f"epsilon {fluid.epsilon!r} is above {limit!r}; the limit check is meaningless")
    symbols = build_symbols(grid, dt, lam, fluid)
    solved = solve_mass_operator(b, symbols)
    deviation = float(np.max(np.abs(solved.values - b.mean())))
    logger.debug(f"projector deviation {deviation!r} at epsilon {fluid.epsilon!r}")
    return deviation
