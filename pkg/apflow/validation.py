"""
Self-check suite behind the ``validate`` command.

Runs quick property checks of the operators, spectral solves, exact identities
and presets, then prints a pass/fail check list.
"""

import logging
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import linalg

from .benchmarks import caw_init, get_preset, list_presets, spp_init
from .diagnostics import IdentityRecorder, check_lambda_conditions
from .errors import ApflowError
from .grid import FLAT_ORDER, Grid, make_grid
from .operators import (
    OpTag,
    ScalarField,
    VectorField,
    dense_matrix,
    div_h,
    grad_component_matrix,
    grad_h,
)
from .scheme import FluidParams, LambdaMode, SchemeParams, advance, run
from .settings import TOLERANCES
from .spectral import Symbols, build_symbols, projector_limit_check, solve_helmholtz, solve_mass_operator

logger = logging.getLogger(__name__)

SymbolHook = Callable[[Symbols], Symbols]
SEED = 20240611


def _grids() -> List[Grid]:
    return [make_grid(1, [16], [0.0], [1.0]), make_grid(1, [9], [0.0], [1.0]), make_grid(2, [8, 8], [0.0, 0.0], [1.0, 1.0])]


def check_operator_duality(rng: np.random.Generator) -> bool:
    """Σ|K| φ div ψ + Σ|K| grad φ·ψ = 0 and Σ|K| div ψ = 0."""
    print("🔄 Checking grad-div duality")
    worst = 0.0
    for grid in _grids():
        for _ in range(20):
            phi = ScalarField(grid, rng.standard_normal(grid.shape))
            psi = VectorField(grid, rng.standard_normal((grid.dim,) + grid.shape))
            lhs = np.sum(phi.values * div_h(psi).values) + np.sum(grad_h(phi).components * psi.components)
            scale = np.sum(np.abs(phi.values * div_h(psi).values)) + np.sum(np.abs(grad_h(phi).components * psi.components))
            worst = max(worst, abs(lhs) / scale, abs(div_h(psi).integral()) / scale)
    print(f"   worst relative defect {worst!r}")
    return worst <= TOLERANCES["duality"]


def check_dense_structure(rng: np.random.Generator) -> bool:
    """Laplacians symmetric, gradient blocks antisymmetric, L_w = Σ D_i²."""
    print("🔄 Checking stencil matrix structure")
    ok = True
    for grid in _grids():
        compact = dense_matrix(OpTag.LAP_COMPACT, grid)
        wide = dense_matrix(OpTag.LAP_WIDE, grid)
        blocks = [grad_component_matrix(grid, axis) for axis in range(grid.dim)]
        ok &= np.allclose(compact, compact.T, atol=0.0)
        ok &= np.allclose(wide, wide.T, atol=1e-9 * np.max(np.abs(wide)))
        ok &= all(np.allclose(b, -b.T, atol=0.0) for b in blocks)
        ok &= np.allclose(sum(b @ b for b in blocks), wide, rtol=1e-12, atol=1e-9 * np.max(np.abs(wide)))
    return bool(ok)


def _hooked(grid: Grid, dt: float, lam: float, fluid: FluidParams, hook: Optional[SymbolHook]) -> Symbols:
    symbols = build_symbols(grid, dt, lam, fluid)
    return hook(symbols) if hook is not None else symbols


def check_spectral_vs_dense(rng: np.random.Generator, symbol_hook: Optional[SymbolHook] = None) -> bool:
    """Spectral solves against dense LU solves of the assembled operators."""
    print("🔄 Checking spectral solves against dense solves")
    fluid = FluidParams(kappa=1.0, gamma=2.0, epsilon=0.1, rho0=1.0)
    dt, lam = 0.01, 1.0
    worst = 0.0
    for grid in _grids():
        n = grid.size
        helmholtz = np.eye(n) - dt * lam * grid.h * dense_matrix(OpTag.LAP_COMPACT, grid)
        coupling = (dt / fluid.epsilon) ** 2 * fluid.reference_slope()
        mass = helmholtz - coupling * dense_matrix(OpTag.LAP_WIDE, grid) @ linalg.inv(helmholtz)
        symbols = _hooked(grid, dt, lam, fluid, symbol_hook)
        for _ in range(10):
            b = rng.standard_normal(grid.shape)
            field = ScalarField(grid, b)
            flat = b.ravel(order=FLAT_ORDER)
            for matrix, solved in (
                (helmholtz, solve_helmholtz(field, symbols)),
                (mass, solve_mass_operator(field, symbols)),
            ):
                expected = linalg.lu_solve(linalg.lu_factor(matrix), flat)
                got = solved.values.ravel(order=FLAT_ORDER)
                worst = max(worst, float(np.max(np.abs(got - expected)) / np.max(np.abs(expected))))
    print(f"   worst relative deviation {worst!r}")
    return worst <= TOLERANCES["spectral_vs_dense"]


def check_symbol_bounds(rng: np.random.Generator) -> bool:
    print("🔄 Checking symbol bounds")
    for grid in _grids():
        for _ in range(10):
            fluid = FluidParams(kappa=1.0, gamma=1.4, epsilon=float(10 ** rng.uniform(-4, 0)), rho0=1.0)
            symbols = build_symbols(grid, float(rng.uniform(1e-4, 0.1)), float(rng.uniform(0, 5)), fluid)
            if np.min(symbols.v) < 1.0 or np.min(symbols.s) < 1.0:
                return False
            if symbols.mu.flat[0] != 0.0 or symbols.omega.flat[0] != 0.0:
                return False
    return True


def check_projection_limit(rng: np.random.Generator) -> bool:
    """Mass-operator inverse tends to the mean as ε → 0; halving ε quarters the rest."""
    print("🔄 Checking low Mach projection limit")
    grid = make_grid(1, [9], [0.0], [1.0])
    (x,) = grid.centers()
    b = ScalarField(grid, 1.0 + np.sin(2.0 * np.pi * x))
    deviations = []
    for epsilon in (1e-5, 5e-6):
        fluid = FluidParams(kappa=1.0, gamma=2.0, epsilon=epsilon, rho0=1.0)
        deviations.append(projector_limit_check(grid, 0.1, 1.0, fluid, b))
    ratio = deviations[0] / deviations[1]
    print(f"   deviations {deviations}, ratio {ratio!r}")
    return deviations[0] <= 1e-8 and 3.5 <= ratio <= 4.5


def check_exact_identities(rng: np.random.Generator) -> bool:
    """Renormalization and kinetic-energy identities on a short smooth run."""
    print("🔄 Checking discrete identities")
    grid = make_grid(1, [16], [0.0], [1.0])
    initial = spp_init(grid, 0.5)
    fluid = FluidParams(kappa=1.0, gamma=2.0, epsilon=0.5, rho0=1.0)
    recorder = IdentityRecorder(fluid)
    run(initial, SchemeParams(cfl=0.8, t_end=0.1), fluid, grid, [recorder])
    maxima = recorder.maxima
    worst = max(maxima.renorm_rho, maxima.renorm_rho_squared, maxima.renorm_potential, maxima.ke_balance)
    print(f"   worst relative identity residual {worst!r}")
    return worst <= TOLERANCES["identity_residual"]


def check_mass_conservation(rng: np.random.Generator) -> bool:
    print("🔄 Checking mass conservation")
    grid = make_grid(2, [12, 12], [0.0, 0.0], [1.0, 1.0])
    preset = get_preset("gresho")
    initial = preset.initial_state(grid, 0.1)
    fluid = FluidParams(kappa=1.0, gamma=1.4, epsilon=0.1, rho0=1.0)
    result = run(initial, SchemeParams(cfl=0.5, t_end=0.2), fluid, grid)
    drift = abs(result.final.total_mass() - initial.total_mass()) / initial.total_mass()
    print(f"   relative mass drift {drift!r} over {result.steps} steps")
    return drift <= TOLERANCES["mass_conservation"]


def check_preset_positivity(rng: np.random.Generator) -> bool:
    """Every preset runs to its end time on a coarse grid without losing positivity."""
    print("🔄 Checking positivity on presets")
    ok = True
    for name in list_presets():
        preset = get_preset(name)
        n = 64 if preset.dim == 1 else 20
        grid = make_grid(preset.dim, [n] * preset.dim, preset.origin, preset.length)
        epsilon = preset.epsilons[0]
        initial = preset.initial_state(grid, epsilon)
        fluid = FluidParams(
            kappa=preset.kappa, gamma=preset.gamma, epsilon=epsilon,
            rho0=preset.rho0 if preset.rho0 is not None else initial.rho.mean(),
        )
        params = SchemeParams(
            cfl=preset.cfl_for(epsilon), t_end=preset.t_end_for(epsilon), lambda_mode=preset.lambda_mode,
            lambda0=preset.lambda0, c=preset.c_for(epsilon),
        )
        try:
            result = run(initial, params, fluid, grid)
            print(f"   ✅ {name}: {result.steps} steps, min rho {float(np.min(result.final.rho.values))!r}")
        except ApflowError as exc:
            print(f"   ❌ {name}: {exc}")
            ok = False
    return ok


def check_well_prepared_limit(rng: np.random.Generator) -> bool:
    """One step from ϱ₀ + O(ε²) data stays O(ε²) away from ϱ₀."""
    print("🔄 Checking well-prepared data stays near the background density")
    grid = make_grid(1, [32], [0.0], [1.0])
    deviations = []
    for epsilon in (1e-3, 1e-4):
        fluid = FluidParams(kappa=1.0, gamma=2.0, epsilon=epsilon, rho0=1.0)
        state = advance(spp_init(grid, epsilon), SchemeParams(cfl=0.1, t_end=1.0), fluid, grid).state
        deviations.append(float(np.max(np.abs(state.rho.values - 1.0))))
    ratio = deviations[0] / deviations[1]
    print(f"   deviations {deviations}, ratio {ratio!r}")
    return ratio >= 50.0


def lambda_condition_advisory() -> float:
    """Worst λ-condition margin of one CAW step with λ = 0 (expected negative)."""
    grid = make_grid(1, [64], [-1.0], [2.0])
    initial = caw_init(grid, 0.1)
    fluid = FluidParams(kappa=1.0, gamma=1.4, epsilon=0.1, rho0=initial.rho.mean())
    params = SchemeParams(cfl=0.9, t_end=0.08, lambda_mode=LambdaMode.CONSTANT, lambda0=0.0)
    outcome = advance(initial, params, fluid, grid)
    return check_lambda_conditions(initial, outcome.state, outcome.lam, fluid).worst_margin


def cmd_validate(symbol_hook: Optional[SymbolHook] = None) -> bool:
    """Run every check, print the check list and return the overall verdict."""
    print("🔍 APFLOW - VALIDATION SUITE")
    print("=" * 60)
    rng = np.random.default_rng(SEED)

    checks: List[Tuple[str, Callable[[], bool]]] = [
        ("Grad-div duality", lambda: check_operator_duality(rng)),
        ("Stencil matrix structure", lambda: check_dense_structure(rng)),
        ("Spectral vs dense solves", lambda: check_spectral_vs_dense(rng, symbol_hook)),
        ("Symbol bounds", lambda: check_symbol_bounds(rng)),
        ("Projection limit", lambda: check_projection_limit(rng)),
        ("Discrete identities", lambda: check_exact_identities(rng)),
        ("Mass conservation", lambda: check_mass_conservation(rng)),
        ("Preset positivity", lambda: check_preset_positivity(rng)),
        ("Well-prepared limit", lambda: check_well_prepared_limit(rng)),
    ]

    results = []
    for name, check in checks:
        try:
            results.append((name, bool(check())))
        except Exception as e:
            print(f"❌ {name} failed with error: {e}")
            results.append((name, False))

    try:
        margin = lambda_condition_advisory()
        print(f"ℹ️ Advisory: CAW step with lambda = 0 has worst lambda-condition margin {margin!r}")
    except ApflowError as e:
        print(f"⚠️ Advisory could not be evaluated: {e}")

    print("\n" + "=" * 60)
    print("📊 VALIDATION SUMMARY")
    print("=" * 60)
    passed = 0
    for name, result in results:
        print(f"{'✅ PASS' if result else '❌ FAIL'} {name}")
        passed += int(result)
    total = len(results)
    print(f"\n🎯 Overall: {passed}/{total} checks passed")
    if passed != total:
        print(f"\n⚠️ {total - passed} checks failed")
    return passed == total
