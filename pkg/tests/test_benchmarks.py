from __future__ import annotations

import math

import numpy as np
import pytest

from apflow.benchmarks import (
    GRESHO_RADIUS,
    PRESETS,
    caw_init,
    convergence_time,
    get_preset,
    gresho_angular_velocity,
    gresho_init,
    gresho_pressure_deviation,
    list_presets,
    riemann_init,
    spp_init,
    vortex_init,
    vortex_profile,
)
from apflow.errors import ConfigError, UnknownProblem, WrongDimension
from apflow.grid import make_grid
from apflow.operators import div_array
from apflow.scheme import LambdaMode


def test_spp_values_at_quarter_point() -> None:
    grid = make_grid(1, [6], [0.0], [1.0])
    state = spp_init(grid, 0.5)
    assert state.rho.values[1] == pytest.approx(1.25)
    assert state.velocity().components[0][1] == pytest.approx(1.5)


def test_spp_tends_to_constant_density() -> None:
    grid = make_grid(1, [16], [0.0], [1.0])
    assert spp_init(grid, 1e-9).rho.values == pytest.approx(np.ones(16), abs=1e-15)


@pytest.mark.parametrize("n", [7, 16, 50])
def test_spp_mean_density_is_one(n) -> None:
    grid = make_grid(1, [n], [0.0], [1.0])
    assert spp_init(grid, 0.5).rho.mean() == pytest.approx(1.0, abs=1e-12)


def test_caw_values() -> None:
    odd = caw_init(make_grid(1, [5], [-1.0], [2.0]), 0.1)
    assert odd.rho.values[2] == pytest.approx(0.955)
    assert odd.m.components[0][2] == pytest.approx(0.0, abs=1e-12)

    even = caw_init(make_grid(1, [6], [-1.0], [2.0]), 0.1)
    assert even.rho.values[4] == pytest.approx(1.055)
    assert even.velocity().components[0][1] == pytest.approx(2.0 * math.sqrt(1.4))
    assert even.velocity().components[0][1] == pytest.approx(2.3664, abs=1e-4)
    assert even.velocity().components[0][4] == pytest.approx(-2.0 * math.sqrt(1.4))


def test_riemann_pieces() -> None:
    grid = make_grid(1, [10], [0.0], [1.0])
    state = riemann_init(grid, 0.3)
    assert state.rho.values[0] == 1.0
    assert state.m.components[0][0] == pytest.approx(0.955)
    assert state.rho.values[2] == pytest.approx(1.09)
    assert state.m.components[0][2] == pytest.approx(1.0)
    assert state.m.components[0][5] == pytest.approx(1.045)

    sharp = riemann_init(grid, 0.05)
    assert sharp.rho.values[7] == pytest.approx(0.9975)
    assert sharp.m.components[0][7] == pytest.approx(1.0)


def test_gresho_profiles_are_continuous_at_seams() -> None:
    for seam in (GRESHO_RADIUS / 2.0, GRESHO_RADIUS):
        below, above = gresho_angular_velocity(np.array([seam - 1e-13, seam + 1e-13]))
        assert below == pytest.approx(above, abs=1e-11)
        p_below, p_above = gresho_pressure_deviation(np.array([seam - 1e-13, seam + 1e-13]))
        assert p_below == pytest.approx(p_above, abs=1e-11)
    assert gresho_angular_velocity(GRESHO_RADIUS / 2.0) == pytest.approx(1.0)
    assert gresho_pressure_deviation(GRESHO_RADIUS) == pytest.approx(0.0, abs=1e-14)


def test_gresho_center_and_corner() -> None:
    grid = make_grid(2, [5, 5], [0.0, 0.0], [1.0, 1.0])
    state = gresho_init(grid, 0.1)
    u = state.velocity().components
    assert (u[0][2, 2], u[1][2, 2]) == pytest.approx((0.1, 0.0))
    assert gresho_pressure_deviation(0.0) == pytest.approx(2.0 - math.log(16.0))
    assert gresho_pressure_deviation(0.0) == pytest.approx(-0.7726, abs=1e-4)
    assert state.rho.values[2, 2] == pytest.approx(1.0 + 0.01 * (2.0 - math.log(16.0)) / 1.4)
    assert state.rho.values[0, 0] == 1.0
    assert (u[0][0, 0], u[1][0, 0]) == (pytest.approx(0.1), 0.0)


def test_vortex_profile_values() -> None:
    assert vortex_profile(0.0) == pytest.approx(2.125)
    assert vortex_profile(math.pi) == pytest.approx(-1.875 + 0.75 * math.pi ** 2)


def test_vortex_center_and_background() -> None:
    grid = make_grid(2, [5, 5], [0.0, 0.0], [1.0, 1.0])
    eps = 0.1
    state = vortex_init(grid, eps)
    u = state.velocity().components
    deviation = eps ** 2 * (1.5 / (4.0 * math.pi)) ** 2 * (2.125 - (-1.875 + 0.75 * math.pi ** 2))
    assert state.rho.values[2, 2] == pytest.approx(110.0 + deviation)
    assert (u[0][2, 2], u[1][2, 2]) == pytest.approx((0.6, 0.0))
    assert state.rho.values[0, 0] == 110.0
    assert (u[0][0, 0], u[1][0, 0]) == pytest.approx((0.6, 0.0))


def test_vortex_data_is_periodic() -> None:
    grid = make_grid(2, [20, 20], [0.0, 0.0], [1.0, 1.0])
    state = vortex_init(grid, 0.1)
    for values in (state.rho.values, *state.velocity().components):
        assert np.array_equal(values[0, :], values[:, 0])
        assert np.all(values[0, :] == values[0, 0])


@pytest.mark.parametrize(
    "init, grid",
    [
        (spp_init, make_grid(2, [4, 4], [0.0, 0.0], [1.0, 1.0])),
        (caw_init, make_grid(2, [4, 4], [0.0, 0.0], [1.0, 1.0])),
        (riemann_init, make_grid(2, [4, 4], [0.0, 0.0], [1.0, 1.0])),
        (gresho_init, make_grid(1, [4], [0.0], [1.0])),
        (vortex_init, make_grid(1, [4], [0.0], [1.0])),
    ],
)
def test_initializers_check_dimension(init, grid) -> None:
    with pytest.raises(WrongDimension):
        init(grid, 0.1)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_give_positive_density(name) -> None:
    preset = get_preset(name)
    n = 100 if preset.dim == 1 else 20
    grid = make_grid(preset.dim, [n] * preset.dim, list(preset.origin), list(preset.length))
    for eps in preset.epsilons:
        assert np.all(preset.initial_state(grid, eps).rho.values > 0)


@pytest.mark.parametrize("name", ["spp", "caw", "riemann"])
def test_one_dimensional_momentum_divergence_telescopes(name) -> None:
    preset = get_preset(name)
    grid = make_grid(1, [40], list(preset.origin), list(preset.length))
    state = preset.initial_state(grid, preset.epsilons[0])
    assert abs(grid.cell_volume * np.sum(div_array(state.m.components, grid.h))) <= 1e-13


def test_preset_registry() -> None:
    assert list_presets() == ["spp", "caw", "riemann", "gresho", "gresho-contour", "vortex"]
    assert get_preset(" Gresho ").name == "gresho"
    with pytest.raises(UnknownProblem):
        get_preset("sod")
    with pytest.raises(ConfigError):
        get_preset("sod")


def test_preset_parameters() -> None:
    gresho = get_preset("gresho")
    assert gresho.lambda_mode is LambdaMode.ADAPTIVE
    assert [gresho.c_for(e) for e in gresho.epsilons] == [100.0, 200.0, 200.0]
    assert get_preset("gresho-contour").c_for(0.1) == 30.0
    assert gresho.cfl_for(0.001) == 0.1
    assert get_preset("riemann").cfl_for(0.8) == 0.1
    assert get_preset("vortex").rho0 == 110.0
    assert get_preset("caw").rho0 is None
    assert get_preset("spp").c_for(0.5) == 1.0


def test_lookup_uses_nearest_epsilon_on_log_scale() -> None:
    spp = get_preset("spp")
    assert spp.cfl_for(0.05) == 0.8
    assert spp.cfl_for(0.005) == 0.1


def test_convergence_times() -> None:
    assert convergence_time("spp", 0.5) == 0.1
    assert convergence_time("spp", 0.01) == 0.05
    assert convergence_time("gresho", 0.1) == pytest.approx(0.4 * math.pi)
    assert convergence_time("vortex", 0.1) == pytest.approx(1.0 / 0.6)
    assert get_preset("caw").t_end_for(0.1) == 0.08
