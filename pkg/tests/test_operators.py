from __future__ import annotations

import numpy as np
import pytest
from scipy import linalg

from apflow.errors import TooLarge
from apflow.grid import FaceRef, make_grid
from apflow.operators import (
    OpTag,
    ScalarField,
    VectorField,
    avg_along,
    dense_matrix,
    div_h,
    face_avg,
    face_jump,
    grad_component_matrix,
    grad_h,
    jump_along,
    lap_compact,
    lap_wide,
)


@pytest.fixture
def grid4():
    return make_grid(1, [4], [0.0], [1.0])


def test_constant_fields_map_to_zero(grid_2d) -> None:
    phi = ScalarField(grid_2d, np.full(grid_2d.shape, 3.0))
    v = VectorField(grid_2d, np.full((2,) + grid_2d.shape, -1.5))
    assert np.all(div_h(v).values == 0.0)
    assert np.all(grad_h(phi).components == 0.0)
    assert np.all(lap_compact(phi).values == 0.0)
    assert np.all(lap_wide(phi).values == 0.0)


def test_div_stencil_1d(grid4) -> None:
    v = VectorField(grid4, np.array([[0.0, 1.0, 0.0, -1.0]]))
    assert div_h(v).values == pytest.approx([4.0, 0.0, -4.0, 0.0])


def test_grad_stencil_1d(grid4) -> None:
    phi = ScalarField(grid4, np.array([0.0, 1.0, 0.0, -1.0]))
    assert grad_h(phi).components[0] == pytest.approx([4.0, 0.0, -4.0, 0.0])


def test_compact_laplacian_stencil_1d(grid4) -> None:
    phi = ScalarField(grid4, np.array([1.0, 0.0, 0.0, 0.0]))
    assert lap_compact(phi).values == pytest.approx([-32.0, 16.0, 0.0, 16.0])


def test_wide_laplacian_is_div_grad(grid_2d, rng) -> None:
    phi = ScalarField(grid_2d, rng.standard_normal(grid_2d.shape))
    assert np.array_equal(lap_wide(phi).values, div_h(grad_h(phi)).values)


def test_wide_laplacian_stencil_1d(grid_1d, rng) -> None:
    values = rng.standard_normal(grid_1d.shape)
    expected = (np.roll(values, -2) - 2.0 * values + np.roll(values, 2)) / (4.0 * grid_1d.h ** 2)
    assert lap_wide(ScalarField(grid_1d, values)).values == pytest.approx(expected, rel=1e-12, abs=1e-9)


def test_div_ignores_transverse_variation(grid_2d, rng) -> None:
    profile = rng.standard_normal(grid_2d.n_cells[1])
    first = np.tile(profile, (grid_2d.n_cells[0], 1))
    v = VectorField(grid_2d, np.stack([first, np.zeros(grid_2d.shape)]))
    assert np.all(div_h(v).values == 0.0)


@pytest.mark.parametrize("shape", [(8,), (17,), (32,), (6, 6), (8, 12)])
def test_grad_div_duality(shape, rng) -> None:
    dim = len(shape)
    grid = make_grid(dim, list(shape), [0.0] * dim, [s / shape[0] for s in shape])
    for _ in range(100):
        phi = ScalarField(grid, rng.standard_normal(grid.shape))
        psi = VectorField(grid, rng.standard_normal((dim,) + grid.shape))
        first = grid.cell_volume * np.sum(phi.values * div_h(psi).values)
        second = grid.cell_volume * np.sum(grad_h(phi).components * psi.components)
        scale = abs(first) + abs(second)
        assert abs(first + second) <= 1e-12 * scale


def test_divergence_sums_to_zero(grid_2d, rng) -> None:
    psi = VectorField(grid_2d, rng.standard_normal((2,) + grid_2d.shape))
    assert abs(div_h(psi).integral()) <= 1e-13


def test_face_jump_and_average(grid4) -> None:
    f = ScalarField(grid4, np.array([1.0, 3.0, 5.0, 7.0]))
    plus = FaceRef(cell=(0,), axis=0, orientation=1)
    minus = FaceRef(cell=(1,), axis=0, orientation=-1)
    assert face_jump(f, plus) == 2.0
    assert face_avg(f, plus) == 2.0
    assert face_jump(f, minus) == -2.0
    assert face_avg(f, minus) == 2.0
    wrap = FaceRef(cell=(3,), axis=0, orientation=1)
    assert face_jump(f, wrap) == -6.0


def test_face_algebra_on_constant(grid4) -> None:
    c = ScalarField(grid4, np.full(4, 2.5))
    face = FaceRef(cell=(2,), axis=0, orientation=-1)
    assert face_jump(c, face) == 0.0
    assert face_avg(c, face) == 2.5


def test_product_rule_spot_value(grid4) -> None:
    f = ScalarField(grid4, np.array([1.0, 3.0, 0.0, 0.0]))
    g = ScalarField(grid4, np.array([2.0, 4.0, 0.0, 0.0]))
    fg = ScalarField(grid4, f.values * g.values)
    face = FaceRef(cell=(0,), axis=0, orientation=1)
    assert face_jump(fg, face) == 10.0
    assert face_avg(f, face) * face_jump(g, face) + face_jump(f, face) * face_avg(g, face) == 10.0
    assert face_avg(fg, face) == face_avg(f, face) * face_avg(g, face) + 0.25 * face_jump(f, face) * face_jump(g, face)


def test_product_rule_and_algebraic_identity_random(grid_2d, rng) -> None:
    f = rng.standard_normal(grid_2d.shape)
    g = rng.standard_normal(grid_2d.shape)
    for axis in range(2):
        product_jump = avg_along(f, axis) * jump_along(g, axis) + jump_along(f, axis) * avg_along(g, axis)
        assert jump_along(f * g, axis) == pytest.approx(product_jump, abs=1e-13)
        algebraic = avg_along(f, axis) * avg_along(g, axis) + 0.25 * jump_along(f, axis) * jump_along(g, axis)
        assert avg_along(f * g, axis) == pytest.approx(algebraic, abs=1e-13)


def test_dense_compact_laplacian_is_circulant(grid4) -> None:
    matrix = dense_matrix(OpTag.LAP_COMPACT, grid4)
    assert np.array_equal(matrix[0], [-32.0, 16.0, 0.0, 16.0])
    assert np.array_equal(matrix, linalg.circulant([-32.0, 16.0, 0.0, 16.0]))


@pytest.mark.parametrize("grid", [make_grid(1, [6], [0.0], [1.0]), make_grid(2, [4, 5], [0.0, 0.0], [0.8, 1.0])])
def test_dense_matrix_structure(grid) -> None:
    compact = dense_matrix(OpTag.LAP_COMPACT, grid)
    wide = dense_matrix(OpTag.LAP_WIDE, grid)
    blocks = [grad_component_matrix(grid, axis) for axis in range(grid.dim)]
    assert np.array_equal(compact, compact.T)
    assert np.allclose(wide, wide.T)
    for block in blocks:
        assert np.array_equal(block, -block.T)
    assert np.allclose(sum(b @ b for b in blocks), wide)
    div = dense_matrix(OpTag.DIV, grid)
    grad = dense_matrix(OpTag.GRAD, grid)
    assert np.array_equal(div, -grad.T)


def test_dense_matrix_matches_stencil(grid_2d, rng) -> None:
    values = rng.standard_normal(grid_2d.shape)
    flat = values.ravel(order="F")
    expected = lap_compact(ScalarField(grid_2d, values)).values.ravel(order="F")
    assert dense_matrix("lap_compact", grid_2d) @ flat == pytest.approx(expected, rel=1e-12, abs=1e-10)


def test_wide_and_gradient_kernels_agree_on_odd_grid() -> None:
    grid = make_grid(1, [5], [0.0], [1.0])
    wide_kernel = linalg.null_space(dense_matrix(OpTag.LAP_WIDE, grid))
    grad_kernel = linalg.null_space(dense_matrix(OpTag.GRAD, grid))
    assert wide_kernel.shape[1] == grad_kernel.shape[1] == 1
    assert np.allclose(np.abs(wide_kernel[:, 0]), 1.0 / np.sqrt(5.0))


def test_even_grid_has_checkerboard_gradient_kernel() -> None:
    grid = make_grid(1, [6], [0.0], [1.0])
    assert linalg.null_space(dense_matrix(OpTag.GRAD, grid)).shape[1] == 2
    assert linalg.null_space(dense_matrix(OpTag.LAP_WIDE, grid)).shape[1] == 2


def test_dense_matrix_cap() -> None:
    grid = make_grid(2, [65, 65], [0.0, 0.0], [1.0, 1.0])
    with pytest.raises(TooLarge):
        dense_matrix(OpTag.LAP_COMPACT, grid)
