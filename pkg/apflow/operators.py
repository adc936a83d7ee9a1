"""
Discrete operators on the periodic grid.

All operators are consistent difference quotients (they carry the factor
|σ|/|K| = 1/h), so div_h and grad_h approximate the continuous derivatives and
the face diffusion Σ_σ λ[φ] equals λ h L_c φ.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence, Tuple, Union

import numpy as np

from .errors import InvalidGrid, TooLarge
from .grid import FLAT_ORDER, FaceRef, Grid
from .settings import SOLVER_DEFAULTS


@dataclass(frozen=True)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise InvalidGrid(f"field shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidGrid("field contains non-finite values")
        object.__setattr__(self, "values", values)

    def flat(self) -> np.ndarray:
        return self.values.ravel(order=FLAT_ORDER)

    def integral(self) -> float:
        """Σ_K |K| φ_K."""
        return float(self.grid.cell_volume * np.sum(self.values))

    def mean(self) -> float:
        return float(np.mean(self.values))


@dataclass(frozen=True)
class VectorField:
    """One component array per axis, stacked as ``components[i]``."""
    grid: Grid
    components: np.ndarray

    def __post_init__(self):
        components = np.asarray(self.components, dtype=float)
        expected = (self.grid.dim,) + self.grid.shape
        if components.shape != expected:
            raise InvalidGrid(f"vector field shape {components.shape}, expected {expected}")
        if not np.all(np.isfinite(components)):
            raise InvalidGrid("vector field contains non-finite values")
        object.__setattr__(self, "components", components)

    def component(self, axis: int) -> ScalarField:
        return ScalarField(self.grid, self.components[axis])

    def norm(self) -> np.ndarray:
        """Euclidean length per cell."""
        return np.sqrt(np.sum(self.components ** 2, axis=0))

    @classmethod
    def from_components(cls, grid: Grid, parts: Sequence[np.ndarray]) -> "VectorField":
        return cls(grid, np.stack([np.asarray(p, dtype=float) for p in parts]))


Field = Union[ScalarField, VectorField]


class OpTag(str, Enum):
    DIV = "div"
    GRAD = "grad"
    LAP_COMPACT = "lap_compact"
    LAP_WIDE = "lap_wide"


# Array-level stencils. ``shift(a, o, axis)[K] == a[K + o e_axis]``.

def shift(values: np.ndarray, offset: int, axis: int) -> np.ndarray:
    return np.roll(values, -offset, axis=axis)


def jump_along(values: np.ndarray, axis: int) -> np.ndarray:
    """[φ] at the + face of every cell: φ_{K+e} − φ_K."""
    return shift(values, 1, axis) - values


def avg_along(values: np.ndarray, axis: int) -> np.ndarray:
    """avg(φ) at the + face of every cell."""
    return 0.5 * (shift(values, 1, axis) + values)


def central_difference(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (shift(values, 1, axis) - shift(values, -1, axis)) / (2.0 * h)


def div_array(components: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros(components.shape[1:])
    for axis in range(components.shape[0]):
        out += central_difference(components[axis], axis, h)
    return out


def grad_array(values: np.ndarray, h: float) -> np.ndarray:
    return np.stack([central_difference(values, axis, h) for axis in range(values.ndim)])


def lap_compact_array(values: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros(values.shape)
    for axis in range(values.ndim):
        out += shift(values, 1, axis) - 2.0 * values + shift(values, -1, axis)
    return out / h ** 2


# Face algebra

def face_jump(field: ScalarField, face: FaceRef) -> float:
    """φ_L − φ_K with L the neighbor across ``face``."""
    inner = field.values[field.grid.wrap(face.cell)]
    outer = field.values[face.neighbor(field.grid)]
    return float(outer - inner)


def face_avg(field: ScalarField, face: FaceRef) -> float:
    inner = field.values[field.grid.wrap(face.cell)]
    outer = field.values[face.neighbor(field.grid)]
    return float(0.5 * (outer + inner))


def oriented_faces(grid: Grid, cell: Tuple[int, ...]) -> Iterator[FaceRef]:
    """E(K): the 2d faces of one cell."""
    for axis in range(grid.dim):
        for orientation in (1, -1):
            yield FaceRef(cell=tuple(cell), axis=axis, orientation=orientation)


# Field operators

def div_h(v: VectorField) -> ScalarField:
    return ScalarField(v.grid, div_array(v.components, v.grid.h))


def grad_h(phi: ScalarField) -> VectorField:
    return VectorField(phi.grid, grad_array(phi.values, phi.grid.h))


def lap_compact(phi: ScalarField) -> ScalarField:
    return ScalarField(phi.grid, lap_compact_array(phi.values, phi.grid.h))


def lap_wide(phi: ScalarField) -> ScalarField:
    return div_h(grad_h(phi))


def dense_matrix(op_tag: Union[OpTag, str], grid: Grid) -> np.ndarray:
    """
    Explicit matrix of an operator, built column by column from indicator fields.

    Rows and columns follow the flat ordering of the grid (axis 0 fastest).
    GRAD maps N cells to dim*N entries (components stacked), DIV the reverse.
    """
    tag = OpTag(op_tag)
    n = grid.size
    if n > SOLVER_DEFAULTS["dense_cap"]:
        raise TooLarge(f"{n} cells exceed the dense oracle cap {SOLVER_DEFAULTS['dense_cap']}")

    def unflat(column: np.ndarray) -> np.ndarray:
        return column.reshape(grid.shape, order=FLAT_ORDER)

    if tag is OpTag.DIV:
        matrix = np.zeros((n, grid.dim * n))
        for axis in range(grid.dim):
            for j in range(n):
                components = np.zeros((grid.dim,) + grid.shape)
                indicator = np.zeros(n)
                indicator[j] = 1.0
                components[axis] = unflat(indicator)
                matrix[:, axis * n + j] = div_array(components, grid.h).ravel(order=FLAT_ORDER)
        return matrix

    rows = grid.dim * n if tag is OpTag.GRAD else n
    matrix = np.zeros((rows, n))
    for j in range(n):
        indicator = np.zeros(n)
        indicator[j] = 1.0
        values = unflat(indicator)
        if tag is OpTag.GRAD:
            result = grad_array(values, grid.h)
            matrix[:, j] = np.concatenate([c.ravel(order=FLAT_ORDER) for c in result])
        elif tag is OpTag.LAP_COMPACT:
            matrix[:, j] = lap_compact_array(values, grid.h).ravel(order=FLAT_ORDER)
        else:
            matrix[:, j] = div_array(grad_array(values, grid.h), grid.h).ravel(order=FLAT_ORDER)
    return matrix


def grad_component_matrix(grid: Grid, axis: int) -> np.ndarray:
    """Block ``axis`` of the dense gradient: the matrix D_axis."""
    n = grid.size
    return dense_matrix(OpTag.GRAD, grid)[axis * n:(axis + 1) * n]
