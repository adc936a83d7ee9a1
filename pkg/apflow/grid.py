"""
Uniform periodic structured mesh.

Cells are squares (1D: intervals) of width h on a torus. Fields are stored as
numpy arrays of shape ``grid.shape`` indexed ``[i_0, i_1]`` with axis 0 the
x_1 direction. Whenever a field is flattened (dense matrices, field files) the
order is Fortran-style, i.e. axis 0 varies fastest.
"""

import math
from dataclasses import dataclass
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from .errors import InvalidGrid, NonSquareCells, TooFewCells
from .settings import SOLVER_DEFAULTS

FLAT_ORDER = "F"


@dataclass(frozen=True)
class Grid:
    dim: int
    n_cells: Tuple[int, ...]
    origin: Tuple[float, ...]
    length: Tuple[float, ...]
    h: float

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.n_cells

    @property
    def size(self) -> int:
        """Total cell count Π N_i."""
        return int(np.prod(self.n_cells))

    @property
    def cell_volume(self) -> float:
        """|K| = h^d."""
        return self.h ** self.dim

    @property
    def face_area(self) -> float:
        """|σ| = h^(d-1)."""
        return self.h ** (self.dim - 1)

    @property
    def domain_volume(self) -> float:
        return float(np.prod(self.length))

    def centers(self) -> List[np.ndarray]:
        """Cell-center coordinate arrays, one per axis, each of shape ``self.shape``."""
        axes = [
            self.origin[i] + (np.arange(self.n_cells[i]) + 0.5) * self.h
            for i in range(self.dim)
        ]
        return list(np.meshgrid(*axes, indexing="ij"))

    def wrap(self, index: Sequence[int]) -> Tuple[int, ...]:
        return tuple(int(k) % n for k, n in zip(index, self.n_cells))

    def cells(self) -> Iterator[Tuple[int, ...]]:
        """All cell multi-indices, axis 0 fastest."""
        for flat in range(self.size):
            yield tuple(int(k) for k in np.unravel_index(flat, self.n_cells, order=FLAT_ORDER))

    def faces(self) -> Iterator["FaceRef"]:
        """Every face exactly once, as the + face of the cell on its lower side."""
        for cell in self.cells():
            for axis in range(self.dim):
                yield FaceRef(cell=cell, axis=axis, orientation=1)

    @property
    def n_faces(self) -> int:
        return self.dim * self.size


@dataclass(frozen=True)
class FaceRef:
    """Face σ = K|L seen from cell K: the face on the ``orientation`` side along ``axis``."""
    cell: Tuple[int, ...]
    axis: int
    orientation: int  # +1 or -1, the sign of n_{σ,K} along axis

    def neighbor(self, grid: Grid) -> Tuple[int, ...]:
        other = list(self.cell)
        other[self.axis] += self.orientation
        return grid.wrap(other)

    def normal(self, grid: Grid) -> np.ndarray:
        n = np.zeros(grid.dim)
        n[self.axis] = float(self.orientation)
        return n


def make_grid(
    dim: int,
    n_cells: Sequence[int],
    origin: Sequence[float],
    length: Sequence[float],
) -> Grid:
    """Build a periodic grid with square cells."""
    if dim not in (1, 2):
        raise InvalidGrid(f"dim must be 1 or 2, got {dim}")
    if not (len(n_cells) == len(origin) == len(length) == dim):
        raise InvalidGrid(f"expected {dim} entries for n_cells, origin and length")

    n_cells = tuple(int(n) for n in n_cells)
    origin = tuple(float(x) for x in origin)
    length = tuple(float(x) for x in length)

    min_cells = SOLVER_DEFAULTS["min_cells"]
    for axis, n in enumerate(n_cells):
        if n < min_cells:
            raise TooFewCells(f"axis {axis} has {n} cells, at least {min_cells} are required")
    for axis, extent in enumerate(length):
        if not extent > 0 or not math.isfinite(extent):
            raise InvalidGrid(f"axis {axis} length must be positive, got {extent}")

    h = length[0] / n_cells[0]
    for axis in range(1, dim):
        h_axis = length[axis] / n_cells[axis]
        if abs(h_axis - h) > SOLVER_DEFAULTS["square_tolerance"] * abs(h):
            raise NonSquareCells(f"cell widths differ: h_1 = {h!r}, h_{axis + 1} = {h_axis!r}")

    return Grid(dim=dim, n_cells=n_cells, origin=origin, length=length, h=h)


def cell_center(grid: Grid, index: Sequence[int]) -> Tuple[float, ...]:
    """origin_i + (K_i + 1/2) h per axis; indices wrap."""
    wrapped = grid.wrap(index)
    return tuple(grid.origin[i] + (wrapped[i] + 0.5) * grid.h for i in range(grid.dim))


def refine(grid: Grid, factor: int) -> Grid:
    """Same domain with ``factor`` times as many cells per axis."""
    return make_grid(
        grid.dim,
        [n * factor for n in grid.n_cells],
        grid.origin,
        grid.length,
    )
