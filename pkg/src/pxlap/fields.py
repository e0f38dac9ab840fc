"""Grid functions: scalar fields on nodes or quadrature points, cell
vector fields, sampling from expressions, and the discrete gradient."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .expressions import compile_expression
from .grids import GridSpec

__all__ = [
    "ScalarField",
    "VectorField",
    "sample_field",
    "discrete_gradient",
    "node_to_cell",
    "write_field_csv",
    "read_field_csv",
]


@dataclass(frozen=True)
class ScalarField:
    """Real values attached to grid nodes (``locus='nodes'``) or to cell
    midpoints (``locus='cells'``, the quadrature points)."""

    grid: GridSpec
    values: np.ndarray
    locus: str = "nodes"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "values", values)
        expected = self.grid.n_nodes if self.locus == "nodes" else self.grid.n_cells
        if self.locus not in ("nodes", "cells"):
            raise ValueError(f"locus must be 'nodes' or 'cells', got {self.locus!r}")
        if values.shape != (expected,):
            raise ValueError(
                f"value array has length {values.size}, grid expects {expected} ({self.locus})"
            )
        if not np.isfinite(values).all():
            raise ValueError("field contains non-finite values")

    @property
    def points(self) -> np.ndarray:
        return self.grid.node_points if self.locus == "nodes" else self.grid.cell_midpoints

    def reshaped(self) -> np.ndarray:
        shape = self.grid.node_shape() if self.locus == "nodes" else self.grid.cell_shape()
        return self.values.reshape(shape)

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.grid, values, self.locus)

    def __abs__(self) -> "ScalarField":
        return self.with_values(np.abs(self.values))

    def quadrature_values(self) -> np.ndarray:
        """Values at the quadrature points (interpolating if node-based)."""
        if self.locus == "cells":
            return self.values
        return node_to_cell(self.grid, self.values)


@dataclass(frozen=True)
class VectorField:
    """One real component per axis, attached to cell midpoints."""

    grid: GridSpec
    components: tuple[np.ndarray, ...] = field(default=())

    def __post_init__(self):
        comps = tuple(np.asarray(c, dtype=float).ravel() for c in self.components)
        object.__setattr__(self, "components", comps)
        if len(comps) != self.grid.dimension:
            raise ValueError(
                f"expected {self.grid.dimension} component(s), got {len(comps)}"
            )
        for c in comps:
            if c.shape != (self.grid.n_cells,):
                raise ValueError("component length does not match cell count")
            if not np.isfinite(c).all():
                raise ValueError("vector field contains non-finite values")

    def magnitude(self) -> np.ndarray:
        sq = np.zeros(self.grid.n_cells)
        for c in self.components:
            sq += c * c
        return np.sqrt(sq)


def node_to_cell(grid: GridSpec, node_values: np.ndarray) -> np.ndarray:
    """Average node values to cell midpoints (exact for affine fields)."""
    u = np.asarray(node_values, dtype=float).reshape(grid.node_shape())
    if grid.dimension == 1:
        return 0.5 * (u[:-1] + u[1:])
    return 0.25 * (u[:-1, :-1] + u[1:, :-1] + u[:-1, 1:] + u[1:, 1:]).ravel()


def sample_field(expression: str, grid: GridSpec, locus: str = "nodes") -> ScalarField:
    """Evaluate a closed-form expression at nodes or quadrature points.

    Raises :class:`~pxlap.expressions.ExpressionError` for malformed
    expressions and ``ValueError`` if the evaluation is non-finite
    anywhere on the requested locus.
    """
    if locus not in ("nodes", "cells"):
        raise ValueError(f"locus must be 'nodes' or 'cells', got {locus!r}")
    fn = compile_expression(expression, grid.dimension)
    points = grid.node_points if locus == "nodes" else grid.cell_midpoints
    values = fn(points)
    if not np.isfinite(values).all():
        raise ValueError(f"expression {expression!r} evaluates to non-finite values")
    return ScalarField(grid, values, locus)


def discrete_gradient(u: ScalarField) -> VectorField:
    """Cell-centered first differences of a node field.

    In 1D each cell gets (u_right - u_left)/h; in 2D each cell averages
    the two parallel edge differences per axis.  Exact for affine fields.
    """
    if u.locus != "nodes":
        raise ValueError("discrete_gradient expects a node-based field")
    grid = u.grid
    vals = u.reshaped()
    if grid.dimension == 1:
        gx = (vals[1:] - vals[:-1]) / grid.spacing[0]
        return VectorField(grid, (gx,))
    hx, hy = grid.spacing
    gx = 0.5 * ((vals[1:, :-1] - vals[:-1, :-1]) + (vals[1:, 1:] - vals[:-1, 1:])) / hx
    gy = 0.5 * ((vals[:-1, 1:] - vals[:-1, :-1]) + (vals[1:, 1:] - vals[1:, :-1])) / hy
    return VectorField(grid, (gx.ravel(), gy.ravel()))


def write_field_csv(u: ScalarField, path) -> None:
    """One row per sample point: coordinates then value, with a header."""
    names = ["x", "y"][: u.grid.dimension]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names + ["value"])
        for point, value in zip(u.points, u.values):
            writer.writerow([repr(float(c)) for c in point] + [repr(float(value))])


def read_field_csv(grid: GridSpec, path, locus: str = "nodes") -> ScalarField:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        values = [float(row[len(header) - 1]) for row in reader]
    return ScalarField(grid, np.asarray(values), locus)
