"""Uniform tensor grids on intervals and rectangles.

Nodes carry the unknowns, cells (the boxes between adjacent nodes) carry
quadrature points at their midpoints.  The homogeneous Dirichlet condition
is represented by the boundary-node mask; solvers constrain those entries
to zero rather than penalising them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = ["GridSpec", "build_grid"]


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a uniform grid on an interval (1D) or rectangle (2D).

    Attributes
    ----------
    dimension : 1 or 2
    extents : tuple of (lo, hi) per axis
    node_counts : nodes per axis, each >= 3
    spacing : node spacing per axis (derived)
    """

    dimension: int
    extents: tuple[tuple[float, float], ...]
    node_counts: tuple[int, ...]
    spacing: tuple[float, ...]

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.node_counts))

    @property
    def n_cells(self) -> int:
        return int(np.prod([n - 1 for n in self.node_counts]))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def measure(self) -> float:
        return float(np.prod([hi - lo for lo, hi in self.extents]))

    @cached_property
    def axis_coords(self) -> tuple[np.ndarray, ...]:
        return tuple(
            np.linspace(lo, hi, n) for (lo, hi), n in zip(self.extents, self.node_counts)
        )

    @cached_property
    def node_points(self) -> np.ndarray:
        """All node coordinates, shape (n_nodes, dimension), C-ordered."""
        mesh = np.meshgrid(*self.axis_coords, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    @cached_property
    def cell_midpoints(self) -> np.ndarray:
        """Quadrature points (cell midpoints), shape (n_cells, dimension)."""
        mids = [0.5 * (c[:-1] + c[1:]) for c in self.axis_coords]
        mesh = np.meshgrid(*mids, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        """Boolean mask over nodes, True on the Dirichlet boundary."""
        masks = []
        for n in self.node_counts:
            m = np.zeros(n, dtype=bool)
            m[0] = m[-1] = True
            masks.append(m)
        mesh = np.meshgrid(*masks, indexing="ij")
        out = np.zeros(self.node_counts, dtype=bool)
        for m in mesh:
            out |= m
        return out.ravel()

    @property
    def interior_mask(self) -> np.ndarray:
        return ~self.boundary_mask

    def node_shape(self) -> tuple[int, ...]:
        return self.node_counts

    def cell_shape(self) -> tuple[int, ...]:
        return tuple(n - 1 for n in self.node_counts)

    def contains_ball(self, center, radius: float) -> bool:
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if center.shape != (self.dimension,):
            raise ValueError(
                f"ball center must have {self.dimension} coordinate(s), got {center.shape}"
            )
        if radius <= 0:
            return False
        slack = 1e-12 * max(abs(hi) + abs(lo) + 1.0 for lo, hi in self.extents)
        return all(
            lo - slack <= c - radius and c + radius <= hi + slack
            for c, (lo, hi) in zip(center, self.extents)
        )

    def refine(self, factor: int = 2) -> "GridSpec":
        """Grid with (n-1)*factor + 1 nodes per axis on the same extents."""
        counts = tuple((n - 1) * factor + 1 for n in self.node_counts)
        return build_grid(self.dimension, self.extents, counts)


def build_grid(dimension: int, extents, node_counts) -> GridSpec:
    """Build a uniform grid.

    Parameters
    ----------
    dimension : 1 or 2
    extents : (lo, hi) for 1D, or sequence of two (lo, hi) pairs for 2D
    node_counts : int or sequence of per-axis node counts, each >= 3
    """
    if dimension not in (1, 2):
        raise ValueError(f"dimension must be 1 or 2, got {dimension}")

    ext = np.asarray(extents, dtype=float)
    if ext.ndim == 1:
        ext = ext.reshape(1, 2)
    if ext.shape != (dimension, 2):
        raise ValueError(f"expected {dimension} (lo, hi) extent pair(s), got shape {ext.shape}")

    counts = np.atleast_1d(np.asarray(node_counts, dtype=int))
    if counts.shape != (dimension,):
        raise ValueError(f"expected {dimension} node count(s), got {counts.tolist()}")

    for (lo, hi) in ext:
        if not np.isfinite([lo, hi]).all() or hi <= lo:
            raise ValueError(f"extent ({lo}, {hi}) has non-positive measure")
    for n in counts:
        if n < 3:
            raise ValueError(f"need at least 3 nodes per axis, got {int(n)}")

    spacing = tuple(float((hi - lo) / (n - 1)) for (lo, hi), n in zip(ext, counts))
    return GridSpec(
        dimension=dimension,
        extents=tuple((float(lo), float(hi)) for lo, hi in ext),
        node_counts=tuple(int(n) for n in counts),
        spacing=spacing,
    )
