"""Variable exponent fields p(x) with certified bounds, and the
coefficient pair (a, b) entering the eigenvalue problem."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .fields import ScalarField, node_to_cell

__all__ = ["ExponentField", "ExponentBoundError", "validate_exponent", "CoefficientFields"]


class ExponentBoundError(ValueError):
    """The exponent bound 1 < p(x) is violated (or samples are non-finite)."""


@dataclass(frozen=True)
class ExponentField:
    """p(x) samples with certified bounds 1 < p_minus <= p(x) <= p_plus < inf.

    ``base`` holds the samples at the quadrature points (cell midpoints).
    The bounds are taken over the raw input samples, so a monotone p
    given on nodes keeps its exact endpoint values as p_minus/p_plus.
    ``lipschitz_estimate`` is the largest finite-difference slope between
    neighbouring raw samples; a value on the order of 1/h signals a jump
    (the theory requires a bounded gradient of p).
    """

    base: ScalarField
    p_minus: float
    p_plus: float
    lipschitz_estimate: float

    def __post_init__(self):
        if not (1.0 < self.p_minus <= self.p_plus < np.inf):
            raise ExponentBoundError(
                f"need 1 < p_minus <= p_plus < inf, got [{self.p_minus}, {self.p_plus}]"
            )
        q = self.base.quadrature_values()
        if q.min() < self.p_minus - 1e-12 or q.max() > self.p_plus + 1e-12:
            raise ExponentBoundError("quadrature samples escape the certified bounds")

    @property
    def grid(self):
        return self.base.grid

    @cached_property
    def quadrature_values(self) -> np.ndarray:
        return self.base.quadrature_values()

    def conjugate_values(self) -> np.ndarray:
        """Dual exponent p/(p-1) at the quadrature points."""
        p = self.quadrature_values
        return p / (p - 1.0)

    def sobolev_conjugate_values(self) -> np.ndarray:
        """n p/(n-p) where p < n, +inf elsewhere."""
        p = self.quadrature_values
        n = float(self.grid.dimension)
        out = np.full_like(p, np.inf)
        below = p < n
        out[below] = n * p[below] / (n - p[below])
        return out

    def rough_flag(self) -> bool:
        """True when the slope estimate indicates a jump at this resolution."""
        return self.lipschitz_estimate >= 0.5 / max(self.grid.spacing)


def _max_slope(values: np.ndarray, shape, spacing) -> float:
    v = values.reshape(shape)
    worst = 0.0
    for axis, h in enumerate(spacing):
        d = np.abs(np.diff(v, axis=axis)) / h
        if d.size:
            worst = max(worst, float(d.max()))
    return worst


def validate_exponent(raw: ScalarField) -> ExponentField:
    """Certify a sampled exponent field.

    Rejects any sample <= 1 (the strict bound p(x) > 1) and non-finite
    samples.  Node-based input is interpolated to the quadrature points;
    bounds and the Lipschitz estimate come from the raw samples.
    """
    values = raw.values
    if not np.isfinite(values).all():
        raise ExponentBoundError("exponent field has non-finite samples")
    p_min, p_max = float(values.min()), float(values.max())
    if p_min <= 1.0:
        raise ExponentBoundError(
            f"exponent bound violated: need p(x) > 1 everywhere, min sample is {p_min}"
        )
    shape = raw.grid.node_shape() if raw.locus == "nodes" else raw.grid.cell_shape()
    slope = _max_slope(values, shape, raw.grid.spacing)
    base = raw if raw.locus == "cells" else ScalarField(raw.grid, raw.quadrature_values(), "cells")
    return ExponentField(base=base, p_minus=p_min, p_plus=p_max, lipschitz_estimate=slope)


@dataclass(frozen=True)
class CoefficientFields:
    """Coefficients a (nonnegative) and b (with somewhere-positive part)."""

    a: ScalarField
    b: ScalarField

    def __post_init__(self):
        if self.a.grid is not self.b.grid and self.a.grid != self.b.grid:
            raise ValueError("a and b must share a grid")
        if self.a.values.min() < 0:
            raise ValueError("coefficient a must be nonnegative everywhere")
        if np.maximum(self.b.values, 0.0).max() <= 0.0:
            raise ValueError("coefficient b must have a nontrivial positive part")

    @property
    def grid(self):
        return self.a.grid

    def b_plus(self) -> np.ndarray:
        return np.maximum(self.b.values, 0.0)

    def b_minus(self) -> np.ndarray:
        return np.maximum(-self.b.values, 0.0)

    def a_quadrature(self) -> np.ndarray:
        return self.a.quadrature_values()

    def b_quadrature(self) -> np.ndarray:
        return self.b.quadrature_values()

    def b_sup(self) -> float:
        """The essential sup norm of b over the samples."""
        return float(np.abs(self.b.values).max())


def interpolate_coefficient(grid, field: ScalarField) -> np.ndarray:
    if field.locus == "cells":
        return field.values
    return node_to_cell(grid, field.values)
