"""Variable-exponent Lebesgue/Sobolev kernel: the modular, the Luxemburg
norm obtained by bisection, the first-order Sobolev norm, and a sampled
lower bound for the Poincare constant.

With 1 < p_minus <= p_plus < inf the modular is plainly the integral of
|u(x)|^p(x); the essential-sup branch of the general definition is empty
here and never represented.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exponents import ExponentField
from .fields import ScalarField, VectorField, discrete_gradient
from .grids import GridSpec

__all__ = [
    "ModularValue",
    "LuxemburgNorm",
    "modular",
    "luxemburg_norm",
    "sobolev_norm",
    "poincare_constant_estimate",
]


@dataclass(frozen=True)
class ModularValue:
    """Midpoint-rule value of the modular integral for one field."""

    value: float
    exponent: ExponentField
    integrand_kind: str  # "function" or "gradient"

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class LuxemburgNorm:
    """Root of modular(u/L) = 1 with the bracket the bisection ended on."""

    value: float
    bracket: tuple[float, float]
    iterations: int

    def __float__(self) -> float:
        return self.value


def _quadrature_samples(u, p: ExponentField) -> tuple[np.ndarray, str]:
    if isinstance(u, VectorField):
        if u.grid != p.grid:
            raise ValueError("field and exponent live on different grids")
        return u.magnitude(), "gradient"
    if isinstance(u, ScalarField):
        if u.grid != p.grid:
            raise ValueError("field and exponent live on different grids")
        return np.abs(u.quadrature_values()), "function"
    raise TypeError(f"expected ScalarField or VectorField, got {type(u).__name__}")


def _modular_of_samples(samples: np.ndarray, pq: np.ndarray, vol: float) -> float:
    return float(np.sum(samples**pq) * vol)


def modular(u, p: ExponentField) -> ModularValue:
    """Integral of |u(x)|^p(x) over the domain (midpoint rule).

    Vector fields contribute their Euclidean magnitude per cell.
    """
    samples, kind = _quadrature_samples(u, p)
    value = _modular_of_samples(samples, p.quadrature_values, p.grid.cell_volume)
    return ModularValue(value=value, exponent=p, integrand_kind=kind)


def luxemburg_norm(
    u,
    p: ExponentField,
    tol: float = 1e-12,
    max_iterations: int = 200,
) -> LuxemburgNorm:
    """inf { L > 0 : modular(u / L) <= 1 } by bracketed bisection.

    The map L -> modular(u/L) is strictly decreasing for a nonzero field,
    so a geometric bracket grown from L = 1 always straddles 1 and the
    bisection cannot fail; the zero field returns norm 0.  Terminates when
    the bracket width drops below tol * max(1, value).
    """
    samples, _ = _quadrature_samples(u, p)
    pq = p.quadrature_values
    vol = p.grid.cell_volume
    if not samples.any():
        return LuxemburgNorm(value=0.0, bracket=(0.0, 0.0), iterations=0)

    def rho(lam: float) -> float:
        return _modular_of_samples(samples / lam, pq, vol)

    lo = hi = 1.0
    iterations = 0
    while rho(hi) > 1.0:
        hi *= 2.0
        iterations += 1
        if iterations > max_iterations:
            raise RuntimeError("luxemburg_norm bracket growth failed to cap the modular")
    while rho(lo) < 1.0 and lo > 0.0:
        lo *= 0.5
        iterations += 1
        if iterations > max_iterations:
            raise RuntimeError("luxemburg_norm bracket shrink failed to reach the modular")

    while hi - lo > tol * max(1.0, hi) and iterations < max_iterations:
        mid = 0.5 * (lo + hi)
        if rho(mid) > 1.0:
            lo = mid
        else:
            hi = mid
        iterations += 1
    if hi - lo > tol * max(1.0, hi):
        raise RuntimeError(f"luxemburg_norm did not converge in {max_iterations} iterations")
    return LuxemburgNorm(value=0.5 * (lo + hi), bracket=(lo, hi), iterations=iterations)


def sobolev_norm(u: ScalarField, p: ExponentField) -> float:
    """||u||_p + sum over axes of ||du/dx_i||_p (first-order Sobolev norm)."""
    total = luxemburg_norm(u, p).value
    grad = discrete_gradient(u)
    for component in grad.components:
        comp_field = ScalarField(u.grid, component, "cells")
        total += luxemburg_norm(comp_field, p).value
    return total


def _sine_bump(grid: GridSpec, modes) -> np.ndarray:
    points = grid.node_points
    values = np.ones(grid.n_nodes)
    for axis, ((lo, hi), k) in enumerate(zip(grid.extents, modes)):
        t = (points[:, axis] - lo) / (hi - lo)
        values *= np.sin(np.pi * k * t)
    return values


def poincare_constant_estimate(
    grid: GridSpec,
    p: ExponentField,
    sample_count: int,
    seed: int,
    extra_fields: tuple[ScalarField, ...] = (),
) -> float:
    """Sampled lower bound on the constant C in
    modular(u) <= C * modular(grad u) over fields vanishing on the boundary.

    The first sample is the fundamental sine bump (whose ratio attains the
    constant in the classical p = 2 case); further samples are seeded
    random low-mode combinations, plus any caller-provided fields such as
    solver output.  Samples with zero gradient are skipped.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    best = 0.0
    candidates: list[np.ndarray] = [_sine_bump(grid, (1,) * grid.dimension)]
    while len(candidates) < sample_count:
        values = np.zeros(grid.n_nodes)
        for _ in range(3):
            modes = rng.integers(1, 5, size=grid.dimension)
            values += rng.normal() * _sine_bump(grid, modes)
        candidates.append(values)
    for extra in extra_fields:
        candidates.append(np.where(grid.boundary_mask, 0.0, extra.values))

    for values in candidates:
        u = ScalarField(grid, np.where(grid.boundary_mask, 0.0, values))
        grad = discrete_gradient(u)
        denom = modular(grad, p).value
        if denom <= 0.0:
            continue
        best = max(best, modular(u, p).value / denom)
    return best
