"""Variational core of the eigenvalue problem.

The discrete functional is assembled cell by cell with the midpoint rule:

    J_lam(u) = sum_c [ |G_c|^p_c + ((a_c - lam b_c)/p_c) |ubar_c|^p_c ] vol

where G_c is the cell gradient and ubar_c the cell average of u.  The weak
residual is the exact gradient of this discrete functional with respect to
the interior node values (discretize-then-differentiate), so central
finite differences of J reproduce it to rounding, and descent directions
for J are descent directions in exact arithmetic.

The gradient term carries no 1/p(x) weight: that factor sits inside the
divergence-form operator Div(p(x)|grad u|^{p(x)-2} grad u), whose weak
form is exactly the derivative of the unweighted integral of
|grad u|^{p(x)}.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .exponents import CoefficientFields, ExponentField
from .fields import ScalarField, discrete_gradient, node_to_cell
from .grids import GridSpec

__all__ = [
    "ProblemSpec",
    "EnergyBreakdown",
    "WeakResidual",
    "energy_A",
    "energy_B",
    "rayleigh",
    "functional_J",
    "weak_residual",
    "hessian_J",
]

# Floor applied to |G| in |G|^(p-2) factors when p < 2 only; cells with an
# exactly vanishing gradient would otherwise divide by zero.  For p >= 2
# the factor extends continuously by 0 and no floor is used.
_GRAD_FLOOR = 1e-14

_BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class ProblemSpec:
    """Grid, certified exponent and coefficients of one eigenvalue problem."""

    grid: GridSpec
    p: ExponentField
    coeffs: CoefficientFields

    def __post_init__(self):
        if self.p.grid != self.grid or self.coeffs.grid != self.grid:
            raise ValueError("exponent and coefficients must live on the problem grid")

    @cached_property
    def p_q(self) -> np.ndarray:
        return self.p.quadrature_values

    @cached_property
    def a_q(self) -> np.ndarray:
        return self.coeffs.a_quadrature()

    @cached_property
    def b_q(self) -> np.ndarray:
        return self.coeffs.b_quadrature()


@dataclass(frozen=True)
class EnergyBreakdown:
    """A, B, the Rayleigh quotient R = B/A and J = A - lam * B."""

    A: float
    B: float
    R: float
    J: float
    lam: float


@dataclass(frozen=True)
class WeakResidual:
    """Gradient of the discrete J_lam; zero on boundary nodes by construction.

    ``norm`` is the Euclidean norm of the entries scaled by the cell
    volume, a crude but monotone proxy for the dual norm.
    """

    residual: ScalarField
    norm: float


def _cell_data(u_values: np.ndarray, grid: GridSpec):
    """Cell gradient components, magnitude, and cell averages."""
    field = ScalarField(grid, u_values)
    grad = discrete_gradient(field)
    return grad.components, grad.magnitude(), node_to_cell(grid, u_values)


def _check_boundary(u: ScalarField) -> None:
    worst = float(np.abs(u.values[u.grid.boundary_mask]).max())
    scale = max(1.0, float(np.abs(u.values).max()))
    if worst > _BOUNDARY_TOL * scale:
        raise ValueError(
            f"field does not vanish on the boundary (max |u| there is {worst:.3e})"
        )


def _energies(u_values: np.ndarray, spec: ProblemSpec) -> tuple[float, float]:
    _, gmag, ubar = _cell_data(u_values, spec.grid)
    vol = spec.grid.cell_volume
    p = spec.p_q
    mass = np.abs(ubar) ** p / p
    a_val = float((gmag**p).sum() * vol + (spec.a_q * mass).sum() * vol)
    b_val = float((spec.b_q * mass).sum() * vol)
    return a_val, b_val


def energy_A(u: ScalarField, spec: ProblemSpec) -> float:
    """A(u) = int |grad u|^p + (a/p)|u|^p; requires u = 0 on the boundary."""
    _check_boundary(u)
    return _energies(u.values, spec)[0]


def energy_B(u: ScalarField, spec: ProblemSpec) -> float:
    """B(u) = int (b/p)|u|^p; requires u = 0 on the boundary."""
    _check_boundary(u)
    return _energies(u.values, spec)[1]


def rayleigh(u: ScalarField, spec: ProblemSpec) -> float:
    """R(u) = B(u)/A(u); rejects the zero field (A = 0)."""
    a_val, b_val = _energies(u.values, spec)
    if a_val <= 0.0:
        raise ValueError("Rayleigh quotient undefined: A(u) = 0 (zero field)")
    return b_val / a_val

def functional_J(u: ScalarField, lam: float, spec: ProblemSpec) -> float:
    """J_lam(u) = A(u) - lam * B(u)."""
    a_val, b_val = _energies(u.values, spec)
    return a_val - lam * b_val


def energy_breakdown(u: ScalarField, lam: float, spec: ProblemSpec) -> EnergyBreakdown:
    a_val, b_val = _energies(u.values, spec)
    r = b_val / a_val if a_val > 0 else np.nan
    return EnergyBreakdown(A=a_val, B=b_val, R=r, J=a_val - lam * b_val, lam=lam)


def _power_factor(mag: np.ndarray, p: np.ndarray) -> np.ndarray:
    """|g|^(p-2) with the degenerate-gradient convention."""
    out = np.zeros_like(mag)
    low = p < 2.0
    if low.any():
        floored = np.maximum(mag[low], _GRAD_FLOOR)
        out[low] = floored ** (p[low] - 2.0)
    high = ~low
    if high.any():
        m = mag[high]
        pm = p[high]
        nz = m > 0.0
        vals = np.zeros_like(m)
        vals[nz] = m[nz] ** (pm[nz] - 2.0)
        # p == 2 keeps factor 1 even at a vanishing gradient
        vals[(~nz) & (pm == 2.0)] = 1.0
        out[high] = vals
    return out


def _scatter_gradient(grid: GridSpec, cell_values_per_component) -> np.ndarray:
    """Adjoint of the cell-gradient map: accumulate cell quantities to nodes."""
    out = np.zeros(grid.node_shape())
    if grid.dimension == 1:
        (cx,) = cell_values_per_component
        out[:-1] -= cx
        out[1:] += cx
        return out.ravel()
    cx, cy = (c.reshape(grid.cell_shape()) for c in cell_values_per_component)
    out[:-1, :-1] += -cx - cy
    out[1:, :-1] += +cx - cy
    out[:-1, 1:] += -cx + cy
    out[1:, 1:] += +cx + cy
    return out.ravel()


def _scatter_average(grid: GridSpec, cell_values: np.ndarray) -> np.ndarray:
    out = np.zeros(grid.node_shape())
    if grid.dimension == 1:
        out[:-1] += cell_values
        out[1:] += cell_values
        return out.ravel() * 0.5
    c = cell_values.reshape(grid.cell_shape())
    out[:-1, :-1] += c
    out[1:, :-1] += c
    out[:-1, 1:] += c
    out[1:, 1:] += c
    return out.ravel() * 0.25


def gradient_J(u_values: np.ndarray, lam: float, spec: ProblemSpec) -> np.ndarray:
    """Exact gradient of the discrete J_lam w.r.t. node values (interior);
    boundary entries are zeroed."""
    grid = spec.grid
    comps, gmag, ubar = _cell_data(u_values, grid)
    vol = grid.cell_volume
    p = spec.p_q

    factor = _power_factor(gmag, p) * p  # p |G|^(p-2)
    per_axis = []
    for axis, comp in enumerate(comps):
        scale = 1.0 / grid.spacing[axis] if grid.dimension == 1 else 0.5 / grid.spacing[axis]
        per_axis.append(factor * comp * scale * vol)
    grad = _scatter_gradient(grid, per_axis)

    mass_factor = _power_factor(np.abs(ubar), p) * ubar  # |u|^(p-2) u
    grad += _scatter_average(grid, (spec.a_q - lam * spec.b_q) * mass_factor * vol)

    grad[grid.boundary_mask] = 0.0
    return grad


def gradient_B(u_values: np.ndarray, spec: ProblemSpec) -> np.ndarray:
    """Exact gradient of the discrete B(u); boundary entries zeroed."""
    grid = spec.grid
    ubar = node_to_cell(grid, u_values)
    mass_factor = _power_factor(np.abs(ubar), spec.p_q) * ubar
    grad = _scatter_average(grid, spec.b_q * mass_factor * grid.cell_volume)
    grad[grid.boundary_mask] = 0.0
    return grad


def weak_residual(u: ScalarField, lam: float, spec: ProblemSpec) -> WeakResidual:
    """Weak form of (E)_lam at u: the gradient of the discrete J_lam.

    Every term carries |u|^(p-2)u or |grad u|^(p-2) grad u, so the zero
    field has an identically zero residual.
    """
    _check_boundary(u)
    grad = gradient_J(u.values, lam, spec)
    norm = float(np.linalg.norm(grad) * spec.grid.cell_volume)
    return WeakResidual(residual=ScalarField(spec.grid, grad), norm=norm)


def _hessian_power_factors(mag, p, smooth_eps):
    """(|g|^(p-2), (p-2)|g|^(p-4)) smoothed near g = 0 for Newton use."""
    eps = smooth_eps + _GRAD_FLOOR
    m2 = mag * mag + eps * eps
    f1 = m2 ** ((p - 2.0) / 2.0)
    f2 = (p - 2.0) * m2 ** ((p - 4.0) / 2.0)
    return f1, f2


def hessian_J(u_values: np.ndarray, lam: float, spec: ProblemSpec) -> sp.csr_matrix:
    """Sparse Hessian of the discrete J_lam over all nodes.

    Rows/columns of boundary nodes are replaced by identity.  The
    gradient-power factors are smoothed on the scale of the mean gradient
    magnitude; this only perturbs the Newton model, never the residual.
    """
    grid = spec.grid
    comps, gmag, ubar = _cell_data(u_values, grid)
    vol = grid.cell_volume
    p = spec.p_q
    smooth = 1e-10 * (float(gmag.mean()) + 1.0)
    f1, f2 = _hessian_power_factors(gmag, p, smooth)

    n_loc = 2 if grid.dimension == 1 else 4
    if grid.dimension == 1:
        h = grid.spacing[0]
        s_axes = [np.array([-1.0, 1.0]) / h]
    else:
        hx, hy = grid.spacing
        s_axes = [
            np.array([-1.0, 1.0, -1.0, 1.0]) / (2.0 * hx),
            np.array([-1.0, -1.0, 1.0, 1.0]) / (2.0 * hy),
        ]
    avg = np.full(n_loc, 1.0 / n_loc)

    n_cells = grid.n_cells
    blocks = np.zeros((n_cells, n_loc, n_loc))

    # gradient term: p [ f1 I + f2 G G^T ] contracted with the per-axis maps
    for ai, sa in enumerate(s_axes):
        for bi, sb in enumerate(s_axes):
            coeff = p * f2 * comps[ai] * comps[bi]
            if ai == bi:
                coeff = coeff + p * f1
            blocks += coeff[:, None, None] * np.einsum("i,j->ij", sa, sb)[None, :, :]

    # mass term: (a - lam b)(p-1)|ubar|^(p-2) on the averaging map
    mass_mag = np.abs(ubar)
    mf = _power_factor(mass_mag, p) * (p - 1.0) * (spec.a_q - lam * spec.b_q)
    blocks += mf[:, None, None] * np.einsum("i,j->ij", avg, avg)[None, :, :]
    blocks *= vol

    if grid.dimension == 1:
        idx = np.arange(n_cells)
        cell_nodes = np.column_stack([idx, idx + 1])
    else:
        nx, ny = grid.node_counts
        ix, iy = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
        base = (ix * ny + iy).ravel()
        cell_nodes = np.column_stack([base, base + ny, base + 1, base + ny + 1])

    rows = np.repeat(cell_nodes, n_loc, axis=1).ravel()
    cols = np.tile(cell_nodes, (1, n_loc)).ravel()
    mat = sp.coo_matrix(
        (blocks.ravel(), (rows, cols)), shape=(grid.n_nodes, grid.n_nodes)
    ).tocsr()

    boundary = np.flatnonzero(grid.boundary_mask)
    keep = sp.diags(np.where(grid.boundary_mask, 0.0, 1.0))
    mat = keep @ mat @ keep + sp.coo_matrix(
        (np.ones(boundary.size), (boundary, boundary)), shape=mat.shape
    )
    return mat.tocsr()
