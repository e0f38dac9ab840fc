"""First-eigenpair computation by Rayleigh-quotient ascent with a Newton
polish.

``solve_first_eigenvalue`` maximizes R(v) = B(v)/A(v) by projected
steepest ascent: the ascent direction comes from the weak-residual
algebra (grad R is a negative multiple of the residual at lam = A/B), the
step starts from a Barzilai-Borwein guess and backtracks until R
increases, and every iteration finishes with a golden-section amplitude
search of R(t v) because the quotient is not scale-invariant when the
exponent varies.  ``refine_eigenpair`` runs damped Newton sweeps on the
weak residual with lam frozen at A/B per sweep, which supplies the tight
residual tolerances first-order ascent cannot reach on fine grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import minimize_scalar

from .energy import ProblemSpec, _cell_data, _energies, gradient_B, gradient_J, hessian_J
from .fields import ScalarField

__all__ = ["SolverOptions", "EigenResult", "SolverError",
           "solve_first_eigenvalue", "refine_eigenpair", "first_eigenpair"]

_REFINE_SWEEPS = 60


class SolverError(RuntimeError):
    """Raised for degenerate inputs (for example B(u) <= 0 on every restart)."""


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 5000
    tolerance: float = 1e-8
    step_rule: str = "backtracking"
    amplitude_bracket: tuple[float, float] = (1e-3, 1e3)
    restarts: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        t_min, t_max = self.amplitude_bracket
        if not (0 < t_min < 1 < t_max):
            raise ValueError("amplitude bracket must satisfy t_min < 1 < t_max")
        if self.restarts < 1:
            raise ValueError("need at least one restart")
        if self.step_rule != "backtracking":
            raise ValueError(f"unknown step rule {self.step_rule!r}")


@dataclass(frozen=True)
class EigenResult:
    """First eigenpair estimate with its convergence record.

    ``lambda1`` is exactly A(u)/B(u) for the reported eigenfunction;
    ``amplitude_at_optimum`` is the sup norm of the eigenfunction (the
    scale at which the amplitude search settled); ``initial_rayleigh`` is
    R of the first iterate with B > 0, the explicit witness for the
    upper eigenvalue bound.
    """

    lambda1: float
    eigenfunction: ScalarField
    residual_norm: float
    iterations: int
    amplitude_at_optimum: float
    trace: tuple[tuple[int, float, float], ...]
    converged: bool
    initial_rayleigh: float
    flags: tuple[str, ...] = field(default=())


def _initial_values(spec: ProblemSpec, rng: np.random.Generator) -> np.ndarray:
    grid = spec.grid
    points = grid.node_points
    values = np.ones(grid.n_nodes)
    for axis, (lo, hi) in enumerate(grid.extents):
        t = (points[:, axis] - lo) / (hi - lo)
        values *= np.sin(np.pi * t)
    values += 0.01 * rng.standard_normal(grid.n_nodes)
    values[grid.boundary_mask] = 0.0
    return values


def _rayleigh_raw(u_values: np.ndarray, spec: ProblemSpec) -> tuple[float, float, float]:
    a_val, b_val = _energies(u_values, spec)
    r = b_val / a_val if a_val > 0 else -np.inf
    return a_val, b_val, r


def _amplitude_search(u_values, spec, bracket) -> tuple[np.ndarray, float, bool]:
    """Golden-section maximization of R(t u) over log t in the bracket.

    For a constant exponent R(t u) = R(u) identically, so the search is
    skipped there (homogeneity is exact, not approximate).
    """
    r_old = _rayleigh_raw(u_values, spec)[2]
    if spec.p.p_plus - spec.p.p_minus < 1e-14:
        return u_values, r_old, False
    lo, hi = np.log(bracket[0]), np.log(bracket[1])

    def negative_r(log_t: float) -> float:
        return -_rayleigh_raw(np.exp(log_t) * u_values, spec)[2]

    res = minimize_scalar(negative_r, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-9})
    t_best = float(np.exp(res.x))
    r_new = -res.fun
    at_edge = res.x - lo < 1e-6 or hi - res.x < 1e-6
    if r_new > r_old * (1 + 1e-14) + 1e-300:
        return t_best * u_values, r_new, at_edge
    return u_values, r_old, False


def _radial_stationary(u_values: np.ndarray, spec: ProblemSpec, bracket) -> float:
    """Amplitude t at which R(t u) is stationary, by safeguarded scalar
    Newton on psi(t) = d/dt [ log B(t u) - log A(t u) ] cleared of its
    positive prefactor.  Returns 1.0 when the exponent is constant (psi
    vanishes identically) or the iteration leaves the bracket.
    """
    if spec.p.p_plus - spec.p.p_minus < 1e-14:
        return 1.0
    _, gmag, ubar = _cell_data(u_values, spec.grid)
    vol = spec.grid.cell_volume
    p = spec.p_q
    alpha = (gmag**p) * vol                      # gradient part of A
    beta = (spec.a_q / p) * np.abs(ubar) ** p * vol
    gamma = (spec.b_q / p) * np.abs(ubar) ** p * vol
    ab = alpha + beta

    def psi_and_slope(t: float) -> tuple[float, float]:
        tp = t**p
        tp1 = t ** (p - 1.0)
        tp2 = t ** (p - 2.0)
        a_val = float(ab @ tp)
        b_val = float(gamma @ tp)
        a1 = float((p * ab) @ tp1)
        b1 = float((p * gamma) @ tp1)
        a2 = float((p * (p - 1.0) * ab) @ tp2)
        b2 = float((p * (p - 1.0) * gamma) @ tp2)
        lam = a_val / b_val
        psi = a1 - lam * b1
        dlam = (a1 * b_val - a_val * b1) / b_val**2
        dpsi = a2 - dlam * b1 - lam * b2
        return psi, dpsi

    t = 1.0
    lo, hi = bracket
    for _ in range(60):
        psi, dpsi = psi_and_slope(t)
        scale = float((p * ab) @ (t ** (p - 1.0))) + 1e-300
        if abs(psi) <= 1e-15 * scale:
            return t
        if dpsi == 0.0:
            return t
        t_new = t - psi / dpsi
        if not np.isfinite(t_new) or not (lo < t_new < hi):
            return t
        if abs(t_new - t) <= 1e-16 * t:
            return t_new
        t = t_new
    return t


def _ascent(spec: ProblemSpec, opts: SolverOptions, rng: np.random.Generator):
    u = _initial_values(spec, rng)
    a_val, b_val, r_val = _rayleigh_raw(u, spec)
    if b_val <= 0:
        return None  # degenerate start; caller tries the next restart
    initial_rayleigh = r_val

    trace: list[tuple[int, float, float]] = []
    flags: set[str] = set()
    prev_u = prev_g = None
    step = None
    res_norm = np.inf
    vol = spec.grid.cell_volume

    for it in range(opts.max_iterations):
        lam = a_val / b_val
        grad_j = gradient_J(u, lam, spec)
        res_norm = float(np.linalg.norm(grad_j) * vol)
        trace.append((it, r_val, res_norm))
        if res_norm < opts.tolerance:
            break

        direction = -(b_val / a_val**2) * grad_j  # grad of R
        if prev_u is not None:
            du = u - prev_u
            dg = prev_g - direction  # gradient change of -R
            denom = float(dg @ dg)
            step_bb = float(du @ dg) / denom if denom > 0 else None
            if step_bb is not None and step_bb > 0:
                step = step_bb
        if step is None or not np.isfinite(step) or step <= 0:
            gmax = float(np.abs(direction).max())
            step = 0.05 * max(1.0, float(np.abs(u).max())) / max(gmax, 1e-30)
        prev_u, prev_g = u.copy(), direction.copy()

        accepted = False
        s = step
        for _ in range(60):
            trial = u + s * direction
            _, b_t, r_t = _rayleigh_raw(trial, spec)
            if b_t > 0 and r_t > r_val:
                u, r_val = trial, r_t
                accepted = True
                break
            s *= 0.5
        if not accepted:
            u, r_val, at_edge = _amplitude_search(u, spec, opts.amplitude_bracket)
            if at_edge:
                flags.add("amplitude_bracket_edge")
            a_val, b_val, r_val = _rayleigh_raw(u, spec)
            trace.append((it, r_val, res_norm))
            break

        u, r_val, at_edge = _amplitude_search(u, spec, opts.amplitude_bracket)
        if at_edge:
            flags.add("amplitude_bracket_edge")
        a_val, b_val, r_val = _rayleigh_raw(u, spec)

    u = np.abs(u)  # J_lam(u) = J_lam(|u|): report the nonnegative branch
    u[spec.grid.boundary_mask] = 0.0
    a_val, b_val, _ = _rayleigh_raw(u, spec)
    if b_val <= 0:
        return None
    lam = a_val / b_val
    res_norm = float(np.linalg.norm(gradient_J(u, lam, spec)) * vol)
    converged = res_norm < opts.tolerance
    if not converged:
        flags.add("not_converged")
    return EigenResult(
        lambda1=lam,
        eigenfunction=ScalarField(spec.grid, u),
        residual_norm=res_norm,
        iterations=len(trace),
        amplitude_at_optimum=float(np.abs(u).max()),
        trace=tuple(trace),
        converged=converged,
        initial_rayleigh=initial_rayleigh,
        flags=tuple(sorted(flags)),
    )


def solve_first_eigenvalue(spec: ProblemSpec, opts: SolverOptions | None = None) -> EigenResult:
    """Best eigenpair over seeded restarts (lowest residual wins, earliest
    restart breaking ties).  Raises :class:`SolverError` when every restart
    starts from B <= 0, which signals a degenerate coefficient b."""
    opts = opts or SolverOptions()
    best: EigenResult | None = None
    for restart in range(opts.restarts):
        rng = np.random.default_rng([opts.seed, restart])
        result = _ascent(spec, opts, rng)
        if result is None:
            continue
        if best is None or result.residual_norm < best.residual_norm:
            best = result
    if best is None:
        raise SolverError("every restart produced B(u) <= 0; b has no usable positive part")
    return best


def _newton_direction(u, lam, res, b_val, spec, interior):
    """Direction from the bordered, rank-one-corrected Newton system.

    The base matrix pairs the Hessian of J_lam with the constraint
    delta . u = 0 (removing the scaling null direction of constant
    exponents); the Sherman-Morrison update accounts for the dependence
    of lam = A/B on u, which couples amplitude and shape when the
    exponent varies.
    """
    hess = hessian_J(u, lam, spec)
    h_ii = hess[interior][:, interior].tocsc()
    w = u[interior]
    scale = max(float(np.abs(w).max()), 1e-30)
    bordered = sp.bmat(
        [[h_ii, (w / scale)[:, None]], [(w / scale)[None, :], None]], format="csc"
    )
    lu = spla.splu(bordered)
    rhs = np.concatenate([-res[interior], [0.0]])
    x = lu.solve(rhs)
    c = np.concatenate([gradient_B(u, spec)[interior] / b_val, [0.0]])
    d = np.concatenate([res[interior], [0.0]])
    bc = lu.solve(c)
    denom = 1.0 - float(d @ bc)
    if abs(denom) > 1e-14:
        x = x + bc * (float(d @ x) / denom)
    delta = x[:-1]
    if not np.isfinite(delta).all():
        raise FloatingPointError("Newton direction is not finite")
    return delta


def refine_eigenpair(result: EigenResult, spec: ProblemSpec,
                     opts: SolverOptions | None = None) -> EigenResult:
    """Fixed-point polish of an eigenpair estimate.

    Each sweep freezes lam = A/B, takes one damped Newton step on the weak
    residual, re-solves the radial stationarity of R along the iterate and
    recomputes lam.  Steps are accepted on residual-norm decrease; while
    still far from the attractor a step that strictly increases R is
    accepted instead (the quotient is the actual objective), and the
    best-residual iterate is kept throughout.  If the very first sweep can
    make no progress the input is returned unchanged with a divergence
    flag.
    """
    opts = opts or SolverOptions()
    grid = spec.grid
    vol = grid.cell_volume
    interior = np.flatnonzero(grid.interior_mask)
    u = result.eigenfunction.values.copy()
    a_val, b_val = _energies(u, spec)
    if b_val <= 0:
        raise SolverError("refine_eigenpair: B(u) = 0, nothing to polish")
    lam = a_val / b_val
    res = gradient_J(u, lam, spec)
    res_norm = float(np.linalg.norm(res) * vol)
    trace = list(result.trace)
    flags = set(result.flags)
    it_base = result.iterations

    best = (u.copy(), lam, res_norm)
    stall = 0
    sweeps = 0
    while res_norm >= opts.tolerance and sweeps < _REFINE_SWEEPS:
        try:
            delta = _newton_direction(u, lam, res, b_val, spec, interior)
        except (RuntimeError, FloatingPointError, ValueError):
            # singular or non-finite linear algebra; keep the best iterate
            if sweeps == 0:
                flags.add("refine_divergence")
                return replace(result, flags=tuple(sorted(flags)))
            break

        r_cur = b_val / a_val
        accepted = None
        fallback = None
        s = 1.0
        for _ in range(20):
            trial = u.copy()
            trial[interior] = u[interior] + s * delta
            a_t, b_t = _energies(trial, spec)
            if b_t > 0 and np.isfinite(a_t):
                t_rad = _radial_stationary(trial, spec, opts.amplitude_bracket)
                trial = t_rad * trial
                a_t, b_t = _energies(trial, spec)
                lam_t = a_t / b_t
                res_t = gradient_J(trial, lam_t, spec)
                norm_t = float(np.linalg.norm(res_t) * vol)
                if np.isfinite(norm_t):
                    if norm_t < res_norm:
                        accepted = (trial, a_t, b_t, lam_t, res_t, norm_t)
                        break
                    r_t = b_t / a_t
                    if fallback is None and r_t > r_cur * (1 + 1e-15):
                        fallback = (trial, a_t, b_t, lam_t, res_t, norm_t)
            s *= 0.5
        if accepted is None:
            accepted = fallback
        if accepted is None:
            if sweeps == 0:
                flags.add("refine_divergence")
                return replace(result, flags=tuple(sorted(flags)))
            break
        u, a_val, b_val, lam, res, res_norm = accepted
        sweeps += 1
        trace.append((it_base + sweeps, b_val / a_val, res_norm))

        if res_norm < best[2]:
            best = (u.copy(), lam, res_norm)
            stall = 0
        else:
            stall += 1
            if stall >= 10:
                break

    u = np.abs(best[0])
    u[grid.boundary_mask] = 0.0
    a_val, b_val = _energies(u, spec)
    lam = a_val / b_val
    res_norm = float(np.linalg.norm(gradient_J(u, lam, spec)) * vol)
    converged = res_norm < opts.tolerance
    flags.discard("not_converged")
    if not converged:
        flags.add("not_converged")
    return EigenResult(
        lambda1=lam,
        eigenfunction=ScalarField(grid, u),
        residual_norm=res_norm,
        iterations=it_base + sweeps,
        amplitude_at_optimum=float(np.abs(u).max()),
        trace=tuple(trace),
        converged=converged,
        initial_rayleigh=result.initial_rayleigh,
        flags=tuple(sorted(flags)),
    )


def _interpolate_to(values: np.ndarray, coarse, fine) -> np.ndarray:
    from scipy.interpolate import RegularGridInterpolator

    interp = RegularGridInterpolator(
        coarse.axis_coords, values.reshape(coarse.node_shape()), method="linear"
    )
    out = interp(fine.node_points)
    out[fine.boundary_mask] = 0.0
    return out


def _continuation_ladder(grid) -> list:
    """Coarse-to-fine grid sequence ending at the target grid."""
    ladder = [grid]
    counts = grid.node_counts
    while max(counts) > 80:
        counts = tuple(max(3, (n + 1) // 2) for n in counts)
        from .grids import build_grid

        ladder.append(build_grid(grid.dimension, grid.extents, counts))
    return ladder[::-1]


def first_eigenpair(spec: ProblemSpec, opts: SolverOptions | None = None) -> EigenResult:
    """Ascent plus Newton polish with coarse-to-fine continuation.

    The seeded ascent explores on a coarse companion grid where its
    conditioning is harmless; each finer level starts from the
    interpolated solution and only needs the Newton polish.  This is the
    standard pipeline used by the command line runner and the checks.
    """
    from .exponents import CoefficientFields, validate_exponent
    from .fields import ScalarField as SF

    opts = opts or SolverOptions()
    ladder = _continuation_ladder(spec.grid)

    def spec_on(grid) -> ProblemSpec:
        if grid is spec.grid:
            return spec
        from scipy.interpolate import RegularGridInterpolator

        def resample_nodes(field):
            interp = RegularGridInterpolator(
                spec.grid.axis_coords, field.values.reshape(spec.grid.node_shape())
            )
            return SF(grid, interp(grid.node_points))

        mids = [0.5 * (c[:-1] + c[1:]) for c in spec.grid.axis_coords]
        interp_p = RegularGridInterpolator(
            mids, spec.p.quadrature_values.reshape(spec.grid.cell_shape())
        )
        p_vals = np.clip(interp_p(grid.cell_midpoints), spec.p.p_minus, spec.p.p_plus)
        p = validate_exponent(SF(grid, p_vals, "cells"))
        coeffs = CoefficientFields(resample_nodes(spec.coeffs.a), resample_nodes(spec.coeffs.b))
        return ProblemSpec(grid, p, coeffs)

    explore = replace(opts, max_iterations=min(opts.max_iterations, 300))
    coarse_spec = spec_on(ladder[0])
    result = solve_first_eigenvalue(coarse_spec, explore)
    result = refine_eigenpair(result, coarse_spec, opts)

    prev_grid = ladder[0]
    for grid in ladder[1:]:
        level_spec = spec_on(grid)
        values = _interpolate_to(result.eigenfunction.values, prev_grid, grid)
        carried = replace(
            result,
            eigenfunction=SF(grid, values),
            trace=result.trace,
        )
        result = refine_eigenpair(carried, level_spec, opts)
        prev_grid = grid
    return result
