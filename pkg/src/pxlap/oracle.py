"""Constant-exponent shooting oracle for 1D validation.

For constant p, a = 0, b = 1 on (0, L) the eigenvalue equation reads

    -p (|u'|^(p-2) u')' = lam |u|^(p-2) u,   u(0) = u(L) = 0,

matching the A/B normalization used everywhere else (gradient energy
unweighted, mass energy weighted by 1/p).  Writing v = |u'|^(p-2) u' for
the flux gives the first-order system

    u' = sign(v) |v|^(1/(p-1)),    v' = -(lam/p) |u|^(p-2) u,

which is integrated from u(0) = 0, v(0) = 1; the position of the first
interior zero of u decreases monotonically in lam, so bisection on lam
places the zero at x = L.  At p = 2 this reproduces 2 pi^2 / L^2, which
doubles as the calibration case.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

__all__ = ["constant_p_oracle", "OracleBracketError"]


class OracleBracketError(RuntimeError):
    """The shooting bracket could not straddle the target length."""


def _first_zero(lam: float, p: float, x_max: float) -> float:
    """Location of the first interior zero of the shooting solution, or inf."""
    inv = 1.0 / (p - 1.0)

    def rhs(_x, y):
        u, v = y
        return (np.sign(v) * np.abs(v) ** inv, -(lam / p) * np.abs(u) ** (p - 2.0) * u)

    def crossing(_x, y):
        return y[0]

    crossing.terminal = True
    crossing.direction = -1.0

    sol = solve_ivp(
        rhs,
        (0.0, x_max),
        (0.0, 1.0),
        events=crossing,
        rtol=1e-12,
        atol=1e-14,
        dense_output=False,
        max_step=x_max / 50.0,
    )
    events = sol.t_events[0]
    zeros = events[events > 1e-12]
    return float(zeros[0]) if zeros.size else np.inf


def constant_p_oracle(p_const: float, length: float, rel_tol: float = 1e-10) -> float:
    """First eigenvalue for p = p_const, a = 0, b = 1 on (0, length).

    Bisection on lam until the first zero crossing of the shooting
    solution lands at x = length; accuracy is limited by the integrator
    tolerances (around 1e-10 relative).
    """
    if p_const <= 1.0:
        raise ValueError("p must exceed 1")
    if length <= 0.0:
        raise ValueError("length must be positive")

    x_max = 8.0 * length

    # grow a bracket: larger lam -> earlier zero
    lam_lo, lam_hi = 1.0, 1.0
    for _ in range(200):
        if _first_zero(lam_lo, p_const, x_max) > length:
            break
        lam_lo *= 0.5
    else:
        raise OracleBracketError("could not push the first zero beyond the interval")
    for _ in range(200):
        if _first_zero(lam_hi, p_const, x_max) < length:
            break
        lam_hi *= 2.0
    else:
        raise OracleBracketError("could not pull the first zero inside the interval")

    while (lam_hi - lam_lo) > rel_tol * lam_hi:
        lam_mid = 0.5 * (lam_lo + lam_hi)
        if _first_zero(lam_mid, p_const, x_max) > length:
            lam_lo = lam_mid
        else:
            lam_hi = lam_mid
    return 0.5 * (lam_lo + lam_hi)
