"""One-dimensional reduction of the degenerate 2D model field.

On the zero energy level of ``H = (xi1^2 + (xi2 - x1^nu/nu)^2 - W) / 2`` the
momentum ``k = xi2`` is conserved and ``x1`` oscillates in the effective
potential ``W - (k - x1^nu/nu)^2``.  This module locates the wells of that
potential and evaluates the period, drift-increment and action integrals
between turning points.

Note on normalization: ``period_T`` and ``drift_increment_I`` use the
``sqrt(2 * potential)`` denominator literally.  The time the Hamiltonian flow
above takes to cross the well (and the x2 displacement it produces) is
``sqrt(2)`` times these values.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import BracketError, DivergenceError, NoWellError
from .quadrature import QuadResult, graded_quad, turning_point_quad

# relative tolerance used to decide that a turning point sits on x1 = 0
DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class EffectiveModel:
    nu: int
    k: float
    W: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if int(self.nu) != self.nu or self.nu < 2:
            raise ValueError(f"nu must be an integer >= 2, got {self.nu}")
        if not self.W > 0:
            raise ValueError(f"well height W must be positive, got {self.W}")
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")


@dataclass(frozen=True)
class WellCensus:
    label: str  # one-well | merged | two-well | degenerate
    wells: tuple  # ((lo, hi), ...) ordered left to right
    degenerate: bool


def effective_potential(m, x1):
    x1 = np.asarray(x1, dtype=float)
    u = m.k - x1**m.nu / m.nu
    return m.W - u * u


def _root(c, nu):
    """Real solution of x^nu / nu = c with the sign of c (odd nu) or x >= 0."""
    return math.copysign(abs(nu * c) ** (1.0 / nu), c)


def well_census(m):
    nu, sw = m.nu, math.sqrt(m.W)
    lo_c, hi_c = m.k - sw, m.k + sw
    scale = max(1.0, abs(m.k), sw)
    lo_zero = abs(lo_c) <= DEGENERATE_TOL * scale
    hi_zero = abs(hi_c) <= DEGENERATE_TOL * scale
    if nu % 2:
        a = 0.0 if lo_zero else _root(lo_c, nu)
        b = 0.0 if hi_zero else _root(hi_c, nu)
        deg = lo_zero or hi_zero
        return WellCensus("degenerate" if deg else "one-well", ((a, b),), deg)
    if hi_c <= 0 or hi_zero:
        raise NoWellError(f"no classically allowed region for nu={nu}, k={m.k}, W={m.W}")
    R = _root(hi_c, nu)
    if lo_zero:
        return WellCensus("degenerate", ((-R, 0.0), (0.0, R)), True)
    if lo_c < 0:
        return WellCensus("one-well" if m.k <= 0 else "merged", ((-R, R),), False)
    r = _root(lo_c, nu)
    return WellCensus("two-well", ((-R, -r), (r, R)), False)


def turning_points(m, well="right"):
    """Turning points ``(x1_minus, x1_plus)`` of the selected well.

    ``well`` is "right" (the component furthest to the right, the default)
    or "left".  A single-well potential returns the same interval for both.
    Degenerate double roots are reported through ``well_census``.
    """
    census = well_census(m)
    if well == "right":
        return census.wells[-1]
    if well == "left":
        return census.wells[0]
    raise ValueError(f"well must be 'right' or 'left', got {well!r}")


def _powsum(x, e, nu):
    # (x^nu - e^nu) / (x - e)
    return sum(x**i * e ** (nu - 1 - i) for i in range(nu))


def _radicand(m, lo, hi):
    """Return f(x, dlo, dhi) evaluating the effective potential on [lo, hi].

    Each of the two factors (sqrt(W) -/+ u) is written as a difference of
    nu-th powers around the endpoint where it vanishes, so that the
    potential keeps full relative precision next to the turning points.
    """
    nu, sw, k = m.nu, math.sqrt(m.W), m.k
    lo_c, hi_c = k - sw, k + sw

    def factor_roots(c):
        out = []
        for e in (lo, hi):
            if abs(e**nu / nu - c) <= 1e-9 * max(1.0, abs(c)):
                out.append(e)
        return out

    p_roots, q_roots = factor_roots(lo_c), factor_roots(hi_c)

    def factor(x, dlo, dhi, roots, c, sign):
        # sign=+1: x^nu/nu - c ; sign=-1: c - x^nu/nu
        if not roots:
            return sign * (x**nu / nu - c)
        out = np.empty_like(x)
        near_lo = dlo <= dhi
        for mask, prefer_lo in ((near_lo, True), (~near_lo, False)):
            use_lo = lo in roots if prefer_lo else hi not in roots
            e, diff = (lo, dlo[mask]) if use_lo else (hi, -dhi[mask])
            out[mask] = sign * diff * _powsum(x[mask], e, nu) / nu
        return out

    def cv(x, dlo, dhi):
        p = factor(x, dlo, dhi, p_roots, lo_c, 1.0)
        q = factor(x, dlo, dhi, q_roots, hi_c, -1.0)
        return p * q

    return cv


def _well_integral(m, weight, well, rel_tol, abs_tol=0.0, allow_degenerate=False):
    census = well_census(m)
    if census.degenerate and not allow_degenerate:
        raise DivergenceError(
            f"degenerate turning point at x1=0 for nu={m.nu}, k={m.k}, W={m.W}"
        )
    lo, hi = turning_points(m, well)
    cv = _radicand(m, lo, hi)

    def integrand(x, dlo, dhi):
        return weight(x, cv(x, dlo, dhi))

    if census.label != "merged":
        return turning_point_quad(integrand, lo, hi, rel_tol=rel_tol, abs_tol=abs_tol)
    # even nu with the central bump just below the surface: the integrand is
    # even and nearly singular at x1 = 0, so fold and grade toward 0
    half = 0.5 * hi
    inner = graded_quad(
        lambda x: integrand(x, x - lo, hi - x), 0.0, half, rel_tol=rel_tol, abs_tol=abs_tol
    )
    outer = turning_point_quad(
        lambda x, dlo, dhi: integrand(x, x - lo, dhi), half, hi, rel_tol=rel_tol, abs_tol=abs_tol
    )
    return QuadResult(
        2.0 * (inner.value + outer.value), 2.0 * (inner.error + outer.error), inner.nodes + outer.nodes
    )


def period_T(m, well="right", rel_tol=1e-9):
    """``2 * int dx1 / sqrt(2 V)`` over the selected well."""
    res = _well_integral(m, lambda x, v: 2.0 / np.sqrt(2.0 * v), well, rel_tol)
    return res.value


def drift_increment_I(m, well="right", abs_tol=1e-10):
    """``2 * int (k - x1^nu/nu) dx1 / sqrt(2 V)`` over the selected well."""
    nu, k = m.nu, m.k
    res = _well_integral(
        m, lambda x, v: 2.0 * (k - x**nu / nu) / np.sqrt(2.0 * v), well, 1e-12, abs_tol
    )
    return res.value


def action(m, well="right", rel_tol=1e-11):
    """Closed-orbit action ``2 * int sqrt(V) dx1`` of the selected well.

    Finite at degenerate turning points, where the separatrix action of the
    selected half is returned.
    """
    res = _well_integral(
        m, lambda x, v: 2.0 * np.sqrt(np.maximum(v, 0.0)), well, rel_tol, allow_degenerate=True
    )
    return res.value


@dataclass(frozen=True)
class KStar:
    value: float
    dI_dk: float
    xtol: float


def find_kstar(nu, W=1.0, xtol=1e-10):
    """Momentum where the per-period drift increment changes sign.

    Odd ``nu`` gives 0 by symmetry.  For even ``nu`` the root is bracketed in
    (0, sqrt(W)) and refined by bisection.
    """
    if nu % 2:
        dk = 1e-4 * math.sqrt(W)
        slope = (
            drift_increment_I(EffectiveModel(nu, dk, W))
            - drift_increment_I(EffectiveModel(nu, -dk, W))
        ) / (2 * dk)
        return KStar(0.0, slope, 0.0)

    sw = math.sqrt(W)

    def I(k):
        return drift_increment_I(EffectiveModel(nu, k, W))

    a, b = 1e-3 * sw, (1.0 - 1e-3) * sw
    fa, fb = I(a), I(b)
    if not (fa < 0 < fb):
        raise BracketError(f"no sign change of I(k) on ({a}, {b}): I={fa}, {fb}")
    root = optimize.bisect(I, a, b, xtol=xtol, maxiter=200)
    dk = 1e-5 * sw
    slope = (I(root + dk) - I(root - dk)) / (2 * dk)
    return KStar(root, slope, xtol)
