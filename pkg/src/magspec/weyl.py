"""Magnetic Weyl density and the 2D Landau-level density.

    E(x) = Omega_{d-2r} (2 pi)^(r-d) mu^r h^(r-d) f_1...f_r sqrt(g)
           * sum_alpha (2E + V - sum_j (2 alpha_j + 1) f_j mu h)_+^(d/2 - r)

The power-0 plus part is the Heaviside function with theta(0) = 0.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import AccuracyError
from .quadrature import _gauss_legendre


def unit_ball_volume(k):
    """Volume of the unit ball in R^k (1 for k = 0)."""
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


@dataclass(frozen=True)
class WeylParams:
    d: int
    r: int
    f: tuple
    V: float
    E: float
    mu: float
    h: float
    g: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "f", tuple(float(v) for v in self.f))
        if not (0 <= 2 * self.r <= self.d):
            raise ValueError(f"need 0 <= 2r <= d, got d={self.d}, r={self.r}")
        if len(self.f) != self.r:
            raise ValueError(f"expected {self.r} intensities, got {len(self.f)}")
        if any(not v > 0 for v in self.f):
            raise ValueError("intensities must be positive")
        if not (self.mu > 0 and self.h > 0 and self.g > 0):
            raise ValueError("mu, h and g must be positive")


@dataclass(frozen=True)
class DensityValue:
    value: float
    terms: int
    bounds: tuple  # per-coordinate alpha ranges scanned
    largest_discarded: float = 0.0


def _plus_power(a, p):
    if p == 0:
        return 1.0 if a > 0 else 0.0
    return a**p if a > 0 else 0.0


def _levels_below(top, step):
    """``#{n >= 0 : top - (2n + 1) step > 0}``, with the same float comparison
    as a direct loop (the predicate is monotone in n)."""
    if not top - step > 0:
        return 0
    n = max(1, int((top / step - 1.0) / 2.0))
    while top - (2 * n + 1) * step > 0:
        n += 1
    while n > 1 and not top - (2 * (n - 1) + 1) * step > 0:
        n -= 1
    return n


def _active_alphas(budget, steps):
    """Multi-indices with ``budget - sum (2 a_j + 1) steps_j > 0``, lexicographic."""
    out = []

    def rec(prefix, j, rest):
        if j == len(steps):
            out.append(tuple(prefix))
            return
        a = 0
        while rest - (2 * a + 1) * steps[j] > 0:
            rec(prefix + [a], j + 1, rest - (2 * a + 1) * steps[j])
            a += 1

    rec([], 0, budget)
    return out


def magnetic_weyl_density(p):
    """Evaluate the magnetic Weyl expression at one point.

    The bracket is read as ``2E + V - sum(...)``; the extra trailing ``-V``
    in the printed formula would contradict the d=2 Landau density.
    """
    d, r = p.d, p.r
    expo = d / 2 - r
    top = 2.0 * p.E + p.V
    steps = [fj * p.mu * p.h for fj in p.f]
    total = 0.0
    terms = 0
    if r == 0:
        total = _plus_power(top, expo)
        terms = int(top > 0)
    elif r == 1:
        terms = _levels_below(top, p.f[0] * p.mu * p.h)
        if expo and terms:
            n = np.arange(terms)
            total = float(np.sum((top - (2 * n + 1) * (p.f[0] * p.mu * p.h)) ** expo))
    else:
        alphas = _active_alphas(top, steps)
        for alpha in alphas:
            s = 0.0
            for a, fj in zip(alpha, p.f):
                s += (2 * a + 1) * (fj * p.mu * p.h)
            val = _plus_power(top - s, expo)
            if val > 0:
                total += val
                terms += 1
    bounds = tuple(max(0, math.ceil(top / (2 * st))) for st in steps)
    pref = unit_ball_volume(d - 2 * r) * (2.0 * math.pi) ** (r - d) * p.mu**r * p.h ** (r - d)
    for fj in p.f:
        pref *= fj
    pref *= math.sqrt(p.g)
    return DensityValue(terms * pref if expo == 0 else total * pref, terms, bounds)


def landau_density_2d(f, V, g, mu, h, tau):
    """``(2 pi)^-1 sum_n theta(2 tau + V - (2n+1) mu h f) mu h^-1 f sqrt(g)``."""
    if not f > 0:
        raise ValueError("f must be positive")
    top = 2.0 * tau + V
    n = _levels_below(top, f * mu * h)
    pref = 1.0 * (2.0 * math.pi) ** (-1) * mu**1 * h ** (-1) * f * math.sqrt(g)
    return n * pref


def landau_jumps(f, V, mu, h, n_levels):
    """Thresholds ``tau_n`` where the 2D density jumps, and the jump size."""
    taus = [0.5 * ((2 * n + 1) * mu * h * f - V) for n in range(n_levels)]
    return taus, mu / h * f / (2.0 * math.pi)


# --- integration against a cutoff --------------------------------------------


@dataclass(frozen=True)
class DensityField:
    """Pointwise Weyl data: callables of x for the intensities, V and g."""

    d: int
    intensities: Callable  # x -> sequence of f_j(x) > 0 (may be empty)
    V: Callable
    E: float
    mu: float
    h: float
    g: Callable = lambda x: 1.0

    def at(self, x):
        f = tuple(self.intensities(x))
        return magnetic_weyl_density(
            WeylParams(self.d, len(f), f, float(self.V(x)), self.E, self.mu, self.h, float(self.g(x)))
        )


@dataclass(frozen=True)
class DensityIntegral:
    value: float
    error: float
    converged: bool
    panels: int


def _find_breaks(count, lo, hi, clo, chi, min_width, out):
    """Append the points in (lo, hi) where ``count`` changes value."""
    if hi - lo <= min_width:
        out.append(0.5 * (lo + hi))
        return
    mid = 0.5 * (lo + hi)
    cm = count(mid)
    if cm != clo:
        _find_breaks(count, lo, mid, clo, cm, min_width, out)
    if cm != chi:
        _find_breaks(count, mid, hi, cm, chi, min_width, out)


def _smooth_piece(fun, lo, hi, rel, min_width):
    t, w = _gauss_legendre(8)
    t2, w2 = _gauss_legendre(16)
    half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
    coarse = half * sum(wi * fun(mid + half * ti) for ti, wi in zip(t, w))
    fine = half * sum(wi * fun(mid + half * ti) for ti, wi in zip(t2, w2))
    if abs(fine - coarse) <= rel * abs(fine) or hi - lo <= min_width:
        return fine
    return _smooth_piece(fun, lo, mid, rel, min_width) + _smooth_piece(fun, mid, hi, rel, min_width)


def _line_integral(fun, count, a, b, samples, rel):
    """Integrate a piecewise smooth ``fun`` on [a, b]; pieces split where
    ``count`` changes.  Change points closer than ``rel * (b - a)`` are
    not resolved further."""
    xs = np.linspace(a, b, samples + 1)
    cs = [count(x) for x in xs]
    breaks = [a]
    min_width = rel * (b - a)
    for x0, x1, c0, c1 in zip(xs, xs[1:], cs, cs[1:]):
        if c0 != c1:
            _find_breaks(count, x0, x1, c0, c1, min_width, breaks)
        breaks.append(x1)
    total = 0.0
    for lo, hi in zip(breaks, breaks[1:]):
        if hi > lo:
            total += _smooth_piece(fun, lo, hi, rel, min_width)
    return total


def integrate_density(
    field, psi, box: Sequence, rel_tol=1e-6, panels=2, order=6, samples=128, max_panels=64, inner_axis=-1
):
    """``int E(x) psi(x) dx`` over the box ``[(lo, hi), ...]``.

    Coordinate ``inner_axis`` (pick the one across which the intensities
    vary) is integrated line by line with breakpoints at the
    jumps of the term count; the others use composite Gauss-Legendre whose
    panel count doubles until the relative change drops below ``rel_tol``.
    Non-convergence emits a warning and returns the last estimate.
    """
    box = [(float(a), float(b)) for a, b in box]
    if len(box) != field.d:
        raise ValueError("box dimension does not match the field")
    ax = inner_axis % field.d
    outer, (a, b) = box[:ax] + box[ax + 1 :], box[ax]

    def inner(y):
        def fun(t):
            x = np.insert(y, ax, t)
            return field.at(x).value * psi(x)

        def count(t):
            return field.at(np.insert(y, ax, t)).terms

        return _line_integral(fun, count, a, b, samples, rel_tol)

    if not outer:
        v = inner(np.array([]))
        return DensityIntegral(v, 0.0, True, 1)

    t, w = _gauss_legendre(order)

    def rule(n):
        nodes, weights = [], []
        for lo, hi in outer:
            edges = np.linspace(lo, hi, n + 1)
            half = 0.5 * np.diff(edges)
            mid = 0.5 * (edges[1:] + edges[:-1])
            nodes.append((mid[:, None] + half[:, None] * t).ravel())
            weights.append((half[:, None] * w).ravel())
        grids = np.meshgrid(*nodes, indexing="ij")
        wgrid = np.ones_like(grids[0])
        for i, wt in enumerate(weights):
            shape = [1] * len(weights)
            shape[i] = -1
            wgrid = wgrid * wt.reshape(shape)
        pts = np.stack([g.ravel() for g in grids], axis=1)
        return float(sum(wi * inner(p) for wi, p in zip(wgrid.ravel(), pts)))

    val = prev = rule(panels)
    n, err = panels, math.inf
    while n < max_panels:
        n *= 2
        val = rule(n)
        err = abs(val - prev)
        if err <= rel_tol * abs(val) or (val == 0.0 and prev == 0.0):
            return DensityIntegral(val, err, True, n)
        prev = val
    warnings.warn(f"density integral not converged: change {err:.3e} at {n} panels", RuntimeWarning)
    return DensityIntegral(val, err, False, n)


def degenerate_model_field(nu, mu, h, V=1.0, E=0.0):
    """d=2 density for ``f = |x1|^(nu-1)``; points with f = 0 carry no terms."""

    def intensities(x):
        f = abs(x[0]) ** (nu - 1)
        return (f,) if f > 0 else ()

    return DensityField(2, intensities, lambda x: V, E, mu, h)


def check_accuracy(result, rel_tol):
    if not result.converged:
        raise AccuracyError(f"density integral error {result.error:.3e} above tolerance {rel_tol}")
    return result
