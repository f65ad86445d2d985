"""Short-periodic-orbit correction for the degenerate 2D zone.

The auxiliary operator on the line is

    a0 = (hbar^2 D^2 + (xi2 - x^nu/nu)^2 - W) / 2.

Its eigenvalues below ``tau`` are counted either from a finite-difference
matrix (Sturm sequences) or by Bohr-Sommerfeld quantization of the action

    S(E) = 2 int sqrt(2 (E - q(x))) dx,   S(E_n) = 2 pi hbar (n + 1/2).

The correction is ``(2 pi h)^-1 int n0 dxi2 - int E0 dx1`` where E0 is the
Landau density of the scaled model (f = |x1|^(nu-1), mu = 1, h = hbar).
Writing ``L_n = 2 pi hbar (n + 1/2)`` both integrals become sums over n of
the measure of ``{xi2 : S(xi2) > L_n}`` and its Landau counterpart, which
are paired level by level before summation.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize, special

from . import sturm
from .errors import AccuracyError, MultiWellError, NoWellError, ResolutionError, WindowError
from .model import EffectiveModel, action, find_kstar, period_T, well_census


def _root(c, nu):
    return math.copysign(abs(nu * c) ** (1.0 / nu), c)


@dataclass(frozen=True)
class HarmonicOperator1D:
    """``(hbar^2 D^2 + omega^2 x^2) / 2``; exact levels ``hbar omega (n + 1/2)``."""

    hbar: float
    omega: float = 1.0

    def potential(self, x):
        return 0.5 * self.omega**2 * np.asarray(x, dtype=float) ** 2

    @property
    def min_energy(self):
        return 0.0

    def bump_energy(self):
        return None

    def outer_points(self, level):
        if level <= 0:
            return None
        a = math.sqrt(2.0 * level) / self.omega
        return -a, a

    def action(self, E):
        return 2.0 * math.pi * max(E, 0.0) / self.omega

    def well_actions(self, E):
        return (self.action(E),)

    def period(self, E):
        return 2.0 * math.pi / self.omega


@dataclass(frozen=True)
class AuxOperator1D:
    nu: int
    hbar: float
    xi2: float
    W: float = 1.0

    def __post_init__(self):
        if int(self.nu) != self.nu or self.nu < 2:
            raise ValueError("nu must be an integer >= 2")
        if not 0 < self.hbar < 1:
            raise ValueError("hbar must lie in (0, 1)")
        if not self.W > 0:
            raise ValueError("W must be positive")

    def potential(self, x):
        u = self.xi2 - np.asarray(x, dtype=float) ** self.nu / self.nu
        return 0.5 * (u * u - self.W)

    @property
    def min_energy(self):
        if self.nu % 2 or self.xi2 >= 0:
            return -0.5 * self.W
        return 0.5 * (self.xi2**2 - self.W)

    def bump_energy(self):
        """Energy of the central barrier for even nu and xi2 > 0, else None."""
        if self.nu % 2 == 0 and self.xi2 > 0:
            return 0.5 * (self.xi2**2 - self.W)
        return None

    def outer_points(self, level):
        """Outermost solutions of ``potential = level`` (None if none)."""
        c2 = self.W + 2.0 * level
        if c2 <= 0:
            return None
        c = math.sqrt(c2)
        if self.nu % 2:
            return _root(self.xi2 - c, self.nu), _root(self.xi2 + c, self.nu)
        if self.xi2 + c <= 0:
            return None
        R = _root(self.xi2 + c, self.nu)
        return -R, R

    def _model(self, E):
        return EffectiveModel(self.nu, self.xi2, self.W + 2.0 * E)

    def well_actions(self, E):
        """Action of each classically allowed component at energy ``E``."""
        if self.W + 2.0 * E <= 0:
            return ()
        m = self._model(E)
        try:
            census = well_census(m)
        except NoWellError:
            return ()
        if census.label == "two-well":
            a = action(m, "right")
            return (action(m, "left"), a) if self.nu % 2 else (a, a)
        if census.label == "degenerate" and len(census.wells) == 2:
            a = action(m, "right")
            return (2.0 * a,)
        return (action(m, "right"),)

    def action(self, E):
        return float(sum(self.well_actions(E)))

    def period(self, E):
        """``dS/dE``: the period of the x1 motion at energy ``E``."""
        return math.sqrt(2.0) * period_T(self._model(E))


# --- finite differences ------------------------------------------------------


@dataclass(frozen=True)
class CountingFunction:
    tau: float
    count: int
    method: str
    certificate: dict = field(default_factory=dict)


def _halfwidth(op, tau):
    pts = op.outer_points(tau + 1.0)
    if pts is None:
        return None
    return max(abs(pts[0]), abs(pts[1]))


def fd_matrix(op, tau, N):
    """Tridiagonal Dirichlet discretization on ``[-L, L]``; returns (diag, off, L)."""
    L = _halfwidth(op, tau)
    if L is None:
        return None
    dx = 2.0 * L / (N + 1)
    x = -L + dx * np.arange(1, N + 1)
    kin = op.hbar**2 / dx**2
    diag = kin + op.potential(x)
    off = np.full(N - 1, -0.5 * kin)
    return diag, off, L


GRAZE = 1e-9


def fd_eigencount(op, tau, N=400, N_cap=1 << 16):
    """Count eigenvalues below ``tau`` of the discretized operator.

    Counts at N and 2N must agree; N doubles until they do or the cap is
    reached.  Eigenvalues within 1e-9 of ``tau`` set the ``grazing`` flag.
    """
    if N < 200:
        raise ValueError("N must be at least 200")
    if tau <= op.min_energy:
        return CountingFunction(tau, 0, "finite-difference", {"N": 0, "L": 0.0, "grazing": False})
    history = []
    while True:
        counts = []
        for n in (N, 2 * N):
            diag, off, L = fd_matrix(op, tau, n)
            counts.append(sturm.sturm_count(diag, off, tau))
        history.append((N, counts[0], counts[1]))
        if counts[0] == counts[1]:
            break
        if 2 * N >= N_cap:
            raise ResolutionError(
                f"finite-difference counts {counts} at N={N}, {2 * N} never agreed", counts=history
            )
        N *= 2
    diag, off, L = fd_matrix(op, tau, 2 * N)
    graze = sturm.sturm_count(diag, off, tau - GRAZE) != sturm.sturm_count(diag, off, tau + GRAZE)
    cert = {"N": 2 * N, "L": L, "grazing": bool(graze), "history": history}
    return CountingFunction(tau, counts[1], "finite-difference", cert)


# --- Bohr-Sommerfeld ---------------------------------------------------------


def _levels_in_well(S_of_E, lo, tau, hbar, xtol):
    top = S_of_E(tau)
    n_max = int(math.floor(top / (2.0 * math.pi * hbar) - 0.5 + 1.0)) if top > 0 else 0
    out = []
    for n in range(n_max):
        target = 2.0 * math.pi * hbar * (n + 0.5)
        if target >= top:
            break
        out.append(optimize.brentq(lambda E: S_of_E(E) - target, lo, tau, xtol=xtol, rtol=1e-14))
    return out


def bohr_sommerfeld_eigenvalues(op, tau, xtol=1e-13):
    """Bohr-Sommerfeld levels below ``tau`` (single-well thresholds only).

    A barrier top between the potential minimum and ``tau`` raises
    ``MultiWellError``.  Two separated mirror wells give doubly degenerate
    levels.
    """
    lo = op.min_energy
    if tau <= lo:
        return CountingFunction(tau, 0, "bohr-sommerfeld", {"xtol": xtol}), np.array([])
    bump = op.bump_energy()
    if bump is not None and lo < bump < tau:
        raise MultiWellError(f"barrier top at E={bump:.6g} lies below tau={tau}; use fd_eigencount")
    n_wells = len(op.well_actions(tau))
    if n_wells == 2:
        one = _levels_in_well(lambda E: op.well_actions(E)[-1] if E > lo else 0.0, lo, tau, op.hbar, xtol)
        levels = sorted(one + one)
    else:
        levels = _levels_in_well(lambda E: op.action(E) if E > lo else 0.0, lo, tau, op.hbar, xtol)
    levels = np.array(levels)
    return CountingFunction(tau, len(levels), "bohr-sommerfeld", {"xtol": xtol}), levels


def bohr_sommerfeld_count(op, tau):
    """Count from the actions at ``tau`` alone; wells merged above a barrier."""
    total = 0
    for S in op.well_actions(tau):
        total += _count_below(S, op.hbar)
    return total


def _count_below(S, hbar):
    if S <= 0:
        return 0
    return int(math.floor(S / (2.0 * math.pi * hbar) + 0.5))


# --- actions of the unit model ------------------------------------------------


@lru_cache(maxsize=None)
def _unit_curve(nu):
    """Landmarks of the zero-energy action as a function of xi2 (W = 1)."""
    ks = find_kstar(nu).value
    S_max = _branch_action(nu, ks)
    if nu % 2:
        return ks, S_max, None
    return ks, S_max, _branch_action(nu, 1.0)


def _branch_action(nu, k):
    """Zero-energy action at ``xi2 = k`` (W = 1).

    Even nu: for ``k < 1`` the single (possibly merged) well, for ``k >= 1``
    one of the two wells; k = 1 is the separatrix, where the merged value is
    twice the single-well value.
    """
    if nu % 2 == 0 and k <= -1.0:
        return 0.0
    m = EffectiveModel(nu, k)
    try:
        well_census(m)
    except NoWellError:
        return 0.0
    return action(m, "right")


def _merged_action(nu, k):
    if k >= 1.0:
        return 2.0 * _branch_action(nu, 1.0)
    return _branch_action(nu, k)


def _solve(f, a, b):
    return optimize.brentq(f, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)


def level_measure(nu, L):
    """``|{xi2 : S(xi2) > L}|`` counted with well multiplicity (W = 1)."""
    ks, S_max, S_half = _unit_curve(nu)
    if L <= 0:
        raise ValueError("L must be positive")
    m = 0.0
    if nu % 2:
        if L < S_max:
            hi = 2.0
            while _branch_action(nu, hi) > L:
                hi *= 2.0
            m = 2.0 * _solve(lambda k: _branch_action(nu, k) - L, 0.0, hi)
        return m
    S_sep = 2.0 * S_half
    if L < S_max:
        a = _solve(lambda k: _merged_action(nu, k) - L, -1.0, ks)
        b = 1.0 if L <= S_sep else _solve(lambda k: _merged_action(nu, k) - L, ks, 1.0)
        m += b - a
    if L < S_half:
        hi = 2.0
        while _branch_action(nu, hi) > L:
            hi *= 2.0
        c = _solve(lambda k: _branch_action(nu, k) - L, 1.0, hi)
        m += 2.0 * (c - 1.0)
    return m


def landau_measure(nu, L):
    """Landau counterpart of ``level_measure``: ``(2/nu) (pi / L)^(nu/(nu-1))``."""
    return 2.0 / nu * (math.pi / L) ** (nu / (nu - 1.0))


def landau_strip_integral(nu, W, hbar):
    """``int E0 dx1`` for the scaled model in closed form (Hurwitz zeta)."""
    p = nu / (nu - 1.0)
    return 2.0 / nu * (W / hbar) ** p * 2.0**-p * special.zeta(p, 0.5) / (2.0 * math.pi * hbar)


# --- correction term -----------------------------------------------------------


@dataclass(frozen=True)
class CorrectionResult:
    value: float  # E_corr
    level_sum: float  # B = sum_n [measure - Landau measure], W-scaled
    n_levels: int
    window: tuple  # xi2 interval outside which n0 = 0
    hbar: float
    h: float
    W: float
    tau: float


def xi2_window(nu, W, hbar):
    """Exact support of ``n0(xi2)`` at threshold 0 and well value ``W``."""
    sw = math.sqrt(W)
    L0 = math.pi * hbar / W ** ((nu + 1) / (2.0 * nu))
    ks, S_max, S_half = _unit_curve(nu)
    if L0 >= S_max:
        return (0.0, 0.0)
    if nu % 2:
        b = level_measure(nu, L0) / 2.0
        return (-b * sw, b * sw)
    lo = _solve(lambda k: _merged_action(nu, k) - L0, -1.0, ks)
    if L0 < S_half:
        hi = 1.0 + 0.5 * (level_measure(nu, L0) - (1.0 - lo))
    elif L0 <= 2.0 * S_half:
        hi = 1.0
    else:
        hi = _solve(lambda k: _merged_action(nu, k) - L0, ks, 1.0)
    return (lo * sw, hi * sw)


def _check_window(nu, W, hbar, window):
    exact = xi2_window(nu, W, hbar)
    if window is None:
        return exact
    a, b = window
    if a > exact[0] or b < exact[1]:
        raise WindowError(f"xi2 window {window} does not contain the support {exact} of n0")
    return exact


def correction_term(nu, W, hbar, h=1.0, tau=0.0, window=None):
    """Correction term of the degenerate zone for one x2 slice.

    ``W`` is the well value at the slice and ``tau`` the threshold; only
    ``W + 2 tau`` enters.  A caller-supplied ``window`` must contain the
    support of n0, else ``WindowError``.
    """
    if not 0 < hbar < 1:
        raise ValueError("hbar must lie in (0, 1)")
    Wp = W + 2.0 * tau
    if Wp <= 0:
        return CorrectionResult(0.0, 0.0, 0, (0.0, 0.0), hbar, h, W, tau)
    win = _check_window(nu, Wp, hbar, window)
    scale = Wp ** ((nu + 1) / (2.0 * nu))  # action scaling
    width = math.sqrt(Wp)  # xi2 scaling
    p = nu / (nu - 1.0)
    _, S_max, _ = _unit_curve(nu)
    terms = []
    n = 0
    while True:
        L = 2.0 * math.pi * hbar * (n + 0.5) / scale
        if L >= S_max:
            break
        terms.append(width * (level_measure(nu, L) - landau_measure(nu, L)))
        n += 1
    # Landau levels beyond the last classical one
    tail = 2.0 / nu * (Wp / hbar) ** p * 2.0**-p * special.zeta(p, n + 0.5)
    B = math.fsum(terms) - tail
    value = B / (2.0 * math.pi * h)
    return CorrectionResult(value, B, n, win, hbar, h, W, tau)


def smooth_level_integral(nu, L_min=1e-2, rel_tol=1e-8):
    """``int (measure - Landau measure) dL`` over ``[L_min, inf)`` (W = 1).

    Replacing the sum over n by its integral is the smooth part of the
    correction, which must vanish; the return value is that residual.
    """
    from scipy import integrate

    ks, S_max, S_half = _unit_curve(nu)
    pts = sorted(v for v in (S_half, 2.0 * S_half if S_half else None, S_max) if v and v > L_min)

    def D(L):
        return level_measure(nu, L) - landau_measure(nu, L)

    edges = [L_min] + pts
    total = 0.0
    for a, b in zip(edges, edges[1:]):
        total += integrate.quad(D, a, b, epsabs=0.0, epsrel=rel_tol, limit=100)[0]
    p = nu / (nu - 1.0)
    # beyond S_max only the Landau part remains
    total -= 2.0 / nu * math.pi**p * S_max ** (1.0 - p) / (p - 1.0)
    # D stays bounded as L -> 0; the piece below L_min is taken as D(L_min) L_min
    total += D(L_min) * L_min
    return total


def correction_term_4d(nu, V, f2, mu, h, hbar, tau=0.0):
    """Sum of 2D corrections over ``W_beta = V - (2 beta + 1) mu h f2 > 0``."""
    out, beta = [], 0
    while True:
        Wb = V - (2 * beta + 1) * mu * h * f2
        if Wb + 2.0 * tau <= 0:
            break
        out.append(correction_term(nu, Wb, hbar, h, tau).value)
        beta += 1
    return math.fsum(out), beta


# --- the function G -------------------------------------------------------------


def _sawtooth(y):
    return y - np.floor(y + 0.5)


def g_function(t, eta_cutoff=200.0, tol=1e-5):
    """``G(t) = int_R s(t + eta^2/2) d eta`` with the sawtooth ``s(y) = y - floor(y + 1/2)``.

    After ``u = eta^2 / 2`` the integrand is ``sqrt(2) s(t + u) u^-1/2``.
    Full sawtooth teeth are integrated in closed form up to
    ``U = eta_cutoff^2 / 2``; the rest is the leading term of repeated
    integration by parts, with a remainder bounded by ``0.0057 U^-3/2``.
    """
    t = float(t)
    t = t - math.floor(t)
    U = 0.5 * eta_cutoff**2
    # first tooth boundary above u = 0
    j0 = math.ceil(t + 0.5)
    a = j0 - 0.5 - t
    c = t - (j0 - 1)
    first = 2.0 * c * math.sqrt(a) + 2.0 / 3.0 * a**1.5
    n_teeth = int(math.floor(U - a))
    if n_teeth < 1:
        raise AccuracyError(f"eta_cutoff={eta_cutoff} too small")
    m = a + 0.5 + np.arange(n_teeth)  # tooth centers
    # int_{m-1/2}^{m+1/2} v (m + v)^-1/2 dv, written without cancellation
    teeth = -(1.0 / 6.0) / ((np.sqrt(m * m - 0.25) + m) * (np.sqrt(m - 0.5) + np.sqrt(m + 0.5)))
    Uend = a + n_teeth
    bound = math.sqrt(2.0) * 0.5 * (1.0 / (36.0 * math.sqrt(12.0))) * Uend**-1.5
    if bound > tol:
        raise AccuracyError(f"tail bound {bound:.2e} exceeds tol={tol}; raise eta_cutoff")
    tail = -(1.0 / 12.0) / math.sqrt(Uend)
    return math.sqrt(2.0) * (first + math.fsum(teeth[::-1]) + tail)


def g_fourier(t, terms=200000):
    """Reference series ``sum_k (-1)^(k+1) sin(2 pi k t + pi/4) / (pi k^1.5)``."""
    k = np.arange(1, terms + 1)
    return float(np.sum((-1.0) ** (k + 1) * np.sin(2 * np.pi * k * t + np.pi / 4) / (np.pi * k**1.5)))


def closed_form_correction(W, hbar, nu, kappa, S0, h=1.0, G=None):
    """``kappa h^-1 hbar^1/2 W^(1/4 - 1/(4 nu)) G(S0 W^(1/2 + 1/(2 nu)) / (2 pi hbar))``."""
    G = G or g_function
    t = S0 * W ** (0.5 + 0.5 / nu) / (2.0 * math.pi * hbar)
    return kappa / h * math.sqrt(hbar) * W ** (0.25 - 0.25 / nu) * G(t)


@dataclass(frozen=True)
class CorrectionFit:
    kappa: float
    S0: float
    rms: float
    amplitude: float


@lru_cache(maxsize=4)
def _g_table(n=1 << 14):
    ts = np.arange(n) / n
    return np.array([g_function(t) for t in ts])


def _g_interp(t):
    tab = _g_table()
    n = tab.size
    y = (np.asarray(t) % 1.0) * n
    i = np.floor(y).astype(int)
    w = y - i
    return (1 - w) * tab[i % n] + w * tab[(i + 1) % n]


def fit_correction(W, hbar, values, nu, h=1.0, S0_range=(0.5, 20.0), refine=True):
    """Least-squares ``(kappa, S0)`` for ``closed_form_correction``.

    Searches both signs of S0 over ``S0_range`` on a grid fine enough to
    resolve the phase at the smallest hbar, then polishes the best point.
    """
    W = np.asarray(W, float)
    hbar = np.asarray(hbar, float)
    y = np.asarray(values, float) * h
    base = np.sqrt(hbar) * W ** (0.25 - 0.25 / nu)
    phase = W ** (0.5 + 0.5 / nu) / (2.0 * math.pi * hbar)

    def solve_kappa(S0, G):
        x = base * G(S0 * phase)
        kappa = float(x @ y / (x @ x)) if x @ x > 0 else 0.0
        return kappa, float(np.sqrt(np.mean((y - kappa * x) ** 2)))

    dS = 0.05 / float(np.max(phase))
    grid = np.arange(S0_range[0], S0_range[1], dS)
    grid = np.concatenate([-grid[::-1], grid])
    best = min(grid, key=lambda s: solve_kappa(s, _g_interp)[1])
    if refine:
        g_exact = np.vectorize(g_function)
        res = optimize.minimize_scalar(
            lambda s: solve_kappa(s, g_exact)[1], bounds=(best - dS, best + dS), method="bounded",
            options={"xatol": 1e-10},
        )
        best = float(res.x)
        kappa, rms = solve_kappa(best, g_exact)
    else:
        kappa, rms = solve_kappa(best, _g_interp)
    return CorrectionFit(kappa, float(best), rms, float(np.sqrt(np.mean((y - y.mean()) ** 2))))


def classical_action_at_kstar(nu, W=1.0):
    """Zero-energy action of the critical well, the candidate for S0."""
    ks, S_max, _ = _unit_curve(nu)
    return S_max * W ** ((nu + 1) / (2.0 * nu))


# --- sweeps in the action variable ----------------------------------------------


@dataclass(frozen=True)
class ActionSweep:
    t: np.ndarray  # action variable S0 W^((nu+1)/(2 nu)) / (2 pi hbar)
    W: np.ndarray
    values: np.ndarray  # E_corr
    hbar: float
    h: float
    S0: float


def action_sweep(nu, hbar, t0, n_periods=1, per_period=32, h=1.0, S0=None, jobs=1):
    """Correction term on W values that step the action variable uniformly.

    ``S0`` defaults to the critical-well action; samples start at ``t0``.
    """
    S0 = classical_action_at_kstar(nu) if S0 is None else S0
    t = t0 + np.arange(n_periods * per_period) / per_period
    W = (2.0 * math.pi * hbar * t / S0) ** (2.0 * nu / (nu + 1.0))
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as ex:
            vals = list(ex.map(_corr_value, [(nu, w, hbar, h) for w in W]))
    else:
        vals = [_corr_value((nu, w, hbar, h)) for w in W]
    return ActionSweep(t, W, np.array(vals), hbar, h, S0)


def _corr_value(args):
    nu, W, hbar, h = args
    return correction_term(nu, float(W), hbar, h).value


def oscillation_amplitude(sweep):
    """RMS of ``h * E_corr`` about its mean over the sweep."""
    y = sweep.values * sweep.h
    return float(np.sqrt(np.mean((y - y.mean()) ** 2)))


@dataclass(frozen=True)
class PeriodEstimate:
    period: float
    peak_ratio: float  # spectral peak over its largest DFT neighbor


def dominant_period(t, values, pad=64):
    """Dominant period of uniformly sampled ``values`` (zero-padded DFT).

    ``peak_ratio`` compares the unpadded DFT bin at the peak with its two
    neighbors.
    """
    y = np.asarray(values, float)
    y = y - y.mean()
    n = y.size
    dt = float(t[1] - t[0])
    spec = np.abs(np.fft.rfft(y, n * pad))
    freqs = np.fft.rfftfreq(n * pad, dt)
    i = int(np.argmax(spec[1:]) + 1)
    if 0 < i < spec.size - 1:
        a, b, c = np.log(spec[i - 1 : i + 2])
        shift = 0.5 * (a - c) / (a - 2 * b + c)
    else:
        shift = 0.0
    f = (i + shift) * (freqs[1] - freqs[0])
    raw = np.abs(np.fft.rfft(y))
    j = int(np.argmax(raw[1:]) + 1)
    neigh = max(raw[j - 1] if j > 1 else 0.0, raw[j + 1] if j + 1 < raw.size else 0.0)
    return PeriodEstimate(1.0 / f, float(raw[j] / neigh) if neigh > 0 else math.inf)
