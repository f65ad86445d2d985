"""Classical motion of a charge in a magnetic field.

``H(x, xi) = (P^T G(x) P - V(x)) / 2`` with ``P = xi - mu A(x)``.  Hamilton's
equations read ``x' = G P`` and

    xi_i' = -1/2 P^T (d_i G) P + mu ((dA) G P)_i + 1/2 d_i V,

with ``(dA)[i, k] = d_i A_k``.
"""

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DegeneracyError, DomainError, NumericalFailure, StiffnessError
from .fields import MetricTensor, ScalarField, VectorPotential, canonical_field, central_jacobian
from .model import EffectiveModel, turning_points


@dataclass(frozen=True)
class MagneticSystem:
    metric: MetricTensor
    potential: VectorPotential
    V: ScalarField
    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not (self.metric.dim == self.potential.dim == self.V.dim):
            raise ValueError("metric, potential and V must share a dimension")

    @property
    def dim(self):
        return self.potential.dim

    def with_mu(self, mu):
        return dataclasses.replace(self, mu=mu)

    def two_form(self, x):
        J = self.potential.jacobian(x)
        return J - J.T


@dataclass(frozen=True)
class PhasePoint:
    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "xi", np.asarray(self.xi, dtype=float))
        if self.x.shape != self.xi.shape:
            raise ValueError("x and xi must have the same shape")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.xi))):
            raise ValueError("phase point must be finite")

    def flat(self):
        return np.concatenate([self.x, self.xi])

    @classmethod
    def from_kinetic(cls, sys, x, P):
        """Phase point with kinetic momentum ``P = xi - mu A(x)``."""
        x = np.asarray(x, dtype=float)
        return cls(x, np.asarray(P, dtype=float) + sys.mu * sys.potential(x))


@dataclass
class TrajectorySample:
    t: np.ndarray
    x: np.ndarray
    xi: np.ndarray
    H: np.ndarray
    energy_tol: float
    truncated: bool = False
    channels: dict = field(default_factory=dict)

    @property
    def energy_drift(self):
        return float(np.max(np.abs(self.H - self.H[0])))


def hamiltonian_eval(sys, z):
    P = z.xi - sys.mu * sys.potential(z.x)
    return 0.5 * (float(P @ sys.metric(z.x) @ P) - sys.V(z.x))


def kinetic_momentum(sys, x, xi):
    return xi - sys.mu * sys.potential(x)


def hamilton_rhs(sys):
    d, mu = sys.dim, sys.mu

    def rhs(t, y):
        x, xi = y[:d], y[d : 2 * d]
        P = xi - mu * sys.potential(x)
        G = sys.metric(x)
        v = G @ P
        dG = sys.metric.grad(x)
        dxi = -0.5 * np.einsum("ijk,j,k->i", dG, P, P) + mu * (sys.potential.jacobian(x) @ v)
        dxi = dxi + 0.5 * sys.V.grad(x)
        return np.concatenate([v, dxi])

    return rhs


MIN_RTOL = 2.5e-14


def _solve(rhs, y0, T, tol, events=None, t_eval=None, max_step=np.inf, atol_scale=1.0):
    sol = solve_ivp(
        rhs,
        (0.0, T),
        y0,
        method="DOP853",
        rtol=max(tol, MIN_RTOL),
        atol=tol * atol_scale,
        events=events,
        t_eval=t_eval,
        max_step=max_step,
        dense_output=False,
    )
    if sol.status == -1:
        raise StiffnessError(f"integration failed at t={sol.t[-1]:.6g}: {sol.message}")
    return sol


def integrate_trajectory(sys, z0, T, tol=1e-10, domain_radius=None, n_samples=None, max_retries=3):
    """Adaptive DOP853 integration of Hamilton's equations on [0, T].

    Leaving the ball ``|x| < domain_radius`` stops the run with
    ``truncated=True``.  The energy drift is checked against
    ``tol * max(1, |H0|) * T`` and the solve is repeated with a tighter
    tolerance if needed.
    """
    if not (T > 0 and tol > 0):
        raise ValueError("T and tol must be positive")
    d = sys.dim
    y0 = z0.flat()
    H0 = hamiltonian_eval(sys, z0)
    # H is formed from xi - mu A, so round-off limits it to ~eps |xi|^2
    floor = 256 * np.finfo(float).eps * max(1.0, float(z0.xi @ z0.xi), abs(H0))
    bound = max(tol * max(1.0, abs(H0)) * T, floor)
    rhs = hamilton_rhs(sys)
    events = None
    if domain_radius is not None:
        def leave(t, y):
            return domain_radius - np.linalg.norm(y[:d])

        leave.terminal = True
        events = [leave]
    t_eval = np.linspace(0.0, T, n_samples) if n_samples else None
    rtol = tol
    for _ in range(max_retries + 1):
        sol = _solve(rhs, y0, T, rtol, events=events, t_eval=t_eval)
        X, XI = sol.y[:d].T, sol.y[d:].T
        H = np.array([hamiltonian_eval(sys, PhasePoint(a, b)) for a, b in zip(X, XI)])
        if np.max(np.abs(H - H0)) <= bound or rtol <= MIN_RTOL:
            break
        rtol = max(rtol * 0.1, MIN_RTOL)
    if np.max(np.abs(H - H0)) > bound:
        raise NumericalFailure(f"energy drift {np.max(np.abs(H - H0)):.3e} exceeds {bound:.3e}")
    truncated = sol.status == 1
    return TrajectorySample(sol.t, X, XI, H, bound, truncated)


# --- drift -------------------------------------------------------------------


def drift_velocity(sys, x, E=0.0):
    """Guiding-center drift at ``x`` for energy ``E``.

    d=2: ``(2 mu)^-1 (grad (V + 2E) / F12)`` rotated clockwise by pi/2.
    Even d: ``-(2 mu)^-1 F^-1 grad V``.  Both assume ``g = I`` at ``x``.
    """
    x = np.asarray(x, dtype=float)
    d = sys.dim
    if not np.allclose(sys.metric(x), np.eye(d), rtol=0, atol=1e-12):
        raise DomainError("drift_velocity expects an identity metric at the point")
    F = sys.two_form(x)
    if d == 2:
        f = F[0, 1]
        if abs(f) <= 1e-12:
            raise DegeneracyError("field vanishes; use the model-zone analysis", point=x)
        grad_f = central_jacobian(lambda y: sys.two_form(y)[0, 1], x)
        w = sys.V(x) + 2.0 * E
        grad = sys.V.grad(x) / f - w * grad_f / f**2
        return np.array([grad[1], -grad[0]]) / (2.0 * sys.mu)
    if d % 2 or np.linalg.matrix_rank(F) < d:
        raise DegeneracyError("two-form is singular; use the model-zone analysis", point=x)
    return -np.linalg.solve(F, sys.V.grad(x)) / (2.0 * sys.mu)


@dataclass(frozen=True)
class ScanResult:
    mus: tuple
    deviations: tuple
    slope: float
    no_drift: bool
    periods: tuple


def _scan_one(sys, x0, P0, T, tol):
    d = sys.dim
    z0 = PhasePoint.from_kinetic(sys, x0, P0)
    E = hamiltonian_eval(sys, z0)
    base = hamilton_rhs(sys)

    def rhs(t, y):
        return np.concatenate([base(t, y[: 2 * d]), y[:d]])

    def upward(t, y):
        # first kinetic momentum component (velocity, since g = I)
        return y[d] - sys.mu * sys.potential(y[:d])[0]

    upward.direction = 1.0
    y0 = np.concatenate([z0.flat(), np.zeros(d)])
    sol = _solve(rhs, y0, T, tol, events=[upward], atol_scale=1e-2)
    te, ye = sol.t_events[0], sol.y_events[0]
    if len(te) < 2:
        raise NumericalFailure("fewer than two cyclotron periods detected; increase T")
    tm = 0.5 * (te[1:] + te[:-1])
    gc = (ye[1:, 2 * d :] - ye[:-1, 2 * d :]) / np.diff(te)[:, None]

    # Larmor center of the initial state
    F0 = sys.two_form(x0)
    c0 = x0 - np.linalg.solve(sys.mu * F0, sys.metric(x0) @ P0)
    v0 = drift_velocity(sys, c0, E)
    # finite-difference noise in grad f is not exactly zero
    if sys.mu * np.linalg.norm(v0) <= 1e-10:
        dev = float(np.max(np.linalg.norm(sol.y[:d].T - c0, axis=1)))
        return dev, True, len(te) - 1
    dsol = solve_ivp(
        lambda t, c: drift_velocity(sys, c, E),
        (0.0, T),
        c0,
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
        t_eval=tm,
    )
    dev = float(np.max(np.linalg.norm(gc - dsol.y.T, axis=1)))
    return dev, False, len(te) - 1


def guiding_center_error_scan(sys, x0, P0, mu_list, T, tol=1e-10):
    """Compare period-averaged guiding centers with the drift ODE.

    The initial condition is fixed in kinetic terms (position ``x0`` and
    velocity ``P0``) so that every ``mu`` sees the same physical start.
    Guiding centers are time averages of x between successive upward zero
    crossings of the first velocity component.
    """
    mu_list = [float(m) for m in mu_list]
    if any(b <= a for a, b in zip(mu_list, mu_list[1:])):
        raise ValueError("mu_list must be increasing")
    x0, P0 = np.asarray(x0, float), np.asarray(P0, float)
    devs, flags, periods = [], [], []
    for mu in mu_list:
        dev, flag, n = _scan_one(sys.with_mu(mu), x0, P0, T, tol)
        devs.append(dev)
        flags.append(flag)
        periods.append(n)
    slope = float(np.polyfit(np.log(mu_list), np.log(devs), 1)[0]) if len(mu_list) > 1 else math.nan
    return ScanResult(tuple(mu_list), tuple(devs), slope, all(flags), tuple(periods))


def effective_potential_3d(f, V, M, x):
    """``V(x) - M^2 / f(x)``."""
    fx = f(x)
    if not fx > 0:
        raise DegeneracyError(f"field intensity {fx} is not positive", point=x)
    return V(x) - M * M / fx


def magnetic_moment(sys, x, xi):
    """``|P_perp|^2 / (2 f)`` for d=3 with g = I; adiabatically conserved."""
    F = sys.two_form(x)
    b = np.array([F[1, 2], F[2, 0], F[0, 1]])
    f = np.linalg.norm(b)
    P = xi - sys.mu * sys.potential(x)
    par = (P @ b) / f
    return (P @ P - par * par) / (2.0 * f)


def adiabatic_scan(sys, x0, P0, mu_list, T, tol=1e-10):
    """Maximum relative variation of the magnetic moment along full 3D runs."""
    out = []
    for mu in mu_list:
        s = sys.with_mu(mu)
        z0 = PhasePoint.from_kinetic(s, x0, P0)
        tr = integrate_trajectory(s, z0, T, tol)
        m = np.array([magnetic_moment(s, a, b) for a, b in zip(tr.x, tr.xi)])
        out.append(float(np.max(np.abs(m - m[0])) / abs(m[0])))
    return tuple(out)


def mirror_system(mu, b2=0.3, V=None):
    """d=3 field ``(0, 0, b(x3))`` with ``b = 1 + b2 x3^2`` (to leading order)."""
    def A(x):
        b = 1.0 + b2 * x[2] ** 2
        return np.array([-0.5 * x[1] * b, 0.5 * x[0] * b, 0.0])

    def JA(x):
        b = 1.0 + b2 * x[2] ** 2
        db = 2.0 * b2 * x[2]
        return np.array(
            [[0.0, 0.5 * b, 0.0], [-0.5 * b, 0.0, 0.0], [-0.5 * x[1] * db, 0.5 * x[0] * db, 0.0]]
        )

    V = V or ScalarField.constant(3, 0.0)
    return MagneticSystem(MetricTensor.identity(3), VectorPotential(3, A, JA), V, mu)


# --- constant field / model helpers -----------------------------------------


def constant_field_system(f, mu, V=0.0, d=None):
    A, _ = canonical_field("constant", f=list(f), d=d or 2 * len(f))
    dim = A.dim
    return MagneticSystem(MetricTensor.identity(dim), A, ScalarField.constant(dim, V), mu)


def symmetric_gauge_system(f, mu, V=0.0):
    """d=2 constant field ``f`` in the gauge ``A = f (-x2, x1) / 2``."""
    A = VectorPotential(
        2,
        lambda x: 0.5 * f * np.array([-x[1], x[0]]),
        lambda x: 0.5 * f * np.array([[0.0, 1.0], [-1.0, 0.0]]),
    )
    return MagneticSystem(MetricTensor.identity(2), A, ScalarField.constant(2, V), mu)


def model_system(nu, mu, alpha=0.0, W=1.0):
    """``H0 = (xi1^2 + (xi2 - mu x1^nu / nu)^2 - W + alpha x1) / 2``."""
    A, _ = canonical_field("model2d", nu=nu)
    return MagneticSystem(MetricTensor.identity(2), A, ScalarField.linear(2, W, [-alpha, 0.0]), mu)


def scale_to_unit_mu(nu, mu, t=None, x=None, xi=None, inverse=False):
    """Map the model at coupling ``mu`` to ``mu = 1``.

    ``x -> mu^(1/nu) x``, ``t -> mu^(1/nu) t``; momenta are unchanged.
    ``inverse=True`` maps back.
    """
    s = mu ** (1.0 / nu)
    if inverse:
        s = 1.0 / s
    out = []
    for val in (t, x):
        out.append(None if val is None else np.asarray(val, dtype=float) * s)
    out.append(None if xi is None else np.asarray(xi, dtype=float).copy())
    return tuple(out)


@dataclass
class ModelRun:
    sample: TrajectorySample
    dx2_per_period: tuple  # scaled (mu = 1) units
    period_times: tuple
    mean_dx2: float
    path_length_per_period: float
    mu: float
    nu: int
    k: float

    @property
    def drift_velocity(self):
        """Mean x2 velocity; unchanged by the mu scaling."""
        return self.mean_dx2 / float(np.mean(np.diff(self.period_times)))


def simulate_model(nu, mu, k, T, alpha=0.0, tol=1e-11, n_samples=None):
    """Integrate the degenerate model on its zero energy level.

    Runs in the mu=1 picture (see ``scale_to_unit_mu``); ``T`` is physical
    time at coupling ``mu``.  The start is the right turning point with
    ``xi1 = 0``; x1-periods are delimited by successive returns of xi1 to 0
    from above, i.e. by returns to the right turning point.
    """
    if mu < 1:
        raise ValueError("mu must be >= 1")
    s = mu ** (1.0 / nu)
    Ts = T * s
    sys = model_system(nu, 1.0, alpha)
    if alpha:
        x1 = _right_turning_point_linear(nu, k, alpha)
    else:
        x1 = turning_points(EffectiveModel(nu, k))[1]
    z0 = PhasePoint(np.array([x1, 0.0]), np.array([0.0, k]))
    base = hamilton_rhs(sys)

    def rhs(t, y):
        dy = base(t, y[:4])
        return np.concatenate([dy, [math.hypot(dy[0], dy[1])]])

    def turn(t, y):
        return y[2]

    turn.direction = -1.0
    t_eval = np.linspace(0, Ts, n_samples) if n_samples else None
    sol = _solve(rhs, np.append(z0.flat(), 0.0), Ts, tol, events=[turn], t_eval=t_eval, atol_scale=1e-2)
    keep = sol.t_events[0] > 1e-9
    te = np.concatenate([[0.0], sol.t_events[0][keep]])
    ye = sol.y_events[0][keep]
    xs = np.concatenate([[0.0], ye[:, 1]])
    arc = np.concatenate([[0.0], ye[:, 4]])
    dx2 = tuple(np.diff(xs))
    X, XI = sol.y[:2].T, sol.y[2:4].T
    H = np.array([hamiltonian_eval(sys, PhasePoint(a, b)) for a, b in zip(X, XI)])
    sample = TrajectorySample(sol.t / s, X / s, XI, H, tol * Ts)
    mean = float(np.mean(dx2)) if dx2 else math.nan
    per_arc = float(np.mean(np.diff(arc))) if len(arc) > 1 else math.nan
    return ModelRun(sample, dx2, tuple(te), mean, per_arc, mu, nu, k)


def _right_turning_point_linear(nu, k, alpha):
    from scipy.optimize import brentq

    def cv(x):
        return 1.0 - alpha * x - (k - x**nu / nu) ** 2

    x_hi = (nu * (abs(k) + 1.0 + abs(alpha) + 1.0)) ** (1.0 / nu)
    grid = np.linspace(x_hi, -x_hi, 4001)
    vals = cv(grid)
    for a, b, fa, fb in zip(grid, grid[1:], vals, vals[1:]):
        if fa <= 0 < fb:
            return brentq(cv, b, a, xtol=1e-15)
    raise DomainError(f"no classically allowed region for k={k}, alpha={alpha}")


# --- 4D model ----------------------------------------------------------------


@dataclass
class Model4DReport:
    xi2_drift: float
    theta_drift: float
    invariant_drift: float
    sample: TrajectorySample
    truncated: bool


def model4d_invariants(mu, x0, P0, T, tol=1e-12):
    """Integrate the 4D degenerate model in polar coordinates.

    State ``(x1, x2, rho, theta)``; kinetic start momenta
    ``P0 = (p1, p2, p_rho, p_theta_kinetic)``.  The rotation momentum is
    ``vartheta = rho p + mu (x1 - rho^2/4) rho^2``.
    """
    x1, x2, rho, th = (float(v) for v in x0)
    p1, p2, pr, pt = (float(v) for v in P0)
    xi2 = p2 + mu * (x1 - 0.5 * rho * rho)
    vt = rho * pt + mu * (x1 * rho * rho - 0.25 * rho**4)

    def parts(y):
        x1, x2, r, th, q1, q2, qr, qt = y
        P2 = q2 - mu * (x1 - 0.5 * r * r)
        Q = qt - mu * (x1 * r * r - 0.25 * r**4)
        return P2, Q

    def ham(y):
        P2, Q = parts(y)
        return 0.5 * (y[4] ** 2 + P2**2 + y[6] ** 2 + Q * Q / y[2] ** 2 - 1.0)

    def rhs(t, y):
        x1, x2, r, th, q1, q2, qr, qt = y
        P2, Q = parts(y)
        return np.array(
            [
                q1,
                P2,
                qr,
                Q / (r * r),
                mu * P2 + mu * Q,
                0.0,
                -mu * P2 * r + mu * Q * (2.0 * x1 - r * r) / r + Q * Q / r**3,
                0.0,
            ]
        )

    def axis(t, y):
        return y[2] - 1e-3

    axis.terminal = True
    y0 = np.array([x1, x2, rho, th, p1, xi2, pr, vt])
    sol = _solve(rhs, y0, T, tol, events=[axis], atol_scale=1e-2)
    Y = sol.y
    H = np.array([ham(c) for c in Y.T])
    inv = Y[0] - 0.5 * Y[2] ** 2
    sample = TrajectorySample(
        sol.t,
        Y[:4].T,
        Y[4:].T,
        H,
        tol * T,
        sol.status == 1,
        {"x1-rho^2/2": inv},
    )
    return Model4DReport(
        float(np.max(np.abs(Y[5] - xi2))),
        float(np.max(np.abs(Y[7] - vt))),
        float(np.max(np.abs(inv - inv[0]))),
        sample,
        sol.status == 1,
    )

