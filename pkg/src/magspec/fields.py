"""Magnetic 2-forms: potentials, metrics, intensities, rank strata and magnetic lines."""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import expr as _expr
from .errors import ContinuityError, DegeneracyError, DomainError, UsageError

FD_STEP = 1e-5
RANK_TOL = 1e-8

# 4th-order central difference stencil
_STENCIL = ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12))


def central_jacobian(func, x, step=FD_STEP):
    """``J[i, ...] = d func / d x_i`` by a 4th-order central difference."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        acc = 0.0
        for s, c in _STENCIL:
            xs = x.copy()
            xs[i] += s * step
            acc = acc + c * np.asarray(func(xs), dtype=float)
        cols.append(acc / step)
    return np.array(cols)


def _finite(arr, what, x):
    arr = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"non-finite {what} at x={np.asarray(x).tolist()}")
    return arr


@dataclass(frozen=True)
class ScalarField:
    dim: int
    func: Callable
    grad_func: Optional[Callable] = None
    step: float = FD_STEP

    def __call__(self, x):
        return float(self.func(np.asarray(x, dtype=float)))

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        g = self.grad_func(x) if self.grad_func is not None else central_jacobian(self.func, x, self.step)
        return _finite(g, "gradient", x)

    @classmethod
    def constant(cls, dim, value):
        return cls(dim, lambda x: value, lambda x: np.zeros(dim))

    @classmethod
    def linear(cls, dim, c0, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        return cls(dim, lambda x: c0 + float(coeffs @ x), lambda x: coeffs.copy())

    @classmethod
    def from_expression(cls, text, dim):
        e = _expr.parse(text, dim)
        return cls(dim, _expr.compile_scalar(e, dim), _expr.compile_gradient(e, dim))


@dataclass(frozen=True)
class VectorPotential:
    """Components ``A_j(x)``; ``jacobian_func(x)[i, k] = d_i A_k``."""

    dim: int
    func: Callable
    jacobian_func: Optional[Callable] = None
    step: float = FD_STEP

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"dimension must be >= 2, got {self.dim}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return _finite(self.func(x), "vector potential", x)

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        if self.jacobian_func is not None:
            J = self.jacobian_func(x)
        else:
            J = central_jacobian(self.func, x, self.step)
        return _finite(J, "potential derivative", x)

    def __add__(self, other):
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        jac = None
        if self.jacobian_func is not None and other.jacobian_func is not None:
            jac = lambda x: self.jacobian_func(x) + other.jacobian_func(x)  # noqa: E731
        return VectorPotential(self.dim, lambda x: self.func(x) + other.func(x), jac, self.step)

    @classmethod
    def from_expressions(cls, texts):
        dim = len(texts)
        exprs = [_expr.parse(t, dim) for t in texts]
        comps = [_expr.compile_scalar(e, dim) for e in exprs]
        grads = [_expr.compile_gradient(e, dim) for e in exprs]
        return cls(
            dim,
            lambda x: np.array([c(x) for c in comps]),
            lambda x: np.stack([g(x) for g in grads], axis=1),
        )

    def two_form(self):
        return TwoForm(self.dim, lambda x: two_form_from_potential(self, x))


@dataclass(frozen=True)
class TwoForm:
    """Antisymmetric matrix field ``F(x)``; antisymmetrized on evaluation."""

    dim: int
    func: Callable = field(repr=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        F = _finite(self.func(x), "two-form", x)
        return 0.5 * (F - F.T)


def two_form_from_potential(A, x):
    """``F_jk = d_j A_k - d_k A_j`` at ``x``."""
    J = A.jacobian(x)
    return J - J.T


@dataclass(frozen=True)
class MetricTensor:
    """Inverse metric ``g^{jk}(x)``; ``g = det(g^{jk})^{-1}``."""

    dim: int
    func: Callable
    grad_func: Optional[Callable] = None
    is_identity: bool = False
    step: float = FD_STEP

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        G = _finite(self.func(x), "metric", x)
        return 0.5 * (G + G.T)

    def checked(self, x):
        G = self(x)
        try:
            np.linalg.cholesky(G)
        except np.linalg.LinAlgError:
            raise DomainError(f"metric is not positive definite at x={np.asarray(x).tolist()}") from None
        return G

    def grad(self, x):
        """``out[i, j, k] = d_i g^{jk}``."""
        x = np.asarray(x, dtype=float)
        if self.is_identity:
            return np.zeros((self.dim,) * 3)
        if self.grad_func is not None:
            return _finite(self.grad_func(x), "metric derivative", x)
        return central_jacobian(self, x, self.step)

    def det_g(self, x):
        return 1.0 / np.linalg.det(self.checked(x))

    @classmethod
    def identity(cls, dim):
        eye = np.eye(dim)
        return cls(dim, lambda x: eye.copy(), is_identity=True)

    @classmethod
    def from_expressions(cls, rows):
        dim = len(rows)
        if any(len(r) != dim for r in rows):
            raise UsageError("metric must be a square matrix of expressions")
        exprs = [[_expr.parse(t, dim) for t in r] for r in rows]
        comps = [[_expr.compile_scalar(e, dim) for e in r] for r in exprs]
        grads = [[_expr.compile_gradient(e, dim) for e in r] for r in exprs]
        return cls(
            dim,
            lambda x: np.array([[c(x) for c in r] for r in comps]),
            lambda x: np.moveaxis(np.array([[g(x) for g in r] for r in grads]), 2, 0),
        )


@dataclass(frozen=True)
class IntensitySpectrum:
    intensities: tuple
    q: int
    tol: float

    @property
    def r(self):
        return len(self.intensities)


def _sqrtm_spd(G):
    w, U = np.linalg.eigh(G)
    return (U * np.sqrt(w)) @ U.T


def intensity_eigenvalues(g, F, x, tol=RANK_TOL):
    """Magnetic intensities at ``x`` from the mixed tensor ``G F``.

    ``F`` may be a matrix or a field.  Uses the Hermitian problem for
    ``i G^{1/2} F G^{1/2}``, whose eigenvalues are ``+-f_j``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    Fx = F(x) if callable(F) else np.asarray(F, dtype=float)
    G = g.checked(x)
    S = _sqrtm_spd(G)
    M = S @ Fx @ S
    M = 0.5 * (M - M.T)
    ev = np.linalg.eigvalsh(1j * M)
    top = np.max(np.abs(ev)) if ev.size else 0.0
    pos = sorted((float(v) for v in ev if v > tol * top and v > 0), reverse=True)
    d = Fx.shape[0]
    return IntensitySpectrum(tuple(pos), d - 2 * len(pos), tol)


def intensity_2d(g_inv, F):
    """Closed form for d=2: ``|F12| / sqrt(g)``."""
    return abs(F[0, 1]) * math.sqrt(np.linalg.det(g_inv))


def intensity_3d(g_inv, F):
    """Closed form for d=3 through the dual vector ``F^j``."""
    det = np.linalg.det(g_inv)  # = 1/g
    a = np.array([F[1, 2], F[2, 0], F[0, 1]])
    Fv = a * math.sqrt(det)
    return math.sqrt(float(Fv @ np.linalg.solve(g_inv, Fv)))


def numerical_rank(Fx, tol=RANK_TOL):
    s = np.linalg.svd(Fx, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def rank_stratum(F, x, tol=RANK_TOL):
    """Index ``k`` with ``x`` in ``{rank F <= d - k}``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    Fx = F(x) if callable(F) else np.asarray(F, dtype=float)
    return Fx.shape[0] - numerical_rank(Fx, tol)


def pfaffian(Fx):
    d = Fx.shape[0]
    if d == 2:
        return Fx[0, 1]
    if d == 4:
        return Fx[0, 1] * Fx[2, 3] - Fx[0, 2] * Fx[1, 3] + Fx[0, 3] * Fx[1, 2]
    raise DegeneracyError(f"pfaffian only implemented for d in (2, 4), got d={d}")


@dataclass(frozen=True)
class LineSample:
    points: np.ndarray
    arc: np.ndarray


def _kernel_direction(F, x, tol):
    Fx = F(x)
    d = Fx.shape[0]
    _, s, Vt = np.linalg.svd(Fx)
    top = s[0]
    null = s <= tol * top if top > 0 else np.ones(d, dtype=bool)
    K = Vt[null].T
    m = K.shape[1]
    if m == 1:
        return K[:, 0]
    if m >= 2 and d % 2 == 0:
        # rank drops on the Martinet surface {Pf = 0}; keep the part of the
        # kernel tangent to it
        n = central_jacobian(lambda y: pfaffian(F(y)), x)
        if np.linalg.norm(n) <= 1e-10:
            raise DegeneracyError(f"kernel dimension {m} with singular degeneracy surface", point=x)
        row = n @ K
        _, _, vt = np.linalg.svd(row[None, :])
        if m - 1 != 1:
            raise DegeneracyError(f"tangent kernel dimension {m - 1} != 1", point=x)
        v = K @ vt[-1]
        return v / np.linalg.norm(v)
    raise DegeneracyError(f"kernel dimension {m} != 1", point=x)


def magnetic_line(F, x0, arc_length, step, tol=RANK_TOL, min_dot=0.5):
    """Integrate the unit kernel line field of ``F`` from ``x0`` (RK4).

    Where the rank drops by more than one (on a degeneracy surface of an
    even-dimensional form) the kernel is intersected with the tangent space
    of that surface.
    """
    if not (arc_length > 0 and step > 0):
        raise ValueError("arc_length and step must be positive")
    x = np.asarray(x0, dtype=float).copy()
    v0 = _kernel_direction(F, x, tol)
    lead = np.flatnonzero(np.abs(v0) > 1e-12)
    if lead.size and v0[lead[0]] < 0:
        v0 = -v0
    prev = v0
    n = int(math.ceil(arc_length / step))
    hstep = arc_length / n

    def direction(y, ref):
        v = _kernel_direction(F, y, tol)
        dot = float(v @ ref)
        if dot < 0:
            v, dot = -v, -dot
        if dot < min_dot:
            raise ContinuityError(f"kernel direction jumps (cos={dot:.3g}) at x={y.tolist()}")
        return v

    pts = [x.copy()]
    for _ in range(n):
        k1 = direction(x, prev)
        k2 = direction(x + 0.5 * hstep * k1, k1)
        k3 = direction(x + 0.5 * hstep * k2, k1)
        k4 = direction(x + hstep * k3, k1)
        x = x + hstep / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        prev = k1
        pts.append(x.copy())
    return LineSample(np.array(pts), hstep * np.arange(n + 1))


# --- canonical fields --------------------------------------------------------


def _field(dim, A, JA, sigma):
    pot = VectorPotential(dim, A, JA)
    return pot, TwoForm(dim, sigma)


def canonical_field(kind, **params):
    """Closed-form model fields: ``(VectorPotential, TwoForm)``.

    kinds: darboux (d), martinet2d (nu), nondeg4d, roussarie4d,
    constant (f, optional d), model2d (nu).
    """
    if kind == "darboux":
        d = int(params.get("d", 2))
        if d < 2 or d % 2:
            raise UsageError(f"darboux needs an even d >= 2, got {d}")

        def A(x):
            a = np.zeros(d)
            a[1::2] = x[0::2]
            return a

        def JA(x):
            J = np.zeros((d, d))
            for j in range(0, d, 2):
                J[j, j + 1] = 1.0
            return J

        return _field(d, A, JA, lambda x: JA(x) - JA(x).T)

    if kind in ("martinet2d", "model2d"):
        nu = params.get("nu", 2)
        if int(nu) != nu or nu < 2:
            raise UsageError(f"nu must be an integer >= 2, got {nu}")
        nu = int(nu)

        def sigma(x):
            return np.array([[0.0, x[0] ** (nu - 1)], [-(x[0] ** (nu - 1)), 0.0]])

        return _field(
            2,
            lambda x: np.array([0.0, x[0] ** nu / nu]),
            lambda x: np.array([[0.0, x[0] ** (nu - 1)], [0.0, 0.0]]),
            sigma,
        )

    if kind == "nondeg4d":
        # x1 dx1^dx2 + dx3^dx4
        def JA(x):
            J = np.zeros((4, 4))
            J[0, 1] = x[0]
            J[2, 3] = 1.0
            return J

        return _field(4, lambda x: np.array([0.0, 0.5 * x[0] ** 2, 0.0, x[2]]), JA, lambda x: JA(x) - JA(x).T)

    if kind == "roussarie4d":
        def A(x):
            r2 = x[2] ** 2 + x[3] ** 2
            c = x[0] - 0.25 * r2
            return np.array([0.0, x[0] - 0.5 * r2, -c * x[3], c * x[2]])

        def JA(x):
            x1, x3, x4 = x[0], x[2], x[3]
            c = x1 - 0.25 * (x3 * x3 + x4 * x4)
            return np.array(
                [
                    [0.0, 1.0, -x4, x3],
                    [0.0, 0.0, 0.0, 0.0],
                    [0.0, -x3, 0.5 * x3 * x4, c - 0.5 * x3 * x3],
                    [0.0, -x4, -c + 0.5 * x4 * x4, -0.5 * x3 * x4],
                ]
            )

        def sigma(x):
            x1, x3, x4 = x[0], x[2], x[3]
            F = np.zeros((4, 4))
            F[0, 1], F[0, 2], F[0, 3] = 1.0, -x4, x3
            F[1, 2], F[1, 3] = x3, x4
            F[2, 3] = 2.0 * x1 - (x3 * x3 + x4 * x4)
            return F - F.T

        return _field(4, A, JA, sigma)

    if kind == "constant":
        f = [float(v) for v in params.get("f", ())]
        if not f or any(v <= 0 for v in f):
            raise UsageError(f"constant field needs a nonempty positive f list, got {f}")
        r = len(f)
        d = int(params.get("d", 2 * r))
        if d < 2 * r:
            raise UsageError(f"d={d} too small for {r} intensities")
        S = np.zeros((d, d))
        for j, fj in enumerate(f):
            S[j, j + r] = fj

        def A(x):
            a = np.zeros(d)
            a[r : 2 * r] = np.asarray(f) * x[:r]
            return a

        return _field(d, A, lambda x: S.copy(), lambda x: S - S.T)

    raise UsageError(f"unknown field kind {kind!r}")


def field_from_json(doc):
    """Build ``{'potential', 'two_form', 'metric'}`` from a JSON document.

    Either ``{"kind": ..., "params": {...}}`` or
    ``{"potential": [exprs], "metric": [[exprs]]}``.
    """
    if not isinstance(doc, dict):
        raise UsageError("field document must be a JSON object")
    unknown = set(doc) - {"kind", "params", "potential", "metric"}
    if unknown:
        raise UsageError(f"unknown field keys: {sorted(unknown)}")
    if "kind" in doc:
        params = doc.get("params", {}) or {}
        if not isinstance(params, dict):
            raise UsageError("params must be an object")
        A, F = canonical_field(doc["kind"], **params)
    elif "potential" in doc:
        texts = doc["potential"]
        if not isinstance(texts, list) or not 2 <= len(texts) <= 4:
            raise UsageError("potential must be a list of 2 to 4 expressions")
        A = VectorPotential.from_expressions(texts)
        F = A.two_form()
    else:
        raise UsageError("field document needs 'kind' or 'potential'")
    if "metric" in doc:
        g = MetricTensor.from_expressions(doc["metric"])
        if g.dim != A.dim:
            raise UsageError("metric dimension does not match potential")
    else:
        g = MetricTensor.identity(A.dim)
    return {"potential": A, "two_form": F, "metric": g}
