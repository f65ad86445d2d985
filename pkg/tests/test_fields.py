import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from magspec import fields
from magspec.errors import ContinuityError, DegeneracyError, DomainError, UsageError

coords = st.floats(-0.9, 0.9)


def point(d):
    return st.lists(coords, min_size=d, max_size=d).map(np.array)


KINDS = [
    ("darboux", {"d": 4}),
    ("martinet2d", {"nu": 2}),
    ("model2d", {"nu": 3}),
    ("nondeg4d", {}),
    ("roussarie4d", {}),
    ("constant", {"f": [2.0, 1.0]}),
]


def test_two_form_examples():
    A, _ = fields.canonical_field("model2d", nu=3)
    x = np.array([0.4, -0.2])
    assert fields.two_form_from_potential(A, x)[0, 1] == pytest.approx(0.4**2, abs=1e-14)

    sym = fields.VectorPotential(2, lambda x: np.array([-x[1] / 2, x[0] / 2]))
    F = fields.two_form_from_potential(sym, np.array([0.3, 0.1]))
    assert F[0, 1] == pytest.approx(1.0, abs=1e-10)

    grad_phi = fields.VectorPotential(2, lambda x: np.array([x[1], x[0]]))
    assert np.allclose(fields.two_form_from_potential(grad_phi, np.array([0.5, 0.7])), 0.0, atol=1e-10)


def test_nonfinite_potential_is_domain_error():
    A = fields.VectorPotential(2, lambda x: np.array([1.0 / x[0], 0.0]))
    with np.errstate(all="ignore"), pytest.raises(DomainError):
        fields.two_form_from_potential(A, np.array([0.0, 0.0]))


def test_fd_and_closed_form_jacobians_agree():
    A, _ = fields.canonical_field("roussarie4d")
    fd = fields.VectorPotential(4, A.func)
    x = np.array([0.1, -0.3, 0.4, 0.2])
    assert np.allclose(fd.jacobian(x), A.jacobian(x), atol=1e-9)


@given(point(3), st.lists(st.floats(-2, 2), min_size=4, max_size=4))
def test_gauge_invariance(x, c):
    A = fields.VectorPotential.from_expressions(["x2*x3", "sin(x1) - x3^2", "x1*x2^2"])
    # phi = c0 x1 x2 x3 + c1 x1^3 + c2 x2^2 x3 + c3 x3
    def grad_phi(y):
        return np.array(
            [
                c[0] * y[1] * y[2] + 3 * c[1] * y[0] ** 2,
                c[0] * y[0] * y[2] + 2 * c[2] * y[1] * y[2],
                c[0] * y[0] * y[1] + c[2] * y[1] ** 2 + c[3],
            ]
        )

    shifted = A + fields.VectorPotential(3, grad_phi)
    F0 = fields.two_form_from_potential(A, x)
    F1 = fields.two_form_from_potential(shifted, x)
    assert np.max(np.abs(F0 - F1)) <= 1e-10


@pytest.mark.parametrize("kind,params", KINDS)
def test_canonical_forms_antisymmetric_even_rank(kind, params, rng):
    A, F = fields.canonical_field(kind, **params)
    for _ in range(1000):
        x = rng.uniform(-1, 1, A.dim)
        Fx = F(x)
        assert np.array_equal(Fx, -Fx.T)
        assert fields.numerical_rank(Fx) % 2 == 0


@pytest.mark.parametrize("kind,params", KINDS)
def test_canonical_potential_reproduces_form(kind, params, rng):
    A, F = fields.canonical_field(kind, **params)
    for _ in range(20):
        x = rng.uniform(-1, 1, A.dim)
        assert np.allclose(fields.two_form_from_potential(A, x), F(x), atol=1e-13)


def test_canonical_examples():
    _, F = fields.canonical_field("martinet2d", nu=2)
    assert F([0.37, 0.1])[0, 1] == pytest.approx(0.37)
    A, F = fields.canonical_field("model2d", nu=3)
    assert np.allclose(A(np.array([0.5, 0.2])), [0.0, 0.5**3 / 3])
    _, F = fields.canonical_field("constant", f=[2.0, 1.0])
    Fx = F(np.zeros(4))
    assert Fx[0, 2] == 2.0 and Fx[1, 3] == 1.0
    assert np.count_nonzero(Fx) == 4
    with pytest.raises(UsageError):
        fields.canonical_field("nonsense")
    with pytest.raises(UsageError):
        fields.canonical_field("martinet2d", nu=1)


def test_roussarie_entrywise():
    _, F = fields.canonical_field("roussarie4d")
    x1, x2, x3, x4 = 0.2, -0.1, 0.5, 0.3
    Fx = F([x1, x2, x3, x4])
    assert Fx[0, 1] == 1.0
    assert Fx[0, 2] == -x4 and Fx[0, 3] == x3
    assert Fx[1, 2] == x3 and Fx[1, 3] == x4
    assert Fx[2, 3] == pytest.approx(2 * x1 - (x3**2 + x4**2))


def test_intensity_examples():
    g2 = fields.MetricTensor.identity(2)
    F = np.array([[0.0, 1.7], [-1.7, 0.0]])
    s = fields.intensity_eigenvalues(g2, F, np.zeros(2))
    assert s.intensities == pytest.approx((1.7,)) and s.q == 0

    g3 = fields.MetricTensor.identity(3)
    F3 = np.zeros((3, 3))
    F3[0, 1], F3[1, 0] = 0.8, -0.8
    s = fields.intensity_eigenvalues(g3, F3, np.zeros(3))
    assert s.intensities == pytest.approx((0.8,)) and s.q == 1

    _, F4 = fields.canonical_field("constant", f=[2.0, 1.0])
    s = fields.intensity_eigenvalues(fields.MetricTensor.identity(4), F4, np.zeros(4))
    assert s.intensities == pytest.approx((2.0, 1.0)) and s.q == 0


def _random_spd(rng, d):
    M = rng.normal(size=(d, d))
    return M @ M.T + d * np.eye(d) * 0.3


def _random_antisym(rng, d):
    M = rng.normal(size=(d, d))
    return M - M.T


@pytest.mark.parametrize("d", [2, 3])
def test_intensity_matches_closed_forms(d, rng):
    closed = fields.intensity_2d if d == 2 else fields.intensity_3d
    for _ in range(200):
        G = _random_spd(rng, d)
        F = _random_antisym(rng, d)
        g = fields.MetricTensor(d, lambda x, G=G: G)
        s = fields.intensity_eigenvalues(g, F, np.zeros(d))
        assert s.r == 1
        assert abs(s.intensities[0] - closed(G, F)) <= 1e-10 * max(1.0, s.intensities[0])


def test_intensity_rejects_indefinite_metric():
    g = fields.MetricTensor(2, lambda x: np.array([[1.0, 0.0], [0.0, -1.0]]))
    with pytest.raises(DomainError):
        fields.intensity_eigenvalues(g, np.zeros((2, 2)), np.zeros(2))


def test_rank_strata():
    _, mart = fields.canonical_field("martinet2d", nu=2)
    _, nd = fields.canonical_field("nondeg4d")
    assert fields.rank_stratum(mart, np.array([0.0, 0.3])) == 2
    assert fields.rank_stratum(nd, np.array([0.0, 0.1, 0.2, 0.3])) == 2
    assert fields.rank_stratum(nd, np.array([1.0, 0.1, 0.2, 0.3])) == 0


@given(st.floats(1e-12, 1e-2), st.floats(1e-12, 1e-2), point(4))
def test_rank_stratum_monotone_in_tol(t1, t2, x):
    _, F = fields.canonical_field("roussarie4d")
    lo, hi = sorted((t1, t2))
    assert fields.rank_stratum(F, x, lo) <= fields.rank_stratum(F, x, hi)


def test_nondeg4d_lines_are_straight():
    _, F = fields.canonical_field("nondeg4d")
    line = fields.magnetic_line(F, [0.0, 0.2, 0.3, -0.1], 1.0, 0.05)
    assert np.allclose(line.points[:, 0], 0.0, atol=1e-12)
    assert np.allclose(line.points[:, 2], 0.3, atol=1e-12)
    assert np.allclose(line.points[:, 3], -0.1, atol=1e-12)
    assert np.all(np.diff(line.arc) <= 0.05 + 1e-15)


def test_martinet_line_is_the_axis():
    _, F = fields.canonical_field("martinet2d", nu=2)
    line = fields.magnetic_line(F, [0.0, -0.5], 1.0, 0.1)
    assert np.allclose(line.points[:, 0], 0.0, atol=1e-12)
    assert line.points[-1, 1] == pytest.approx(0.5)
    with pytest.raises(DegeneracyError):
        fields.magnetic_line(F, [0.3, 0.0], 1.0, 0.1)


def _helix(arc, step=0.01, r=0.5):
    _, F = fields.canonical_field("roussarie4d")
    line = fields.magnetic_line(F, [0.0, 0.0, r, 0.0], arc, step)
    p = line.points
    rho = np.hypot(p[:, 2], p[:, 3])
    theta = np.unwrap(np.arctan2(p[:, 3], p[:, 2]))
    return p, rho, theta


def test_roussarie_helix_radius_and_invariant():
    # the verbatim form conserves x2 + rho^2 theta (see README)
    p, rho, theta = _helix(10.0)
    assert np.max(np.abs(rho - rho[0])) <= 1e-6
    inv = p[:, 1] + rho**2 * theta
    assert np.max(np.abs(inv - inv[0])) <= 1e-5
    assert abs(theta[-1] - theta[0]) > 1.0  # it does wind


def test_kernel_jump_is_continuity_error():
    def F(x):
        a = np.array([[0, 0, 0], [0, 0, 1.0], [0, -1.0, 0]])
        b = np.array([[0, 1.0, 0], [-1.0, 0, 0], [0, 0, 0]])
        return a if x[0] < 0.05 else b

    with pytest.raises(ContinuityError):
        fields.magnetic_line(F, [0.0, 0.0, 0.0], 0.2, 0.02)


def test_field_from_json():
    doc = {"potential": ["-x2/2", "x1/2"], "metric": [["1", "0"], ["0", "1"]]}
    fd = fields.field_from_json(doc)
    assert fd["two_form"](np.array([0.1, 0.2]))[0, 1] == pytest.approx(1.0)
    fd = fields.field_from_json({"kind": "martinet2d", "params": {"nu": 3}})
    assert fd["two_form"](np.array([0.5, 0.0]))[0, 1] == pytest.approx(0.25)
    with pytest.raises(UsageError):
        fields.field_from_json({"potential": ["x1"], "colour": 1})
    with pytest.raises(UsageError):
        fields.field_from_json({"potential": ["import os", "x1"]})


def test_expression_metric_is_checked():
    g = fields.MetricTensor.from_expressions([["1 + x1^2", "0"], ["0", "exp(x2)"]])
    x = np.array([0.5, 0.1])
    assert g.det_g(x) == pytest.approx(1.0 / ((1 + 0.25) * math.exp(0.1)))
