"""Acceptance criteria, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -s`` or ``python tests/test_acceptance.py``.
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import first_period
from magspec import correction as corr
from magspec import dynamics as dyn
from magspec import fields, model, sturm, weyl
from magspec.errors import DivergenceError


@pytest.fixture
def verdict(capsys):
    def report(n, name, ok, details):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {n} {name}: {details}")
        assert ok, details

    return report


def test_1_kstar_cli(verdict):
    start = time.perf_counter()
    out = subprocess.run(
        [sys.executable, "-m", "magspec.cli", "kstar", "--nu", "2"], capture_output=True, text=True, check=True
    )
    elapsed = time.perf_counter() - start
    ks = json.loads(out.stdout)["kstar"]["value"]
    ks3 = json.loads(
        subprocess.run([sys.executable, "-m", "magspec.cli", "kstar", "--nu", "3"], capture_output=True, text=True).stdout
    )["kstar"]["value"]
    ok = 0.64 <= ks <= 0.66 and elapsed < 5.0 and ks3 == 0.0
    verdict(1, "kstar", ok, f"k*(nu=2)={ks:.10f} in {elapsed:.2f}s, k*(nu=3)={ks3}")


def _signed_I(k):
    try:
        return model.drift_increment_I(model.EffectiveModel(2, k))
    except DivergenceError:
        # separatrix on the grid: sign from both one-sided limits
        left = model.drift_increment_I(model.EffectiveModel(2, k - 1e-9))
        right = model.drift_increment_I(model.EffectiveModel(2, k + 1e-9))
        return math.copysign(math.inf, left) if np.sign(left) == np.sign(right) else math.nan


def test_2_sign_law(verdict):
    start = time.perf_counter()
    ks = model.find_kstar(2).value
    bad, checked = [], 0
    for i in range(1, 31):
        k = 0.05 * i
        if abs(k - ks) < 0.02:
            continue
        checked += 1
        if np.sign(_signed_I(k)) != np.sign(k - ks):
            bad.append(k)
    elapsed = time.perf_counter() - start
    verdict(2, "sign law", not bad and elapsed < 10.0, f"{checked} grid points, mismatches {bad}, {elapsed:.2f}s")


def test_3_cyclotron_radius(verdict):
    worst = 0.0
    for mu in (10.0, 100.0):
        E, f = 0.5, 1.0
        sys_ = dyn.symmetric_gauge_system(f, mu, V=2 * E)
        x0 = np.array([0.1, 0.2])
        P0 = np.array([math.sqrt(4 * E), 0.0])
        center = x0 + np.array([P0[1], -P0[0]]) / (mu * f)
        tr = dyn.integrate_trajectory(sys_, dyn.PhasePoint.from_kinetic(sys_, x0, P0), 2 * math.pi / (mu * f), tol=1e-12, n_samples=400)
        radius = np.linalg.norm(P0) / (mu * f)
        worst = max(worst, float(np.max(np.abs(np.linalg.norm(tr.x - center, axis=1) / radius - 1))))
    verdict(3, "cyclotron radius", worst <= 1e-6, f"max relative radius error {worst:.2e}")


def test_4_drift_slope(verdict):
    start = time.perf_counter()
    base = dyn.symmetric_gauge_system(1.0, 1.0)
    sys_ = dyn.MagneticSystem(base.metric, base.potential, fields.ScalarField.linear(2, 1.0, [-0.5, 0.0]), 1.0)
    res = dyn.guiding_center_error_scan(sys_, [0.0, 0.0], [1.0, 0.0], [25, 50, 100, 200], 2.0, 1e-12)
    elapsed = time.perf_counter() - start
    ok = abs(res.slope + 2.0) <= 0.3 and elapsed < 120.0
    verdict(4, "guiding-centre slope", ok, f"slope {res.slope:.4f}, deviations {np.round(res.deviations, 10).tolist()}, {elapsed:.1f}s")


def test_5_model4d_invariants(verdict):
    reps = {mu: dyn.model4d_invariants(mu, [0.2, 0.0, 0.8, 0.0], [0.3, 0.2, 0.1, 0.4], 10.0) for mu in (100.0, 200.0)}
    r = reps[100.0]
    ratio = r.invariant_drift / reps[200.0].invariant_drift
    ok = r.xi2_drift <= 1e-9 and r.theta_drift <= 1e-9 and not r.truncated and abs(ratio - 2.0) <= 0.6
    verdict(
        5, "4D invariants", ok,
        f"xi2 {r.xi2_drift:.1e}, vartheta {r.theta_drift:.1e}, invariant drift {r.invariant_drift:.3e} / "
        f"{reps[200.0].invariant_drift:.3e} (ratio {ratio:.3f})",
    )


def test_6_roussarie_line(verdict):
    _, F = fields.canonical_field("roussarie4d")
    p = fields.magnetic_line(F, [0.0, 0.0, 0.5, 0.0], 10.0, 0.01).points
    rho = np.hypot(p[:, 2], p[:, 3])
    theta = np.unwrap(np.arctan2(p[:, 3], p[:, 2]))
    inv = p[:, 1] + 0.5 * rho**2 * theta
    d_inv = float(np.max(np.abs(inv - inv[0])))
    d_rho = float(np.max(np.abs(rho - rho[0])))
    # the form as written conserves x2 + rho^2 theta instead; see README
    alt = p[:, 1] + rho**2 * theta
    verdict(
        6, "Roussarie magnetic line", d_inv <= 1e-5 and d_rho <= 1e-6,
        f"x2+rho^2 theta/2 varies by {d_inv:.3e}, rho by {d_rho:.1e} (x2+rho^2 theta varies by {np.ptp(alt):.1e})",
    )


def _random_single_well(rng):
    nu = int(rng.choice([2, 3]))
    op = corr.AuxOperator1D(nu, float(rng.uniform(0.01, 0.05)), float(rng.uniform(-1.5, 1.5)), float(rng.uniform(0.5, 2.0)))
    lo = op.min_energy
    bump = op.bump_energy()
    hi = bump if bump is not None and bump > lo else lo + 1.0
    return op, float(lo + rng.uniform(0.05, 0.95) * (hi - lo))


def test_7_eigencount(verdict, rng):
    sturm_bad, bs_bad = [], []
    for i in range(50):
        op, tau = _random_single_well(rng)
        fd = corr.fd_eigencount(op, tau)
        N = min(fd.certificate["N"], 2000)
        diag, off, _ = corr.fd_matrix(op, tau, N)
        T = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
        if sturm.sturm_count(diag, off, tau) != int(np.sum(np.linalg.eigvalsh(T) < tau)):
            sturm_bad.append(i)
        if abs(corr.bohr_sommerfeld_eigenvalues(op, tau)[0].count - fd.count) > 1:
            bs_bad.append(i)
    verdict(7, "eigenvalue counting", not sturm_bad and not bs_bad,
            f"50 instances, Sturm/dense mismatches {sturm_bad}, BS off by >1 {bs_bad}")


def _brute_d3(f, V, E, mu, h, g):
    total = sum(
        math.sqrt(a)
        for a in (2 * E + V - (2 * n + 1) * f * mu * h for n in range(2000))
        if a > 0
    )
    return 2.0 * (2 * math.pi) ** -2 * mu * h**-2 * f * math.sqrt(g) * total


def test_8_weyl_density(verdict, rng):
    exact = 0
    for _ in range(100):
        f, V, g = rng.uniform(0.1, 3), rng.uniform(-1, 3), rng.uniform(0.2, 3)
        mu, h, E = rng.uniform(0.5, 20), rng.uniform(0.01, 0.9), rng.uniform(-1, 3)
        p = weyl.WeylParams(2, 1, (f,), V, E, mu, h, g)
        exact += weyl.magnetic_weyl_density(p).value == weyl.landau_density_2d(f, V, g, mu, h, E)
    worst = 0.0
    for _ in range(100):
        f, V, g = rng.uniform(0.1, 3), rng.uniform(-1, 3), rng.uniform(0.2, 3)
        mu, h, E = rng.uniform(0.5, 5), rng.uniform(0.2, 1.0), rng.uniform(-1, 3)
        got = weyl.magnetic_weyl_density(weyl.WeylParams(3, 1, (f,), V, E, mu, h, g)).value
        worst = max(worst, abs(got - _brute_d3(f, V, E, mu, h, g)))
    verdict(8, "Weyl density", exact == 100 and worst <= 1e-12,
            f"d=2 exact matches {exact}/100, d=3 max abs error {worst:.1e}")


def test_9_g_function(verdict, rng):
    per = max(abs(corr.g_function(t + 1) - corr.g_function(t)) for t in rng.uniform(-5, 5, 50))
    n = 512
    integral = float(np.mean([corr.g_function((i + 0.5) / n) for i in range(n)]))
    peak = max(abs(corr.g_function(t)) for t in np.arange(1000) * 1e-3)
    q = max(
        abs(corr.g_function(s + d) - corr.g_function(s)) / math.sqrt(d)
        for s, d in zip(rng.uniform(0, 1, 300), 10 ** rng.uniform(-4, -1, 300))
    )
    ok = per <= 1e-6 and abs(integral) <= 1e-4 and peak > 0.01 and math.isfinite(q)
    verdict(9, "G function", ok, f"periodicity {per:.1e}, integral {integral:.1e}, max {peak:.4f}, Holder-1/2 quotient {q:.3f}")


def test_10_correction_scaling(verdict, correction_sweeps):
    sweeps = correction_sweeps["sweeps"]
    hbars = sorted(sweeps)
    amps = [corr.oscillation_amplitude(first_period(sweeps[hb])) for hb in hbars]
    p = float(np.polyfit(np.log(hbars), np.log(amps), 1)[0])
    long = sweeps[0.025]
    est = corr.dominant_period(long.t, long.values)
    elapsed = correction_sweeps["elapsed"]
    ok = abs(p - 0.5) <= 0.15 and abs(est.period - 1.0) <= 0.05 and elapsed < 600
    verdict(
        10, "correction scaling", ok,
        f"amplitudes {[round(a, 6) for a in amps]} give p={p:.3f}, period {est.period:.4f} "
        f"(peak ratio {est.peak_ratio:.1f}), sweeps {elapsed:.0f}s",
    )


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
