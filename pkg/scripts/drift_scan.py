"""Guiding-centre error against mu for a uniform field with V = 1 - alpha x1."""

import argparse

from magspec import dynamics as dyn
from magspec.fields import ScalarField


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--mus", type=float, nargs="+", default=[25, 50, 100, 200, 400])
    ap.add_argument("--T", type=float, default=2.0)
    a = ap.parse_args()
    base = dyn.symmetric_gauge_system(1.0, 1.0)
    sys_ = dyn.MagneticSystem(base.metric, base.potential, ScalarField.linear(2, 1.0, [-a.alpha, 0.0]), 1.0)
    res = dyn.guiding_center_error_scan(sys_, [0.0, 0.0], [1.0, 0.0], a.mus, a.T, 1e-12)
    for mu, d in zip(res.mus, res.deviations):
        print(f"mu={mu:8.1f}  deviation={d:.6e}  mu^2*deviation={mu * mu * d:.6f}")
    print(f"slope {res.slope:.4f} (expected -2); alpha/2 = {a.alpha / 2}")
    print("4D model invariants at T=10:")
    for mu in (50.0, 100.0, 200.0):
        r = dyn.model4d_invariants(mu, [0.2, 0.0, 0.8, 0.0], [0.3, 0.2, 0.1, 0.4], 10.0)
        print(f"  mu={mu:6.1f} xi2 {r.xi2_drift:.1e} vartheta {r.theta_drift:.1e} x1-rho^2/2 drift {r.invariant_drift:.4e}")


if __name__ == "__main__":
    main()
