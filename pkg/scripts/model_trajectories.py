"""Trajectories of the 2D degenerate model at k = k*, k = 2 and with a tilt alpha.

Writes one CSV per run to the output directory.
"""

import argparse
import csv
import pathlib

from magspec import dynamics as dyn
from magspec import model


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mu", type=float, default=100.0)
    ap.add_argument("--periods", type=int, default=10)
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("trajectories"))
    a = ap.parse_args()
    a.out.mkdir(parents=True, exist_ok=True)
    ks = model.find_kstar(2).value
    runs = {"kstar": (ks, 0.0), "k0.65": (0.65, 0.0), "k2": (2.0, 0.0), "kstar_alpha0.1": (ks, 0.1)}
    for name, (k, alpha) in runs.items():
        m = model.EffectiveModel(2, k)
        # dynamical x1-period is sqrt(2) T(k) in the mu=1 picture
        T = (a.periods + 0.5) * 2**0.5 * model.period_T(m) * a.mu**-0.5
        run = dyn.simulate_model(2, a.mu, k, T, alpha=alpha, n_samples=2000)
        print(
            f"{name:16s} k={k:.6f} alpha={alpha}  dx2/period={run.mean_dx2:+.3e}"
            f"  sqrt2*I(k)={2**0.5 * model.drift_increment_I(m):+.3e}  periods={len(run.dx2_per_period)}"
        )
        with open(a.out / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x1", "x2"])
            for t, x in zip(run.sample.t, run.sample.x):
                w.writerow([t, x[0], x[1]])


if __name__ == "__main__":
    main()
