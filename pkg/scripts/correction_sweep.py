"""Correction term over the action variable at several hbar, amplitude law and fit.

Saves the sweeps to an .npz file and prints the amplitude exponent, the
dominant period and the fitted (kappa, S0).
"""

import argparse
import math

import numpy as np

from magspec import correction as corr


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--hbar", type=float, nargs="+", default=[0.05, 0.025, 0.0125])
    ap.add_argument("--periods", type=int, default=1)
    ap.add_argument("--per-period", type=int, default=32)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="correction_sweeps.npz")
    ap.add_argument("--no-fit", action="store_true")
    a = ap.parse_args()
    S0 = corr.classical_action_at_kstar(2)
    sweeps = {}
    for hb in a.hbar:
        t0 = math.ceil(S0 / (2 * math.pi * hb))
        sw = corr.action_sweep(2, hb, t0, a.periods, a.per_period, jobs=a.jobs)
        sweeps[hb] = sw
        est = corr.dominant_period(sw.t, sw.values) if a.periods > 1 else None
        extra = f"  period {est.period:.4f}" if est else ""
        print(f"hbar={hb:<8g} amplitude {corr.oscillation_amplitude(sw):.6f}  mean {sw.values.mean():+.2e}{extra}")
    hbs = sorted(sweeps)
    if len(hbs) > 1:
        amps = [corr.oscillation_amplitude(sweeps[h]) for h in hbs]
        print(f"amplitude ~ hbar^{np.polyfit(np.log(hbs), np.log(amps), 1)[0]:.3f}")
    np.savez(
        a.out,
        **{f"{key}_{h}": getattr(sw, key) for h, sw in sweeps.items() for key in ("t", "W", "values")},
    )
    if not a.no_fit:
        W = np.concatenate([sw.W for sw in sweeps.values()])
        hb = np.concatenate([[h] * len(sw.W) for h, sw in sweeps.items()])
        vals = np.concatenate([sw.values for sw in sweeps.values()])
        fit = corr.fit_correction(W, hb, vals, 2, S0_range=(0.5 * S0, 1.5 * S0))
        print(f"fit: kappa={fit.kappa:.6f} S0={fit.S0:.9f} (classical {S0:.9f}) rms/amplitude={fit.rms / fit.amplitude:.4f}")


if __name__ == "__main__":
    main()
