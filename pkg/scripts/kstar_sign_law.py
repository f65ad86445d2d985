"""Table of T(k), I(k) for nu=2..4 and the critical wavenumber k*."""

import argparse
import math

import numpy as np

from magspec import model
from magspec.errors import DivergenceError


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nu", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--step", type=float, default=0.05)
    ap.add_argument("--kmax", type=float, default=1.5)
    a = ap.parse_args()
    for nu in a.nu:
        ks = model.find_kstar(nu).value
        print(f"nu={nu}  k*={ks:.10f}")
        print(f"{'k':>6} {'T':>14} {'I':>14} sign(I)==sign(k-k*)")
        for k in np.arange(a.step, a.kmax + 1e-12, a.step):
            m = model.EffectiveModel(nu, float(k))
            try:
                T, I = model.period_T(m), model.drift_increment_I(m)
            except DivergenceError:
                T, I = math.inf, math.nan
            ok = "-" if not math.isfinite(I) or abs(k - ks) < 0.02 else np.sign(I) == np.sign(k - ks)
            print(f"{k:6.2f} {T:14.8f} {I:14.8f} {ok}")
        print()


if __name__ == "__main__":
    main()
