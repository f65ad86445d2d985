"""Weyl integral against a cutoff for the degenerate model field, as mu h grows.

The integral should fall off like (mu h)^-1 when the cutoff straddles the
zero set of the field.
"""

import argparse
import time

import numpy as np

from magspec import weyl


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, default=0.01)
    ap.add_argument("--muh", type=float, nargs="+", default=[2, 4, 8, 16])
    ap.add_argument("--rel-tol", type=float, default=1e-4)
    a = ap.parse_args()

    def psi(x):
        return (1 - x[1] ** 2) ** 4 * (1 - (x[0] / 2) ** 2) ** 4

    vals = []
    for mh in a.muh:
        start = time.perf_counter()
        field = weyl.degenerate_model_field(2, mh / a.h, a.h)
        r = weyl.integrate_density(field, psi, [(-2, 2), (-1, 1)], rel_tol=a.rel_tol, inner_axis=0)
        vals.append(r.value)
        print(f"mu h={mh:6g}  integral {r.value:.8e}  converged {r.converged}  {time.perf_counter() - start:.1f}s")
    slope = np.polyfit(np.log(a.muh), np.log(vals), 1)[0]
    print(f"log-log slope {slope:.3f}")


if __name__ == "__main__":
    main()
