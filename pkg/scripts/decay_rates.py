"""Tabulate sup |f_R - f| against R and fit the decay laws.

    python scripts/decay_rates.py [--csv out.csv]

Laplace (ordinary smooth, beta = 2) should give a log-log slope near -1;
the standard normal should give a slope near -1/2 for log error against R^2.
"""

import argparse
import csv
import sys

import numpy as np

from supcons.bounds import normal_mixture_bound, prop1_bound
from supcons.densities import MixtureDensity, classify_smoothness
from supcons.smoother import GridSpec, SmootherConfig, sup_error_empirical

GRID = GridSpec(-10.0, 10.0, 0.005)


def table(f, radii, method="difference"):
    cls = classify_smoothness(f)
    rows = []
    for R in radii:
        err = sup_error_empirical(f, SmootherConfig(R, grid=GRID), method=method)
        rows.append((f.family.value, R, err, prop1_bound(cls, 1, R)))
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--csv", help="also write the table here")
    args = parser.parse_args(argv)

    lap = MixtureDensity("laplace", [0.5, 0.5], [-1.0, 1.0], 1.0)
    lap_rows = table(lap, [2.0, 4.0, 8.0, 16.0, 32.0, 64.0])
    gauss = MixtureDensity.single("gaussian")
    gauss_rows = table(gauss, [1.0, 2.0, 2.5, 3.0, 3.5, 4.0, 6.0, 8.0], method="tail")

    print(f"{'family':>9} {'R':>6} {'sup error':>12} {'envelope':>12} {'ratio':>8}")
    for fam, R, err, bound in lap_rows + gauss_rows:
        print(f"{fam:>9} {R:6.1f} {err:12.4e} {bound:12.4e} {err / bound:8.4f}")

    R = np.array([r[1] for r in lap_rows[1:5]])
    e = np.array([r[2] for r in lap_rows[1:5]])
    print(f"\nLaplace log-log slope over R = 4..32: {np.polyfit(np.log(R), np.log(e), 1)[0]:.4f}")
    R = np.array([r[1] for r in gauss_rows[1:5]])
    e = np.array([r[2] for r in gauss_rows[1:5]])
    print(f"normal slope of log error in R^2 over R = 2..3.5: {np.polyfit(R ** 2, np.log(e), 1)[0]:.4f}")
    print(f"normal-mixture bound at R = 3: {normal_mixture_bound(1.0, 3.0):.7f}")

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["family", "R", "sup_error", "prop1_bound"])
            w.writerows(lap_rows + gauss_rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
