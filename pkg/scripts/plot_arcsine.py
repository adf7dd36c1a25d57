"""Empirical occupation CDF against the arcsine law for one report CSV.

    python scripts/plot_arcsine.py reports/arcsine-1.csv [--rho 0.5]

Needs matplotlib, which the package itself does not depend on.
"""
import argparse
import csv

import numpy as np

from stablelab.stable_laws import arcsine_cdf


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv")
    ap.add_argument("--rho", type=float, default=0.5)
    ap.add_argument("--out", default=None)
    a = ap.parse_args()
    import matplotlib.pyplot as plt

    with open(a.csv) as fh:
        rows = list(csv.DictReader(fh))
    t = np.linspace(0, 1, 401)
    plt.plot(t, arcsine_cdf(a.rho, t), "k-", lw=2, label=f"arcsine({a.rho:g})")
    for col in rows[0]:
        if col.startswith("psi["):
            x = np.sort([float(r[col]) for r in rows if r[col] != ""])
            plt.step(x, np.arange(1, len(x) + 1) / len(x), where="post", lw=0.8, label=col)
    plt.xlabel("occupation fraction")
    plt.ylabel("CDF")
    plt.legend(fontsize=7)
    if a.out:
        plt.savefig(a.out, dpi=120)
    else:
        plt.show()


if __name__ == "__main__":
    main()
