"""Pilot for the excursion scaling: density of the induced invariant law at 1/2.

The side tail constant c in mu_Y(phi^(j) > t) ~ c t^(-1/p) follows from that
density; the independence experiment then scales by B_n = (c n)^p.  This
script checks that the density estimate is stable across window widths.

    python scripts/pilot_independence.py --p 3 --returns 10000000
"""
import argparse

import numpy as np

from stablelab.intermittent import estimate_density_at_half, find_Y, make_lsv2, side_tail_constant


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, default=3.0)
    ap.add_argument("--returns", type=int, default=10_000_000)
    ap.add_argument("--chains", type=int, default=20)
    ap.add_argument("--widths", type=float, nargs="*", default=[0.02, 0.01, 0.005])
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    m = make_lsv2(a.p)
    rs = find_Y(m)
    for w in a.widths:
        h = estimate_density_at_half(m, rs, np.random.default_rng(a.seed), a.returns, a.chains, width=w)
        print(f"width={w:<6g} h(1/2)={h:.4f}  c={side_tail_constant(m, h):.4f}")


if __name__ == "__main__":
    main()
