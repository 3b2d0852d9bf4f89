"""Correlation-length estimates over a range of p next to the single-path bound ln(1/p)."""
import argparse
import math

import numpy as np

from bbperc.percolation import estimate_xi


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", default="0.05,0.1,0.2,0.3,0.35")
    ap.add_argument("--n", default="2,3,4")
    ap.add_argument("--samples", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    ns = [int(v) for v in args.n.split(",")]
    rng = np.random.default_rng(args.seed)
    print("p,xi,stderr,log_inverse_p")
    for p in map(float, args.p.split(",")):
        est = estimate_xi(2, p, (1, 0), ns, args.samples, rng)
        print(f"{p},{est.xi:.6g},{est.stderr:.3g},{math.log(1 / p):.6g}")


if __name__ == "__main__":
    main()
