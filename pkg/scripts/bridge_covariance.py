"""Exact conditional covariance against C_n s(1-t) for a few step laws, printed as CSV."""
import argparse
import itertools
from fractions import Fraction

from bbperc.bridge import covariance_prediction, estimate_Cn, exact_bridge_law
from bbperc.lattice_walk import load_law


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--laws", default="pm1,lazy")
    ap.add_argument("--n", type=int, default=8)
    args = ap.parse_args()
    print("law,n,s,t,covariance,prediction")
    for name in args.laws.split(","):
        tables = exact_bridge_law(load_law(name), args.n)
        C = estimate_Cn(tables).value
        grid = [Fraction(i, args.n) for i in range(args.n + 1)]
        for s, t in itertools.combinations_with_replacement(grid, 2):
            cov = tables.scaled_covariance(s, t)[0, 0]
            print(f"{name},{args.n},{s},{t},{cov},{covariance_prediction(s, t, args.n, C)}")


if __name__ == "__main__":
    main()
