"""Exact C_n for growing n next to the limiting variance of the step law."""
import argparse

from bbperc.bridge import estimate_Cn, exact_bridge_law
from bbperc.lattice_walk import load_law


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--law", default="lazy")
    ap.add_argument("--n", default="8,16,32,64")
    args = ap.parse_args()
    law = load_law(args.law)
    sigma2 = law.covariance[0][0]
    print("n,C_n,sigma2,gap")
    for n in map(int, args.n.split(",")):
        C = estimate_Cn(exact_bridge_law(law, n)).value
        print(f"{n},{C},{sigma2},{float(abs(C - sigma2)):.6g}")


if __name__ == "__main__":
    main()
