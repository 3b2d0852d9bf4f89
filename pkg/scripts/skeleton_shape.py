"""Sample conditioned clusters and print the skeleton covariance ratios and regeneration statistics."""
import argparse
from fractions import Fraction

import numpy as np

from bbperc.analysis import covariance_ratio_test
from bbperc.cli import skeleton_summary
from bbperc.percolation import SlabSpec, max_regeneration_gap, sample_conditioned_clusters


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, default=0.45)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--W", type=int, default=12)
    ap.add_argument("--samples", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    slab = SlabSpec(2, args.p, (1, 0), (0, 0), (args.n, 0), args.W)
    ens = sample_conditioned_clusters(slab, args.samples, np.random.default_rng(args.seed))
    st, _ = skeleton_summary(ens.samples, args.n, (1, 0), 4)
    q = [Fraction(k, 4) for k in range(4)]
    rep = covariance_ratio_test(st, [(q[1], q[2]), (q[1], q[3]), (q[2], q[3])])
    points = [len(s.skeleton.points) for s in ens.samples]
    off_axis = sum(any(z[1] for z in s.skeleton.points) for s in ens.samples)
    print(f"acceptance      {ens.acceptance:.4g}")
    print(f"mean points     {np.mean(points):.3f}")
    print(f"off-axis        {off_axis} / {len(ens.samples)}")
    print(f"mean max gap    {np.mean([max_regeneration_gap(s.skeleton) for s in ens.samples]):.3f}")
    print(rep.row())


if __name__ == "__main__":
    main()
