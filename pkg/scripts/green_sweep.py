#!/usr/bin/env python3
"""Green reconstruction error over interior points for the D_k null basis.

For each radius the worst coordinate error over the null basis is printed,
with both the derived and the printed sign of the boundary integral.
"""
import argparse
import json
import sys
import warnings

import numpy as np

from cliffpde.operators import bosonic_null_basis
from cliffpde.poisson import exact_coords_at, greens_reconstruct_many


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=3)
    ap.add_argument("--k", type=int, default=1)
    ap.add_argument("--deg", type=int, default=2, help="x-degree of the null basis")
    ap.add_argument("--radii", default="0,0.2,0.4,0.6,0.8,0.9")
    ap.add_argument("--x-degree", type=int, default=16, help="boundary sphere rule degree")
    args = ap.parse_args(argv)
    fs = bosonic_null_basis(args.m, args.k, args.deg)
    direction = np.ones(args.m) / np.sqrt(args.m)
    warnings.simplefilter("ignore", RuntimeWarning)
    for r in (float(t) for t in args.radii.split(",")):
        y = r * direction
        want = np.array([exact_coords_at(f, args.k, y) for f in fs])
        row = {"radius": r, "n_fields": len(fs)}
        for signs in ("derived", "printed"):
            got = greens_reconstruct_many(fs, args.k, y, x_degree=args.x_degree, signs=signs)
            row[signs] = float(np.max(np.abs(got - want)))
        print(json.dumps(row))
    return 0


if __name__ == "__main__":
    sys.exit(main())
