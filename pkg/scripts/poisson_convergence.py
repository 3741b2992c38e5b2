#!/usr/bin/env python3
"""Residual of the Poisson potential as the radial panel count doubles.

Prints one JSON line per (m, k) with the panel ladder, the radially exact
floor and whether every halving step passed.
"""
import argparse
import json
import sys
import time

from cliffpde.poisson import check_points_for, default_source, panel_convergence


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("pairs", nargs="*", default=["5,0", "5,1"], help="m,k pairs")
    ap.add_argument("--h", type=float, default=0.05, help="finite-difference step")
    ap.add_argument("--sphere-degree", type=int, default=16)
    ap.add_argument("--panels", default="1,2,4,8,16")
    args = ap.parse_args(argv)
    panels = tuple(int(p) for p in args.panels.split(","))
    status = 0
    for pair in args.pairs:
        m, k = (int(t) for t in pair.split(","))
        src = default_source(m, k)
        start = time.time()
        out = panel_convergence(src, check_points_for(src), args.h, panels=panels,
                                sphere_degree=args.sphere_degree)
        print(json.dumps({"m": m, "k": k, **out, "seconds": round(time.time() - start, 1)}))
        status |= not out["converged"]
    return status


if __name__ == "__main__":
    sys.exit(main())
