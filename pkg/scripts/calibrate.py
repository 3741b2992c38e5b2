#!/usr/bin/env python3
"""Calibrate c_{m,k} from the Poisson residual and store it in calibration.json.

Two different bumps must give the same constant (relative 1e-4) before a
value is stored.  k = 0 is checked against the Newtonian constant instead.
"""
import argparse
import json
import sys
import time

from cliffpde.clifford import omega
from cliffpde.kernels import newtonian_constant, store_calibration
from cliffpde.poisson import calibrate, default_source


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("pairs", nargs="*", default=["3,1", "5,1"], help="m,k pairs")
    ap.add_argument("--order", type=int, default=8, help="finite-difference order")
    ap.add_argument("--dry-run", action="store_true")
    args = ap.parse_args(argv)
    status = 0
    for pair in args.pairs:
        m, k = (int(t) for t in pair.split(","))
        start = time.time()
        results = [calibrate(m, k, source=default_source(m, k, variant), order=args.order)
                   for variant in (0, 1)]
        a, b = results[0].c, results[1].c
        agree = abs(a - b) / abs(a)
        info = {"c_times_omega": a * omega(m), "bump_agreement": agree,
                "spread": max(r.spread for r in results), "fd_order": args.order}
        if k == 0:
            exact = newtonian_constant(m).value(m)
            info["newtonian_error"] = abs(a - exact) / abs(exact)
        ok = agree < 1e-4
        print(json.dumps({"m": m, "k": k, "c": a, "ok": ok, "seconds": round(time.time() - start, 1),
                          **info}))
        if not ok:
            status = 1
        elif k > 0 and not args.dry_run:
            store_calibration(m, k, a, {"bump_agreement": agree, "fd_order": args.order})
    return status


if __name__ == "__main__":
    sys.exit(main())
