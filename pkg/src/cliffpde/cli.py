"""Command-line driver.

Exit codes: 0 when every case passes, 1 on a verification failure, 2 on a
usage or configuration error.  Reports are JSON with ``"schema": 1`` and are
written atomically.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

SCHEMA = 1


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    m: int = 3
    k: int = 0
    seed: int = 0
    output: str | None = None
    threads: int = 1
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.m < 3:
            raise UsageError("m must be >= 3")
        if self.k < 0:
            raise UsageError("k must be >= 0")
        if self.threads < 1:
            raise UsageError("threads must be >= 1")


def thread_cap(requested: int | None = None) -> int:
    env = os.environ.get("CLIFFPDE_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    n = cap if requested is None else min(requested, cap)
    return max(1, n)


def write_json(path: str | None, payload: dict) -> str:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
        return text
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=target.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, target)
    return text


def _envelope(cfg: RunConfig, body: dict) -> dict:
    return {"schema": SCHEMA, "command": cfg.command,
            "timestamp": datetime.now(timezone.utc).isoformat(), **body}


# commands ---------------------------------------------------------------------

def cmd_verify(cfg: RunConfig) -> int:
    from .verify import SUITES, run_suite, suite_applies

    suites = list(SUITES) if cfg.options["suite"] == "all" else [cfg.options["suite"]]
    if len(suites) == 1 and not suite_applies(suites[0], cfg.m, cfg.k):
        raise UsageError(f"suite {suites[0]} is not admissible for m={cfg.m}, k={cfg.k}")
    reports, skipped = [], []
    pool = ProcessPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    try:
        for name in suites:
            if not suite_applies(name, cfg.m, cfg.k):
                skipped.append(name)
                continue
            reports.append(run_suite(name, cfg.m, cfg.k, cfg.seed, cfg.options.get("cases"), pool))
    finally:
        if pool is not None:
            pool.shutdown()
    passed = all(r.passed for r in reports)
    body = {"m": cfg.m, "k": cfg.k, "seed": cfg.seed, "pass": passed, "skipped": skipped,
            "reports": [r.to_json() for r in reports]}
    write_json(cfg.output, _envelope(cfg, body))
    for r in reports:
        bad = sum(not c.passed for c in r.cases)
        print(f"{r.suite}: {len(r.cases) - bad}/{len(r.cases)} passed", file=sys.stderr)
    return 0 if passed else 1


def cmd_dims(cfg: RunConfig) -> int:
    from .spaces import dims

    d = dims(cfg.m, cfg.k)
    body = {"m": cfg.m, "k": cfg.k, "dim_Hk": d["dim_Hk"], "rank_Mk": d["rank_Mk"],
            "pass": d["dim_Hk"] == d["dim_Hk_formula"] and d["rank_Mk"] == d["rank_Mk_formula"]}
    write_json(cfg.output, _envelope(cfg, body))
    return 0 if body["pass"] else 1


def cmd_kernel(cfg: RunConfig) -> int:
    from .kernels import monogenic_kernel, zonal_harmonic
    from .spaces import harmonic_basis, monogenic_basis, real_span

    emit = cfg.options["emit"]
    kern = zonal_harmonic(cfg.m, cfg.k) if emit == "zk" else monogenic_kernel(cfg.m, cfg.k)
    if emit == "zk":
        elements = list(harmonic_basis(cfg.m, cfg.k).elements)
    else:
        elements = real_span(monogenic_basis(cfg.m, cfg.k))
    reproduces = all(kern.reproduce(p) == p for p in elements)
    symmetric = kern.swapped() == kern.poly if emit == "zk" else None
    ok = reproduces and symmetric is not False
    body = {"m": cfg.m, "k": cfg.k, "kernel": kern.to_json(), "reproduces_basis": reproduces,
            "exchange_symmetric": symmetric, "pass": ok}
    write_json(cfg.output, _envelope(cfg, body))
    return 0 if ok else 1


def _read_points(path: str, m: int) -> np.ndarray:
    text = Path(path).read_text()
    try:
        pts = np.asarray(json.loads(text), float)
    except json.JSONDecodeError:
        pts = np.loadtxt(path, ndmin=2, delimiter=None)
    pts = np.atleast_2d(pts)
    if pts.shape[1] != m:
        raise UsageError(f"points must have {m} columns")
    return pts


def cmd_poisson(cfg: RunConfig) -> int:
    from .poisson import (PoissonConfig, parse_bump, residual_Dk, solve_poisson,
                          stencil_points)

    try:
        src = parse_bump(cfg.m, cfg.k, cfg.options["bump"], cfg.options.get("upart"))
    except (ValueError, IndexError) as exc:
        raise UsageError(f"bad source specification: {exc}") from exc
    pts = _read_points(cfg.options["points"], cfg.m)
    pcfg = PoissonConfig(sphere_degree=cfg.options["sphere_degree"], c=cfg.options.get("c"),
                         workers=cfg.threads)
    fld = solve_poisson(src, pts, pcfg)
    body = {"field": fld.to_json(), "pass": True}
    h = cfg.options.get("residual_h")
    if h:
        dist = np.linalg.norm(pts - np.asarray(src.center), axis=1)
        checks = pts[dist <= src.radius - 0.2][:5]
        if len(checks):
            grid = solve_poisson(src, stencil_points(checks, h), pcfg)
            res = residual_Dk(grid, src, h, checks)
            tol = cfg.options["residual_tol"]
            res["tolerance"] = tol
            body["residual"] = res
            body["pass"] = res["relative"] <= tol
        else:
            body["residual"] = None
    write_json(cfg.output, _envelope(cfg, body))
    return 0 if body["pass"] else 1


def cmd_calibrate(cfg: RunConfig) -> int:
    from .poisson import calibrate
    from .kernels import store_calibration

    res = calibrate(cfg.m, cfg.k, order=cfg.options["order"])
    if cfg.options.get("store") and cfg.k > 0:
        store_calibration(cfg.m, cfg.k, res.c, {"spread": res.spread})
    write_json(cfg.output, _envelope(cfg, {**res.to_json(), "pass": True}))
    return 0


COMMANDS = {"verify": cmd_verify, "dims": cmd_dims, "kernel": cmd_kernel,
            "poisson": cmd_poisson, "calibrate": cmd_calibrate}


# parsing ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    from .verify import SUITES

    ap = argparse.ArgumentParser(prog="cliffpde", description="Bosonic Laplacian toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, need_k=True):
        p.add_argument("--m", type=int, required=True)
        if need_k:
            p.add_argument("--k", type=int, required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--json", dest="output", default=None, help="report path (default stdout)")
        p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("verify", help="run exact verification suites")
    common(p)
    p.add_argument("--suite", choices=list(SUITES) + ["all"], default="all")
    p.add_argument("--cases", type=int, default=None)

    p = sub.add_parser("dims", help="dim H_k and rank M_k")
    common(p)

    p = sub.add_parser("kernel", help="emit a reproducing kernel")
    common(p)
    p.add_argument("--emit", choices=["zk", "zk1"], default="zk")

    p = sub.add_parser("poisson", help="solve D_k Phi = f for a bump source")
    common(p)
    p.add_argument("--bump", required=True, help="'c1,...,cm;R;s'")
    p.add_argument("--upart", default=None, help="'i:c,...' coordinates over the harmonic basis")
    p.add_argument("--points", required=True, help="JSON or whitespace file of points")
    p.add_argument("--sphere-degree", type=int, default=20)
    p.add_argument("--c", type=float, default=None, help="override the kernel constant")
    p.add_argument("--residual-h", type=float, default=None)
    p.add_argument("--residual-tol", type=float, default=0.05)

    p = sub.add_parser("calibrate", help="calibrate the kernel constant c_{m,k}")
    common(p)
    p.add_argument("--order", type=int, default=6)
    p.add_argument("--store", action="store_true")
    return ap


_BASE = {"command", "m", "k", "seed", "output", "threads"}


def run(argv=None) -> int:
    from .operators import AdmissibilityError, DomainError
    from .kernels import UncalibratedError
    from .poisson import CalibrationError, QuadratureError

    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if exc.code in (0, None) else 2
    opts = {k: v for k, v in vars(ns).items() if k not in _BASE}
    try:
        cfg = RunConfig(ns.command, ns.m, getattr(ns, "k", 0), ns.seed, ns.output,
                        thread_cap(ns.threads), opts)
        return COMMANDS[ns.command](cfg)
    except (UsageError, AdmissibilityError, DomainError, UncalibratedError, OSError) as exc:
        print(f"cliffpde: error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except (CalibrationError, QuadratureError) as exc:
        print(f"cliffpde: check failed: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
