"""Command-line front end: ``mrorka generate | track | bench``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import random
import sys
import time
from fractions import Fraction

import numpy as np

from .core import ShiftPath
from .dataio import (
    GaussSpec,
    gauss_truth,
    generate_gauss,
    path_error,
    read_grid,
    result_document,
    write_csv,
    write_grid,
    write_result,
)
from .diagnostics import bound_report, trace_bounds
from .errors import OrkaError, ResourceError
from .kgraph import DEFAULT_MEMORY_CAP
from .multires import MultiresConfig, select_levels, solve_multires
from .orka import OrkaConfig, solve_greedy, solve_single
from .wavelet import FILTERS

log = logging.getLogger("mrorka")

CSV_COLUMNS = ["experiment", "variant", "param", "value"]


def _number(text):
    """Parse ints, floats and fractions such as ``1/3``."""
    return float(Fraction(text))


def _int_list(text):
    return [int(v) for v in text.split(",") if v]


def _float_list(text):
    return [_number(v) for v in text.split(",") if v]


def _memory_cap(args):
    return int(args.memory_cap * 2**30) if args.memory_cap else DEFAULT_MEMORY_CAP


def cmd_generate(args):
    spec = GaussSpec(args.M, args.N, args.alpha, args.s, args.center)
    D = generate_gauss(spec)
    if args.out.lower().endswith(".csv"):
        write_csv(args.out, D)
    else:
        write_grid(args.out, D)
    log.info("wrote %d x %d grid to %s", args.M, args.N, args.out)
    return 0


def _bounds_for(mode, grid, est, cfg):
    if mode == "multires":
        return trace_bounds(grid, est.trace, cfg.K, cfg.mu, cfg.wavelet)
    coarse = np.floor_divide(est.path.entries, 2)
    return [(0, bound_report(grid, est.path.entries, coarse, cfg.K, cfg.mu))]


def cmd_track(args):
    D = read_grid(args.input)
    cap = _memory_cap(args)
    if args.mode == "orka":
        cfg = OrkaConfig(C=args.C, K=args.K, mu=args.mu, max_objects=args.objects,
                         residual_threshold=args.threshold, memory_cap=cap)
        config = {"C": cfg.C, "K": cfg.K, "mu": cfg.mu}
    else:
        cfg = MultiresConfig(Cprime=args.Cprime, J=args.J, K=args.K, mu=args.mu,
                             wavelet=args.wavelet, L=args.L, max_objects=args.objects,
                             residual_threshold=args.threshold, memory_cap=cap)
        config = {"Cprime": cfg.Cprime, "J": cfg.J, "K": cfg.K, "mu": cfg.mu,
                  "wavelet": cfg.wavelet, "L": cfg.L}
    config.update(objects=args.objects, threshold=args.threshold)

    start = time.perf_counter()
    objects, residual = solve_greedy(D, cfg)
    elapsed = time.perf_counter() - start
    for i, est in enumerate(objects):
        log.info("object %d: trellis nodes=%d", i + 1, est.nodes)
    log.info("tracking took %.3f s", elapsed)

    bounds = None
    if args.bounds:
        bounds = []
        grid = D
        for est in objects:
            bounds.append(_bounds_for(args.mode, grid, est, cfg))
            grid = grid - est.reconstruct()

    traces = [est.trace for est in objects]
    doc = result_document(args.mode, D, config, objects, float(np.sum(residual**2)),
                          traces, bounds)
    if args.out:
        write_result(doc, args.out)
    else:
        json.dump(doc, sys.stdout, indent=1)
        sys.stdout.write("\n")
    return 0


def _timed(fn):
    start = time.perf_counter()
    value = fn()
    return value, time.perf_counter() - start


def _bench_runtime(args):
    spec = GaussSpec(args.M, args.N, 10.0, 10.0)
    D = generate_gauss(spec)
    cap = _memory_cap(args)
    jobs = [(variant, K) for K in args.K for variant in ("orka", "multires")]
    random.Random(args.seed).shuffle(jobs)
    rows = []
    for variant, K in jobs:
        if variant == "orka":
            cfg = OrkaConfig(C=args.C, K=K, mu=args.mu, memory_cap=cap)
            try:
                est, seconds = _timed(lambda: solve_single(D, cfg))
            except ResourceError as exc:
                log.warning("orka K=%d skipped: %s", K, exc)
                continue
        else:
            cfg = MultiresConfig(Cprime=args.C, J=0, K=K, mu=args.mu, memory_cap=cap)
            (est, _), seconds = _timed(lambda: solve_multires(D, cfg))
        value = est.nodes if args.metric == "nodes" else seconds
        rows.append(("runtime", variant, K, value))
    return sorted(rows, key=lambda r: (r[1], r[2]))


def _bench_upsampling(args):
    spec = GaussSpec(args.M, args.N, 10.0, 1 / 3)
    D = generate_gauss(spec)
    truth = gauss_truth(spec)
    K = args.K[0]
    rows = []
    baseline = solve_single(D, OrkaConfig(C=1, K=K, mu=args.mu))
    rows.append(("upsampling", "orka", 0, path_error(baseline.path, truth)))
    Jmax = max(args.J)
    # the pyramid depth does not depend on J, so every J is a prefix of one run
    cfg = MultiresConfig(Cprime=1, J=Jmax, K=K, mu=args.mu)
    if select_levels(1, Jmax) != select_levels(1, 0):
        raise OrkaError("pyramid depth changed with J")
    _, trace = solve_multires(D, cfg)
    for J in sorted(args.J):
        path = ShiftPath(trace.path_at(-J), J)
        rows.append(("upsampling", "multires", J, path_error(path, truth)))
    return rows


def _bench_localization(args):
    rows = []
    for K in args.K:
        for alpha in args.alpha:
            spec = GaussSpec(args.M, args.N, alpha, 10.0)
            D = generate_gauss(spec)
            cfg = MultiresConfig(Cprime=10, J=0, K=K, mu=args.mu)
            est, _ = solve_multires(D, cfg)
            rows.append(("localization", f"multires-K{K}", alpha,
                         path_error(est.path, gauss_truth(spec))))
    return rows


_BENCH = {
    "runtime": _bench_runtime,
    "upsampling": _bench_upsampling,
    "localization": _bench_localization,
}

_BENCH_DEFAULT_K = {"runtime": [1, 2, 3, 4, 5], "upsampling": [15], "localization": [3, 15]}


def cmd_bench(args):
    if args.K is None:
        args.K = _BENCH_DEFAULT_K[args.experiment]
    rows = _BENCH[args.experiment](args)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row)
    finally:
        if args.out:
            out.close()
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="mrorka", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a periodic Gauss-kernel data grid")
    gen.add_argument("--M", type=int, default=512, help="samples per measurement")
    gen.add_argument("--N", type=int, default=512, help="number of measurements")
    gen.add_argument("--alpha", type=float, default=10.0, help="kernel width")
    gen.add_argument("--s", type=_number, default=10.0, help="shift per column, e.g. 10 or 1/3")
    gen.add_argument("--center", type=float, default=None, help="kernel center (default M/2)")
    gen.add_argument("--out", required=True, help="output file (.csv for CSV, else binary)")
    gen.set_defaults(func=cmd_generate)

    trk = sub.add_parser("track", help="extract moving objects from a grid file")
    trk.add_argument("input", help="binary grid or .csv file")
    trk.add_argument("--mode", choices=["multires", "orka"], default="multires")
    trk.add_argument("--C", type=int, default=1, help="Lipschitz constant (orka mode)")
    trk.add_argument("--Cprime", type=int, default=1, help="Lipschitz constant (multires mode)")
    trk.add_argument("--K", type=int, default=3, help="band of the approximated inverse")
    trk.add_argument("--mu", type=float, default=1.0, help="appearance change penalty")
    trk.add_argument("--J", type=int, default=0, help="upsampling levels (multires mode)")
    trk.add_argument("--L", type=int, default=None, help="override the pyramid depth")
    trk.add_argument("--wavelet", choices=sorted(FILTERS) + ["db1"], default="db6")
    trk.add_argument("--objects", type=int, default=1, help="maximal number of objects")
    trk.add_argument("--threshold", type=float, default=0.01,
                     help="stop once residual energy <= threshold * total energy")
    trk.add_argument("--bounds", action="store_true", help="attach error-bound reports")
    trk.add_argument("--memory-cap", type=float, default=None, help="trellis memory cap in GiB")
    trk.add_argument("--out", default=None, help="result document (default: stdout)")
    trk.set_defaults(func=cmd_track)

    bench = sub.add_parser("bench", help="run a benchmark sweep and emit CSV")
    bench.add_argument("--experiment", required=True, choices=sorted(_BENCH))
    bench.add_argument("--M", type=int, default=512)
    bench.add_argument("--N", type=int, default=512)
    bench.add_argument("--C", type=int, default=10, help="Lipschitz constant (runtime sweep)")
    bench.add_argument("--K", type=_int_list, default=None, help="comma-separated K values")
    bench.add_argument("--J", type=_int_list, default=list(range(6)))
    bench.add_argument("--alpha", type=_float_list, default=[10.0, 3.0, 1.0, 0.5, 0.3, 0.1])
    bench.add_argument("--mu", type=float, default=1.0)
    bench.add_argument("--metric", choices=["seconds", "nodes"], default="seconds",
                       help="runtime sweep measurement")
    bench.add_argument("--seed", type=int, default=0, help="seed for the job order")
    bench.add_argument("--memory-cap", type=float, default=None, help="trellis memory cap in GiB")
    bench.add_argument("--out", default=None, help="CSV file (default: stdout)")
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (OrkaError, OSError) as exc:
        print(f"mrorka: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
