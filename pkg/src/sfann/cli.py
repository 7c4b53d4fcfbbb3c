"""Command-line front end: ``sfann {gen,build,query,bench}``.

Exit codes: 0 success, 2 usage, 3 configuration, 4 input/output.
``SFAN_THREADS`` sets the number of query worker threads (default 1);
output rows always come back in query order.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import container
from .bench import MODES, QueryEngine, run_bench
from .errors import ConfigError, InputError
from .formats import read_points, write_points
from .metric import DATASET_KINDS, PointSet, brute_force_nn, gen_dataset
from .multires import build_multires
from .navgraph import QueryStats
from .search import SpreadFreeIndex

EXIT_USAGE, EXIT_CONFIG, EXIT_IO = 2, 3, 4

log = logging.getLogger("sfann")


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def cmd_gen(args) -> int:
    P = gen_dataset(args.dist, args.n, args.dim, args.seed)
    write_points(args.out, P.points)
    print(f"wrote {P.n} points of dim {P.dim} to {args.out}")
    return 0


def cmd_build(args) -> int:
    if not 0.0 < args.eps < 0.5:
        raise ConfigError(f"--eps must lie in (0, 1/2), got {args.eps}")
    P = PointSet(read_points(args.input))
    if args.multires and P.n > 1 and args.eps < 1.0 / P.n:
        raise ConfigError(f"--multires needs eps >= 1/n = {1.0 / P.n:g}")
    if not 0 <= args.start_id < P.n:
        raise ConfigError(f"--start-id {args.start_id} out of range for {P.n} points")
    t0 = time.perf_counter()
    index = SpreadFreeIndex.build(P, args.eps, c=args.c, start=args.start_id, seed=args.seed, rough=args.rough)
    mr = build_multires(P, args.eps, index.hst, index.anc, index.rough, args.c) if args.multires else None
    elapsed = time.perf_counter() - t0
    container.save(args.out, index, mr)
    print(f"edges={index.graph.edge_count}")
    if mr is not None:
        print(f"multires_slice_total={mr.total_slice_size()} multires_edges={mr.logical_edge_count()}")
    print(f"build_time={elapsed:.3f}s")
    return 0


def _threads() -> int:
    raw = os.environ.get("SFAN_THREADS", "1")
    try:
        k = int(raw)
    except ValueError:
        raise ConfigError(f"SFAN_THREADS must be an integer, got {raw!r}") from None
    if k < 1:
        raise ConfigError("SFAN_THREADS must be at least 1")
    return k


def query_rows(engine: QueryEngine, Q: np.ndarray, mode: str, verify: bool) -> list[list[str]]:
    if Q.ndim != 2 or Q.shape[1] != engine.index.P.dim:
        raise InputError(f"queries have dimension {Q.shape[-1]}, index has {engine.index.P.dim}")
    if mode == "multires" and engine.multires is None:
        raise ConfigError("index was built without --multires")
    eps = engine.index.eps

    def one(k: int) -> list[str]:
        q = Q[k]
        pid, d, st = engine.run(mode, q)
        row = [str(k), str(pid), _fmt(d)] + [_fmt(v) for v in st.as_row()]
        if verify:
            _, best = brute_force_nn(engine.index.P, q)
            row += [_fmt(best), "1" if d <= (1.0 + eps) * best else "0"]
        return row

    if mode == "bootstrap":
        engine.index.coarsened()  # build the shared coarse sibling before fanning out
    workers = _threads()
    if workers == 1:
        return [one(k) for k in range(Q.shape[0])]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(Q.shape[0])))


def render_csv(rows: list[list[str]], verify: bool) -> str:
    header = ["query_id", "answer_id", "distance"] + QueryStats.csv_fields()
    if verify:
        header += ["oracle_distance", "ok"]
    return "\n".join(",".join(r) for r in [header] + rows) + "\n"


def cmd_query(args) -> int:
    index, mr, _ = container.load(args.index)
    Q = read_points(args.queries)
    text = render_csv(query_rows(QueryEngine(index, mr), Q, args.mode, args.verify), args.verify)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_bench(args) -> int:
    report = run_bench(
        n=args.n, dims=tuple(args.dims), eps_values=tuple(args.eps), queries=args.queries, seed=args.seed
    )
    csv = report.to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv)
        print(report.summary())
    else:
        sys.stdout.write(csv)
        print(report.summary(), file=sys.stderr)
    return 0


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _at_least_two(text: str) -> int:
    v = int(text)
    if v < 2:
        raise argparse.ArgumentTypeError("need at least two points")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sfann", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate a synthetic dataset")
    g.add_argument("--dist", choices=DATASET_KINDS, required=True)
    g.add_argument("--n", type=_at_least_two, required=True)
    g.add_argument("--dim", type=_positive_int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("build", help="build and serialize an index")
    b.add_argument("--input", required=True)
    b.add_argument("--eps", type=float, required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--multires", action="store_true")
    b.add_argument("--start-id", type=int, default=0)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--c", type=float, default=26.0, help="friends-list constant (>= 26)")
    b.add_argument("--rough", choices=("quadtree", "exact"), default="quadtree")
    b.set_defaults(func=cmd_build)

    q = sub.add_parser("query", help="answer queries against a built index")
    q.add_argument("--index", required=True)
    q.add_argument("--queries", required=True)
    q.add_argument("--mode", choices=MODES, default="spreadfree")
    q.add_argument("--verify", action="store_true")
    q.add_argument("--out")
    q.set_defaults(func=cmd_query)

    r = sub.add_parser("bench", help="benchmark matrix plus the geochain spread sweep")
    r.add_argument("--n", type=_at_least_two, default=500)
    r.add_argument("--dims", type=_positive_int, nargs="+", default=[2, 4])
    r.add_argument("--eps", type=float, nargs="+", default=[0.25, 0.1])
    r.add_argument("--queries", type=_positive_int, default=100)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out")
    r.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"sfann: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InputError, OSError) as exc:
        print(f"sfann: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
