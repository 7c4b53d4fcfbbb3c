"""Query dispatch, query generators and the benchmark report."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .errors import ConfigError
from .metric import PointSet, as_query, brute_force_nn, gen_dataset, spread_stats
from .multires import MultiResIndex, build_multires
from .navgraph import QueryStats, SearchTrace, greedy_route
from .search import SpreadFreeIndex, bootstrap_query

MODES = ("baseline", "spreadfree", "bootstrap", "multires", "oracle")


@dataclass(eq=False)
class QueryEngine:
    """One index plus optional multires structure, answering in any mode."""

    index: SpreadFreeIndex
    multires: Optional[MultiResIndex] = None

    @classmethod
    def build(cls, P: PointSet, eps: float, multires: bool = False, seed: int = 0, start: int = 0,
              rough: str = "quadtree") -> "QueryEngine":
        index = SpreadFreeIndex.build(P, eps, start=start, seed=seed, rough=rough)
        mr = build_multires(P, eps, index.hst, index.anc, index.rough) if multires else None
        return cls(index, mr)

    def run(self, mode: str, q, trace: bool = False) -> tuple[int, float, QueryStats]:
        idx = self.index
        if mode == "spreadfree":
            return idx.query(q, trace=trace)
        if mode == "bootstrap":
            return bootstrap_query(idx.coarsened(), idx, q, trace=trace)
        if mode == "baseline":
            qt = as_query(q, idx.P.dim)
            stats = QueryStats(trace=SearchTrace() if trace else None)
            rank, stats = greedy_route(idx.graph, idx.P, idx.greedy, qt, idx.eps, 0, stats)
            pid = int(idx.greedy.order[rank])
            return pid, math.dist(qt, idx.P.rows[pid]), stats
        if mode == "multires":
            if self.multires is None:
                raise ConfigError("index was built without the multires structure")
            return self.multires.query(q, trace=trace)
        if mode == "oracle":
            qt = as_query(q, idx.P.dim)
            pid, _ = brute_force_nn(idx.P, np.asarray(qt))
            stats = QueryStats(dist_evals=idx.n, stop_reason="oracle")
            return pid, math.dist(qt, idx.P.rows[pid]), stats
        raise ConfigError(f"unknown mode {mode!r}; expected one of {MODES}")


def mixed_queries(P: PointSet, count: int, rng: np.random.Generator) -> np.ndarray:
    """Data points, perturbed data points at several scales, box samples and far points."""
    X = P.points
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = float(np.max(hi - lo)) or 1.0
    out = np.empty((count, P.dim))
    kinds = rng.integers(0, 4, size=count)
    for k in range(count):
        base = X[rng.integers(P.n)]
        if kinds[k] == 0:
            out[k] = base
        elif kinds[k] == 1:
            out[k] = base + rng.normal(size=P.dim) * span * 10.0 ** rng.uniform(-9, -1)
        elif kinds[k] == 2:
            out[k] = lo + rng.random(P.dim) * (hi - lo)
        else:
            out[k] = base + rng.normal(size=P.dim) * span * rng.uniform(2, 50)
    return out


def geochain_queries(P: PointSet, count: int, rng: np.random.Generator, low: int = 16) -> np.ndarray:
    """Points strictly inside the gaps between the first ``low`` chain points."""
    x = np.sort(P.points[:, 0])
    k = rng.integers(0, min(low, P.n - 1), size=count)
    u = rng.uniform(0.1, 0.9, size=count)
    return (x[k] + u * (x[k + 1] - x[k])).reshape(-1, 1)


@dataclass
class BenchRow:
    dataset: str
    n: int
    dim: int
    eps: float
    mode: str
    spread: float
    build_time: float
    edge_count: int
    hops_mean: float
    hops_median: float
    hops_p99: float
    edges_scanned_mean: float
    edges_scanned_median: float
    edges_scanned_p99: float
    dist_evals_mean: float
    dist_evals_median: float
    dist_evals_p99: float
    recall: float

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> list:
        return [getattr(self, f) for f in self.header()]


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)

    def to_csv(self) -> str:
        lines = [",".join(BenchRow.header())]
        for r in self.rows:
            lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in r.values()))
        return "\n".join(lines) + "\n"

    def sweep(self, mode: str) -> dict[int, float]:
        return {r.n: r.edges_scanned_median for r in self.rows if r.dataset == "geochain" and r.mode == mode}

    def summary(self) -> str:
        out = []
        for r in self.rows:
            out.append(
                f"{r.dataset:9s} n={r.n:<5d} dim={r.dim} eps={r.eps:<5g} {r.mode:10s} "
                f"edges_scanned med={r.edges_scanned_median:g} p99={r.edges_scanned_p99:g} "
                f"hops med={r.hops_median:g} recall={r.recall:g}"
            )
        base, sf = self.sweep("baseline"), self.sweep("spreadfree")
        if base and sf:
            ns = sorted(set(base) & set(sf))
            K = max(sf[n] / math.log2(n) for n in ns)
            out.append(f"geochain sweep: spreadfree K = {K:.3f} (median edges / log2 n)")
            out.append(
                f"growth n={ns[0]}->{ns[-1]}: baseline x{base[ns[-1]] / base[ns[0]]:.2f}, "
                f"spreadfree x{sf[ns[-1]] / sf[ns[0]]:.2f}"
            )
        return "\n".join(out)


def bench_rows(engine: QueryEngine, dataset: str, queries: np.ndarray, modes, build_time: float) -> list[BenchRow]:
    idx = engine.index
    P = idx.P
    spread = spread_stats(P).spread if P.n > 1 else 1.0
    oracle = [brute_force_nn(P, q)[1] for q in queries]
    rows = []
    for mode in modes:
        hops, scanned, evals, good = [], [], [], 0
        for q, best in zip(queries, oracle):
            _, d, st = engine.run(mode, q)
            hops.append(st.hops)
            scanned.append(st.stage2_edges if mode == "bootstrap" else st.edges_scanned)
            evals.append(st.dist_evals)
            good += d <= (1.0 + idx.eps) * best
        if mode == "multires" and engine.multires is not None:
            edges = engine.multires.stored_edge_count()
        else:
            edges = idx.graph.edge_count
        stat = lambda xs: (float(np.mean(xs)), float(np.median(xs)), float(np.percentile(xs, 99)))  # noqa: E731
        rows.append(BenchRow(dataset, P.n, P.dim, idx.eps, mode, float(spread), build_time, edges,
                             *stat(hops), *stat(scanned), *stat(evals), good / len(queries)))
    return rows


def run_bench(
    n: int = 500,
    dims=(2, 4),
    eps_values=(0.25, 0.1),
    modes=("baseline", "spreadfree", "bootstrap", "multires"),
    queries: int = 100,
    seed: int = 0,
    sweep=(64, 128, 256, 512),
) -> BenchReport:
    rng = np.random.default_rng(seed)
    report = BenchReport()
    for kind in ("uniform", "clusters"):
        for dim in dims:
            P = gen_dataset(kind, n, dim, seed)
            Q = mixed_queries(P, queries, rng)
            for eps in eps_values:
                t0 = time.perf_counter()
                eng = QueryEngine.build(P, eps, multires="multires" in modes and eps >= 1.0 / n, seed=seed)
                bt = time.perf_counter() - t0
                use = [m for m in modes if m != "multires" or eng.multires is not None]
                report.rows += bench_rows(eng, kind, Q, use, bt)
    for m in sweep:
        P = gen_dataset("geochain", m, 1, seed)
        Q = geochain_queries(P, queries, np.random.default_rng(seed))
        t0 = time.perf_counter()
        eng = QueryEngine.build(P, 0.25, seed=seed)
        bt = time.perf_counter() - t0
        report.rows += bench_rows(eng, "geochain", Q, ("baseline", "spreadfree", "bootstrap"), bt)
    return report
