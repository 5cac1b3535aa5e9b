"""Brute-force ground truth on finite patches."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from endwalk.errors import HorizonExceeded
from endwalk.graph_core import Digraph, _dfs, bfs_distances
from endwalk.template import (GraphTemplate, Patch, UNBOUNDED, build_patch_for_horizon,
                              exact_horizon)


def _horizon_value(h) -> float:
    return math.inf if h is UNBOUNDED else h


def _count_branch(graph: Digraph, origin: int, max_len: int, first_arc: int | None):
    """Counts of walks, returns and return-closings below one first arc."""
    saw = [0] * (max_len + 1)
    sar = [0] * (max_len + 1)
    closing = [0] * (max_len + 2)
    near = bytearray(graph.n)
    for w in graph.neighbours(origin):
        near[w] = 1

    def visit(path, arcs):
        n = len(arcs)
        saw[n] += 1
        if n and near[path[-1]]:
            sar[n] += 1
            if n >= 2:
                closing[n + 1] += 1

    _dfs(graph, origin, max_len, visit, first_arc=first_arc)
    return saw, sar, closing


def _count_branch_star(args):
    return _count_branch(*args)


def _resolve_jobs(jobs: int | None) -> int:
    env = os.environ.get("ENDWALK_JOBS")
    if env:
        jobs = int(env)
    return max(1, jobs or 1)


def count_walks(graph: Digraph, origin: int, max_len: int, jobs: int | None = 1):
    """(saw, sar, sap) counts indexed by length 0..max_len, optionally
    split over worker processes by first arc.  Totals are reduced in arc
    order so results do not depend on the worker count."""
    jobs = _resolve_jobs(jobs)
    if jobs == 1 or max_len < 2:
        saw, sar, closing = _count_branch(graph, origin, max_len, None)
    else:
        tasks = [(graph, origin, max_len, a) for a in graph.out_arcs(origin)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_count_branch_star, tasks))
        saw = [1] + [0] * max_len
        sar = [0] * (max_len + 1)
        closing = [0] * (max_len + 2)
        for s, r, c in parts:
            for n in range(1, max_len + 1):
                saw[n] += s[n]
                sar[n] += r[n]
            for n in range(len(closing)):
                closing[n] += c[n]
    sap = [0] * (max_len + 1)
    for n in range(3, max_len + 1):
        sap[n] = closing[n] // 2
    return saw, sar, sap


@dataclass
class OracleReport:
    """Counts are lists indexed from n = 1."""

    c: list[int]
    sar: list[int]
    sap: list[int]
    horizon: float
    sup_p: list[int] = field(default_factory=list)
    sup_p_vertices: int = 0

    @property
    def N(self) -> int:
        return len(self.c)

    def to_dict(self) -> dict:
        return {"N": self.N, "horizon": None if self.horizon == math.inf else self.horizon,
                "c": self.c, "sar": self.sar, "sap": self.sap,
                "sup_p": self.sup_p, "sup_p_vertices": self.sup_p_vertices}


def _representatives(patch: Patch) -> list[int]:
    """One vertex per (part type, local vertex) class, taken from the
    shallowest instance that has it."""
    seen = {}
    order = sorted((d, a) for a, d in enumerate(patch.inst_depth))
    for _, a in order:
        for i, v in enumerate(patch.inst_verts[a]):
            seen.setdefault((patch.inst_part[a], i), v)
    return sorted(set(seen.values()))


def brute_counts(patch: Patch, N: int, origin: int | None = None, jobs: int | None = 1,
                 with_sup_p: bool = True) -> OracleReport:
    """Exact SAW, SAR and SAP counts of length 1..N from the origin.

    ``sup_p`` is the largest polygon count through any vertex class, exact
    for each n up to the smallest horizon among the class representatives
    plus one (a polygon of length n is a return of length n - 1 closed up).
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    origin = patch.origin if origin is None else origin
    horizon = _horizon_value(exact_horizon(patch, origin))
    if N > horizon:
        raise HorizonExceeded(f"N = {N} exceeds the exact horizon {horizon} of this patch")
    saw, sar, sap = count_walks(patch.graph, origin, N, jobs)
    report = OracleReport(saw[1:], sar[1:], sap[1:], horizon)
    if with_sup_p:
        best = [0] * N
        reps = _representatives(patch)
        limit = N
        for x in reps:
            h = _horizon_value(exact_horizon(patch, x))
            limit = min(limit, int(min(h + 1, N)))
        for x in reps:
            if limit < 3:
                break
            _, _, p = count_walks(patch.graph, x, limit, 1)
            for n in range(1, limit + 1):
                best[n - 1] = max(best[n - 1], p[n])
        report.sup_p = best[:limit]
        report.sup_p_vertices = len(reps)
    return report


def oracle_for_template(template: GraphTemplate, N: int, jobs: int | None = 1,
                        cap: int = 200_000, with_sup_p: bool = True) -> OracleReport:
    """Build a patch large enough for N and count on it."""
    patch = build_patch_for_horizon(template, N, cap)
    if with_sup_p:
        dist = bfs_distances(patch.graph, patch.origin)
        reach = max(dist[x] for x in _representatives(patch))
        patch = build_patch_for_horizon(template, N + reach, cap)
    return brute_counts(patch, N, jobs=jobs, with_sup_p=with_sup_p)


@dataclass
class DisplacementStats:
    n: int
    histogram: dict[int, int]
    total: int
    mean_over_n: float
    threshold: float
    tail_fraction: float

    def to_dict(self) -> dict:
        return {"n": self.n, "histogram": {str(d): k for d, k in sorted(self.histogram.items())},
                "total": self.total, "mean_over_n": self.mean_over_n,
                "threshold": self.threshold, "tail_fraction": self.tail_fraction}


def displacement_stats(patch: Patch, n: int, threshold: float = 0.2,
                       origin: int | None = None) -> DisplacementStats:
    """Exact distribution of the graph distance between the two ends of a
    uniform length-n SAW from the origin.  ``tail_fraction`` is the share of
    walks ending closer than ``threshold * n``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    origin = patch.origin if origin is None else origin
    horizon = _horizon_value(exact_horizon(patch, origin))
    if n > horizon:
        raise HorizonExceeded(f"n = {n} exceeds the exact horizon {horizon} of this patch")
    dist = bfs_distances(patch.graph, origin)
    hist: dict[int, int] = {}

    def visit(path, arcs):
        if len(arcs) == n:
            d = dist[path[-1]]
            hist[d] = hist.get(d, 0) + 1

    _dfs(patch.graph, origin, n, visit)
    total = sum(hist.values())
    mean = sum(d * k for d, k in hist.items()) / total
    tail = sum(k for d, k in hist.items() if d < threshold * n) / total
    return DisplacementStats(n, hist, total, mean / n, threshold, tail)


@dataclass
class GrowthReport:
    c_root: list[float]
    sar_root: list[float]
    sap_root: list[float]
    max_sar_root: float
    max_polygon_root: float
    mu_w: float | None
    sar_gap: bool | None
    polygon_gap: bool | None

    def to_dict(self) -> dict:
        return {"c_root": self.c_root, "sar_root": self.sar_root, "sap_root": self.sap_root,
                "max_sar_root": self.max_sar_root, "max_polygon_root": self.max_polygon_root,
                "mu_w": self.mu_w, "sar_gap": self.sar_gap, "polygon_gap": self.polygon_gap}


def growth_report(report: OracleReport, mu_w: float | None = None) -> GrowthReport:
    """n-th roots of the counts and two gap flags against mu_w.

    ``sar_gap`` compares every SAR_n^(1/n), including the single-edge returns
    SAR_1 = deg(o), so it fails whenever the origin's degree exceeds mu_w.
    ``polygon_gap`` compares the polygon growth (sup over vertex classes when
    available), which is trivially true on trees.
    """
    def roots(xs):
        return [x ** (1.0 / n) for n, x in enumerate(xs, start=1)]

    sar_root = roots(report.sar)
    poly_root = roots(report.sup_p or report.sap)
    max_sar = max(sar_root, default=0.0)
    max_poly = max(poly_root, default=0.0)
    sar_gap = None if mu_w is None else max_sar < mu_w
    polygon_gap = None if mu_w is None else max_poly < mu_w
    return GrowthReport(roots(report.c), sar_root, roots(report.sap), max_sar, max_poly, mu_w,
                        sar_gap, polygon_gap)
