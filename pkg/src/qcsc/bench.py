"""Benchmark harness: query-count sweeps, log-log slopes and storage tables.

A plan sweeps one of ``M`` (candidate count), ``N`` (dimension) or ``d``
(support size) over an increasing grid.  Each grid point is run for every
seed and backend on a freshly generated instance; the report holds the mean
and spread of ``o_calls + f_calls`` per backend, each backend's own analytic
bound, and least-squares slopes of log mean queries against log sweep value.
"""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from . import kernels
from .closest_vector import BACKENDS, ClosestVectorInstance, random_instance, run_backend
from .deferred import build_deferred
from .pregroup import build_tree, parse_type, reduce, two_coloring
from .tensor import MeaningTensor, random_tensor, storage_estimate

SWEEPS = ("M", "N", "d")
KINDS = ("sphere", "flat", "svo")
PLOT_COLUMNS = ("backend", "sweep_value", "mean_queries", "std", "bound")
TABLE1_COLUMNS = ("N", "num_verbs", "classical_bits", "qubits")
DEFAULT_TARGETS = {"direct": (1.0, 0.1), "quantum": (0.5, 0.15)}


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class BenchPlan:
    """What to sweep and with which fixed parameters.

    ``r_max`` is the declared entry bound handed to the sampling backends;
    ``None`` uses each instance's measured maximum instead.
    """

    sweep: str
    grid: tuple[int, ...]
    backends: tuple[str, ...] = ("direct", "quantum")
    eps: float = 0.05
    delta: float = 0.1
    seeds: int = 100
    M: int = 64
    N: int = 64
    d: int = 8
    kind: str = "sphere"
    r_max: float | None = 1.0
    seed_base: int = 0

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(int(g) for g in self.grid))
        object.__setattr__(self, "backends", tuple(self.backends))
        if self.sweep not in SWEEPS:
            raise PlanError(f"sweep must be one of {SWEEPS}, got {self.sweep!r}")
        if len(self.grid) < 4:
            raise PlanError("grid needs at least 4 points for a regression")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise PlanError("grid must be strictly increasing")
        if self.grid[0] < 1:
            raise PlanError("grid values must be positive")
        if not self.backends or any(b not in BACKENDS for b in self.backends):
            raise PlanError(f"backends must be drawn from {sorted(BACKENDS)}")
        if self.kind not in KINDS:
            raise PlanError(f"kind must be one of {KINDS}")
        if self.seeds < 1:
            raise PlanError("need at least one seed")
        if not self.eps > 0 or not 0 < self.delta < 1:
            raise PlanError("need eps > 0 and 0 < delta < 1")
        for point in self.grid:
            M, N, d = self.point_params(point)
            if not 1 <= d <= N:
                raise PlanError(f"support size {d} does not fit dimension {N}")

    def point_params(self, value: int) -> tuple[int, int, int]:
        M, N, d = self.M, self.N, self.d
        if self.sweep == "M":
            M = value
        elif self.sweep == "N":
            N = value
        else:
            d = value
        return M, N, d


@dataclass
class BenchPoint:
    backend: str
    sweep_value: int
    mean_queries: float
    std: float
    bound: float
    mean_d: float
    mean_r_max: float


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    stderr: float
    ci_low: float
    ci_high: float
    r_squared: float


@dataclass
class BenchReport:
    plan: BenchPlan | None
    points: list[BenchPoint] = field(default_factory=list)
    slopes: dict[str, SlopeFit] = field(default_factory=dict)
    table1: list[tuple[int, int, int, int]] = field(default_factory=list)
    kernel_backend: str = kernels.BACKEND

    def series(self, backend: str) -> list[BenchPoint]:
        return [p for p in self.points if p.backend == backend]

    def to_json(self) -> dict:
        return {
            "plan": {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self.plan).items()}
            if self.plan else None,
            "points": [asdict(p) for p in self.points],
            "slopes": {b: asdict(f) for b, f in self.slopes.items()},
            "table1": [dict(zip(TABLE1_COLUMNS, row)) for row in self.table1],
            "kernel_backend": self.kernel_backend,
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _sphere_vector(rng, N, d):
    idx = np.sort(rng.choice(N, size=d, replace=False))
    vals = rng.normal(size=d)
    return MeaningTensor((N,), idx, vals / np.linalg.norm(vals))


_SVO = reduce([parse_type("n"), parse_type("n^r s n^l"), parse_type("n")])
_SVO_LAYERS = two_coloring(build_tree(3, _SVO))


def svo_instance(rng: np.random.Generator, M: int, N: int, d: int) -> ClosestVectorInstance:
    """Deferred instance for a random subject-verb-object sentence.

    Nouns and classifiers are ``d``-sparse sphere vectors in ``N``
    dimensions; the verb has density ``d / N`` per wire.
    """
    words = [_sphere_vector(rng, N, d), random_tensor(rng, (N, N, N), (d / N) ** 3), _sphere_vector(rng, N, d)]
    classifiers = [_sphere_vector(rng, N, d) for _ in range(M)]
    return build_deferred(words, _SVO, _SVO_LAYERS, classifiers).base


def make_instance(plan: BenchPlan, value: int, seed: int) -> ClosestVectorInstance:
    M, N, d = plan.point_params(value)
    rng = np.random.default_rng([plan.seed_base, value, seed])
    if plan.kind == "svo":
        return svo_instance(rng, M, N, d)
    return random_instance(rng, M, N, d, plan.kind)


def _run_point(plan: BenchPlan, value: int) -> list[BenchPoint]:
    queries = {b: [] for b in plan.backends}
    bounds = {b: [] for b in plan.backends}
    ds, rs = [], []
    for seed in range(plan.seeds):
        inst = make_instance(plan, value, seed)
        ds.append(inst.stats.d)
        rs.append(inst.stats.r_max)
        r = plan.r_max
        if r is not None and r < inst.stats.r_max:
            r = None  # declared bound too small for this instance; use its measured maximum
        for b in plan.backends:
            res = run_backend(b, inst, plan.eps, plan.delta, seed=[plan.seed_base, value, seed], r_max=r)
            queries[b].append(res.counter.total)
            bounds[b].append(res.bound)
    out = []
    for b in plan.backends:
        q = np.asarray(queries[b], dtype=np.float64)
        out.append(BenchPoint(b, value, float(q.mean()), float(q.std(ddof=1)) if q.size > 1 else 0.0,
                              float(np.mean(bounds[b])), float(np.mean(ds)), float(np.mean(rs))))
    return out


def fit_slope(x: Sequence[float], y: Sequence[float], confidence: float = 0.95) -> SlopeFit:
    """Least-squares slope of ``log y`` on ``log x`` with a t-based interval."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    if lx.size < 3:
        raise PlanError("need at least 3 points to fit a slope with an interval")
    fit = stats.linregress(lx, ly)
    t = stats.t.ppf(0.5 + confidence / 2, lx.size - 2)
    return SlopeFit(float(fit.slope), float(fit.intercept), float(fit.stderr),
                    float(fit.slope - t * fit.stderr), float(fit.slope + t * fit.stderr), float(fit.rvalue ** 2))


def run_bench(plan: BenchPlan, workers: int = 1) -> BenchReport:
    """Run every (point, seed, backend) and fit one slope per backend.

    Each run seeds its own generator from ``(seed_base, value, seed)`` so the
    report is identical for any worker count.
    """
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_run_point, [plan] * len(plan.grid), plan.grid))
    else:
        chunks = [_run_point(plan, v) for v in plan.grid]
    report = BenchReport(plan, [p for chunk in chunks for p in chunk])
    for b in plan.backends:
        series = report.series(b)
        report.slopes[b] = fit_slope([p.sweep_value for p in series], [p.mean_queries for p in series])
    return report


def check_slopes(report: BenchReport, targets=None) -> list[str]:
    """Human-readable violations of slope targets and of the quantum bound."""
    targets = DEFAULT_TARGETS if targets is None else targets
    problems = []
    for b, (want, tol) in targets.items():
        fit = report.slopes.get(b)
        if fit is None:
            continue
        if abs(fit.slope - want) > tol:
            problems.append(f"{b}: slope {fit.slope:.3f} outside {want} +- {tol}")
    for p in report.series("quantum"):
        if p.mean_queries > p.bound:
            problems.append(f"quantum: mean {p.mean_queries:.3g} above bound {p.bound:.3g} at {p.sweep_value}")
    return problems


def table1_rows(n: int, verbs: Iterable[int]) -> list[tuple[int, int, int, int]]:
    return [(n, v, *storage_estimate(n, v)) for v in verbs]


def write_table1(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE1_COLUMNS)
        w.writerows(rows)


def emit_plot_data(report: BenchReport, path, table1_path=None) -> None:
    """Write ``backend,sweep_value,mean_queries,std,bound`` rows (header only when empty)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PLOT_COLUMNS)
        for p in report.points:
            w.writerow([p.backend, p.sweep_value, repr(p.mean_queries), repr(p.std), repr(p.bound)])
    if table1_path is not None:
        write_table1(report.table1, table1_path)


def parse_grid(text: str) -> tuple[int, ...]:
    """``4:512:x2`` (geometric), ``4:32:+4`` (arithmetic) or ``4,8,16,32``."""
    try:
        if ":" not in text:
            return tuple(int(x) for x in text.split(","))
        lo, hi, step = text.split(":")
        lo, hi = int(lo), int(hi)
        out = []
        if step.startswith("x"):
            factor = float(step[1:])
            if factor <= 1:
                raise PlanError("geometric factor must exceed 1")
            v = float(lo)
            while round(v) <= hi:
                out.append(int(round(v)))
                v *= factor
        else:
            inc = int(step.lstrip("+"))
            if inc < 1:
                raise PlanError("arithmetic step must be positive")
            out = list(range(lo, hi + 1, inc))
        return tuple(out)
    except ValueError as exc:
        if isinstance(exc, PlanError):
            raise
        raise PlanError(f"cannot parse grid {text!r}") from None


def bench_kernels(sizes: Sequence[int] = (1_000, 10_000, 100_000), repeats: int = 5,
                  seed: int = 0) -> list[dict]:
    """Best-of-``repeats`` wall times of each kernel in every available implementation."""
    impls = kernels.implementations()
    rng = np.random.default_rng(seed)
    rows = []
    for n in sizes:
        ia = np.sort(rng.choice(10 * n, size=n, replace=False)).astype(np.int64)
        ib = np.sort(rng.choice(10 * n, size=n, replace=False)).astype(np.int64)
        va, vb = rng.normal(size=n), rng.normal(size=n)
        dup = rng.integers(0, n, size=n).astype(np.int64)
        key_a = np.sort(rng.integers(0, n // 4 + 1, size=n)).astype(np.int64)
        key_b = np.sort(rng.integers(0, n // 4 + 1, size=n)).astype(np.int64)
        rest = rng.integers(0, 16, size=n).astype(np.int64)
        k = 51
        m = max(1, n // k)
        truth = rng.random(m)
        bu, ou = rng.random((m, k)), rng.random((m, k))
        cases = {
            "sum_duplicates": lambda mod: mod.sum_duplicates(dup, va, 1e-15),
            "sparse_dot": lambda mod: mod.sparse_dot(ia, va, ib, vb),
            "gather": lambda mod: mod.gather(ia, va, ib),
            "join_contract": lambda mod: mod.join_contract(key_a, rest, va, key_b, rest, vb, 16, 1e-15),
            "median_estimates": lambda mod: mod.median_estimates(truth, bu, ou, 0.05, 0.81, 3.0),
        }
        for name, call in cases.items():
            row = {"kernel": name, "n": n}
            for impl_name, mod in impls.items():
                best = math.inf
                for _ in range(repeats):
                    t0 = time.perf_counter()
                    call(mod)
                    best = min(best, time.perf_counter() - t0)
                row[impl_name] = best
            if "cython" in row:
                row["speedup"] = row["python"] / row["cython"] if row["cython"] > 0 else math.inf
            rows.append(row)
    return rows
