"""Closest vector problem with oracle-query accounting.

Given a query ``s`` and candidates ``v_0 .. v_{M-1}`` find the candidate
maximizing ``|<s|v_j>|^2``.  Candidates are only reachable through two
counted oracles: ``O(j, i)`` returns entry ``i`` of ``v_j`` and ``F(j, l)``
returns the coordinate of the ``l``-th stored entry of ``v_j``.  The query is
known to the caller in full.

Three backends are provided:

* :func:`nn_direct` reads every stored entry (exact).
* :func:`nn_monte_carlo` samples coordinates of ``s`` with probability
  ``s_i^2`` and averages ``v_ji / s_i``.
* :func:`nn_quantum_sim` simulates the quantum nearest-neighbour routine at
  the level of query counts and estimate statistics: median-boosted noisy
  amplitude estimates and a threshold-improving maximum search.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .tensor import MeaningTensor, ProductVector, SparsityStats, TensorError, sparsity_stats

EULER_GAMMA = 0.5772156649015329
AE_SUCCESS = 8 / math.pi ** 2
BOUND_PREFACTOR = 1080
NORM_TOL = 1e-9


class InstanceError(ValueError):
    pass


@dataclass
class OracleCounter:
    o_calls: int = 0
    f_calls: int = 0

    def charge(self, o: int = 0, f: int = 0):
        self.o_calls += int(o)
        self.f_calls += int(f)

    @property
    def total(self) -> int:
        return self.o_calls + self.f_calls


def _as_vector(v) -> ProductVector:
    if isinstance(v, ProductVector):
        return v
    if isinstance(v, MeaningTensor):
        return ProductVector.of(v)
    return ProductVector.of(MeaningTensor.from_dense(np.asarray(v, dtype=np.float64).ravel()))


class ClosestVectorInstance:
    """Query ``s`` and candidate list ``U`` over a common flat dimension ``D``.

    ``stats`` holds the exact largest support size and largest squared entry
    over ``{s} + U``.
    """

    def __init__(self, s, U: Sequence, *, check_normalized: bool = True):
        self.s = _as_vector(s)
        self.U = [_as_vector(v) for v in U]
        if not self.U:
            raise InstanceError("need at least one candidate")
        for j, v in enumerate(self.U):
            if v.dim != self.s.dim:
                raise InstanceError(f"candidate {j} has dimension {v.dim}, query has {self.s.dim}")
        if check_normalized:
            for name, v in [("query", self.s)] + [(f"candidate {j}", v) for j, v in enumerate(self.U)]:
                if abs(v.norm_sq() - 1.0) > NORM_TOL:
                    raise InstanceError(f"{name} is not normalized (norm^2 = {v.norm_sq():.6g})")
        self.stats: SparsityStats = sparsity_stats([self.s, *self.U])
        self._support: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    @property
    def M(self) -> int:
        return len(self.U)

    @property
    def D(self) -> int:
        return self.s.dim

    def _supp(self, j):
        if j not in self._support:
            self._support[j] = self.U[j].support()
        return self._support[j]

    def exact_overlaps(self) -> np.ndarray:
        """``|<s|v_j>|^2`` for every candidate, computed without the oracles."""
        return np.array([self.s.dot(v) ** 2 for v in self.U])


def _check_j(instance, j):
    if not 0 <= j < instance.M:
        raise IndexError(f"candidate {j} out of range (M = {instance.M})")


def oracle_O(instance: ClosestVectorInstance, j: int, i: int, counter: OracleCounter) -> float:
    """Entry ``i`` of candidate ``j`` (0 when not stored)."""
    _check_j(instance, j)
    if not 0 <= i < instance.D:
        raise IndexError(f"coordinate {i} out of range (D = {instance.D})")
    counter.charge(o=1)
    return float(instance.U[j].entries(np.array([i]))[0])


def oracle_F(instance: ClosestVectorInstance, j: int, l: int, counter: OracleCounter) -> int:
    """Coordinate of the ``l``-th stored entry of candidate ``j``, ascending."""
    _check_j(instance, j)
    idx, _ = instance._supp(j)
    if not 0 <= l < idx.size:
        raise IndexError(f"rank {l} out of range: candidate {j} has {idx.size} stored entries")
    counter.charge(f=1)
    return int(idx[l])


def _O_many(instance, j, coords, counter) -> np.ndarray:
    counter.charge(o=len(coords))
    return instance.U[j].entries(coords)


def _F_all(instance, j, counter) -> np.ndarray:
    idx, _ = instance._supp(j)
    counter.charge(f=idx.size)
    return idx


def argmax_with_ties(estimates, rel_tol: float = 0.0) -> int:
    """Lowest index whose estimate is within ``rel_tol`` of the maximum."""
    est = np.asarray(estimates, dtype=np.float64)
    top = est.max()
    return int(np.flatnonzero(est >= top - rel_tol * abs(top))[0])


@dataclass
class NNResult:
    """Outcome of one closest-vector run.

    ``bound`` is the backend's own analytic query count: ``2 M d`` for the
    direct scan, ``M T`` for Monte Carlo and the expected-query upper bound
    for the quantum routine.
    """

    argmax_index: int
    estimates: np.ndarray
    counter: OracleCounter
    bound: float
    backend: str
    params: dict = field(default_factory=dict)

    def to_json(self, seed=None) -> dict:
        return {
            "argmax": self.argmax_index,
            "estimates": [float(x) for x in self.estimates],
            "o_calls": self.counter.o_calls,
            "f_calls": self.counter.f_calls,
            "bound": self.bound,
            "params": self.params,
            "seed": seed,
        }


TIE_TOL = 1e-12


def nn_direct(instance: ClosestVectorInstance, tie_tol: float = TIE_TOL) -> NNResult:
    """Exact scan: enumerate each candidate's support through F, read it through O.

    Overlaps within ``tie_tol`` (relative) of the best count as ties and the
    lowest index wins.
    """
    counter = OracleCounter()
    est = np.empty(instance.M)
    for j in range(instance.M):
        coords = _F_all(instance, j, counter)
        vals = _O_many(instance, j, coords, counter)
        est[j] = float(np.dot(vals, instance.s.entries(coords))) ** 2
    d = instance.stats.d
    return NNResult(argmax_with_ties(est, tie_tol), est, counter, 2.0 * instance.M * d, "direct",
                    {"M": instance.M, "D": instance.D, "d": d, "r_max": instance.stats.r_max})


def _check_eps_delta(eps, delta):
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def _declared_r_max(instance, r_max):
    if r_max is None:
        return instance.stats.r_max
    if r_max + 1e-15 < instance.stats.r_max:
        raise InstanceError(f"declared r_max {r_max} is below the instance maximum {instance.stats.r_max}")
    return float(r_max)


def mc_sample_count(d: int, r_max: float, eps: float, M: int, delta: float, c: float = 2.0) -> int:
    return max(1, math.ceil(c * d ** 2 * r_max ** 4 / eps ** 2 * math.log(M / delta)))


def mc_inner_estimates(instance: ClosestVectorInstance, T: int, rng: np.random.Generator,
                       counter: OracleCounter | None = None) -> np.ndarray:
    """Signed sample means estimating ``<s|v_j>`` from ``T`` draws each."""
    s = instance.s
    # With a small query support, per-coordinate multinomial counts give the
    # same distribution as T separate draws.
    compact = s.nnz <= T
    if compact:
        s_idx, s_val = s.support()
        probs = s_val ** 2 / np.sum(s_val ** 2)
    out = np.empty(instance.M)
    for j in range(instance.M):
        if compact:
            counts = rng.multinomial(T, probs)
            hit = counts > 0
            ratio = instance.U[j].entries(s_idx[hit]) / s_val[hit]
            out[j] = float(np.dot(counts[hit], ratio)) / T
        else:
            coords = s.sample(rng, T)
            out[j] = float(np.sum(instance.U[j].entries(coords) / s.entries(coords))) / T
        if counter is not None:
            counter.charge(o=T)
    return out


def nn_monte_carlo(instance: ClosestVectorInstance, eps: float, delta: float, seed=None, *,
                   c: float = 2.0, samples: int | None = None, r_max: float | None = None) -> NNResult:
    """Sampling estimator of every overlap.

    For candidate ``j`` draw ``T`` coordinates ``i`` with probability
    ``s_i^2`` and average ``v_ji / s_i``; the mean is unbiased for
    ``<s|v_j>`` and its square is the estimate.  Each sample costs one O
    call.  ``samples`` overrides the default
    ``T = ceil(c d^2 r_max^4 / eps^2 ln(M / delta))``.
    """
    _check_eps_delta(eps, delta)
    r = _declared_r_max(instance, r_max)
    d, M = instance.stats.d, instance.M
    T = int(samples) if samples is not None else mc_sample_count(d, r, eps, M, delta, c)
    if T < 1:
        raise ValueError("need at least one sample")
    counter = OracleCounter()
    means = mc_inner_estimates(instance, T, np.random.default_rng(seed), counter)
    est = means ** 2
    return NNResult(argmax_with_ties(est), est, counter, float(M * T), "mc",
                    {"M": M, "D": instance.D, "d": d, "r_max": r, "eps": eps, "delta": delta, "samples": T, "c": c})


def rounds_per_estimate(d: int, r_max: float, eps: float) -> int:
    """Query pairs charged by one amplitude-estimation round."""
    return math.ceil(4 * math.pi * (math.pi + 1) * d ** 2 * r_max ** 4 / eps)


def median_repetitions(M: int, delta0: float) -> int:
    """Repetitions ``k`` whose median succeeds with the required confidence."""
    return math.ceil(math.log(81 * M * (math.log(M) + EULER_GAMMA) / delta0)
                     / (2 * (AE_SUCCESS - 0.5) ** 2))


@dataclass(frozen=True)
class QueryBoundParams:
    M: int
    d: int
    r_max: float
    eps: float
    delta0: float

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not 0 < self.delta0 < 1:
            raise ValueError("delta0 must lie in (0, 1)")


def query_bound(p: QueryBoundParams) -> float:
    """Expected-query upper bound of the quantum nearest-neighbour routine.

    ``1080 sqrt(M) * ceil(4 pi (pi+1) d^2 r^4 / eps)
    * ceil(ln(81 M (ln M + gamma) / delta0) / (2 (8/pi^2 - 1/2)^2))``.
    """
    return (BOUND_PREFACTOR * math.sqrt(p.M) * rounds_per_estimate(p.d, p.r_max, p.eps)
            * median_repetitions(p.M, p.delta0))


def nn_quantum_sim(instance: ClosestVectorInstance, eps: float, delta: float, seed=None, *,
                   delta0: float | None = None, r_max: float | None = None,
                   wide: float = 3.0) -> NNResult:
    """Query-level simulation of the quantum nearest-neighbour search.

    Estimates: each amplitude-estimation round returns the true overlap
    shifted uniformly within ``+-eps`` with probability ``8/pi^2`` and within
    ``+-wide*eps`` otherwise; an estimate is the median of ``k`` rounds.

    Search: start from a random candidate as threshold; while some
    candidates beat it, charge ``ceil(sqrt(M/t))`` estimates (``t`` = number
    of better candidates) and jump to a random better one; when none remain
    charge a final ``ceil(sqrt(M))``.  Every estimate costs ``k`` rounds of
    :func:`rounds_per_estimate` O and F query pairs.
    """
    _check_eps_delta(eps, delta)
    if delta0 is None:
        delta0 = delta / 2
    r = _declared_r_max(instance, r_max)
    M, d = instance.M, instance.stats.d
    per_round = rounds_per_estimate(d, r, eps)
    k = median_repetitions(M, delta0)
    rng = np.random.default_rng(seed)

    truth = np.clip(instance.exact_overlaps(), 0.0, 1.0)
    branch_u = rng.random((M, k))
    offset_u = rng.random((M, k))
    est = kernels.median_estimates(truth, branch_u, offset_u, eps, AE_SUCCESS, wide)

    estimates_used = 1  # reading the starting threshold
    y = int(rng.integers(M))
    if M > 1:
        while True:
            better = np.flatnonzero((est > est[y]) | ((est == est[y]) & (np.arange(M) < y)))
            if better.size == 0:
                estimates_used += math.ceil(math.sqrt(M))
                break
            estimates_used += math.ceil(math.sqrt(M / better.size))
            y = int(better[rng.integers(better.size)])
    pairs = estimates_used * k * per_round
    counter = OracleCounter(pairs, pairs)
    bound = query_bound(QueryBoundParams(M, d, r, eps, delta0))
    return NNResult(y, est, counter, bound, "quantum",
                    {"M": M, "D": instance.D, "d": d, "r_max": r, "eps": eps, "delta": delta,
                     "delta0": delta0, "k": k, "per_round": per_round,
                     "estimates": estimates_used,
                     "qram_access_cost": math.ceil(math.log2(max(instance.D, 2)))})


BACKENDS = {
    "direct": lambda inst, eps, delta, seed, tie_tol=TIE_TOL, **kw: nn_direct(inst, tie_tol),
    "mc": nn_monte_carlo,
    "quantum": nn_quantum_sim,
}


def run_backend(name: str, instance, eps=0.05, delta=0.1, seed=None, **kw) -> NNResult:
    try:
        fn = BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; choose from {sorted(BACKENDS)}") from None
    return fn(instance, eps, delta, seed, **kw)


def swap_test_probability(a, b) -> float:
    """Exact ancilla-0 probability of the swap test on two amplitude vectors.

    Builds the ``2 log2(N) + 1`` qubit state, applies H, the controlled swaps
    of matching register qubits, and H again.
    """
    a = np.asarray(a.to_dense() if isinstance(a, MeaningTensor) else a, dtype=np.float64).ravel()
    b = np.asarray(b.to_dense() if isinstance(b, MeaningTensor) else b, dtype=np.float64).ravel()
    if a.size != b.size:
        raise ValueError("swap test needs equal dimensions")
    n = a.size.bit_length() - 1
    if a.size < 2 or 1 << n != a.size or a.size > 32:
        raise ValueError(f"dimension {a.size} is not a power of 2 in [2, 32]")
    for v in (a, b):
        if abs(float(v @ v) - 1.0) > NORM_TOL:
            raise ValueError("swap test inputs must be normalized")
    qubits = 2 * n + 1
    state = np.zeros((2,) * qubits)
    state[0] = np.multiply.outer(a.reshape((2,) * n), b.reshape((2,) * n))
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2)

    def hadamard(st):
        return np.tensordot(h, st, axes=([1], [0]))

    state = hadamard(state)
    branch = state[1]
    for q in range(n):
        # axes of state[1]: register A qubits 0..n-1, register B qubits n..2n-1
        branch = np.swapaxes(branch, q, n + q)
    state = np.stack([state[0], branch])
    state = hadamard(state)
    return float(np.sum(state[0] ** 2))


def swap_test_sim(a, b, shots: int, seed=None) -> float:
    """Estimate ``|<a|b>|^2`` from ``shots`` sampled swap-test outcomes."""
    if shots < 1:
        raise ValueError("need at least one shot")
    p0 = swap_test_probability(a, b)
    rng = np.random.default_rng(seed)
    zeros = rng.binomial(shots, min(max(p0, 0.0), 1.0))
    return 2.0 * zeros / shots - 1.0


def random_instance(rng: np.random.Generator, M: int, D: int, d: int,
                    kind: str = "sphere") -> ClosestVectorInstance:
    """Query and ``M`` candidates with random ``d``-element supports.

    ``sphere``: Gaussian directions on the support (uniform on that sphere).
    ``flat``: entries ``+-1/sqrt(d)`` with random signs, so ``r_max = 1/d``.
    """
    if not 1 <= d <= D:
        raise ValueError("need 1 <= d <= D")

    def one():
        idx = np.sort(rng.choice(D, size=d, replace=False))
        if kind == "sphere":
            vals = rng.normal(size=d)
            vals /= np.linalg.norm(vals)
        elif kind == "flat":
            vals = rng.choice([-1.0, 1.0], size=d) / math.sqrt(d)
        else:
            raise ValueError(f"unknown instance kind {kind!r}")
        return MeaningTensor((D,), idx, vals)

    s = one()
    return ClosestVectorInstance(s, [one() for _ in range(M)])


def planted_instance(rng: np.random.Generator, M: int, D: int, top: float, runner_up: float) -> ClosestVectorInstance:
    """Instance whose best overlap is ``top`` and all others ``runner_up``.

    Candidate ``j`` is ``sqrt(o_j) s + sqrt(1 - o_j) w_j`` with ``w_j``
    orthogonal to ``s``; the winner's position is random.
    """
    if M + 1 > D:
        raise ValueError("need D > M")
    q, _ = np.linalg.qr(rng.normal(size=(D, M + 1)))
    s = q[:, 0]
    win = int(rng.integers(M))
    U = []
    for j in range(M):
        o = top if j == win else runner_up
        U.append(math.sqrt(o) * s + math.sqrt(1 - o) * q[:, j + 1])
    return ClosestVectorInstance(MeaningTensor.from_dense(s), [MeaningTensor.from_dense(u) for u in U])
