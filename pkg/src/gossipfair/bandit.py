"""GP-UCB loop over the constrained allocation region.

The search space is D = {x in [0, box_upper]^n : sum(x) <= budget}. Each
round evaluates the current allocation (noisy worst-case age feedback),
refits the surrogate on the negated ages, and proposes the next
allocation by maximizing mean + sqrt(beta) * sd with multi-start
projected gradient ascent. Ages that come back non-finite (or absurdly
large) are capped before entering the surrogate so one unreachable-node
proposal cannot poison the regression; capped rounds are flagged in the
trace.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import gp
from .sim import AgeReport


@dataclass(frozen=True)
class FeasibleRegion:
    """Box-and-budget search space for allocations."""

    n: int
    box_upper: float
    budget: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need n >= 1, got {self.n}")
        if self.box_upper <= 0:
            raise ValueError(f"need box_upper > 0, got {self.box_upper}")
        if self.budget <= 0:
            raise ValueError(f"need budget > 0, got {self.budget}")

    @classmethod
    def for_budget(cls, n: int, budget: float) -> "FeasibleRegion":
        """The standard region: per-coordinate cap equal to the total budget."""
        return cls(n=n, box_upper=budget, budget=budget)

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(
            np.all(x >= -tol)
            and np.all(x <= self.box_upper + tol)
            and x.sum() <= self.budget + tol
        )

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Uniform draws from the budget simplex, clipped into the box."""
        pts = rng.dirichlet(np.ones(self.n + 1), size=size)[:, : self.n]
        return np.minimum(pts * self.budget, self.box_upper)


def beta(m: int, delta: float) -> float:
    """Confidence weight for round m: 2*log(m^2 * pi^2 / (6*delta))."""
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    if not (0 < delta < 1):
        raise ValueError(f"need 0 < delta < 1, got {delta}")
    return 2.0 * math.log(m * m * math.pi**2 / (6.0 * delta))


def acquisition(state: gp.SurrogateState, x, beta_m: float):
    """Upper confidence bound mean + sqrt(beta)*sd; batch-aware like posterior."""
    if beta_m < 0:
        raise ValueError(f"need beta >= 0, got {beta_m}")
    mean, var = gp.posterior(state, x)
    root = math.sqrt(beta_m)
    if np.isscalar(mean):
        return mean + root * math.sqrt(var)
    return mean + root * np.sqrt(var)


def _project_rows(x: np.ndarray, region: FeasibleRegion) -> np.ndarray:
    """Euclidean projection of each row onto the region.

    KKT form: clip(row - tau, 0, box_upper) with tau = 0 when the budget
    is slack, otherwise the root of sum(clip(row - tau, 0, u)) = budget,
    found by bisection.
    """
    u = region.box_upper
    b = region.budget
    y = np.clip(x, 0.0, u)
    over = y.sum(axis=1) > b
    if not np.any(over):
        return y
    rows = x[over]
    lo = np.zeros(len(rows))
    hi = rows.max(axis=1)  # at tau = max(row), the projection is all-zero
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        s = np.clip(rows - mid[:, None], 0.0, u).sum(axis=1)
        high = s > b
        lo = np.where(high, mid, lo)
        hi = np.where(high, hi, mid)
    tau = 0.5 * (lo + hi)
    y[over] = np.clip(rows - tau[:, None], 0.0, u)
    return y


def project(x, region: FeasibleRegion) -> np.ndarray:
    """Euclidean projection of one point onto the region."""
    arr = np.asarray(x, dtype=float).reshape(1, -1)
    if arr.shape[1] != region.n:
        raise ValueError(f"point dimension {arr.shape[1]} != region n {region.n}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("cannot project a non-finite point")
    return _project_rows(arr, region)[0]


def maximize_acquisition(state: gp.SurrogateState, beta_m: float,
                         region: FeasibleRegion, restarts: int = 10,
                         seed=0) -> np.ndarray:
    """Multi-start projected gradient ascent on the acquisition surface.

    Starts are uniform samples from the region, plus the incumbent best
    observed point and the best of a coarse random scan. Gradients are
    central differences; steps backtrack on failure and every iterate is
    projected. The winner is the highest acquisition value, ties broken
    by start order. Deterministic given seed.
    """
    if restarts < 1:
        raise ValueError(f"need restarts >= 1, got {restarts}")
    rng = np.random.default_rng(seed)
    n = region.n

    starts = [region.sample(rng, restarts)]
    if len(state):
        starts.append(state.points[int(np.argmax(state.rewards))][None, :])
        scan = region.sample(rng, 512)
        val = acquisition(state, scan, beta_m)
        starts.append(scan[int(np.argmax(val))][None, :])
    x = _project_rows(np.vstack(starts), region)
    fx = np.asarray(acquisition(state, x, beta_m))

    h = 1e-5 * region.budget
    stall = 1e-6 * region.budget
    step = np.full(len(x), 0.25 * region.budget)
    eye = np.eye(n)
    for _ in range(50):
        live = np.flatnonzero(step >= stall)
        if live.size == 0:
            break
        xl = x[live]
        # central differences for every live chain in one batched call
        plus = xl[:, None, :] + h * eye[None, :, :]
        minus = xl[:, None, :] - h * eye[None, :, :]
        queries = np.concatenate([plus, minus], axis=1).reshape(-1, n)
        vals = np.asarray(acquisition(state, queries, beta_m)).reshape(len(xl), 2 * n)
        grad = (vals[:, :n] - vals[:, n:]) / (2.0 * h)
        norm = np.maximum(np.linalg.norm(grad, axis=1), 1e-30)
        direction = grad / norm[:, None]
        trial = _project_rows(xl + step[live, None] * direction, region)
        ft = np.asarray(acquisition(state, trial, beta_m))
        better = ft > fx[live] + 1e-14
        moved = live[better]
        x[moved] = trial[better]
        fx[moved] = ft[better]
        step[moved] = np.minimum(step[moved] * 1.3, region.budget)
        step[live[~better]] *= 0.5
    return x[int(np.argmax(fx))]


@dataclass
class IterationRecord:
    """One bandit round: the allocation evaluated and the proposal metadata.

    worst_age and per_node are capped at the round's age ceiling when the
    raw feedback was non-finite or above it (capped flag set).
    """

    m: int
    allocation: np.ndarray
    worst_age: float
    per_node: np.ndarray
    beta: float
    acq_value: float
    capped: bool = False

    def to_json_obj(self) -> dict:
        return {
            "m": self.m,
            "lambda": self.allocation.tolist(),
            "worst_age": self.worst_age,
            "per_node_age": self.per_node.tolist(),
            "beta": self.beta,
            "acq_value": self.acq_value,
            "capped": self.capped,
        }


@dataclass
class OptimizationTrace:
    """Complete record of one GP-UCB run."""

    region: FeasibleRegion
    iterations: list[IterationRecord] = field(default_factory=list)
    best_so_far: list[float] = field(default_factory=list)
    next_allocation: np.ndarray | None = None
    error: str | None = None
    regrets: np.ndarray | None = None
    cumulative_regrets: np.ndarray | None = None

    def worst_ages(self) -> np.ndarray:
        return np.array([rec.worst_age for rec in self.iterations])

    def best_index(self) -> int:
        return int(np.argmin(self.worst_ages()))

    def best_age(self) -> float:
        return self.iterations[self.best_index()].worst_age

    def best_allocation(self) -> np.ndarray:
        return self.iterations[self.best_index()].allocation

    def to_jsonl(self) -> str:
        return "".join(json.dumps(rec.to_json_obj()) + "\n"
                       for rec in self.iterations)


def run(net, lambda_e: float, region: FeasibleRegion, M: int, evaluator,
        seed=0, *, kernel_params: gp.KernelParams | None = None,
        delta: float = 0.1, restarts: int = 10, center: bool = True,
        age_cap_factor: float = 10.0) -> OptimizationTrace:
    """Run the update-rate learning loop for M rounds.

    Starts from the uniform allocation budget/n. Each round m evaluates
    the current allocation through `evaluator` (an AgeReport-returning
    callable), feeds the negated worst age to the surrogate, and proposes
    the next allocation by UCB maximization with weight beta(m, delta).
    An evaluator exception stops the loop and leaves the partial trace
    with its error field set. Deterministic given seed for a
    deterministic evaluator.
    """
    if M < 1:
        raise ValueError(f"need M >= 1, got {M}")
    if net is not None and net.n != region.n:
        raise ValueError(f"network has {net.n} nodes but region has {region.n}")
    params = kernel_params or gp.default_kernel_params(region.budget)
    state = gp.SurrogateState.empty(params, region.n, center=center)
    iter_seeds = np.random.SeedSequence(seed).spawn(M)

    alloc = project(np.full(region.n, region.budget / region.n), region)
    trace = OptimizationTrace(region=region)
    cap = math.inf
    best = math.inf
    for m in range(1, M + 1):
        try:
            report: AgeReport = evaluator(alloc)
        except Exception as exc:  # noqa: BLE001 - preserved in the trace
            trace.error = f"evaluator failed at iteration {m}: {exc}"
            break
        raw = float(report.worst)
        if m == 1:
            if not math.isfinite(raw):
                trace.error = "uniform allocation has unbounded age; nothing to optimize"
                break
            cap = age_cap_factor * raw
        capped = not (raw <= cap)
        worst = min(raw, cap) if math.isfinite(raw) else cap
        per_node = np.minimum(np.nan_to_num(report.per_node, posinf=cap), cap)

        state = gp.update(state, alloc, -worst)
        beta_m = beta(m, delta)
        nxt = maximize_acquisition(state, beta_m, region, restarts,
                                   iter_seeds[m - 1])
        acq_val = float(acquisition(state, nxt, beta_m))

        trace.iterations.append(IterationRecord(
            m=m, allocation=alloc.copy(), worst_age=worst, per_node=per_node,
            beta=beta_m, acq_value=acq_val, capped=capped,
        ))
        best = min(best, worst)
        trace.best_so_far.append(best)
        alloc = nxt
    trace.next_allocation = alloc
    return trace


def regret_series(trace: OptimizationTrace,
                  baseline_age: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-round and cumulative excess age over a baseline optimum."""
    if not math.isfinite(baseline_age):
        raise ValueError(f"baseline age must be finite, got {baseline_age}")
    r = trace.worst_ages() - baseline_age
    big_r = np.cumsum(r)
    trace.regrets = r
    trace.cumulative_regrets = big_r
    return r, big_r
