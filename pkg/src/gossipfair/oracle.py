"""Exact expected version age via the recursive subset formula.

For a node set S the stationary expected minimum age over S satisfies

    a_S = (lambda_e + sum_j w_j(S) * a_{S+j}) / (l0(S) + sum_j w_j(S))

where j ranges over nodes outside S with gossip flowing into S,
w_j(S) is node j's total gossip rate into S, and l0(S) is the total
source update rate into S. Sets with no inbound gossip are terminal:
a_S = lambda_e / l0(S), which is +inf when l0(S) = 0 (a closure that
the source never updates directly or indirectly).

The recursion is evaluated lazily from singletons upward, memoized by
bitmask. Exponential in n, so capped at MAX_NODES.
"""

from __future__ import annotations

import math

import numpy as np

from .topology import GossipNetwork

MAX_NODES = 20


def _positive_out_edges(net: GossipNetwork) -> list[list[tuple[int, float]]]:
    """Outgoing positive-rate edges per node; zero-rate edges carry nothing."""
    out: list[list[tuple[int, float]]] = [[] for _ in range(net.n)]
    for (i, j), r in zip(net.edges, net.rates):
        if r > 0:
            out[i].append((j, r))
    return out


class SubsetAgeCache:
    """Memoized subset ages for one (network, allocation, lambda_e) triple."""

    def __init__(self, net: GossipNetwork, allocation, lambda_e: float):
        if net.n > MAX_NODES:
            raise ValueError(
                f"subset recursion capped at n <= {MAX_NODES}, got n={net.n}"
            )
        allocation = [float(x) for x in allocation]
        if len(allocation) != net.n:
            raise ValueError(
                f"allocation length {len(allocation)} != node count {net.n}"
            )
        if any(x < 0 for x in allocation):
            raise ValueError("allocation entries must be >= 0")
        if lambda_e <= 0:
            raise ValueError(f"need lambda_e > 0, got {lambda_e}")
        self.n = net.n
        self.lambda_e = float(lambda_e)
        self.alloc = allocation
        self.out = _positive_out_edges(net)
        self.memo: dict[int, float] = {}

    @classmethod
    def _with_out(cls, n: int, out, lambda_e: float, alloc) -> "SubsetAgeCache":
        """Trusted fast path for callers looping over many allocations."""
        self = cls.__new__(cls)
        self.n = n
        self.lambda_e = lambda_e
        self.alloc = alloc
        self.out = out
        self.memo = {}
        return self

    def age(self, mask: int) -> float:
        cached = self.memo.get(mask)
        if cached is not None:
            return cached
        alloc = self.alloc
        l0 = 0.0
        m = mask
        k = 0
        while m:
            if m & 1:
                l0 += alloc[k]
            m >>= 1
            k += 1
        inbound = []
        for j in range(self.n):
            if mask >> j & 1:
                continue
            w = 0.0
            for dst, r in self.out[j]:
                if mask >> dst & 1:
                    w += r
            if w > 0.0:
                inbound.append((j, w))
        if not inbound:
            a = self.lambda_e / l0 if l0 > 0.0 else math.inf
        else:
            num = self.lambda_e
            den = l0
            for j, w in inbound:
                child = self.age(mask | (1 << j))
                num += w * child
                den += w
            a = num / den
            for j, w in inbound:
                # growing the set can only lower the expected minimum age
                assert self.memo[mask | (1 << j)] <= a * (1 + 1e-9) + 1e-12, (
                    f"superset age exceeded subset age at mask {mask:b}"
                )
        self.memo[mask] = a
        return a


def exact_node_age(net: GossipNetwork, allocation, lambda_e: float, i: int,
                   cache: SubsetAgeCache | None = None) -> float:
    """Exact stationary expected version age of node i.

    Returns +inf when node i sits in a closure with no inbound source
    rate. A cache may be passed to share work across nodes.
    """
    if cache is None:
        cache = SubsetAgeCache(net, allocation, lambda_e)
    if not (0 <= i < net.n):
        raise ValueError(f"node index {i} out of range for n={net.n}")
    return cache.age(1 << i)


def exact_all_ages(net: GossipNetwork, allocation, lambda_e: float) -> np.ndarray:
    """Exact ages of every node, sharing one subset cache."""
    cache = SubsetAgeCache(net, allocation, lambda_e)
    return np.array([cache.age(1 << i) for i in range(net.n)])


def exact_worst_age(net: GossipNetwork, allocation, lambda_e: float) -> float:
    """max_i of the exact node ages; +inf if any node is unreachable."""
    return float(max(exact_all_ages(net, allocation, lambda_e)))


def grid_optimum(net: GossipNetwork, lambda_e: float, lambda_total: float,
                 resolution: int) -> tuple[np.ndarray, float]:
    """Brute-force best allocation on the budget-constrained simplex grid.

    Enumerates all allocations with entries in {0, step, 2*step, ...}
    summing to at most lambda_total (step = lambda_total/(resolution-1))
    and returns the first grid point attaining the minimal exact worst
    age. Exponential in n; intended for n <= 4 baselines.
    """
    if resolution < 2:
        raise ValueError(f"need resolution >= 2, got {resolution}")
    if lambda_total <= 0:
        raise ValueError(f"need lambda_total > 0, got {lambda_total}")
    n = net.n
    n_points = math.comb(resolution - 1 + n, n)
    if n_points > 5_000_000:
        raise ValueError(
            f"grid of {n_points} points is too large; lower resolution or n"
        )
    step = lambda_total / (resolution - 1)

    out = _positive_out_edges(net)
    units = [0] * n
    best_units: list[int] | None = None
    best_age = math.inf
    lam_e = float(lambda_e)
    singletons = [1 << i for i in range(n)]

    def scan(pos: int, remaining: int):
        nonlocal best_units, best_age
        if pos == n - 1:
            for u in range(remaining + 1):
                units[pos] = u
                alloc = [v * step for v in units]
                cache = SubsetAgeCache._with_out(n, out, lam_e, alloc)
                worst = max(cache.age(m) for m in singletons)
                if worst < best_age:
                    best_age = worst
                    best_units = units.copy()
            return
        for u in range(remaining + 1):
            units[pos] = u
            scan(pos + 1, remaining - u)

    scan(0, resolution - 1)
    if best_units is None:
        best_units = [0] * n
    return np.array([u * step for u in best_units]), best_age
