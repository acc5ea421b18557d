"""Sparse directed gossip topologies and gossip-rate assignment.

A network is a directed graph on n nodes. Every edge i->j carries a
nonnegative gossip rate; node i's outgoing rates always sum to its
gossip budget B/n (nodes with no outgoing edges get budget 0 and are
flagged). Generation is a pure function of the spec and its seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

KINDS = ("uniform_degree", "constant_degree", "exponential", "custom")
GOSSIP_MODES = ("symmetric", "asymmetric")


@dataclass(frozen=True)
class GossipNetwork:
    """Directed gossip graph with per-edge rates and per-node budgets.

    edges are stored sorted by (src, dst); rates[k] is the rate of
    edges[k]. zero_outdegree lists nodes that received budget 0 because
    they have no outgoing edge to carry it.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    rates: tuple[float, ...]
    node_budget: tuple[float, ...]
    zero_outdegree: tuple[int, ...] = ()

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.n < 1:
            raise ValueError(f"need at least one node, got n={self.n}")
        if len(self.edges) != len(self.rates):
            raise ValueError("edges and rates length mismatch")
        out_sum = [0.0] * self.n
        seen = set()
        for (i, j), r in zip(self.edges, self.rates):
            if i == j:
                raise ValueError(f"self-loop {i}->{j}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge {i}->{j} out of range for n={self.n}")
            if r < 0:
                raise ValueError(f"negative rate on edge {i}->{j}")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge {i}->{j}")
            seen.add((i, j))
            out_sum[i] += r
        for i in range(self.n):
            b = self.node_budget[i]
            if b < 0:
                raise ValueError(f"negative budget at node {i}")
            if out_sum[i] == 0.0 and b == 0.0:
                continue
            if abs(out_sum[i] - b) > 1e-9 * max(1.0, abs(b)):
                raise ValueError(
                    f"node {i}: outgoing rates sum {out_sum[i]!r} != budget {b!r}"
                )

    def out_degree(self) -> np.ndarray:
        d = np.zeros(self.n, dtype=int)
        for i, _ in self.edges:
            d[i] += 1
        return d

    def in_degree(self) -> np.ndarray:
        d = np.zeros(self.n, dtype=int)
        for _, j in self.edges:
            d[j] += 1
        return d

    def rate_matrix(self) -> np.ndarray:
        """Dense n x n matrix G with G[i, j] = rate of edge i->j (0 if absent)."""
        g = np.zeros((self.n, self.n))
        for (i, j), r in zip(self.edges, self.rates):
            g[i, j] = r
        return g

    def in_edges(self) -> list[list[tuple[int, float]]]:
        """Per-node list of (source, rate) pairs for incoming edges."""
        inc: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
        for (i, j), r in zip(self.edges, self.rates):
            inc[j].append((i, r))
        return inc

    def to_json_obj(self) -> dict:
        return {
            "n": self.n,
            "edges": [[i, j, r] for (i, j), r in zip(self.edges, self.rates)],
            "budgets": list(self.node_budget),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json_obj(cls, obj: dict) -> "GossipNetwork":
        n = int(obj["n"])
        triples = sorted((int(i), int(j), float(r)) for i, j, r in obj["edges"])
        edges = tuple((i, j) for i, j, _ in triples)
        rates = tuple(r for _, _, r in triples)
        budgets = tuple(float(b) for b in obj["budgets"])
        outdeg = [0] * n
        for i, _ in edges:
            outdeg[i] += 1
        zero = tuple(i for i in range(n) if outdeg[i] == 0)
        return cls(n=n, edges=edges, rates=rates, node_budget=budgets,
                   zero_outdegree=zero)

    @classmethod
    def from_json(cls, text: str) -> "GossipNetwork":
        return cls.from_json_obj(json.loads(text))


@dataclass(frozen=True)
class TopologySpec:
    """Recipe for a random gossip topology.

    kind selects the out-degree law: uniform_degree draws each node's
    out-degree uniformly from degree_bounds, constant_degree uses a fixed
    degree, exponential gives node i (0-indexed) min(ceil(gamma**i), n-1)
    out-neighbors, custom takes an explicit edge list.
    """

    kind: str
    n: int
    B: float
    seed: int = 0
    gossip_mode: str = "symmetric"
    degree_bounds: tuple[int, int] | None = None
    degree: int | None = None
    gamma: float | None = None
    edges: tuple[tuple[int, int], ...] | None = None
    require_source_reachable: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown topology kind {self.kind!r}")
        if self.n < 2:
            raise ValueError(f"need n >= 2, got {self.n}")
        if self.B <= 0:
            raise ValueError(f"need B > 0, got {self.B}")
        if self.gossip_mode not in GOSSIP_MODES:
            raise ValueError(f"unknown gossip_mode {self.gossip_mode!r}")
        if self.kind == "uniform_degree":
            if self.degree_bounds is None:
                raise ValueError("uniform_degree needs degree_bounds")
            lo, hi = self.degree_bounds
            if not (1 <= lo <= hi <= self.n - 1):
                raise ValueError(
                    f"need 1 <= d_min <= d_max <= n-1, got ({lo}, {hi}) for n={self.n}"
                )
        elif self.kind == "constant_degree":
            if self.degree is None:
                raise ValueError("constant_degree needs degree")
            if not (1 <= self.degree <= self.n - 1):
                raise ValueError(
                    f"constant degree must be in [1, n-1], got {self.degree}"
                )
        elif self.kind == "exponential":
            if self.gamma is None or self.gamma <= 1:
                raise ValueError(f"need gamma > 1, got {self.gamma}")
        elif self.kind == "custom":
            if self.edges is None:
                raise ValueError("custom kind needs an explicit edge list")


def _out_degrees(spec: TopologySpec, rng: np.random.Generator) -> list[int]:
    if spec.kind == "uniform_degree":
        lo, hi = spec.degree_bounds
        return [int(rng.integers(lo, hi + 1)) for _ in range(spec.n)]
    if spec.kind == "constant_degree":
        return [spec.degree] * spec.n
    # exponential: degree of node i is gamma**i, clipped into [1, n-1]
    return [min(math.ceil(spec.gamma**i), spec.n - 1) for i in range(spec.n)]


def generate(spec: TopologySpec) -> GossipNetwork:
    """Draw a network per spec; deterministic given spec.seed.

    Out-neighbors of each node are sampled uniformly without replacement
    from the other n-1 nodes. Gossip rates are assigned afterwards with
    assign_gossip_rates(spec.B, spec.gossip_mode) from a derived seed.
    """
    edge_ss, rate_ss = np.random.SeedSequence(spec.seed).spawn(2)
    rng = np.random.default_rng(edge_ss)
    n = spec.n

    for _ in range(1000):
        if spec.kind == "custom":
            edges = sorted(set(map(tuple, spec.edges)))
        else:
            degrees = _out_degrees(spec, rng)
            edges = []
            for i in range(n):
                others = [j for j in range(n) if j != i]
                picks = rng.choice(len(others), size=degrees[i], replace=False)
                edges.extend((i, others[k]) for k in sorted(picks))
            edges.sort()
        if not spec.require_source_reachable:
            break
        indeg = [0] * n
        for _, j in edges:
            indeg[j] += 1
        if all(d >= 1 for d in indeg):
            break
        if spec.kind == "custom":
            raise ValueError("custom edge list leaves a node with no incoming edge")
    else:
        raise RuntimeError("could not draw a topology meeting the in-degree requirement")

    outdeg = [0] * n
    for i, _ in edges:
        outdeg[i] += 1
    zero = tuple(i for i in range(n) if outdeg[i] == 0)
    budgets = tuple(0.0 if i in zero else spec.B / n for i in range(n))
    bare = GossipNetwork(
        n=n,
        edges=tuple(edges),
        rates=tuple(budgets[i] / outdeg[i] for i, _ in edges),
        node_budget=budgets,
        zero_outdegree=zero,
    )
    if spec.gossip_mode == "symmetric":
        return bare
    return assign_gossip_rates(bare, spec.B, "asymmetric", rate_ss)


def assign_gossip_rates(net: GossipNetwork, B: float, mode: str,
                        seed) -> GossipNetwork:
    """Reassign edge rates so every node spends a budget of B/n.

    symmetric: node i splits B/n equally over its out-edges. asymmetric:
    the split is a uniform draw from the probability simplex over the
    out-edges (Dirichlet with unit concentration), scaled by B/n.
    Nodes without out-edges get budget 0 and are flagged, not rejected.
    """
    if B <= 0:
        raise ValueError(f"need B > 0, got {B}")
    if mode not in GOSSIP_MODES:
        raise ValueError(f"unknown gossip_mode {mode!r}")
    rng = np.random.default_rng(seed)
    n = net.n
    per_node = B / n

    out_idx: list[list[int]] = [[] for _ in range(n)]
    for k, (i, _) in enumerate(net.edges):
        out_idx[i].append(k)

    rates = [0.0] * len(net.edges)
    budgets = [per_node] * n
    zero = []
    for i in range(n):
        ks = out_idx[i]
        if not ks:
            budgets[i] = 0.0
            zero.append(i)
            continue
        if mode == "symmetric":
            w = np.full(len(ks), 1.0 / len(ks))
        else:
            w = rng.dirichlet(np.ones(len(ks)))
        for k, wk in zip(ks, w):
            rates[k] = per_node * float(wk)

    return replace(net, rates=tuple(rates), node_budget=tuple(budgets),
                   zero_outdegree=tuple(zero))
