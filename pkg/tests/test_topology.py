import json
import math

import numpy as np
import pytest

from gossipfair.topology import (
    GossipNetwork,
    TopologySpec,
    assign_gossip_rates,
    generate,
)


def test_constant_degree_every_node():
    for seed in range(5):
        net = generate(TopologySpec(kind="constant_degree", n=10, B=10.0,
                                    seed=seed, degree=3))
        assert list(net.out_degree()) == [3] * 10


def test_two_node_uniform_degree_one():
    net = generate(TopologySpec(kind="uniform_degree", n=2, B=2.0, seed=0,
                                degree_bounds=(1, 1)))
    assert list(net.out_degree()) == [1, 1]
    assert set(net.edges) == {(0, 1), (1, 0)}


def test_exponential_degree_sequence_recounted():
    gamma, n = 1.5, 8
    net = generate(TopologySpec(kind="exponential", n=n, B=8.0, seed=3,
                                gamma=gamma))
    # independent recount of the clipped exponential rule
    expected = [min(math.ceil(gamma**i), n - 1) for i in range(n)]
    assert list(net.out_degree()) == expected


def test_uniform_degree_within_bounds():
    for seed in range(10):
        net = generate(TopologySpec(kind="uniform_degree", n=12, B=12.0,
                                    seed=seed, degree_bounds=(2, 5)))
        deg = net.out_degree()
        assert deg.min() >= 2 and deg.max() <= 5


def test_symmetric_split_equal_rates():
    net = GossipNetwork(n=4, edges=((0, 1), (0, 2), (1, 0), (2, 3), (3, 0)),
                        rates=(0.5, 0.5, 1.0, 1.0, 1.0),
                        node_budget=(1.0, 1.0, 1.0, 1.0))
    out = assign_gossip_rates(net, 4.0, "symmetric", seed=0)
    by_edge = dict(zip(out.edges, out.rates))
    assert by_edge[(0, 1)] == pytest.approx(0.5)
    assert by_edge[(0, 2)] == pytest.approx(0.5)
    assert by_edge[(1, 0)] == pytest.approx(1.0)


def test_asymmetric_rates_sum_to_budget():
    net = generate(TopologySpec(kind="uniform_degree", n=4, B=4.0, seed=1,
                                degree_bounds=(2, 3), gossip_mode="asymmetric"))
    sums = np.zeros(4)
    for (i, _), r in zip(net.edges, net.rates):
        sums[i] += r
    assert sums == pytest.approx(np.ones(4), rel=1e-9)


def test_sqrt_n_capacity_budget():
    net = generate(TopologySpec(kind="uniform_degree", n=16, B=math.sqrt(16),
                                seed=2, degree_bounds=(1, 3)))
    for i in range(16):
        if i not in net.zero_outdegree:
            assert net.node_budget[i] == pytest.approx(0.25)


def test_total_rate_conservation():
    for seed in range(8):
        net = generate(TopologySpec(kind="uniform_degree", n=9, B=5.0,
                                    seed=seed, degree_bounds=(1, 4),
                                    gossip_mode="asymmetric"))
        missing = sum(5.0 / 9 for i in net.zero_outdegree)
        assert sum(net.rates) == pytest.approx(5.0 - missing, rel=1e-9)


def test_same_seed_identical_network():
    spec = TopologySpec(kind="uniform_degree", n=10, B=10.0, seed=77,
                        degree_bounds=(1, 3), gossip_mode="asymmetric")
    a, b = generate(spec), generate(spec)
    assert a.edges == b.edges
    assert a.rates == b.rates
    assert a.node_budget == b.node_budget


def test_seed_changes_network():
    base = TopologySpec(kind="uniform_degree", n=10, B=10.0, seed=0,
                        degree_bounds=(1, 3))
    nets = {generate(TopologySpec(kind="uniform_degree", n=10, B=10.0, seed=s,
                                  degree_bounds=(1, 3))).edges
            for s in range(6)}
    assert len(nets) > 1
    assert generate(base).edges in nets


@pytest.mark.parametrize("kwargs", [
    dict(kind="uniform_degree", n=1, B=1.0, degree_bounds=(1, 1)),
    dict(kind="constant_degree", n=5, B=1.0, degree=5),
    dict(kind="constant_degree", n=5, B=1.0, degree=0),
    dict(kind="uniform_degree", n=5, B=1.0, degree_bounds=(0, 2)),
    dict(kind="uniform_degree", n=5, B=1.0, degree_bounds=(3, 2)),
    dict(kind="exponential", n=5, B=1.0, gamma=1.0),
    dict(kind="uniform_degree", n=5, B=0.0, degree_bounds=(1, 2)),
    dict(kind="nonsense", n=5, B=1.0),
])
def test_invalid_specs_rejected(kwargs):
    with pytest.raises(ValueError):
        TopologySpec(**kwargs)


def test_network_validation():
    with pytest.raises(ValueError, match="self-loop"):
        GossipNetwork(n=2, edges=((0, 0),), rates=(1.0,), node_budget=(1.0, 0.0))
    with pytest.raises(ValueError, match="negative rate"):
        GossipNetwork(n=2, edges=((0, 1),), rates=(-1.0,), node_budget=(-1.0, 0.0))
    with pytest.raises(ValueError, match="budget"):
        GossipNetwork(n=2, edges=((0, 1),), rates=(1.0,), node_budget=(2.0, 0.0))


def test_zero_outdegree_flagged_not_fatal():
    net = GossipNetwork(n=3, edges=((0, 1),), rates=(1.0,),
                        node_budget=(1.0, 0.0, 0.0), zero_outdegree=(1, 2))
    out = assign_gossip_rates(net, 3.0, "symmetric", seed=0)
    assert out.zero_outdegree == (1, 2)
    assert out.node_budget == (1.0, 0.0, 0.0)


def test_json_round_trip():
    net = generate(TopologySpec(kind="uniform_degree", n=7, B=3.0, seed=4,
                                degree_bounds=(1, 3), gossip_mode="asymmetric"))
    back = GossipNetwork.from_json(net.to_json())
    assert back.edges == net.edges
    assert back.rates == net.rates
    assert back.node_budget == net.node_budget
    # schema: {"n": ..., "edges": [[i, j, rate], ...], "budgets": [...]}
    obj = json.loads(net.to_json())
    assert set(obj) == {"n", "edges", "budgets"}
    assert all(len(e) == 3 for e in obj["edges"])


def test_require_source_reachable_gives_incoming_edges():
    for seed in range(6):
        net = generate(TopologySpec(kind="uniform_degree", n=8, B=8.0,
                                    seed=seed, degree_bounds=(1, 2),
                                    require_source_reachable=True))
        assert net.in_degree().min() >= 1


def test_custom_edges():
    net = generate(TopologySpec(kind="custom", n=3, B=3.0, seed=0,
                                edges=((0, 1), (1, 2), (2, 0))))
    assert net.edges == ((0, 1), (1, 2), (2, 0))
    assert net.rates == (1.0, 1.0, 1.0)
