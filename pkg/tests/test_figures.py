"""The committed figure configs stay loadable and their claims reproduce."""

import json
import os
from dataclasses import replace

import numpy as np
import pytest

from gossipfair.bandit import FeasibleRegion, run
from gossipfair.harness import config_from_obj, make_oracle_evaluator, run_experiment
from gossipfair.oracle import exact_all_ages
from gossipfair.topology import GossipNetwork

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def load(name):
    with open(os.path.join(CONFIG_DIR, name)) as f:
        return json.load(f)


def test_all_figure_configs_parse():
    names = [n for n in sorted(os.listdir(CONFIG_DIR))
             if n.endswith(".json") and n != "sample_graph_network.json"]
    assert len(names) >= 10
    for name in names:
        cfg = config_from_obj(load(name))
        assert cfg.M >= 1


def test_sample_graph_fixture_shape():
    net = GossipNetwork.from_json_obj(load("sample_graph_network.json"))
    assert net.n == 10
    deg = net.out_degree()
    assert deg.min() >= 1 and deg.max() <= 5
    # exactly one node that only the source can refresh
    assert list(net.in_degree()).count(0) == 1


def test_sample_graph_zero_indegree_node_is_the_bottleneck():
    net = GossipNetwork.from_json_obj(load("sample_graph_network.json"))
    lonely = int(np.flatnonzero(net.in_degree() == 0)[0])

    # uniform allocation: that node relies on its 1/n source rate alone
    uniform_ages = exact_all_ages(net, [0.1] * 10, 10.0)
    assert int(np.argmax(uniform_ages)) == lonely
    assert uniform_ages[lonely] == pytest.approx(100.0, abs=1e-9)

    # after learning it stays pinned to the worst age (min-max active set)
    # and receives the largest share of the budget
    region = FeasibleRegion.for_budget(10, 1.0)
    trace = run(net, 10.0, region, 100, make_oracle_evaluator(net, 10.0), seed=0)
    ages = exact_all_ages(net, trace.best_allocation(), 10.0)
    assert ages[lonely] >= 0.99 * ages.max()
    assert int(np.argmax(trace.best_allocation())) == lonely


@pytest.mark.parametrize("name", [
    "fig_constant_degree_3.json",
    "fig_exponential.json",
    "fig_asymmetric_gossip.json",
])
def test_figure_families_run_end_to_end_shrunken(name):
    obj = load(name)
    cfg = config_from_obj(obj)
    cfg = replace(cfg, seeds=(0, 1), M=6)
    result = run_experiment(cfg)
    summary = result.summary()
    assert summary["failed"] == 0
    assert summary["optimized_mean"] <= summary["uniform_mean"] + 1e-9
