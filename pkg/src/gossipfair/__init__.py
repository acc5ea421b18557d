"""Fair update-rate allocation in sparse gossip networks.

Pieces: random sparse topologies (topology), an event-driven version-age
simulator (sim), an exact recursive age oracle for small networks
(oracle), a Gaussian-process surrogate (gp), the GP-UCB rate optimizer
(bandit), and the experiment harness plus CLI (harness).
"""

from .topology import GossipNetwork, TopologySpec, assign_gossip_rates, generate
from .sim import AgeReport, SimConfig, simulate, simulate_replicated
from .oracle import (
    SubsetAgeCache,
    exact_all_ages,
    exact_node_age,
    exact_worst_age,
    grid_optimum,
)
from .gp import KernelParams, SurrogateState, default_kernel_params, kernel, posterior, update
from .bandit import (
    FeasibleRegion,
    OptimizationTrace,
    acquisition,
    beta,
    maximize_acquisition,
    project,
    regret_series,
    run,
)

__all__ = [
    "GossipNetwork",
    "TopologySpec",
    "generate",
    "assign_gossip_rates",
    "SimConfig",
    "AgeReport",
    "simulate",
    "simulate_replicated",
    "SubsetAgeCache",
    "exact_node_age",
    "exact_all_ages",
    "exact_worst_age",
    "grid_optimum",
    "KernelParams",
    "SurrogateState",
    "default_kernel_params",
    "kernel",
    "posterior",
    "update",
    "FeasibleRegion",
    "OptimizationTrace",
    "beta",
    "acquisition",
    "project",
    "maximize_acquisition",
    "regret_series",
    "run",
]

__version__ = "0.1.0"
