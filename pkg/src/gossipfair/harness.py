"""Experiment orchestration and command-line interface.

Reproduces the headline comparisons: learned vs uniform rate allocation
across topology ensembles, per-node age histograms, and allocation-vs-
degree summaries, all exported as plot-ready CSV. Subcommands: generate,
simulate, oracle, optimize, experiment. Everything is reproducible
byte-for-byte from (config, seeds).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from . import bandit, gp, oracle, sim, topology

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

THREADS_ENV = "GOSSIP_FAIR_THREADS"


class ConfigError(ValueError):
    """Malformed configuration; carries the offending field path."""

    def __init__(self, fieldpath: str, message: str):
        super().__init__(f"{fieldpath}: {message}")
        self.fieldpath = fieldpath


@dataclass(frozen=True)
class SimSettings:
    horizon: float = 1e5
    warmup_fraction: float = 0.1
    replications: int = 1

    def __post_init__(self):
        if self.horizon <= 0:
            raise ConfigError("sim.horizon", "must be > 0")
        if not (0 <= self.warmup_fraction < 1):
            raise ConfigError("sim.warmup_fraction", "must be in [0, 1)")
        if self.replications < 1:
            raise ConfigError("sim.replications", "must be >= 1")


@dataclass(frozen=True)
class BanditSettings:
    delta: float = 0.1
    restarts: int = 10
    center: bool = True
    age_cap_factor: float = 10.0

    def __post_init__(self):
        if not (0 < self.delta < 1):
            raise ConfigError("bandit.delta", "must be in (0, 1)")
        if self.restarts < 1:
            raise ConfigError("bandit.restarts", "must be >= 1")
        if self.age_cap_factor <= 1:
            raise ConfigError("bandit.age_cap_factor", "must be > 1")


@dataclass(frozen=True)
class ExperimentConfig:
    topology: topology.TopologySpec
    lambda_e: float = 10.0
    lambda_total: float = 1.0
    M: int = 100
    sim: SimSettings = field(default_factory=SimSettings)
    kernel: gp.KernelParams | None = None
    bandit: BanditSettings = field(default_factory=BanditSettings)
    seeds: tuple[int, ...] = (0,)
    mode: str = "simulate"
    out_dir: str | None = None
    bins: int = 10

    def __post_init__(self):
        if self.lambda_e <= 0:
            raise ConfigError("lambda_e", "must be > 0")
        if self.lambda_total <= 0:
            raise ConfigError("lambda_total", "must be > 0")
        if self.M < 1:
            raise ConfigError("M", "must be >= 1")
        if not self.seeds:
            raise ConfigError("seeds", "must be nonempty")
        if self.mode not in ("simulate", "oracle"):
            raise ConfigError("mode", "must be 'simulate' or 'oracle'")
        if self.bins < 2:
            raise ConfigError("bins", "must be >= 2")


def _require(obj: dict, fieldpath: str, key: str):
    if key not in obj:
        raise ConfigError(f"{fieldpath}{key}", "missing required field")
    return obj[key]


def topology_spec_from_obj(obj: dict, fieldpath: str = "topology.") -> topology.TopologySpec:
    if not isinstance(obj, dict):
        raise ConfigError(fieldpath.rstrip("."), "must be an object")
    kind = _require(obj, fieldpath, "kind")
    kwargs = {
        "kind": kind,
        "n": _require(obj, fieldpath, "n"),
        "B": _require(obj, fieldpath, "B"),
        "seed": obj.get("seed", 0),
        "gossip_mode": obj.get("gossip_mode", "symmetric"),
        "require_source_reachable": obj.get("require_source_reachable", False),
    }
    if obj.get("degree_bounds") is not None:
        db = obj["degree_bounds"]
        if not (isinstance(db, (list, tuple)) and len(db) == 2):
            raise ConfigError(f"{fieldpath}degree_bounds", "must be [d_min, d_max]")
        kwargs["degree_bounds"] = (int(db[0]), int(db[1]))
    if obj.get("degree") is not None:
        kwargs["degree"] = int(obj["degree"])
    if obj.get("gamma") is not None:
        kwargs["gamma"] = float(obj["gamma"])
    if obj.get("edges") is not None:
        kwargs["edges"] = tuple((int(i), int(j)) for i, j in obj["edges"])
    try:
        return topology.TopologySpec(**kwargs)
    except ValueError as exc:
        raise ConfigError(fieldpath.rstrip("."), str(exc)) from exc


def config_from_obj(obj: dict) -> ExperimentConfig:
    if not isinstance(obj, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    spec = topology_spec_from_obj(_require(obj, "", "topology"))
    sim_obj = obj.get("sim", {})
    if not isinstance(sim_obj, dict):
        raise ConfigError("sim", "must be an object")
    sim_settings = SimSettings(
        horizon=float(sim_obj.get("horizon", 1e5)),
        warmup_fraction=float(sim_obj.get("warmup_fraction", 0.1)),
        replications=int(sim_obj.get("replications", 1)),
    )
    bandit_obj = obj.get("bandit", {})
    if not isinstance(bandit_obj, dict):
        raise ConfigError("bandit", "must be an object")
    bandit_settings = BanditSettings(
        delta=float(bandit_obj.get("delta", 0.1)),
        restarts=int(bandit_obj.get("restarts", 10)),
        center=bool(bandit_obj.get("center", True)),
        age_cap_factor=float(bandit_obj.get("age_cap_factor", 10.0)),
    )
    kernel = None
    if obj.get("kernel") is not None:
        k = obj["kernel"]
        if not isinstance(k, dict):
            raise ConfigError("kernel", "must be an object")
        try:
            ls = k.get("length_scale")
            kernel = gp.KernelParams(
                variance=float(k.get("variance", 1.0)),
                length_scale=(tuple(float(v) for v in ls)
                              if isinstance(ls, list) else float(ls)),
                nu=float(k.get("nu", 2.5)),
                noise=float(k.get("noise", 0.0)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError("kernel", str(exc)) from exc
    seeds = obj.get("seeds", [obj.get("seed", 0)])
    if not isinstance(seeds, list) or not all(isinstance(s, int) for s in seeds):
        raise ConfigError("seeds", "must be a list of integers")
    try:
        return ExperimentConfig(
            topology=spec,
            lambda_e=float(obj.get("lambda_e", 10.0)),
            lambda_total=float(obj.get("lambda_total", 1.0)),
            M=int(obj.get("M", 100)),
            sim=sim_settings,
            kernel=kernel,
            bandit=bandit_settings,
            seeds=tuple(seeds),
            mode=obj.get("mode", "simulate"),
            out_dir=obj.get("out_dir"),
            bins=int(obj.get("bins", 10)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError("<root>", str(exc)) from exc


def make_oracle_evaluator(net: topology.GossipNetwork, lambda_e: float):
    """Evaluator returning exact ages wrapped as an AgeReport."""
    def evaluate(allocation) -> sim.AgeReport:
        ages = oracle.exact_all_ages(net, allocation, lambda_e)
        finite = ages[np.isfinite(ages)]
        worst = float(ages.max()) if finite.size == ages.size else math.inf
        return sim.AgeReport(
            per_node=ages,
            worst=worst,
            source_updates=0,
            horizon_used=math.inf,
            unbounded=tuple(int(i) for i in np.flatnonzero(~np.isfinite(ages))),
        )
    return evaluate


def make_sim_evaluator(net: topology.GossipNetwork, lambda_e: float,
                       settings: SimSettings, seed):
    """Evaluator running one (or several) simulation windows per call.

    Each call consumes the next child of a seed sequence, so repeated
    evaluations are independent but the whole stream is reproducible.
    """
    root = np.random.SeedSequence(seed)

    def evaluate(allocation) -> sim.AgeReport:
        child = root.spawn(1)[0]
        cfg = sim.SimConfig(
            lambda_e=lambda_e,
            allocation=tuple(float(x) for x in allocation),
            horizon=settings.horizon,
            seed=child,
            warmup_fraction=settings.warmup_fraction,
        )
        if settings.replications > 1:
            return sim.simulate_replicated(net, cfg, settings.replications)
        return sim.simulate(net, cfg)
    return evaluate


@dataclass
class SeedOutcome:
    """Uniform-vs-optimized results for one seed's network."""

    seed: int
    net: topology.GossipNetwork
    uniform_allocation: np.ndarray
    uniform_per_node: np.ndarray
    uniform_worst: float
    best_allocation: np.ndarray | None = None
    optimized_per_node: np.ndarray | None = None
    optimized_worst: float | None = None
    trace: bandit.OptimizationTrace | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class ComparisonResult:
    config: ExperimentConfig
    outcomes: list[SeedOutcome]

    def successful(self) -> list[SeedOutcome]:
        return [o for o in self.outcomes if o.ok]

    def summary(self) -> dict:
        good = self.successful()
        uni = np.array([o.uniform_worst for o in good])
        opt = np.array([o.optimized_worst for o in good])
        out = {
            "seeds": len(self.outcomes),
            "failed": len(self.outcomes) - len(good),
        }
        if good:
            out.update(
                uniform_mean=float(uni.mean()),
                optimized_mean=float(opt.mean()),
                uniform_se=float(uni.std(ddof=1) / math.sqrt(len(uni))) if len(uni) > 1 else 0.0,
                optimized_se=float(opt.std(ddof=1) / math.sqrt(len(opt))) if len(opt) > 1 else 0.0,
            )
        return out


def _run_one_seed(cfg: ExperimentConfig, seed: int) -> SeedOutcome:
    net = topology.generate(replace(cfg.topology, seed=seed))
    region = bandit.FeasibleRegion.for_budget(net.n, cfg.lambda_total)
    uniform = bandit.project(np.full(net.n, cfg.lambda_total / net.n), region)

    # independent seed streams: uniform baseline window vs bandit feedback
    if cfg.mode == "oracle":
        evaluator = make_oracle_evaluator(net, cfg.lambda_e)
        uniform_eval = evaluator
    else:
        evaluator = make_sim_evaluator(net, cfg.lambda_e, cfg.sim, (seed, 1))
        uniform_eval = make_sim_evaluator(net, cfg.lambda_e, cfg.sim, (seed, 0))

    uni_report = uniform_eval(uniform)
    outcome = SeedOutcome(
        seed=seed,
        net=net,
        uniform_allocation=uniform,
        uniform_per_node=uni_report.per_node,
        uniform_worst=float(uni_report.worst),
    )

    kernel = cfg.kernel
    if kernel is None:
        noise_var = 1e-4
        if cfg.mode == "simulate" and uni_report.per_node_se is not None:
            se = float(uni_report.per_node_se[int(np.argmax(uni_report.per_node))])
            if se > 0:
                noise_var = se * se
        kernel = replace(gp.default_kernel_params(region.budget), noise=noise_var)

    trace = bandit.run(
        net, cfg.lambda_e, region, cfg.M, evaluator, seed=seed,
        kernel_params=kernel, delta=cfg.bandit.delta,
        restarts=cfg.bandit.restarts, center=cfg.bandit.center,
        age_cap_factor=cfg.bandit.age_cap_factor,
    )
    outcome.trace = trace
    if trace.error is not None and not trace.iterations:
        outcome.error = trace.error
        return outcome
    if trace.error is not None:
        outcome.error = trace.error
    best = trace.best_index()
    outcome.best_allocation = trace.iterations[best].allocation
    outcome.optimized_per_node = trace.iterations[best].per_node
    outcome.optimized_worst = trace.iterations[best].worst_age
    return outcome


def _worker_count(n_jobs: int) -> int:
    env = os.environ.get(THREADS_ENV)
    if env is not None:
        try:
            cap = int(env)
        except ValueError as exc:
            raise ConfigError(THREADS_ENV, "must be an integer") from exc
        return max(1, min(cap, n_jobs))
    return max(1, min(os.cpu_count() or 1, n_jobs))


def run_experiment(cfg: ExperimentConfig) -> ComparisonResult:
    """Uniform-vs-learned comparison over every seed in the config.

    Seeds are independent jobs (parallel workers capped by the
    GOSSIP_FAIR_THREADS env var); a seed whose evaluation fails is
    recorded with its error and does not abort the rest.
    """
    workers = _worker_count(len(cfg.seeds))
    outcomes: list[SeedOutcome] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_one_seed, cfg, s) for s in cfg.seeds]
            for s, fut in zip(cfg.seeds, futures):
                try:
                    outcomes.append(fut.result())
                except Exception as exc:  # noqa: BLE001 - per-seed isolation
                    outcomes.append(_failed_outcome(cfg, s, exc))
    else:
        for s in cfg.seeds:
            try:
                outcomes.append(_run_one_seed(cfg, s))
            except Exception as exc:  # noqa: BLE001 - per-seed isolation
                outcomes.append(_failed_outcome(cfg, s, exc))
    return ComparisonResult(config=cfg, outcomes=outcomes)


def _failed_outcome(cfg: ExperimentConfig, seed: int, exc: Exception) -> SeedOutcome:
    n = cfg.topology.n
    return SeedOutcome(
        seed=seed,
        net=None,
        uniform_allocation=np.full(n, cfg.lambda_total / n),
        uniform_per_node=np.full(n, math.nan),
        uniform_worst=math.nan,
        error=f"{type(exc).__name__}: {exc}",
    )


def degree_rate_summary(result: ComparisonResult) -> dict:
    """Mean learned rate bucketed by out- and in-degree, plus rank stats.

    Buckets pool (seed, node) pairs across the ensemble. Spearman
    correlations come with p-values; with fewer than 2 distinct degree
    values on an axis the correlation is reported as undefined (None).
    """
    rows = []
    for o in result.successful():
        outd = o.net.out_degree()
        ind = o.net.in_degree()
        for i in range(o.net.n):
            rows.append((int(outd[i]), int(ind[i]), float(o.best_allocation[i])))
    if not rows:
        return {"out": [], "in": [], "spearman_out": None, "spearman_in": None,
                "n_obs": 0}
    out_deg = np.array([r[0] for r in rows])
    in_deg = np.array([r[1] for r in rows])
    rate = np.array([r[2] for r in rows])

    def bucket(deg):
        return [
            {"degree": int(d), "mean_rate": float(rate[deg == d].mean()),
             "count": int((deg == d).sum())}
            for d in sorted(set(deg.tolist()))
        ]

    def spearman(deg):
        if len(set(deg.tolist())) < 2:
            return None
        rho, p = stats.spearmanr(deg, rate)
        return {"rho": float(rho), "p_value": float(p)}

    return {
        "out": bucket(out_deg),
        "in": bucket(in_deg),
        "spearman_out": spearman(out_deg),
        "spearman_in": spearman(in_deg),
        "n_obs": len(rows),
    }


def age_histogram(result: ComparisonResult, bins: int) -> dict:
    """Per-node age histograms for the uniform and optimized schemes.

    Shared bin edges across schemes; also reports the pooled age range
    per scheme and the per-seed (uniform, optimized) spread pairs.
    """
    if bins < 2:
        raise ValueError(f"need bins >= 2, got {bins}")
    good = result.successful()
    uni = np.concatenate([o.uniform_per_node for o in good]) if good else np.zeros(0)
    opt = np.concatenate([o.optimized_per_node for o in good]) if good else np.zeros(0)
    pooled = np.concatenate([uni, opt])
    if pooled.size == 0:
        edges = np.linspace(0.0, 1.0, bins + 1)
    else:
        lo, hi = float(pooled.min()), float(pooled.max())
        if hi <= lo:
            lo, hi = lo - 0.5, hi + 0.5
        edges = np.linspace(lo, hi, bins + 1)
    uni_counts, _ = np.histogram(uni, bins=edges)
    opt_counts, _ = np.histogram(opt, bins=edges)
    spreads = [
        {"seed": o.seed,
         "uniform": float(o.uniform_per_node.max() - o.uniform_per_node.min()),
         "optimized": float(o.optimized_per_node.max() - o.optimized_per_node.min())}
        for o in good
    ]
    return {
        "edges": edges.tolist(),
        "uniform_counts": uni_counts.tolist(),
        "optimized_counts": opt_counts.tolist(),
        "uniform_range": float(uni.max() - uni.min()) if uni.size else 0.0,
        "optimized_range": float(opt.max() - opt.min()) if opt.size else 0.0,
        "per_seed_spread": spreads,
    }


# ---------------------------------------------------------------------------
# CSV / file export

def comparison_csv(result: ComparisonResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "scheme", "worst_age", "node", "node_age",
                "out_deg", "in_deg", "rate"])
    for o in result.successful():
        outd = o.net.out_degree()
        ind = o.net.in_degree()
        schemes = [
            ("uniform", o.uniform_worst, o.uniform_per_node, o.uniform_allocation),
            ("optimized", o.optimized_worst, o.optimized_per_node, o.best_allocation),
        ]
        for name, worst, per_node, alloc in schemes:
            for i in range(o.net.n):
                w.writerow([o.seed, name, repr(float(worst)), i,
                            repr(float(per_node[i])), int(outd[i]), int(ind[i]),
                            repr(float(alloc[i]))])
    return buf.getvalue()


def histogram_csv(hist: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scheme", "bin_left", "bin_right", "count"])
    edges = hist["edges"]
    for name, counts in (("uniform", hist["uniform_counts"]),
                         ("optimized", hist["optimized_counts"])):
        for k, c in enumerate(counts):
            w.writerow([name, repr(edges[k]), repr(edges[k + 1]), c])
    return buf.getvalue()


def degree_rate_csv(summary: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["record", "direction", "degree", "value", "extra"])
    for direction in ("out", "in"):
        for row in summary[direction]:
            w.writerow(["mean_rate", direction, row["degree"],
                        repr(row["mean_rate"]), row["count"]])
        corr = summary[f"spearman_{direction}"]
        if corr is None:
            w.writerow(["spearman", direction, "", "undefined", ""])
        else:
            w.writerow(["spearman", direction, "", repr(corr["rho"]),
                        repr(corr["p_value"])])
    return buf.getvalue()


def write_experiment_outputs(result: ComparisonResult, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "comparison.csv"), "w") as f:
        f.write(comparison_csv(result))
    hist = age_histogram(result, result.config.bins)
    with open(os.path.join(out_dir, "histogram.csv"), "w") as f:
        f.write(histogram_csv(hist))
    with open(os.path.join(out_dir, "degree_rate.csv"), "w") as f:
        f.write(degree_rate_csv(degree_rate_summary(result)))
    good = result.successful()
    if good:
        with open(os.path.join(out_dir, "network.json"), "w") as f:
            f.write(good[0].net.to_json() + "\n")
    for o in good:
        if o.trace is not None:
            path = os.path.join(out_dir, f"trace_{o.seed}.jsonl")
            with open(path, "w") as f:
                f.write(o.trace.to_jsonl())
    with open(os.path.join(out_dir, "summary.json"), "w") as f:
        json.dump(result.summary(), f, indent=2, sort_keys=True)
        f.write("\n")


# ---------------------------------------------------------------------------
# CLI

def _load_config(path: str) -> tuple[dict, ExperimentConfig]:
    try:
        with open(path) as f:
            obj = json.load(f)
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON: {exc}") from exc
    return obj, config_from_obj(obj)


def _resolve_network(raw: dict, cfg: ExperimentConfig,
                     seed: int) -> topology.GossipNetwork:
    """Inline/linked network if present, else generate from the topology spec."""
    net_obj = raw.get("network")
    if net_obj is None:
        return topology.generate(replace(cfg.topology, seed=seed))
    if isinstance(net_obj, str):
        try:
            with open(net_obj) as f:
                net_obj = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("network", f"cannot load {exc}") from exc
    if not isinstance(net_obj, dict):
        raise ConfigError("network", "must be an object or a file path")
    try:
        return topology.GossipNetwork.from_json_obj(net_obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("network", str(exc)) from exc


def _resolve_allocation(raw: dict, cfg: ExperimentConfig, n: int) -> list[float]:
    alloc = raw.get("allocation")
    if alloc is None:
        return [cfg.lambda_total / n] * n
    if not isinstance(alloc, list) or len(alloc) != n:
        raise ConfigError("allocation", f"must be a list of {n} rates")
    return [float(x) for x in alloc]


def _emit(text: str, out_dir: str | None, filename: str) -> None:
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, filename), "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _cmd_generate(raw: dict, cfg: ExperimentConfig, seed: int) -> int:
    net = _resolve_network(raw, cfg, seed)
    _emit(net.to_json() + "\n", cfg.out_dir, "network.json")
    return EXIT_OK


def _cmd_simulate(raw: dict, cfg: ExperimentConfig, seed: int) -> int:
    net = _resolve_network(raw, cfg, seed)
    alloc = _resolve_allocation(raw, cfg, net.n)
    scfg = sim.SimConfig(
        lambda_e=cfg.lambda_e, allocation=tuple(alloc),
        horizon=cfg.sim.horizon, seed=seed,
        warmup_fraction=cfg.sim.warmup_fraction,
    )
    if cfg.sim.replications > 1:
        report = sim.simulate_replicated(net, scfg, cfg.sim.replications)
    else:
        report = sim.simulate(net, scfg)
    obj = {
        "per_node": report.per_node.tolist(),
        "worst": report.worst,
        "source_updates": report.source_updates,
        "horizon_used": report.horizon_used,
        "unbounded": list(report.unbounded),
    }
    if report.per_node_se is not None:
        obj["per_node_se"] = report.per_node_se.tolist()
    _emit(json.dumps(obj) + "\n", cfg.out_dir, "age_report.json")
    return EXIT_OK


def _cmd_oracle(raw: dict, cfg: ExperimentConfig, seed: int) -> int:
    net = _resolve_network(raw, cfg, seed)
    alloc = _resolve_allocation(raw, cfg, net.n)
    ages = oracle.exact_all_ages(net, alloc, cfg.lambda_e)
    obj = {
        "per_node": [a if math.isfinite(a) else "inf" for a in ages.tolist()],
        "worst": float(ages.max()) if np.all(np.isfinite(ages)) else "inf",
        "allocation": alloc,
        "lambda_e": cfg.lambda_e,
    }
    _emit(json.dumps(obj) + "\n", cfg.out_dir, "exact_ages.json")
    return EXIT_OK


def _cmd_optimize(raw: dict, cfg: ExperimentConfig, seed: int) -> int:
    net = _resolve_network(raw, cfg, seed)
    region = bandit.FeasibleRegion.for_budget(net.n, cfg.lambda_total)
    if cfg.mode == "oracle":
        evaluator = make_oracle_evaluator(net, cfg.lambda_e)
    else:
        evaluator = make_sim_evaluator(net, cfg.lambda_e, cfg.sim, (seed, 1))
    kernel = cfg.kernel or gp.default_kernel_params(region.budget)
    trace = bandit.run(
        net, cfg.lambda_e, region, cfg.M, evaluator, seed=seed,
        kernel_params=kernel, delta=cfg.bandit.delta,
        restarts=cfg.bandit.restarts, center=cfg.bandit.center,
        age_cap_factor=cfg.bandit.age_cap_factor,
    )
    _emit(trace.to_jsonl(), cfg.out_dir, "trace.jsonl")
    if trace.error is not None:
        _machine_error(trace.error)
        return EXIT_NUMERIC
    return EXIT_OK


def _cmd_experiment(raw: dict, cfg: ExperimentConfig, seed: int | None) -> int:
    if seed is not None:
        cfg = replace(cfg, seeds=(seed,))
    if not cfg.out_dir:
        raise ConfigError("--out-dir", "experiment requires an output directory")
    result = run_experiment(cfg)
    write_experiment_outputs(result, cfg.out_dir)
    if not result.successful():
        _machine_error("every seed failed; see summary.json")
        return EXIT_NUMERIC
    return EXIT_OK


def _machine_error(message: str, fieldpath: str | None = None) -> None:
    obj = {"error": message}
    if fieldpath:
        obj["field"] = fieldpath
    print(json.dumps(obj), file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gossipfair",
        description="Fair update-rate allocation in sparse gossip networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("generate", "emit a topology as network JSON"),
        ("simulate", "run one simulation window, emit an age report"),
        ("oracle", "exact per-node ages for a network and allocation"),
        ("optimize", "single GP-UCB run, emit the iteration trace"),
        ("experiment", "full uniform-vs-learned comparison, CSV bundle"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--seed", type=int, default=None, help="override seed")
        p.add_argument("--out-dir", default=None, help="output directory")
        p.add_argument("--mode", choices=("simulate", "oracle"), default=None,
                       help="evaluator backing the optimizer")
    return parser


def cli(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw, cfg = _load_config(args.config)
        if args.out_dir is not None:
            cfg = replace(cfg, out_dir=args.out_dir)
        if args.mode is not None:
            cfg = replace(cfg, mode=args.mode)
        seed = args.seed if args.seed is not None else raw.get("seed", cfg.seeds[0])
        if args.command == "generate":
            return _cmd_generate(raw, cfg, seed)
        if args.command == "simulate":
            return _cmd_simulate(raw, cfg, seed)
        if args.command == "oracle":
            return _cmd_oracle(raw, cfg, seed)
        if args.command == "optimize":
            return _cmd_optimize(raw, cfg, seed)
        return _cmd_experiment(raw, cfg, args.seed)
    except ConfigError as exc:
        _machine_error(str(exc), exc.fieldpath)
        return EXIT_CONFIG
    except (ValueError, ArithmeticError, RuntimeError,
            np.linalg.LinAlgError) as exc:
        _machine_error(f"{type(exc).__name__}: {exc}")
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
