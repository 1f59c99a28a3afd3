"""Experiment orchestration: training runs, sweeps, baselines, reports.

Every experiment writes deterministic CSVs (float columns use the
shortest round-trip repr, no timestamps) plus a rendered figure.
Wall-clock measurements go to a separate timing.csv so the data files
are byte-identical across reruns with the same spec and seed.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, replace

import numpy as np

from . import ddpg, envsim, netmodel, neural, plots
from .config import (ExperimentSpec, Hyperparameters, NetworkConfig,
                     dbm_to_mw, resolved_config_text)
from .ddpg import Agent, TrainHistory
from .envsim import CellFreeEnv
from .netmodel import EffectiveStats

FINAL_WINDOW = 100   # episodes averaged into a run's headline EE


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if np.isnan(value):
            return ""
        return repr(value)
    if isinstance(value, (np.floating,)):
        return _fmt(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def write_csv(path: str, header: list[str], rows: list[tuple]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(_fmt(v) for v in row) + "\n")


@dataclass
class RunEnvironment:
    """Everything a single seeded run shares between methods."""

    cfg: NetworkConfig
    topo: netmodel.Topology
    pilots: netmodel.PilotBook
    stats: EffectiveStats
    order: envsim.SicOrder
    env: CellFreeEnv
    wf_matrix: np.ndarray
    wf_ee: float
    random_matrix: np.ndarray
    random_ee: float


def build_run_environment(cfg: NetworkConfig, hp: Hyperparameters,
                          rng: np.random.Generator) -> RunEnvironment:
    """Draw topology, pilots and the fixed baseline matrices, in a
    documented order so the whole run is reproducible from one seed."""
    topo = netmodel.generate_topology(cfg, rng)
    pilots = netmodel.generate_pilots(cfg, rng)
    stats = netmodel.effective_channel_stats(topo, pilots, cfg)
    order = envsim.sic_order(stats)
    env = CellFreeEnv(cfg, stats, order, penalty_scale=hp.penalty_scale)
    wf = envsim.baseline_waterfilling(stats)
    rnd = envsim.baseline_random(cfg, rng)
    return RunEnvironment(
        cfg=cfg, topo=topo, pilots=pilots, stats=stats, order=order, env=env,
        wf_matrix=wf,
        wf_ee=envsim.energy_efficiency(wf, stats, order, cfg),
        random_matrix=rnd,
        random_ee=envsim.energy_efficiency(rnd, stats, order, cfg))


@dataclass
class RunResult:
    seed: int
    run_env: RunEnvironment
    agent: Agent
    history: TrainHistory
    wall_seconds: float


def run_training(cfg: NetworkConfig, hp: Hyperparameters, seed: int) -> RunResult:
    """One fully seeded training run (topology, baselines, agent, loop)."""
    rng = np.random.default_rng(seed)
    run_env = build_run_environment(cfg, hp, rng)
    agent = ddpg.new_agent(cfg.M, cfg.K, hp, rng)
    start = time.perf_counter()
    history = ddpg.train(run_env.env, agent, hp, rng)
    wall = time.perf_counter() - start
    return RunResult(seed=seed, run_env=run_env, agent=agent,
                     history=history, wall_seconds=wall)


def final_mean_ee(history: TrainHistory, window: int = FINAL_WINDOW) -> float:
    w = min(window, history.mean_ee.size)
    return float(history.mean_ee[-w:].mean())


def _mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std())


HISTORY_HEADER = ["experiment", "sweep_value", "replicate", "seed", "method",
                  "episode", "mean_ee", "mean_reward", "critic_loss",
                  "violations"]
SUMMARY_HEADER = ["experiment", "sweep_value", "replicate", "seed", "method",
                  "final_mean_ee"]
STATS_HEADER = ["experiment", "sweep_value", "method", "mean_final_ee",
                "std_final_ee", "replicates"]
TIMING_HEADER = ["experiment", "sweep_value", "replicate", "seed",
                 "wall_seconds"]


def _emit_common(spec: ExperimentSpec, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "resolved-config.txt"), "w",
              encoding="utf-8") as handle:
        handle.write(resolved_config_text(spec))


def run_convergence(spec: ExperimentSpec, out_dir: str | None = None) -> dict:
    """Train on the configured network and track both baselines.

    One topology per replicate seed, shared by all three methods; the
    baselines are action-independent so their curves are flat.
    """
    out_dir = out_dir or spec.out_dir
    _emit_common(spec, out_dir)
    exp = spec.experiment
    history_rows, summary_rows, timing_rows = [], [], []
    finals: dict[str, list[float]] = {"ddpg": [], "waterfilling": [], "random": []}
    ddpg_curves = []
    episodes_axis = None

    ckpt_dir = os.path.join(out_dir, "checkpoints")
    os.makedirs(ckpt_dir, exist_ok=True)

    for rep in range(spec.replicates):
        seed = spec.network.seed + rep
        result = run_training(spec.network, spec.hyper, seed)
        h = result.history
        episodes_axis = h.episode
        ddpg_curves.append(h.mean_ee)
        for i, ep in enumerate(h.episode):
            history_rows.append((exp, "", rep, seed, "ddpg", int(ep),
                                 float(h.mean_ee[i]), float(h.mean_reward[i]),
                                 float(h.critic_loss[i]), int(h.violations[i])))
            history_rows.append((exp, "", rep, seed, "waterfilling", int(ep),
                                 result.run_env.wf_ee, None, None, None))
            history_rows.append((exp, "", rep, seed, "random", int(ep),
                                 result.run_env.random_ee, None, None, None))
        final = final_mean_ee(h)
        summary_rows.append((exp, "", rep, seed, "ddpg", final))
        summary_rows.append((exp, "", rep, seed, "waterfilling",
                             result.run_env.wf_ee))
        summary_rows.append((exp, "", rep, seed, "random",
                             result.run_env.random_ee))
        finals["ddpg"].append(final)
        finals["waterfilling"].append(result.run_env.wf_ee)
        finals["random"].append(result.run_env.random_ee)
        timing_rows.append((exp, "", rep, seed, result.wall_seconds))
        neural.save_params(os.path.join(ckpt_dir, f"actor_rep{rep}.txt"),
                           result.agent.actor)
        neural.save_params(os.path.join(ckpt_dir, f"critic_rep{rep}.txt"),
                           result.agent.critic)

    stats_rows = []
    for method, values in finals.items():
        mean, std = _mean_std(values)
        stats_rows.append((exp, "", method, mean, std, len(values)))

    write_csv(os.path.join(out_dir, "history.csv"), HISTORY_HEADER, history_rows)
    write_csv(os.path.join(out_dir, "summary.csv"), SUMMARY_HEADER, summary_rows)
    write_csv(os.path.join(out_dir, "summary_stats.csv"), STATS_HEADER, stats_rows)
    write_csv(os.path.join(out_dir, "timing.csv"), TIMING_HEADER, timing_rows)

    curves = {
        "ddpg": np.mean(ddpg_curves, axis=0),
        "waterfilling": np.full(episodes_axis.size,
                                np.mean(finals["waterfilling"])),
        "random": np.full(episodes_axis.size, np.mean(finals["random"])),
    }
    plots.convergence_figure(episodes_axis, curves,
                             os.path.join(out_dir, "fig_convergence.png"))
    return {"finals": finals, "out_dir": out_dir}


def _sweep_points(spec: ExperimentSpec):
    """(label, cfg, hp) per sweep value for the configured axis."""
    points = []
    if spec.experiment == "sweep-power":
        for dbm in spec.sweep_power_dbm:
            mw = dbm_to_mw(dbm)
            cfg = replace(spec.network, p_u=mw,
                          P_u_max=max(spec.network.P_u_max, mw))
            points.append((_fmt(float(dbm)), cfg, spec.hyper))
    elif spec.experiment == "sweep-discount":
        for zeta in spec.sweep_discount:
            points.append((_fmt(float(zeta)), spec.network,
                           replace(spec.hyper, zeta=zeta)))
    elif spec.experiment == "sweep-hidden":
        for dims in spec.sweep_hidden:
            label = "x".join(str(d) for d in dims)
            points.append((label, spec.network,
                           replace(spec.hyper, hidden_dims=dims)))
    else:
        raise ValueError(f"not a sweep experiment: {spec.experiment}")
    return points


def run_sweep(spec: ExperimentSpec, out_dir: str | None = None) -> dict:
    """Fresh seeded runs for every (sweep value, replicate) pair.

    The replicate seed is shared across sweep values, so each replicate
    sees the same topology at every point of the axis.
    """
    out_dir = out_dir or spec.out_dir
    _emit_common(spec, out_dir)
    exp = spec.experiment
    history_rows, summary_rows, timing_rows, stats_rows = [], [], [], []
    labels, means, stds = [], [], []

    for label, cfg, hp in _sweep_points(spec):
        finals = []
        for rep in range(spec.replicates):
            seed = spec.network.seed + rep
            result = run_training(cfg, hp, seed)
            h = result.history
            for i, ep in enumerate(h.episode):
                history_rows.append((exp, label, rep, seed, "ddpg", int(ep),
                                     float(h.mean_ee[i]),
                                     float(h.mean_reward[i]),
                                     float(h.critic_loss[i]),
                                     int(h.violations[i])))
            final = final_mean_ee(h)
            finals.append(final)
            summary_rows.append((exp, label, rep, seed, "ddpg", final))
            timing_rows.append((exp, label, rep, seed, result.wall_seconds))
        mean, std = _mean_std(finals)
        stats_rows.append((exp, label, "ddpg", mean, std, len(finals)))
        labels.append(label)
        means.append(mean)
        stds.append(std)

    write_csv(os.path.join(out_dir, "history.csv"), HISTORY_HEADER, history_rows)
    write_csv(os.path.join(out_dir, "summary.csv"), SUMMARY_HEADER, summary_rows)
    write_csv(os.path.join(out_dir, "summary_stats.csv"), STATS_HEADER, stats_rows)
    write_csv(os.path.join(out_dir, "timing.csv"), TIMING_HEADER, timing_rows)

    means_arr, stds_arr = np.asarray(means), np.asarray(stds)
    if exp == "sweep-power":
        plots.sweep_figure(np.asarray([float(v) for v in labels]), means_arr,
                           stds_arr, "uplink transmission power (dBm)",
                           os.path.join(out_dir, "fig_sweep_power.png"))
    elif exp == "sweep-discount":
        plots.sweep_figure(np.asarray([float(v) for v in labels]), means_arr,
                           stds_arr, "discount factor",
                           os.path.join(out_dir, "fig_sweep_discount.png"),
                           log_x=False)
    else:
        plots.category_figure(labels, means_arr, stds_arr,
                              "hidden layer sizes",
                              os.path.join(out_dir, "fig_sweep_hidden.png"))
    return {"labels": labels, "means": means, "stds": stds, "out_dir": out_dir}


def run_baselines(spec: ExperimentSpec, out_dir: str | None = None) -> dict:
    """EE, per-UE SINR/rate and constraint flags for the static schemes."""
    out_dir = out_dir or spec.out_dir
    _emit_common(spec, out_dir)
    cfg = spec.network
    rng = np.random.default_rng(cfg.seed)
    run_env = build_run_environment(cfg, spec.hyper, rng)
    stats, order = run_env.stats, run_env.order

    header = (["method", "replicate", "ee", "sic_ok", "norm_ok", "power_ok"]
              + [f"sinr_{k+1}" for k in range(cfg.K)]
              + [f"rate_{k+1}" for k in range(cfg.K)])

    def evaluate(method: str, replicate, w: np.ndarray) -> tuple:
        gamma = envsim.sinr(w, stats, order, mode="sic")
        rates = envsim.rate(gamma)
        ee = float(rates.sum()) / envsim.total_power(w, cfg)
        flags = envsim.check_constraints(w, stats, order, cfg)
        return (method, replicate, ee, *[str(f).lower() for f in flags],
                *[float(g) for g in gamma], *[float(r) for r in rates])

    rows = [evaluate("waterfilling", 0, run_env.wf_matrix),
            evaluate("uniform", 0, envsim.uniform_matrix(cfg))]
    random_ees = []
    for rep in range(spec.replicates):
        w = envsim.baseline_random(cfg, rng)
        row = evaluate("random", rep, w)
        random_ees.append(row[2])
        rows.append(row)
    mean_ee, _ = _mean_std(random_ees)
    rows.append(("random_mean", "", mean_ee, "", "", "",
                 *[None] * (2 * cfg.K)))

    write_csv(os.path.join(out_dir, "baselines.csv"), header, rows)

    methods = ["waterfilling", "uniform", "random"]
    ees = np.asarray([rows[0][2], rows[1][2], mean_ee])
    err = np.asarray([0.0, 0.0, float(np.std(random_ees))])
    plots.category_figure(methods, ees, err, "scheme",
                          os.path.join(out_dir, "fig_baselines.png"))
    return {"rows": rows, "out_dir": out_dir,
            "waterfilling_ee": rows[0][2], "uniform_ee": rows[1][2],
            "random_mean_ee": mean_ee}


PAPER_FLOPS_SHAPE = dict(M=10, K=6, hidden=(256, 128))


def run_flops_report(spec: ExperimentSpec, out_dir: str | None = None) -> dict:
    """Inference FLOPS of the configured and paper-scale networks."""
    out_dir = out_dir or spec.out_dir
    _emit_common(spec, out_dir)
    cfg = spec.network
    rows = []
    for tag, m, k, hidden in (
            ("config", cfg.M, cfg.K, spec.hyper.hidden_dims),
            ("paper", PAPER_FLOPS_SHAPE["M"], PAPER_FLOPS_SHAPE["K"],
             PAPER_FLOPS_SHAPE["hidden"])):
        actor_spec, critic_spec = ddpg.build_specs(m, k, hidden)
        policy, value = neural.flops_inference(actor_spec, critic_spec)
        rows.append((f"policy_{tag}", policy))
        rows.append((f"value_{tag}", value))
    write_csv(os.path.join(out_dir, "flops.csv"), ["component", "flops"], rows)
    for component, flops in rows:
        print(f"{component}: {flops}")
    return {"rows": rows, "out_dir": out_dir}


def run_experiment(spec: ExperimentSpec) -> dict:
    if spec.experiment == "convergence":
        return run_convergence(spec)
    if spec.experiment in ("sweep-power", "sweep-discount", "sweep-hidden"):
        return run_sweep(spec)
    if spec.experiment == "baselines":
        return run_baselines(spec)
    if spec.experiment == "flops":
        return run_flops_report(spec)
    raise ValueError(f"unknown experiment {spec.experiment!r}")
