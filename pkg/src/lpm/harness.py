"""Experiment runners writing seeded, byte-reproducible CSV output.

Each runner takes a :class:`RunConfig` and writes into ``config.out_dir``:

* ``metrics.csv``: per-step records. The first line is a ``# schema:``
  comment naming the column-set version.
* ``summary.csv``: per-cell aggregates.
* ``timing.csv``: wall-clock data, kept apart so the other files are
  identical across repeated runs.

Independent cells (explorer, noise mode, seed) run in a process pool when
``workers > 1``; results are merged in a fixed order by the parent.
"""
from __future__ import annotations

import csv
import logging
import math
import multiprocessing
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agent import QTable, RunningStd, epsilon_schedule, q_update, select_action
from .config import RANDOM_BASELINE, RunConfig
from .core import combined_reward
from .envs import (GridMazeEnv, NoiseMode, PairedTransitionEnv, load_idx, synthetic_digit_bank,
                   write_pgm)
from .envs.maze import IDLE
from .envs.paired import VISIT_DETERMINISTIC, VISIT_STOCHASTIC
from .nn import make_rng
from .oracle import TheoremSummary, check_theorems
from .registry import make_explorer

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MNIST_COLUMNS = ("seed", "t", "explorer", "r_int_det", "r_int_stoch", "r_ext")
MAZE_COLUMNS = ("seed", "t", "explorer", "noise_mode", "r_int", "r_ext", "epsilon",
                "coverage_cells", "coverage_posedirs")
TIMING_COLUMNS = ("explorer", "noise_mode", "seed", "steps_completed", "wall_ms", "partial")
BUDGET_CHECK_EVERY = 64

# stream ids mixed with the run seed so each component draws independently
_EXPLORER_STREAM = 1
_AGENT_STREAM = 2


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, columns, rows, schema: str) -> None:
    with open(path, "w", newline="") as f:
        f.write(f"# schema: {schema}/{SCHEMA_VERSION}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_csv(path) -> list[dict]:
    """Rows of a CSV written by this module, skipping the schema line."""
    with open(path, newline="") as f:
        lines = [line for line in f if not line.startswith("#")]
    return list(csv.DictReader(lines))


def windowed_abs_mean(trace, window: int) -> np.ndarray:
    """Element i is the mean of |trace[i:i + window]|."""
    trace = np.abs(np.asarray(trace, dtype=np.float64))
    if len(trace) < window:
        return np.empty(0)
    return np.convolve(trace, np.ones(window) / window, mode="valid")


def crossing_step(trace, window: int = 20, threshold: float = 0.05, start: int = 0) -> int | None:
    """First step after which every window mean of |r| stays below ``threshold``.

    Windows that end before ``start`` (a warm-up period) are ignored; if no
    later window exceeds the threshold the result is ``start``. Returns None
    when the final window is still at or above the threshold.
    """
    means = windowed_abs_mean(trace, window)
    if len(means) == 0:
        return None
    ends = np.arange(len(means)) + window
    bad = np.flatnonzero((ends > start) & (means >= threshold))
    if len(bad) == 0:
        return int(start)
    if bad[-1] == len(means) - 1:
        return None
    return int(ends[bad[-1]])


def load_digit_bank(digits: dict):
    images, labels = digits.get("images_path"), digits.get("labels_path")
    if images or labels:
        if not (images and labels):
            raise ValueError("digits.images_path and digits.labels_path must be given together")
        return load_idx(images, labels)
    if not digits.get("synthetic", True):
        raise FileNotFoundError("no digit dataset configured and synthetic digits are disabled")
    return synthetic_digit_bank(int(digits.get("synthetic_seed", 0)))


class _Budget:
    def __init__(self, deadline: float | None):
        self.deadline = deadline

    def expired(self, t: int) -> bool:
        return (self.deadline is not None and t % BUDGET_CHECK_EVERY == 0
                and time.time() >= self.deadline)


def _map(func, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [func(job) for job in jobs]
    with multiprocessing.Pool(min(workers, len(jobs))) as pool:
        return pool.map(func, jobs, chunksize=1)


def _deadline(config: RunConfig) -> float | None:
    return None if config.max_wall_seconds is None else time.time() + config.max_wall_seconds


def _frames_dir(config: RunConfig) -> Path:
    path = Path(config.out_dir) / "frames"
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------- mnist


@dataclass
class MnistResult:
    out_dir: Path
    traces: dict = field(default_factory=dict)  # (explorer, branch) -> seed-mean trace
    crossings: dict = field(default_factory=dict)  # (explorer, branch) -> step or None
    warmup_steps: dict = field(default_factory=dict)
    partial: bool = False


def _mnist_cell(job):
    config, bank, name, seed, deadline = job
    start = time.time()
    env = PairedTransitionEnv(bank, seed)
    explorer = make_explorer(name, bank.dim, 2, config.explorer, seed=[seed, _EXPLORER_STREAM])
    budget = _Budget(deadline)
    det = np.zeros(config.total_steps)
    stoch = np.zeros(config.total_steps)
    rows = []
    frames = _frames_dir(config) if config.debug_frames else None
    steps = 0
    for t in range(config.total_steps):
        if budget.expired(t):
            break
        o, o_next, _ = env.transition(VISIT_DETERMINISTIC)
        det[t] = explorer.observe(o, VISIT_DETERMINISTIC, o_next)
        o, o_next, label = env.transition(VISIT_STOCHASTIC)
        stoch[t] = explorer.observe(o, VISIT_STOCHASTIC, o_next)
        explorer.step_done()
        if frames is not None and t < config.debug_frames:
            write_pgm(frames / f"{name}-s{seed}-t{t:06d}-label{label}.pgm", o_next, bank.image_shape)
        if t % config.log_every == 0 or t == config.total_steps - 1:
            rows.append((seed, t, name, det[t], stoch[t], 0.0))
        steps = t + 1
    return {"name": name, "seed": seed, "det": det[:steps], "stoch": stoch[:steps], "rows": rows,
            "warmup": explorer.warmup, "steps": steps, "wall_ms": (time.time() - start) * 1e3}


def run_mnist_convergence(config: RunConfig) -> MnistResult:
    """Score one deterministic and one stochastic transition per step, per explorer and seed."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bank = load_digit_bank(config.digits)
    deadline = _deadline(config)
    jobs = [(config, bank, name, seed, deadline) for name in config.explorers for seed in config.seeds]
    cells = _map(_mnist_cell, jobs, config.workers)

    result = MnistResult(out)
    rows, timing, summary = [], [], []
    for cell in cells:
        rows.extend(cell["rows"])
        partial = cell["steps"] < config.total_steps
        result.partial |= partial
        timing.append((cell["name"], "", cell["seed"], cell["steps"], round(cell["wall_ms"], 3), partial))
    for name in config.explorers:
        group = [c for c in cells if c["name"] == name]
        steps = min(c["steps"] for c in group)
        warmup = math.ceil(group[0]["warmup"] / 2)  # two records per step
        result.warmup_steps[name] = warmup
        for branch in ("det", "stoch"):
            trace = np.mean([c[branch][:steps] for c in group], axis=0)
            cross = crossing_step(trace, config.window, config.threshold, warmup)
            result.traces[name, branch] = trace
            result.crossings[name, branch] = cross
            tail = windowed_abs_mean(trace, config.window)
            summary.append((name, branch, len(group), steps, warmup, "" if cross is None else cross,
                            int(cross is not None), float(tail[-1]) if len(tail) else "",
                            int(steps < config.total_steps)))
    rows.sort(key=lambda r: (config.explorers.index(r[2]), r[0], r[1]))
    write_csv(out / "metrics.csv", MNIST_COLUMNS, rows, "mnist_convergence")
    write_csv(out / "summary.csv",
              ("explorer", "branch", "seeds", "steps", "warmup_steps", "crossing_step", "converged",
               "final_window_abs_mean", "partial"), summary, "mnist_convergence_summary")
    write_csv(out / "timing.csv", TIMING_COLUMNS, timing, "timing")
    return result


# ---------------------------------------------------------------- maze


@dataclass
class MazeResult:
    out_dir: Path
    final_coverage: dict = field(default_factory=dict)  # (explorer, mode) -> per-seed pose counts
    final_cells: dict = field(default_factory=dict)
    idle_fraction: dict = field(default_factory=dict)
    state_count: int = 0
    partial: bool = False

    def mean_coverage(self, explorer: str, mode: str) -> float:
        return float(np.mean(self.final_coverage[explorer, mode]))

    def ratio(self, explorer: str, mode: str) -> float:
        return self.mean_coverage(explorer, mode) / self.mean_coverage(explorer, NoiseMode.NONE.value)


def _maze_cell(job):
    config, name, mode, seed, deadline = job
    start = time.time()
    agent_cfg = config.agent_config
    beta = agent_cfg.beta
    explorer_name = name
    if name == RANDOM_BASELINE:
        explorer_name, beta = "none", 0.0
    env = GridMazeEnv(mode, seed=seed, **config.maze)
    explorer = make_explorer(explorer_name, env.obs_dim, env.action_count, config.explorer,
                             seed=[seed, _EXPLORER_STREAM])
    q = QTable(env.state_count, env.action_count, agent_cfg.alpha, agent_cfg.gamma)
    rng = make_rng([seed, _AGENT_STREAM])
    scaler = RunningStd() if agent_cfg.normalize_intrinsic else None
    budget = _Budget(deadline)
    frames = _frames_dir(config) if config.debug_frames else None

    res = env.reset()
    obs, s = res.observation, res.latent_state_id
    seen_poses = np.zeros(env.state_count, dtype=bool)
    seen_cells = np.zeros(env.cell_count, dtype=bool)
    seen_poses[s] = seen_cells[s // 4] = True
    rows, idle, steps = [], 0, 0
    for t in range(config.total_steps):
        if budget.expired(t):
            break
        q.epsilon = epsilon_schedule(t, config.total_steps, agent_cfg)
        a = select_action(q, s, rng)
        res = env.step(a)
        r_int = explorer.observe(obs, a, res.observation)
        r_used = scaler.normalize(r_int) if scaler is not None else r_int
        q_update(q, s, a, combined_reward(res.extrinsic_reward, r_used, beta), res.latent_state_id,
                 res.done)
        explorer.step_done()
        if frames is not None and t < config.debug_frames:
            write_pgm(frames / f"{name}-{mode}-s{seed}-t{t:06d}.pgm", res.observation, env.obs_shape)
        idle += a == IDLE
        obs, s = res.observation, res.latent_state_id
        seen_poses[s] = seen_cells[s // 4] = True
        if res.done:
            res = env.reset()
            obs, s = res.observation, res.latent_state_id
            seen_poses[s] = seen_cells[s // 4] = True
        if t % config.log_every == 0 or t == config.total_steps - 1:
            rows.append((seed, t, name, mode, r_int, res.extrinsic_reward, q.epsilon,
                         int(seen_cells.sum()), int(seen_poses.sum())))
        steps = t + 1
    return {"name": name, "mode": mode, "seed": seed, "rows": rows, "steps": steps,
            "poses": int(seen_poses.sum()), "cells": int(seen_cells.sum()),
            "idle": idle / max(steps, 1), "state_count": env.state_count,
            "wall_ms": (time.time() - start) * 1e3}


def maze_cells(config: RunConfig) -> list[tuple[str, str]]:
    names = list(config.explorers)
    if config.include_random and RANDOM_BASELINE not in names:
        names.append(RANDOM_BASELINE)
    return [(name, mode) for name in names for mode in config.noise_modes]


def run_maze_coverage(config: RunConfig) -> MazeResult:
    """Q-learning agent driven by each explorer's reward in each noise mode; logs coverage."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    deadline = _deadline(config)
    cells = maze_cells(config)
    jobs = [(config, name, mode, seed, deadline) for name, mode in cells for seed in config.seeds]
    done = _map(_maze_cell, jobs, config.workers)

    result = MazeResult(out, state_count=done[0]["state_count"])
    rows, timing, summary = [], [], []
    for cell in done:
        rows.extend(cell["rows"])
        partial = cell["steps"] < config.total_steps
        result.partial |= partial
        timing.append((cell["name"], cell["mode"], cell["seed"], cell["steps"],
                       round(cell["wall_ms"], 3), partial))
    for name, mode in cells:
        group = [c for c in done if c["name"] == name and c["mode"] == mode]
        result.final_coverage[name, mode] = [c["poses"] for c in group]
        result.final_cells[name, mode] = [c["cells"] for c in group]
        result.idle_fraction[name, mode] = float(np.mean([c["idle"] for c in group]))
    for name, mode in cells:
        poses = np.asarray(result.final_coverage[name, mode], dtype=float)
        cells_seen = np.asarray(result.final_cells[name, mode], dtype=float)
        ddof = 1 if len(poses) > 1 else 0
        base = result.final_coverage.get((name, NoiseMode.NONE.value))
        ratio = float(poses.mean() / np.mean(base)) if base else ""
        partial = any(c["steps"] < config.total_steps for c in done
                      if c["name"] == name and c["mode"] == mode)
        summary.append((name, mode, len(poses), poses.mean(), poses.std(ddof=ddof), cells_seen.mean(),
                        cells_seen.std(ddof=ddof), ratio, result.idle_fraction[name, mode],
                        result.state_count, int(partial)))
    write_csv(out / "metrics.csv", MAZE_COLUMNS, rows, "maze_coverage")
    write_csv(out / "summary.csv",
              ("explorer", "noise_mode", "seeds", "coverage_posedirs_mean", "coverage_posedirs_std",
               "coverage_cells_mean", "coverage_cells_std", "ratio_to_none", "idle_fraction",
               "state_count", "partial"), summary, "maze_coverage_summary")
    write_csv(out / "timing.csv", TIMING_COLUMNS, timing, "timing")
    return result


# ---------------------------------------------------------------- theorems


def run_theorem_verify(config: RunConfig) -> tuple[TheoremSummary, int]:
    """Exact checks on random grids; returns the summary and a process exit code."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = check_theorems(config.instance_count, make_rng(config.seeds[0]))
    instances = summary.instances
    columns = tuple(instances[0])
    write_csv(out / "metrics.csv", columns, [tuple(r[c] for c in columns) for r in instances],
              "theorem_verify")
    write_csv(out / "summary.csv", ("check", "passed", "checked", "failures", "worst_margin"),
              [(t.name, int(t.passed), t.checked, t.failures, t.worst_margin)
               for t in summary.tallies.values()], "theorem_verify_summary")
    counterexamples = out / "counterexamples.json"
    if summary.passed:
        counterexamples.unlink(missing_ok=True)
        return summary, 0
    summary.dump_counterexamples(counterexamples)
    return summary, 1
