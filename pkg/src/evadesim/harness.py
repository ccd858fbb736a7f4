"""Full detection-time simulations, Monte Carlo sweeps, and the grid oracle.

A trial runs the adaptive stepper until no boundary cycle may contain an
intruder (T_max) or a time cap is reached.  Sweeps aggregate per-(N, r, model)
statistics with splittable per-trial seeding so results do not depend on
execution order or parallelism.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import __version__
from ._kernels import coverage_mask
from .evasion import (StepDiagnostics, adaptive_step, evasion_possible,
                      initial_labelling, snapshot_from_arrays, _with_labels)
from .motion import (BilliardParams, BrownianParams, DOrsognaParams,
                     init_network, make_model)

DEFAULT_DT = 0.01
DEFAULT_DT_MIN_FACTOR = 2.0 ** -20
DEFAULT_T_CAP = 50.0
HIST_BINS = 50


class ResolutionTooCoarse(ValueError):
    """Oracle grid pitch exceeds r/10."""


@dataclass(frozen=True)
class SimulationConfig:
    n_mobile: int
    r: float
    model: object
    dt_base: float = DEFAULT_DT
    dt_min: float = None
    t_cap: float = DEFAULT_T_CAP
    seed: int = 0
    powerdown: bool = False

    def resolved_dt_min(self):
        return self.dt_min if self.dt_min is not None else self.dt_base * DEFAULT_DT_MIN_FACTOR


@dataclass
class TraceStep:
    """One accepted (post-bisection) step: time, active sensors, and the
    label algorithm's verdict after the step."""
    time: float
    active: np.ndarray
    evasion: bool


@dataclass
class SimulationResult:
    t_max: float
    censored: bool
    static_coverage_at_t0: bool
    n_events: int
    fallback_count: int
    events: list = field(default_factory=list)
    trace: list = None
    error: str = None


def _active_positions(snapshot):
    if len(snapshot.fence_component) == len(snapshot.ids):
        return snapshot.pts
    mask = np.fromiter((i in snapshot.fence_component for i in snapshot.ids),
                       dtype=bool, count=len(snapshot.ids))
    return snapshot.pts[mask]


def run_simulation(config, record_trace=False, on_step=None,
                   collect_events=True):
    """One full trial.  T_max is the first accepted step time at which no
    cycle may contain an intruder; trials hitting t_cap are censored.
    ``collect_events=False`` drops the Reeb event log (sweeps only need
    t_max) but still counts events."""
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    needs_vel = not isinstance(config.model, BrownianParams)
    state = init_network(config.n_mobile, config.r, rng, with_velocities=needs_vel)
    model = make_model(config.model, config.r)

    pts = np.vstack([state.positions, state.fence])
    ids = tuple(range(len(pts)))
    snap = snapshot_from_arrays(0.0, ids, pts, config.r,
                                frozenset(state.fence_ids),
                                powerdown=config.powerdown, motion=state)
    snap = _with_labels(snap, initial_labelling(snap, powerdown=config.powerdown))

    trace = [] if record_trace else None
    events = []
    n_events = 0
    diagnostics = StepDiagnostics()
    alive = evasion_possible(snap.labelling)
    static_cov = not alive
    if record_trace:
        trace.append(TraceStep(0.0, _active_positions(snap), alive))

    t_max = 0.0
    censored = False
    dt_min = config.resolved_dt_min()
    while alive:
        if snap.time >= config.t_cap:
            censored = True
            t_max = config.t_cap
            break
        n_before = len(diagnostics.accepted) if record_trace else 0
        snap, evs = adaptive_step(snap, model, config.dt_base, dt_min, rng,
                                  powerdown=config.powerdown,
                                  diagnostics=diagnostics, record=record_trace)
        n_events += len(evs)
        if collect_events:
            events.extend(evs)
        alive = evasion_possible(snap.labelling)
        if record_trace:
            for sub in diagnostics.accepted[n_before:]:
                trace.append(TraceStep(sub.time, _active_positions(sub),
                                       evasion_possible(sub.labelling)))
        if on_step is not None:
            on_step(snap)
        if not alive:
            t_max = snap.time
    return SimulationResult(t_max=t_max, censored=censored,
                            static_coverage_at_t0=static_cov,
                            n_events=n_events,
                            fallback_count=diagnostics.fallback_count,
                            events=events, trace=trace)


def brute_force_oracle(trajectories, r, h, box=0.5):
    """Independent evasion check on a dense grid over S.

    ``trajectories`` is a sequence of (K_t, 2) arrays of active sensor
    positions at the accepted step times.  A cell is uncovered when its
    center is farther than r from every active sensor; the reachable
    uncovered set is propagated forward through 4-adjacency with a same-step
    flood fill.  Returns one bool per step: evasion still possible.
    """
    if h > r / 10.0:
        raise ResolutionTooCoarse(f"pitch {h} exceeds r/10 = {r / 10.0}")
    n = int(math.ceil(2.0 * box / h))
    axis = -box + (np.arange(n) + 0.5) * (2.0 * box / n)
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    centers = np.column_stack([gx.ravel(), gy.ravel()])
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)

    flags = []
    reachable = None
    for sensors in trajectories:
        sensors = np.asarray(sensors, dtype=float)
        covered = coverage_mask(centers, sensors, float(r)).reshape(n, n)
        uncovered = ~covered
        if reachable is None:
            reachable = uncovered
        else:
            seed = reachable | ndimage.binary_dilation(reachable, structure)
            seed &= uncovered
            if seed.any():
                lab, _ = ndimage.label(uncovered, structure=structure)
                keep = np.unique(lab[seed])
                reachable = np.isin(lab, keep[keep > 0])
            else:
                reachable = np.zeros_like(uncovered)
        flags.append(bool(reachable.any()))
    return flags


@dataclass
class StatsRow:
    model: str
    n_mobile: int
    r: float
    trials: int
    censored: int
    mean_tmax: float
    var_tmax: float
    coverage_prob: float
    hist_edges: list
    hist_counts: list
    n_failed: int = 0
    var_defined: bool = True


def model_tag(params):
    if isinstance(params, BrownianParams):
        return "brownian"
    if isinstance(params, BilliardParams):
        return "billiard"
    if isinstance(params, DOrsognaParams):
        return "dorsogna"
    return "scripted"


def trial_seed(base_seed, cell_index, trial_index):
    """Splittable per-trial seed, independent of execution order."""
    ss = np.random.SeedSequence(base_seed, spawn_key=(cell_index, trial_index))
    return int(ss.generate_state(1, np.uint64)[0])


def _run_cell_trial(config):
    try:
        res = run_simulation(config, collect_events=False)
        return (res.t_max, res.censored, res.static_coverage_at_t0,
                res.n_events, res.fallback_count, None)
    except Exception as exc:  # pragma: no cover - per-trial failures recorded
        return (math.nan, False, False, 0, 0, repr(exc))


def aggregate_cell(params, n_mobile, r, outcomes):
    """StatsRow from per-trial (t_max, censored, coverage, ...) tuples."""
    finished = [t for t, c, *_ in outcomes if not c and not math.isnan(t)]
    censored = sum(1 for _, c, *rest in outcomes if c)
    failed = sum(1 for o in outcomes if o[5] is not None)
    coverage = np.mean([cov for t, c, cov, *_ in outcomes
                        if not math.isnan(t)]) if outcomes else 0.0
    if finished:
        mean = float(np.mean(finished))
        var = float(np.var(finished, ddof=1)) if len(finished) > 1 else 0.0
        var_defined = len(finished) > 1
        hi = max(max(finished), 1e-12)
        counts, edges = np.histogram(finished, bins=HIST_BINS, range=(0.0, hi))
    else:
        mean, var, var_defined = math.nan, 0.0, False
        counts, edges = np.zeros(HIST_BINS, dtype=int), np.linspace(0, 1, HIST_BINS + 1)
    return StatsRow(model=model_tag(params), n_mobile=n_mobile, r=r,
                    trials=len(outcomes), censored=censored,
                    mean_tmax=mean, var_tmax=var,
                    coverage_prob=float(coverage),
                    hist_edges=[float(e) for e in edges],
                    hist_counts=[int(c) for c in counts],
                    n_failed=failed, var_defined=var_defined)


def monte_carlo_sweep(grid, trials, base_seed, parallelism=1, dt_base=DEFAULT_DT,
                      t_cap=DEFAULT_T_CAP, powerdown=False, collect_tmax=False):
    """Run ``trials`` simulations for each (N, r, model) cell.

    Per-trial seeds come from a splittable seed tree so identical base seeds
    give byte-identical rows regardless of the degree of parallelism.
    """
    rows = []
    per_cell_tmax = []
    for cell_index, (n_mobile, r, params) in enumerate(grid):
        configs = [SimulationConfig(n_mobile=n_mobile, r=r, model=params,
                                    dt_base=dt_base, t_cap=t_cap,
                                    seed=trial_seed(base_seed, cell_index, i),
                                    powerdown=powerdown)
                   for i in range(trials)]
        if parallelism > 1:
            with ProcessPoolExecutor(max_workers=parallelism) as pool:
                outcomes = list(pool.map(_run_cell_trial, configs))
        else:
            outcomes = [_run_cell_trial(c) for c in configs]
        rows.append(aggregate_cell(params, n_mobile, r, outcomes))
        if collect_tmax:
            per_cell_tmax.append([o[0] for o in outcomes if not o[1]])
    return (rows, per_cell_tmax) if collect_tmax else rows


CSV_HEADER = ["model", "N", "r", "trials", "censored", "mean_tmax",
              "var_tmax", "coverage_prob", "hist_edges", "hist_counts"]


def write_outputs(rows, results, out_dir, manifest=None):
    """stats.csv plus per-trial event JSONL logs and a run manifest."""
    os.makedirs(out_dir, exist_ok=True)
    stats_path = os.path.join(out_dir, "stats.csv")
    try:
        with open(stats_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for row in rows:
                writer.writerow([
                    row.model, row.n_mobile, row.r, row.trials, row.censored,
                    row.mean_tmax, row.var_tmax, row.coverage_prob,
                    json.dumps(row.hist_edges), json.dumps(row.hist_counts)])
    except OSError as exc:
        raise OSError(f"cannot write {stats_path}: {exc}") from exc

    for cell, trial_results in (results or {}).items():
        cell_dir = os.path.join(out_dir, "events", str(cell))
        os.makedirs(cell_dir, exist_ok=True)
        for i, res in enumerate(trial_results):
            path = os.path.join(cell_dir, f"{i}.jsonl")
            with open(path, "w") as fh:
                for ev in res.events:
                    fh.write(ev.to_json() + "\n")

    manifest = dict(manifest or {})
    manifest.setdefault("code_version", __version__)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return stats_path
