"""Seeded Monte Carlo experiments over parameter sweeps, with CSV output.

A sweep varies one axis (layers L, users K, transmit power PT, atoms per
layer N), runs a number of independent channel trials per value, solves the
requested schemes on identical channels, and writes one CSV of raw rows
plus one of per-value summary statistics. Rows are a pure function of
(config, base seed), so reruns and parallel runs reproduce the same bytes
(wall-clock excepted).
"""

from __future__ import annotations

import csv
import dataclasses
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .baselines import (CodebookSpec, codebook_scheme, default_codebook_size,
                        uniform_power_scheme)
from .beamformer import random_phases
from .channel import (PHASE_INIT_STREAM, SpatialCovariance, derived_rng,
                      path_loss, sample_channels, trial_seed_id)
from .channel import build_covariance
from .config import ConfigurationError, SimConfig
from .geometry import SimGeometry, build_geometry
from .optimizer import SolveResult, alternating_optimize
from .propagation import PropagationStack, build_propagation_stack

AXES = ("L", "K", "PT", "N")
SCHEMES = ("ao", "uniform", "codebook")

RESULT_HEADER = ("axis", "value", "scheme", "trial", "seed", "sum_rate_bpshz",
                 "outer_iters", "grad_steps", "status", "wall_ms")
SUMMARY_HEADER = ("axis", "value", "scheme", "trials", "mean_sum_rate_bpshz",
                  "stderr_sum_rate_bpshz", "mean_outer_iters", "mean_grad_steps")
TRACE_HEADER = ("iter", "sum_rate_bpshz")


@dataclass(frozen=True)
class SweepSpec:
    """One experiment axis: which values, which schemes, how many trials."""

    axis: str
    values: tuple
    schemes: tuple = SCHEMES
    trials: int = 100

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigurationError(f"sweep.axis: must be one of {AXES}, got {self.axis!r}")
        if len(self.values) == 0:
            raise ConfigurationError("sweep.values: must be nonempty")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown:
            raise ConfigurationError(f"sweep.schemes: unknown scheme(s) {unknown}")
        if self.trials < 1:
            raise ConfigurationError(f"sweep.trials: must be >= 1, got {self.trials}")


@dataclass(frozen=True)
class ResultRow:
    axis: str
    value: float
    scheme: str
    trial: int
    seed: int
    sum_rate_bpshz: float
    outer_iters: int
    grad_steps: int
    status: str
    wall_ms: float

    def astuple(self) -> tuple:
        return dataclasses.astuple(self)


def apply_axis(config: SimConfig, axis: str, value) -> SimConfig:
    """Config with one swept parameter replaced."""
    if axis == "L":
        return dataclasses.replace(config, L=int(value))
    if axis == "K":
        return dataclasses.replace(config, K=int(value), M=int(value))
    if axis == "PT":
        return dataclasses.replace(config, P_T=float(value))
    if axis == "N":
        side = math.isqrt(int(value))
        if side * side != int(value):
            raise ConfigurationError(
                f"sweep.values: N={value} is not a perfect square (layers are square grids)")
        return dataclasses.replace(config, N_x=side, N_y=side)
    raise ConfigurationError(f"sweep.axis: must be one of {AXES}, got {axis!r}")


@dataclass(frozen=True)
class TrialContext:
    """Everything that is fixed across the trials of one config."""

    geometry: SimGeometry
    stack: PropagationStack
    covariance: SpatialCovariance
    betas: np.ndarray


@lru_cache(maxsize=16)
def trial_context(config: SimConfig) -> TrialContext:
    """Build (and cache) geometry, stack, covariance and path losses."""
    config.validate()
    geometry = build_geometry(config)
    dx, dy = config.meta_atom_size
    stack = build_propagation_stack(geometry, d_x=dx, d_y=dy)
    covariance = build_covariance(geometry.layer_positions[-1], geometry.wavelength)
    betas = np.array([path_loss(d, config.C0, config.alpha)
                      for d in geometry.user_distances()])
    betas.setflags(write=False)
    return TrialContext(geometry=geometry, stack=stack,
                        covariance=covariance, betas=betas)


def run_trial(config: SimConfig, trial_index: int,
              schemes: tuple = SCHEMES, axis: str = "",
              value: float = float("nan")) -> list[ResultRow]:
    """Solve every requested scheme on one shared channel realization."""
    ctx = trial_context(config)
    trial_seed = (config.base_seed, trial_index)
    channels = sample_channels(trial_seed, ctx.covariance.F, ctx.betas,
                               config.gain_bs, config.gain_ue, config.noise_mw)
    theta0 = random_phases(config.L, config.N,
                           derived_rng(trial_seed, PHASE_INIT_STREAM))
    seed_id = trial_seed_id(config.base_seed, trial_index)

    rows = []
    for scheme in schemes:
        start = time.perf_counter()
        result = _run_scheme(scheme, ctx, channels, config, theta0, trial_seed)
        wall_ms = (time.perf_counter() - start) * 1e3
        rows.append(ResultRow(
            axis=axis, value=value, scheme=scheme, trial=trial_index,
            seed=seed_id, sum_rate_bpshz=result.sum_rate,
            outer_iters=result.trace.outer_rounds,
            grad_steps=result.trace.total_gradient_steps,
            status=result.status, wall_ms=wall_ms))
    return rows


def _run_scheme(scheme: str, ctx: TrialContext, channels, config: SimConfig,
                theta0: np.ndarray, trial_seed: tuple) -> SolveResult:
    if scheme == "ao":
        return alternating_optimize(ctx.stack, channels, config, theta0=theta0)
    if scheme == "uniform":
        return uniform_power_scheme(ctx.stack, channels, config, theta0=theta0)
    if scheme == "codebook":
        spec = CodebookSpec(size=default_codebook_size(config), seed=trial_seed)
        return codebook_scheme(ctx.stack, channels, config, spec=spec)
    raise ConfigurationError(f"unknown scheme {scheme!r}")


def _sweep_task(args) -> list[ResultRow]:
    config, trial, schemes, axis, value = args
    return run_trial(config, trial, schemes=schemes, axis=axis, value=value)


def run_sweep(config: SimConfig, sweep: SweepSpec, output_path: str | Path,
              jobs: int = 1) -> list[ResultRow]:
    """Run a full sweep, write the row CSV and the summary CSV.

    Trials are independent work units; with jobs > 1 they run in a process
    pool. Rows are sorted by (value, trial, scheme) before writing, so the
    output does not depend on execution order.
    """
    output_path = Path(output_path)
    summary_path = summary_path_for(output_path)
    _check_writable(output_path)
    _check_writable(summary_path)

    tasks = [(apply_axis(config, sweep.axis, value), trial, sweep.schemes,
              sweep.axis, value)
             for value in sweep.values
             for trial in range(sweep.trials)]

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_task = list(pool.map(_sweep_task, tasks, chunksize=1))
    else:
        per_task = [_sweep_task(t) for t in tasks]

    rows = [row for batch in per_task for row in batch]
    rows.sort(key=lambda r: (r.value, r.trial, r.scheme))

    write_rows(rows, output_path)
    write_summary(rows, summary_path)
    return rows


def summary_path_for(output_path: str | Path) -> Path:
    p = Path(output_path)
    return p.with_name(p.stem + "_summary" + (p.suffix or ".csv"))


def write_rows(rows: list[ResultRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_HEADER)
        for row in rows:
            writer.writerow(row.astuple())


def write_summary(rows: list[ResultRow], path: str | Path) -> None:
    """Per-(value, scheme) mean and standard error of the sum rate."""
    groups: dict[tuple, list[ResultRow]] = {}
    for row in rows:
        groups.setdefault((row.value, row.scheme), []).append(row)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_HEADER)
        for (value, scheme), members in sorted(groups.items(),
                                               key=lambda kv: kv[0]):
            rates = np.array([m.sum_rate_bpshz for m in members])
            n = rates.size
            stderr = float(rates.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
            writer.writerow((members[0].axis, value, scheme, n,
                             float(rates.mean()), stderr,
                             float(np.mean([m.outer_iters for m in members])),
                             float(np.mean([m.grad_steps for m in members]))))


def emit_trace(result: SolveResult, path: str | Path) -> None:
    """Write the solve's convergence trace: one row per recorded iteration."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for i, rate in enumerate(result.trace.rates):
            writer.writerow((i, rate))


def _check_writable(path: Path) -> None:
    import os

    parent = path.parent
    if not parent.is_dir():
        raise OSError(f"output directory does not exist: {parent}")
    if path.exists():
        if not os.access(path, os.W_OK):
            raise OSError(f"output path is not writable: {path}")
    elif not os.access(parent, os.W_OK):
        raise OSError(f"output directory is not writable: {parent}")
