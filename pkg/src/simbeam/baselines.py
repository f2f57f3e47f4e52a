"""Benchmark schemes the alternating solver is compared against.

* uniform power: split the budget evenly and only optimize the phases;
* random codebook: draw many complete phase configurations, water-fill the
  powers for each, keep the best.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beamformer import TWO_PI, random_phases, wrap_phases
from .channel import CODEBOOK_STREAM, PHASE_INIT_STREAM, ChannelSet, derived_rng
from .config import SimConfig
from .metrics import sinr, sum_rate
from .optimizer import (SolveResult, SolveTrace, damped_power_iteration,
                        gradient_ascent)
from .propagation import PropagationStack

# candidates evaluated per batch; fixed so chunking never affects results
_CHUNK = 2048


@dataclass(frozen=True)
class CodebookSpec:
    """Random-codebook search: how many configurations, from which seed."""

    size: int
    seed: tuple

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"codebook size must be >= 1, got {self.size}")


def default_codebook_size(config: SimConfig) -> int:
    return 10 * config.L * config.N


def uniform_power_scheme(stack: PropagationStack, channels: ChannelSet,
                         config: SimConfig,
                         theta0: np.ndarray | None = None) -> SolveResult:
    """Phase-only optimization with the budget split evenly across users."""
    params = config.optimizer_params()
    p = np.full(channels.K, config.p_t_mw / channels.K)
    if theta0 is None:
        rng = derived_rng(config.base_seed, PHASE_INIT_STREAM)
        theta0 = random_phases(stack.L, stack.N, rng)

    ascent = gradient_ascent(theta0, stack, channels, p, params)
    trace = SolveTrace(rates=list(ascent.rates),
                       outer_rates=[ascent.rates[0], ascent.rates[-1]],
                       grad_steps_per_round=[ascent.steps],
                       wf_iterations_per_round=[0],
                       power_step_accepted=[False])
    done = ascent.converged or ascent.stalled
    return SolveResult(theta=ascent.theta, p=p, sum_rate=ascent.rates[-1],
                       trace=trace, status="converged" if done else "max_outer")


def codebook_scheme(stack: PropagationStack, channels: ChannelSet,
                    config: SimConfig,
                    spec: CodebookSpec | None = None) -> SolveResult:
    """Best of `size` random phase configurations, each with water-filled
    powers. Ties go to the earliest candidate."""
    if spec is None:
        spec = CodebookSpec(size=default_codebook_size(config),
                            seed=(config.base_seed,))
    thetas, rates, powers, iters, converged = evaluate_codebook(
        stack, channels, config, spec)
    best = int(np.argmax(rates))
    trace = SolveTrace(rates=[float(rates[best])],
                       outer_rates=[float(rates[best])],
                       grad_steps_per_round=[0],
                       wf_iterations_per_round=[int(iters[best])],
                       power_step_accepted=[True],
                       wf_all_converged=bool(converged[best]))
    status = "converged" if converged[best] else "max_outer"
    return SolveResult(theta=thetas[best], p=powers[best],
                       sum_rate=float(rates[best]), trace=trace, status=status)


def evaluate_codebook(stack: PropagationStack, channels: ChannelSet,
                      config: SimConfig, spec: CodebookSpec):
    """Score every codebook candidate.

    Returns (thetas, rates, powers, wf_iterations, wf_converged) over the
    whole codebook, evaluated in fixed-size batches.
    """
    params = config.optimizer_params()
    p_total = config.p_t_mw
    rng = derived_rng(spec.seed, CODEBOOK_STREAM)
    h_conj = channels.h.conj()

    thetas = np.empty((spec.size, stack.L, stack.N))
    rates = np.empty(spec.size)
    powers = np.empty((spec.size, channels.K))
    iters = np.empty(spec.size, dtype=int)
    converged = np.empty(spec.size, dtype=bool)

    for start in range(0, spec.size, _CHUNK):
        stop = min(start + _CHUNK, spec.size)
        block = rng.uniform(0.0, TWO_PI, size=(stop - start, stack.L, stack.N))
        q = _batched_gains(block, stack, h_conj)
        solve = damped_power_iteration(q, channels.sigma2, p_total, params)
        rates[start:stop] = sum_rate(sinr(q, solve.p, channels.sigma2))
        thetas[start:stop] = block
        powers[start:stop] = solve.p
        iters[start:stop] = solve.iterations
        converged[start:stop] = solve.converged

    return thetas, rates, powers, iters, converged


def _batched_gains(thetas: np.ndarray, stack: PropagationStack,
                   h_conj: np.ndarray) -> np.ndarray:
    """Effective gains for a batch of phase profiles: (C, L, N) -> (C, K, K)."""
    phases = np.exp(1j * wrap_phases(thetas))
    X = phases[:, 0, :, None] * stack.W1[None, :, :]
    for l in range(1, stack.L):
        X = phases[:, l, :, None] * (stack.inter_layer[l - 1] @ X)
    return h_conj @ X
