"""Fast self-checks on small instances, runnable from the CLI.

Each check exercises one structural property of the model or solver and
returns (name, passed, detail). The full battery runs in a few seconds.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .beamformer import compose_beamformer, partial_products, random_phases
from .channel import build_covariance, sample_channels
from .config import SimConfig
from .geometry import build_geometry
from .harness import trial_context
from .metrics import effective_gains, sinr, sum_rate
from .optimizer import (alternating_optimize, armijo_ascent_step,
                        damped_power_iteration, make_rate_objective,
                        sum_rate_gradient, water_fill_update)
from .propagation import build_propagation_stack

_SMALL = SimConfig(M=2, K=2, N_x=3, N_y=3, L=3, trial_count=1)


def _small_setup(seed: int = 7):
    ctx = trial_context(_SMALL)
    channels = sample_channels((_SMALL.base_seed, seed), ctx.covariance.F,
                               ctx.betas, _SMALL.gain_bs, _SMALL.gain_ue,
                               _SMALL.noise_mw)
    return ctx, channels


def check_geometry_determinism():
    ga = build_geometry(_SMALL)
    gb = build_geometry(_SMALL)
    same = (ga.layer_positions.tobytes() == gb.layer_positions.tobytes()
            and ga.antenna_positions.tobytes() == gb.antenna_positions.tobytes())
    centered = np.allclose(ga.layer_positions[0].mean(axis=0)[:2], 0.0)
    return "geometry determinism and grid centering", same and centered, ""


def check_recomposition():
    rng = np.random.default_rng(3)
    geometry = build_geometry(_SMALL)
    stack = build_propagation_stack(geometry)
    theta = random_phases(_SMALL.L, _SMALL.N, rng)
    G = compose_beamformer(theta, stack)
    worst = 0.0
    for l in range(1, _SMALL.L + 1):
        U, V = partial_products(theta, stack, l)
        G_l = V @ (np.exp(1j * theta[l - 1])[:, None] * U)
        worst = max(worst, np.linalg.norm(G_l - G) / np.linalg.norm(G))
    return "beamformer recomposition identity", worst < 1e-12, f"max rel err {worst:.2e}"


def check_covariance():
    geometry = build_geometry(_SMALL)
    cov = build_covariance(geometry.layer_positions[-1], geometry.wavelength)
    diag_ok = np.allclose(np.diag(cov.R), 1.0)
    recon = np.linalg.norm(cov.F @ cov.F.conj().T - cov.R) / np.linalg.norm(cov.R)
    return "sinc covariance diagonal and factorization", diag_ok and recon < 1e-10, \
        f"reconstruction err {recon:.2e}"


def check_channel_determinism():
    _, ch_a = _small_setup()
    _, ch_b = _small_setup()
    return "channel sampling determinism", ch_a.h.tobytes() == ch_b.h.tobytes(), ""


def check_gradient():
    ctx, channels = _small_setup()
    rng = np.random.default_rng(11)
    theta = random_phases(_SMALL.L, _SMALL.N, rng)
    p = np.full(_SMALL.K, _SMALL.p_t_mw / _SMALL.K)
    grad = sum_rate_gradient(theta, ctx.stack, channels.h, p, channels.sigma2)
    rate_of = make_rate_objective(ctx.stack, channels.h, p, channels.sigma2)
    step = 1e-6
    worst = 0.0
    for l in range(_SMALL.L):
        for n in range(0, _SMALL.N, 2):
            up, down = theta.copy(), theta.copy()
            up[l, n] += step
            down[l, n] -= step
            fd = (rate_of(up) - rate_of(down)) / (2 * step)
            denom = max(abs(fd), abs(grad[l, n]), 1e-8)
            worst = max(worst, abs(fd - grad[l, n]) / denom)
    return "analytic gradient vs finite differences", worst < 1e-5, f"max rel err {worst:.2e}"


def check_gradient_null_direction():
    ctx, channels = _small_setup()
    theta = random_phases(_SMALL.L, _SMALL.N, np.random.default_rng(12))
    p = np.full(_SMALL.K, _SMALL.p_t_mw / _SMALL.K)
    grad = sum_rate_gradient(theta, ctx.stack, channels.h, p, channels.sigma2)
    bound = 1e-8 * np.linalg.norm(grad)
    worst = np.abs(grad.sum(axis=1)).max()
    return "per-layer gradient sums vanish", worst <= bound, f"max layer sum {worst:.2e}"


def check_water_filling():
    ctx, channels = _small_setup()
    theta = random_phases(_SMALL.L, _SMALL.N, np.random.default_rng(13))
    G = compose_beamformer(theta, ctx.stack)
    q = effective_gains(channels.h, G, ctx.stack.W1)
    p_total = _SMALL.p_t_mw
    p = water_fill_update(q, np.full(_SMALL.K, p_total / _SMALL.K),
                          channels.sigma2, p_total)
    budget = abs(p.sum() - p_total)
    solve = damped_power_iteration(q, channels.sigma2, p_total,
                                   _SMALL.optimizer_params())
    budget2 = abs(solve.p.sum() - p_total)
    ok = budget < 1e-9 and budget2 < 1e-9 and np.all(p >= 0)
    return "water-filling budget exactness", ok, f"residuals {budget:.1e}, {budget2:.1e}"


def check_armijo():
    ctx, channels = _small_setup()
    theta = random_phases(_SMALL.L, _SMALL.N, np.random.default_rng(14))
    p = np.full(_SMALL.K, _SMALL.p_t_mw / _SMALL.K)
    params = _SMALL.optimizer_params()
    rate_of = make_rate_objective(ctx.stack, channels.h, p, channels.sigma2)
    grad = sum_rate_gradient(theta, ctx.stack, channels.h, p, channels.sigma2)
    r0 = rate_of(theta)
    _, mu, r_new = armijo_ascent_step(theta, grad, rate_of, params, rate_current=r0)
    ok = mu > 0 and r_new >= r0 + params.armijo_slope * mu * np.sum(grad ** 2)
    return "armijo step sufficient increase", ok, f"mu={mu:g}"


def check_monotone_solve():
    ctx, channels = _small_setup()
    result = alternating_optimize(ctx.stack, channels, _SMALL)
    rates = np.array(result.trace.rates)
    drops = np.diff(rates).min() if rates.size > 1 else 0.0
    gammas = sinr(effective_gains(channels.h, compose_beamformer(result.theta, ctx.stack),
                                  ctx.stack.W1), result.p, channels.sigma2)
    consistent = abs(sum_rate(gammas) - result.sum_rate) < 1e-9
    budget = abs(result.p.sum() - _SMALL.p_t_mw) < 1e-9
    return "alternating solve monotone and self-consistent", \
        drops >= -1e-9 and consistent and budget, f"min step {drops:.2e}"


ALL_CHECKS = (
    check_geometry_determinism,
    check_recomposition,
    check_covariance,
    check_channel_determinism,
    check_gradient,
    check_gradient_null_direction,
    check_water_filling,
    check_armijo,
    check_monotone_solve,
)


def run_all(verbose: bool = True) -> bool:
    """Run the battery; print one line per check; True if all passed."""
    all_ok = True
    for check in ALL_CHECKS:
        name, ok, detail = check()
        all_ok &= ok
        if verbose:
            tag = "PASS" if ok else "FAIL"
            suffix = f"  ({detail})" if detail else ""
            print(f"[{tag}] {name}{suffix}")
    return all_ok
