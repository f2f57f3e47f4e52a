"""Alternating maximization of the sum rate over powers and phase shifts.

Two subproblem solvers alternate:

* powers, at fixed phases: simultaneous water-filling over the K interfering
  links, stabilized by damping (each iterate is a weighted average of the
  previous powers and the fresh water-filling update), with the water level
  found by bisection on the total-power constraint;
* phases, at fixed powers: ascent along the exact analytic gradient of the
  sum rate, with Armijo backtracking for the step size.

Both are monotone in the objective (the power step is only accepted when it
does not reduce the rate), so the recorded trace never decreases.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .beamformer import propagate_columns, random_phases, wrap_phases
from .channel import PHASE_INIT_STREAM, ChannelSet, derived_rng
from .config import OptimizerParams, SimConfig
from .metrics import sinr, sum_rate
from .propagation import PropagationStack

_LOG2E = float(np.log2(np.e))

# Bisection depth for the water level. A fixed depth (rather than a
# data-dependent residual break) keeps the solver exactly equivariant under
# joint rescaling of powers and noise; 80 halvings put the budget residual
# far below the 1e-12 requirement for any sane bracket.
_BISECTION_STEPS = 80


# ---------------------------------------------------------------------------
# power allocation
# ---------------------------------------------------------------------------

def _gain_terms(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    power_gains = np.abs(np.asarray(q)) ** 2
    direct = np.diagonal(power_gains, axis1=-2, axis2=-1)
    return power_gains, direct


def _water_fill(power_gains: np.ndarray, direct: np.ndarray,
                p_prev: np.ndarray, sigma2: np.ndarray,
                p_total: float) -> np.ndarray:
    """One simultaneous water-filling update; broadcasts over leading axes."""
    received = np.einsum("...kj,...j->...k", power_gains, p_prev)
    interference = received - direct * p_prev + sigma2
    active = direct > 0.0
    # users with zero direct gain get zero power and drop out of the fill
    safe_direct = np.where(active, direct, 1.0)
    cutoff = np.where(active, interference / safe_direct, np.inf)

    batch = power_gains.shape[:-2]
    lo = np.zeros(batch)
    finite_cut = np.where(active, cutoff, -np.inf)
    hi = p_total + np.max(finite_cut, axis=-1)
    hi = np.where(np.isfinite(hi), hi, 0.0)  # no active user at all

    p = np.zeros_like(p_prev, dtype=float)
    for _ in range(_BISECTION_STEPS):
        level = 0.5 * (lo + hi)
        p = np.where(active, np.clip(level[..., None] - cutoff, 0.0, None), 0.0)
        overshoot = p.sum(axis=-1) - p_total > 0.0
        hi = np.where(overshoot, level, hi)
        lo = np.where(overshoot, lo, level)
    return p


def water_fill_update(q: np.ndarray, p_prev: np.ndarray, sigma2: np.ndarray,
                      p_total: float) -> np.ndarray:
    """Water-filling powers against the interference implied by p_prev.

    Users whose direct gain is exactly zero receive zero power; the rest
    share the full budget. Accepts a batch of gain matrices (..., K, K).
    """
    power_gains, direct = _gain_terms(q)
    return _water_fill(power_gains, direct, np.asarray(p_prev, dtype=float),
                       np.asarray(sigma2, dtype=float), p_total)


@dataclass(frozen=True)
class PowerSolve:
    p: np.ndarray           # (..., K) allocation
    iterations: np.ndarray  # (...,) damped updates performed
    converged: np.ndarray   # (...,) bool


def damped_power_iteration(q: np.ndarray, sigma2: np.ndarray, p_total: float,
                           params: OptimizerParams) -> PowerSolve:
    """Damped iterative water-filling from a uniform start.

    Stops when the L1 power change per budget drops below the tolerance or
    at the iteration cap; a capped run returns its best-rate iterate instead
    of failing. The returned allocation is rescaled onto the exact budget.
    """
    q = np.asarray(q)
    sigma2 = np.asarray(sigma2, dtype=float)
    power_gains, direct = _gain_terms(q)
    batch = q.shape[:-2]
    K = q.shape[-1]

    p = np.full(batch + (K,), p_total / K)
    best_p = p.copy()
    best_rate = np.asarray(sum_rate(sinr(q, p, sigma2)))
    iterations = np.zeros(batch, dtype=int)
    converged = np.zeros(batch, dtype=bool)

    for it in range(1, params.inner_max + 1):
        if converged.all():
            break
        fresh = _water_fill(power_gains, direct, p, sigma2, p_total)
        damped = (1.0 - params.damping) * p + params.damping * fresh
        p_next = np.where(converged[..., None], p, damped)
        delta = np.abs(p_next - p).sum(axis=-1) / p_total
        iterations = np.where(converged, iterations, it)
        p = p_next
        converged = converged | (delta < params.ao_tolerance)
        rate = np.asarray(sum_rate(sinr(q, p, sigma2)))
        better = rate > best_rate
        best_rate = np.where(better, rate, best_rate)
        best_p = np.where(better[..., None], p, best_p)

    p = np.where(converged[..., None], p, best_p)
    p = np.where(direct > 0.0, p, 0.0)  # zero-gain users end at exactly zero
    total = p.sum(axis=-1)
    scale = np.where(total > 0.0, p_total / np.where(total > 0.0, total, 1.0), 1.0)
    p = p * scale[..., None]
    return PowerSolve(p=p, iterations=iterations, converged=converged)


# ---------------------------------------------------------------------------
# phase-shift gradient
# ---------------------------------------------------------------------------

def _layer_products(theta: np.ndarray, stack: PropagationStack,
                    h_conj: np.ndarray) -> tuple[list, list, np.ndarray, np.ndarray]:
    """Forward/backward partial products, compressed onto the feed columns.

    Returns per-layer A_l = U_l W1 (N, K), B_l = conj(h) V_l (K, N), the
    layer phase factors and the effective gain matrix q.
    """
    phases = np.exp(1j * theta)
    L = stack.L

    A = [stack.W1.astype(complex)]
    for l in range(1, L):
        A.append(stack.inter_layer[l - 1] @ (phases[l - 1][:, None] * A[l - 1]))

    B: list = [None] * L
    B[L - 1] = h_conj
    for l in range(L - 2, -1, -1):
        B[l] = (B[l + 1] * phases[l + 1][None, :]) @ stack.inter_layer[l]

    q = (B[0] * phases[0][None, :]) @ A[0]
    return A, B, phases, q


def sum_rate_gradient(theta: np.ndarray, stack: PropagationStack,
                      h: np.ndarray, p: np.ndarray,
                      sigma2: np.ndarray) -> np.ndarray:
    """Exact partial derivatives of the sum rate w.r.t. every phase shift.

    Cost is O(L N^2 K + L N K^2): the per-layer partial products are carried
    along the K feed columns and K user rows instead of as full N x N
    matrices, and the effective gains are shared across layers.
    """
    grad, _ = _gradient_and_gains(theta, stack, h, p, sigma2)
    return grad


def _gradient_and_gains(theta, stack, h, p, sigma2):
    theta = np.asarray(theta, dtype=float)
    p = np.asarray(p, dtype=float)
    h = np.asarray(h)
    if theta.shape != (stack.L, stack.N):
        raise ValueError(f"phase matrix shape {theta.shape} does not match the stack")
    if h.shape[1] != stack.N or p.shape[0] != h.shape[0]:
        raise ValueError("channel/power dimensions do not match the stack")

    A, B, phases, q = _layer_products(theta, stack, h.conj())
    power_gains, direct = _gain_terms(q)
    total = power_gains @ p + np.asarray(sigma2, dtype=float)
    delta = 1.0 / total                    # 1 / (all received power + noise)
    gamma = direct * p / (total - direct * p)

    diag_q = np.diagonal(q)
    coef_signal = delta * (1.0 + gamma) * p
    coef_interf = delta * gamma

    grad = np.empty_like(theta)
    weighted = q * p[None, :]
    for l in range(stack.L):
        s = A[l].conj() @ weighted.T                 # (N, K)
        t = A[l].conj() * diag_q[None, :]            # (N, K), column k uses q[k, k]
        inner = t * coef_signal[None, :] - s * coef_interf[None, :]
        w = np.einsum("kn,nk->n", B[l].conj(), inner)
        grad[l] = 2.0 * _LOG2E * np.imag(phases[l].conj() * w)
    return grad, q


# ---------------------------------------------------------------------------
# gradient ascent with backtracking
# ---------------------------------------------------------------------------

def make_rate_objective(stack: PropagationStack, h: np.ndarray, p: np.ndarray,
                        sigma2: np.ndarray):
    """Callable theta -> sum rate, evaluated without forming the full
    beamforming matrix."""
    h_conj = np.asarray(h).conj()
    p = np.asarray(p, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)

    def rate_of(theta: np.ndarray) -> float:
        q = h_conj @ propagate_columns(theta, stack, stack.W1)
        return float(sum_rate(sinr(q, p, sigma2)))

    return rate_of


def armijo_ascent_step(theta: np.ndarray, gradient: np.ndarray, rate_of,
                       params: OptimizerParams,
                       rate_current: float | None = None
                       ) -> tuple[np.ndarray, float, float]:
    """Largest backtracked step satisfying the sufficient-increase rule.

    Tries mu = mu0 * rho^t for t = 0, 1, ... and accepts the first step with
    rate(theta + mu g) >= rate(theta) + c mu |g|^2. Returns the (wrapped)
    updated phases, the accepted mu and the new rate; mu = 0 with unchanged
    phases signals a stationary point at working precision.
    """
    gradient = np.asarray(gradient, dtype=float)
    grad_sq = float(np.sum(gradient * gradient))
    rate0 = rate_of(theta) if rate_current is None else float(rate_current)
    if grad_sq == 0.0:
        return theta, 0.0, rate0
    mu = params.armijo_init
    for _ in range(params.inner_max):
        candidate = wrap_phases(theta + mu * gradient)
        rate = rate_of(candidate)
        if rate >= rate0 + params.armijo_slope * mu * grad_sq:
            return candidate, mu, rate
        mu *= params.armijo_shrink
    return theta, 0.0, rate0


@dataclass(frozen=True)
class AscentResult:
    theta: np.ndarray
    rates: list[float]  # rate before the first step, then after each accepted step
    steps: int          # accepted gradient steps
    converged: bool     # fractional-increase threshold reached
    stalled: bool       # no acceptable step remained


def gradient_ascent(theta: np.ndarray, stack: PropagationStack,
                    channels: ChannelSet, p: np.ndarray,
                    params: OptimizerParams) -> AscentResult:
    """Ascend the sum rate over the phase profile at fixed powers.

    Iterates gradient + Armijo step until the fractional rate increase falls
    below the tolerance, the step size collapses, or the iteration cap.
    """
    p = np.asarray(p, dtype=float)
    rate_of = make_rate_objective(stack, channels.h, p, channels.sigma2)
    theta = wrap_phases(np.asarray(theta, dtype=float))
    rate = rate_of(theta)
    rates = [rate]
    converged = False
    stalled = False

    for _ in range(params.inner_max):
        grad = sum_rate_gradient(theta, stack, channels.h, p, channels.sigma2)
        theta, mu, new_rate = armijo_ascent_step(theta, grad, rate_of, params,
                                                 rate_current=rate)
        if mu == 0.0:
            stalled = True
            break
        rates.append(new_rate)
        if _fractional_gain(rate, new_rate) < params.ao_tolerance:
            rate = new_rate
            converged = True
            break
        rate = new_rate

    return AscentResult(theta=theta, rates=rates, steps=len(rates) - 1,
                        converged=converged, stalled=stalled)


def _fractional_gain(old: float, new: float) -> float:
    if old > 0.0:
        return (new - old) / old
    return np.inf if new > old else 0.0


# ---------------------------------------------------------------------------
# outer alternation
# ---------------------------------------------------------------------------

@dataclass
class SolveTrace:
    """Sum-rate history of one solve, at two resolutions.

    ``rates`` holds the initial rate, then one entry per accepted gradient
    step and one per power update; ``outer_rates`` holds the initial rate
    and one entry per alternation round. Both are nondecreasing.
    """

    rates: list[float] = field(default_factory=list)
    outer_rates: list[float] = field(default_factory=list)
    grad_steps_per_round: list[int] = field(default_factory=list)
    wf_iterations_per_round: list[int] = field(default_factory=list)
    power_step_accepted: list[bool] = field(default_factory=list)
    wf_all_converged: bool = True
    seconds_phase: float = 0.0
    seconds_power: float = 0.0

    @property
    def outer_rounds(self) -> int:
        return len(self.outer_rates) - 1

    @property
    def total_gradient_steps(self) -> int:
        return sum(self.grad_steps_per_round)

    @property
    def iterations(self) -> int:
        """Gradient steps plus power updates: the fine-trace step count."""
        return len(self.rates) - 1


@dataclass
class SolveResult:
    theta: np.ndarray   # (L, N) optimized phases in [0, 2*pi)
    p: np.ndarray       # (K,) optimized powers, mW
    sum_rate: float     # bits/s/Hz
    trace: SolveTrace
    status: str         # "converged" or "max_outer"


def alternating_optimize(stack: PropagationStack, channels: ChannelSet,
                         config: SimConfig,
                         theta0: np.ndarray | None = None) -> SolveResult:
    """Joint power/phase optimization by alternating the two subsolvers.

    Phases start uniform-random (derived from the config seed unless theta0
    is given) and powers start uniform. Each round ascends the phases at the
    current powers, then re-waterfills the powers at the new phases; a power
    update that would reduce the rate is discarded, which keeps the whole
    trace monotone. Stops when a full round improves the rate by less than
    the fractional tolerance.
    """
    params = config.optimizer_params()
    p_total = config.p_t_mw
    K = channels.K
    if theta0 is None:
        rng = derived_rng(config.base_seed, PHASE_INIT_STREAM)
        theta = random_phases(stack.L, stack.N, rng)
    else:
        theta = wrap_phases(np.asarray(theta0, dtype=float))

    p = np.full(K, p_total / K)
    h_conj = channels.h.conj()
    rate = make_rate_objective(stack, channels.h, p, channels.sigma2)(theta)
    trace = SolveTrace(rates=[rate], outer_rates=[rate])
    status = "max_outer"

    for _ in range(params.outer_max):
        round_start = rate

        t0 = time.perf_counter()
        ascent = gradient_ascent(theta, stack, channels, p, params)
        trace.seconds_phase += time.perf_counter() - t0
        theta = ascent.theta
        rate = ascent.rates[-1]
        trace.rates.extend(ascent.rates[1:])
        trace.grad_steps_per_round.append(ascent.steps)

        t0 = time.perf_counter()
        q = h_conj @ propagate_columns(theta, stack, stack.W1)
        solve = damped_power_iteration(q, channels.sigma2, p_total, params)
        candidate_rate = float(sum_rate(sinr(q, solve.p, channels.sigma2)))
        trace.seconds_power += time.perf_counter() - t0
        trace.wf_iterations_per_round.append(int(solve.iterations))
        trace.wf_all_converged &= bool(solve.converged)

        accepted = candidate_rate >= rate
        if accepted:
            p = solve.p
            rate = candidate_rate
        trace.power_step_accepted.append(accepted)
        trace.rates.append(rate)
        trace.outer_rates.append(rate)

        if _fractional_gain(round_start, rate) < params.ao_tolerance:
            status = "converged"
            break

    return SolveResult(theta=wrap_phases(theta), p=p, sum_rate=rate,
                       trace=trace, status=status)
