"""Per-user SINR and the sum-rate objective.

Everything is expressed through the effective gain matrix
q[k, k'] = h_k^H G w1_{k'}: the signal user k receives from the stream
intended for user k'. All functions broadcast over leading axes, so a batch
of candidate configurations can be scored in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RateReport:
    gamma: np.ndarray          # (K,) SINRs
    rate_per_user: np.ndarray  # (K,) bits/s/Hz
    sum_rate: float            # bits/s/Hz


def effective_gains(h: np.ndarray, G: np.ndarray, W1: np.ndarray) -> np.ndarray:
    """(K, K) matrix of h_k^H G w1_{k'} products."""
    h = np.asarray(h)
    if h.ndim != 2 or G.shape != (h.shape[1], h.shape[1]) or W1.shape[0] != h.shape[1]:
        raise ValueError(
            f"inconsistent shapes: h {h.shape}, G {G.shape}, W1 {W1.shape}")
    return h.conj() @ G @ W1


def sinr(q: np.ndarray, p: np.ndarray, sigma2: np.ndarray) -> np.ndarray:
    """Per-user SINR for gains q (..., K, K), powers p (..., K), noise (K,)."""
    q = np.asarray(q)
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("powers must be nonnegative")
    power_gains = np.abs(q) ** 2
    direct = np.diagonal(power_gains, axis1=-2, axis2=-1)
    received = np.einsum("...kj,...j->...k", power_gains, p)
    interference = received - direct * p
    return direct * p / (interference + sigma2)


def sum_rate(gammas: np.ndarray) -> np.ndarray | float:
    """Sum of log2(1 + gamma_k) over the last axis, bits/s/Hz."""
    gammas = np.asarray(gammas, dtype=float)
    if np.any(gammas < 0):
        raise ValueError("SINRs must be nonnegative")
    out = np.sum(np.log2(1.0 + gammas), axis=-1)
    return float(out) if out.ndim == 0 else out


def rate_report(q: np.ndarray, p: np.ndarray, sigma2: np.ndarray) -> RateReport:
    """SINRs, per-user rates and the sum rate for one configuration."""
    gamma = sinr(q, p, sigma2)
    rates = np.log2(1.0 + gamma)
    return RateReport(gamma=gamma, rate_per_user=rates, sum_rate=float(rates.sum()))
