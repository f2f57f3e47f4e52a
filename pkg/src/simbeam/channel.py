"""Correlated Rayleigh fading from the last metasurface layer to the users.

The spatial covariance across meta-atoms follows the isotropic-scattering
model R[n, n'] = sinc(2 d / lambda) with d the atom spacing, which on a
half-wavelength grid is rank deficient; channels are drawn by coloring
i.i.d. circularly-symmetric Gaussians with an eigenvalue square root of R.

Reproducibility: every random draw comes from a dedicated stream derived by
hashing (base seed, trial, stream tag, index) through numpy's SeedSequence,
so trials and users can be sampled in any order, or in parallel, without
changing the results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# stream tags for derived RNG streams
CHANNEL_STREAM = 0
PHASE_INIT_STREAM = 1
CODEBOOK_STREAM = 2


def derived_rng(seed, *key: int) -> np.random.Generator:
    """Independent generator for (seed, *key); order-independent across keys."""
    parts = list(seed) if isinstance(seed, (tuple, list)) else [seed]
    return np.random.default_rng(np.random.SeedSequence(parts + list(key)))


def trial_seed_id(base_seed: int, trial: int) -> int:
    """Stable integer fingerprint of a trial's seed material (for reports)."""
    return int(np.random.SeedSequence([base_seed, trial]).generate_state(1)[0])


@dataclass(frozen=True)
class SpatialCovariance:
    """Meta-atom correlation matrix and a factor F with F F^H = R."""

    R: np.ndarray  # (N, N) real symmetric, unit diagonal
    F: np.ndarray  # (N, N) real, eigenvalue square root of R

    @property
    def N(self) -> int:
        return self.R.shape[0]


@dataclass(frozen=True)
class ChannelSet:
    """One realization of every user's channel, plus its link budget."""

    h: np.ndarray       # (K, N) complex channel vectors, one row per user
    beta: np.ndarray    # (K,) linear path loss
    sigma2: np.ndarray  # (K,) noise power, mW
    seed: tuple         # seed material the draw is a pure function of

    @property
    def K(self) -> int:
        return self.h.shape[0]

    @property
    def N(self) -> int:
        return self.h.shape[1]


def build_covariance(layer_points: np.ndarray, wavelength: float) -> SpatialCovariance:
    """Sinc spatial covariance of one layer's atom grid, with its factor."""
    pts = np.asarray(layer_points, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    R = np.sinc(2.0 * dist / wavelength)  # np.sinc is sin(pi x)/(pi x)
    F = covariance_factor(R)
    R.setflags(write=False)
    F.setflags(write=False)
    return SpatialCovariance(R=R, F=F)


def covariance_factor(R: np.ndarray) -> np.ndarray:
    """Square root of a (possibly rank-deficient) covariance matrix.

    Eigenvalues slightly below zero are rounding artifacts of the sinc model
    and are clipped; anything below -1e-8 indicates a construction bug.
    """
    R = np.asarray(R, dtype=float)
    if not np.allclose(R, R.T):
        raise ValueError("covariance matrix must be symmetric")
    eigvals, eigvecs = np.linalg.eigh(R)
    if eigvals.min() < -1e-8:
        raise ValueError(
            f"covariance is not PSD (min eigenvalue {eigvals.min():.3e})")
    eigvals = np.clip(eigvals, 0.0, None)
    return eigvecs * np.sqrt(eigvals)[None, :]


def path_loss(distance: float, c0_db: float, alpha: float) -> float:
    """Linear distance-dependent path loss 10^(C0/10) * d^(-alpha)."""
    if distance <= 0:
        raise ValueError(f"distance must be > 0, got {distance}")
    return 10.0 ** (c0_db / 10.0) * distance ** (-alpha)


def sample_channels(seed, factor: np.ndarray, betas: np.ndarray,
                    gain_bs_dbi: float, gain_ue_dbi: float,
                    sigma2_mw) -> ChannelSet:
    """Draw one correlated Rayleigh realization per user.

    h_k = sqrt(g * beta_k) * F z_k with z_k standard circularly-symmetric
    complex Gaussian and g the combined antenna gain. Deterministic given
    (seed, user index).
    """
    betas = np.array(betas, dtype=float)
    if np.any(betas <= 0):
        raise ValueError("path loss values must be strictly positive")
    K = betas.shape[0]
    N = factor.shape[0]
    gain = 10.0 ** ((gain_bs_dbi + gain_ue_dbi) / 10.0)
    seed_tuple = tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)

    h = np.empty((K, N), dtype=complex)
    for k in range(K):
        rng = derived_rng(seed_tuple, CHANNEL_STREAM, k)
        z = (rng.standard_normal(N) + 1j * rng.standard_normal(N)) / np.sqrt(2.0)
        h[k] = np.sqrt(gain * betas[k]) * (factor @ z)

    sigma2 = np.broadcast_to(np.asarray(sigma2_mw, dtype=float), (K,)).copy()
    if np.any(sigma2 <= 0):
        raise ValueError("noise powers must be strictly positive")
    for arr in (h, betas, sigma2):
        arr.setflags(write=False)
    return ChannelSet(h=h, beta=betas, sigma2=sigma2, seed=seed_tuple)
