"""Composition of the tunable wave-domain beamforming matrix.

The stack applies, layer by layer, a unit-modulus phase profile followed by
the fixed diffraction coupling to the next layer:

    G = diag(e^{j theta_L}) W_L ... diag(e^{j theta_2}) W_2 diag(e^{j theta_1})

For gradient work the solver also needs, per layer l, the partial products
U_l (everything to the right of layer l's phases) and V_l (everything to
the left), satisfying G = V_l diag(e^{j theta_l}) U_l.
"""

from __future__ import annotations

import numpy as np

from .propagation import PropagationStack

TWO_PI = 2.0 * np.pi


def wrap_phases(theta: np.ndarray) -> np.ndarray:
    """Canonicalize phases into [0, 2*pi)."""
    return np.mod(theta, TWO_PI)


def random_phases(L: int, N: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random phase profile, the solver's starting point."""
    return rng.uniform(0.0, TWO_PI, size=(L, N))


def _check_phases(theta: np.ndarray, stack: PropagationStack) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (stack.L, stack.N):
        raise ValueError(
            f"phase matrix shape {theta.shape} does not match the stack "
            f"({stack.L} layers of {stack.N} atoms)")
    return theta


def compose_beamformer(theta: np.ndarray, stack: PropagationStack) -> np.ndarray:
    """Full (N, N) beamforming matrix for a phase profile.

    A single-layer stack has no inter-layer coupling, so the result is just
    the diagonal phase matrix.
    """
    theta = _check_phases(theta, stack)
    phases = np.exp(1j * theta)
    G = np.diag(phases[0])
    for l in range(1, stack.L):
        G = phases[l][:, None] * (stack.inter_layer[l - 1] @ G)
    return G


def propagate_columns(theta: np.ndarray, stack: PropagationStack,
                      X: np.ndarray) -> np.ndarray:
    """Compute G @ X without forming G; O(L N^2 K) for an (N, K) block.

    This is the hot path of the objective evaluation, where X is the
    antenna-to-first-layer matrix.
    """
    theta = _check_phases(theta, stack)
    phases = np.exp(1j * theta)
    Y = phases[0][:, None] * X
    for l in range(1, stack.L):
        Y = phases[l][:, None] * (stack.inter_layer[l - 1] @ Y)
    return Y


def partial_products(theta: np.ndarray, stack: PropagationStack,
                     l: int) -> tuple[np.ndarray, np.ndarray]:
    """Partial products (U_l, V_l) around layer l (1-based).

    U_l is the propagation from the first layer's input up to (and
    including) the coupling into layer l; V_l is the propagation from layer
    l's output to the stack output. U_1 = V_L = identity.
    """
    theta = _check_phases(theta, stack)
    if not 1 <= l <= stack.L:
        raise ValueError(f"layer index {l} out of range 1..{stack.L}")
    phases = np.exp(1j * theta)
    N = stack.N

    U = np.eye(N, dtype=complex)
    for j in range(2, l + 1):  # U_j = W_j Phi_{j-1} U_{j-1}
        U = stack.inter_layer[j - 2] @ (phases[j - 2][:, None] * U)

    V = np.eye(N, dtype=complex)
    for j in range(stack.L - 1, l - 1, -1):  # V_j = V_{j+1} Phi_{j+1} W_{j+1}
        V = (V * phases[j][None, :]) @ stack.inter_layer[j - 1]

    return U, V
