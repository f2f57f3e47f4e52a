"""Fixed inter-layer coupling of the stack, from scalar diffraction theory.

Each entry of a transmission matrix is the complex coefficient picked up by
a spherical wavelet travelling from a source element (antenna or meta-atom)
to a meta-atom on the next surface:

    w = (d_x * d_y * cos(chi) / d) * (1 / (2 pi d) - j / lambda) * exp(j 2 pi d / lambda)

with d the element-to-element distance and chi the angle between the
propagation direction and the surface normal. These matrices depend only on
the geometry and are built once per configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import SimGeometry


@dataclass(frozen=True)
class PropagationStack:
    """Transmission matrices of the stack; immutable after construction.

    W1 couples the M feed antennas to the N atoms of the first layer
    (column m is the illumination of layer 1 by antenna m). inter_layer[i]
    couples layer i+1 to layer i+2, so it is empty for a single-layer stack.
    """

    W1: np.ndarray                       # (N, M) complex
    inter_layer: tuple[np.ndarray, ...]  # L-1 matrices, each (N, N) complex

    @property
    def N(self) -> int:
        return self.W1.shape[0]

    @property
    def M(self) -> int:
        return self.W1.shape[1]

    @property
    def L(self) -> int:
        return len(self.inter_layer) + 1


def diffraction_coefficient(src, dst, normal_gap: float, d_x: float,
                            d_y: float, wavelength: float) -> complex:
    """Complex transmission coefficient from a point source to a meta-atom.

    normal_gap is the separation along the surface normal, so
    cos(chi) = normal_gap / distance. Zero distance is a domain error.
    """
    if normal_gap <= 0:
        raise ValueError(f"normal_gap must be > 0, got {normal_gap}")
    d = float(np.linalg.norm(np.asarray(dst, dtype=float) - np.asarray(src, dtype=float)))
    if d == 0.0:
        raise ValueError("source and destination coincide")
    cos_chi = normal_gap / d
    amplitude = d_x * d_y * cos_chi / d
    return complex(amplitude
                   * (1.0 / (2.0 * np.pi * d) - 1j / wavelength)
                   * np.exp(2j * np.pi * d / wavelength))


def _coupling_matrix(src_points: np.ndarray, dst_points: np.ndarray,
                     normal_gap: float, d_x: float, d_y: float,
                     wavelength: float) -> np.ndarray:
    """Vectorized pairwise coefficients; entry [n, m] is src m -> dst n."""
    diff = dst_points[:, None, :] - src_points[None, :, :]
    d = np.linalg.norm(diff, axis=-1)
    if np.any(d == 0.0):
        raise ValueError("coincident source/destination element")
    cos_chi = normal_gap / d
    return (d_x * d_y * cos_chi / d) \
        * (1.0 / (2.0 * np.pi * d) - 1j / wavelength) \
        * np.exp(2j * np.pi * d / wavelength)


def build_propagation_stack(geometry: SimGeometry, d_x: float | None = None,
                            d_y: float | None = None) -> PropagationStack:
    """Build every transmission matrix for a laid-out stack.

    Meta-atom aperture defaults to half a wavelength on each side.
    """
    lam = geometry.wavelength
    dx = d_x if d_x is not None else 0.5 * lam
    dy = d_y if d_y is not None else 0.5 * lam

    layers = geometry.layer_positions
    gap_first = geometry.antenna_gap
    W1 = _coupling_matrix(geometry.antenna_positions, layers[0],
                          gap_first, dx, dy, lam)
    inter = tuple(
        _coupling_matrix(layers[l - 1], layers[l], geometry.d_layer, dx, dy, lam)
        for l in range(1, geometry.L)
    )
    W1.setflags(write=False)
    for w in inter:
        w.setflags(write=False)
    return PropagationStack(W1=W1, inter_layer=inter)
