"""Physical layout of the transmitter, the metasurface stack and the users.

Coordinate frame: the stacking (boresight) axis is the horizontal z-axis.
Each metasurface layer is a square grid in an x-y plane, x being the
transverse horizontal direction and y the vertical one. The antenna line
sits at z = 0, layer l at z = l * d_layer, so the stack occupies the
(0, T_SIM] envelope with the antennas one inter-layer gap behind the first
surface. Users stand on the ground, H_BS below the stack, offset k * d_UE
sideways; only their distance to the stack centroid enters the channel
model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigurationError, SimConfig


@dataclass(frozen=True)
class SimGeometry:
    """All 3-D positions, in meters. Arrays are read-only after construction."""

    antenna_positions: np.ndarray  # (M, 3)
    layer_positions: np.ndarray    # (L, N, 3), row-major grid per layer
    user_positions: np.ndarray     # (K, 3)
    d_layer: float                 # inter-layer gap along the boresight, m
    wavelength: float              # m

    @property
    def M(self) -> int:
        return self.antenna_positions.shape[0]

    @property
    def L(self) -> int:
        return self.layer_positions.shape[0]

    @property
    def N(self) -> int:
        return self.layer_positions.shape[1]

    @property
    def K(self) -> int:
        return self.user_positions.shape[0]

    @property
    def antenna_gap(self) -> float:
        """Boresight distance from the antenna line to the first layer."""
        return float(self.layer_positions[0, 0, 2] - self.antenna_positions[0, 2])

    @property
    def stack_centroid(self) -> np.ndarray:
        """Centroid of all meta-atoms; lies on the boresight axis."""
        return self.layer_positions.reshape(-1, 3).mean(axis=0)

    def user_distances(self) -> np.ndarray:
        """Distance from each user to the stack centroid, m."""
        return np.linalg.norm(self.user_positions - self.stack_centroid, axis=1)


def build_geometry(config: SimConfig) -> SimGeometry:
    """Lay out antennas, meta-atom grids and users for one configuration."""
    config.validate()
    lam = config.wavelength
    pitch = config.element_spacing * lam
    d_layer = config.T_SIM * lam / config.L

    # Uniform antenna line along x, centered on the boresight axis.
    ant_x = (np.arange(config.M) - (config.M - 1) / 2.0) * pitch
    antennas = np.column_stack([ant_x, np.zeros(config.M), np.zeros(config.M)])

    # Square grid per layer, centered, x varying fastest.
    gx = (np.arange(config.N_x) - (config.N_x - 1) / 2.0) * pitch
    gy = (np.arange(config.N_y) - (config.N_y - 1) / 2.0) * pitch
    xx, yy = np.meshgrid(gx, gy)  # row-major: n = iy * N_x + ix
    grid = np.column_stack([xx.ravel(), yy.ravel(), np.zeros(config.N)])
    layers = np.stack([grid + [0.0, 0.0, l * d_layer] for l in range(1, config.L + 1)])

    # Users at ground level. The transverse offset k*d_UE and the height drop
    # H_BS fully determine the link distance; the boresight coordinate is set
    # to the stack centroid so that no extra axial gap enters the path loss.
    centroid_z = d_layer * (config.L + 1) / 2.0
    k_idx = np.arange(1, config.K + 1)
    users = np.column_stack([
        k_idx * config.d_UE,
        np.full(config.K, -config.H_BS),
        np.full(config.K, centroid_z),
    ])

    for arr in (antennas, layers, users):
        arr.setflags(write=False)
    return SimGeometry(
        antenna_positions=antennas,
        layer_positions=layers,
        user_positions=users,
        d_layer=d_layer,
        wavelength=lam,
    )


def layer_grid_spacing(geometry: SimGeometry) -> float:
    """Nearest-neighbor pitch within a layer, m."""
    p = geometry.layer_positions[0]
    if p.shape[0] < 2:
        raise ConfigurationError("layer has a single atom, spacing undefined")
    return float(np.linalg.norm(p[1] - p[0]))
