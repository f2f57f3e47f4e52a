"""System configuration: physical setup, channel model and solver parameters.

All powers are stored in dB/dBm here and converted to linear milliwatt
quantities exactly once, through the ``*_mw`` / ``*_linear`` properties.
Everything downstream works in mW.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import yaml
from scipy.constants import c as SPEED_OF_LIGHT


class ConfigurationError(ValueError):
    """Raised for malformed config files or invariant violations."""


@dataclass(frozen=True)
class OptimizerParams:
    """Knobs of the alternating solver (water-filling + gradient ascent)."""

    damping: float = 0.5        # weight on the fresh water-filling iterate
    armijo_init: float = 1.0    # initial step size mu_0
    armijo_shrink: float = 0.5  # backtracking factor rho in (0, 1)
    armijo_slope: float = 1e-4  # sufficient-increase constant c
    ao_tolerance: float = 1e-6  # fractional sum-rate increase threshold
    inner_max: int = 100        # cap on gradient steps / WF iterations / backtracks
    outer_max: int = 100        # cap on alternation rounds

    def validate(self, prefix: str = "optimizer") -> None:
        if not 0.0 < self.damping <= 1.0:
            raise ConfigurationError(f"{prefix}.damping: must be in (0, 1], got {self.damping}")
        if self.armijo_init <= 0.0:
            raise ConfigurationError(f"{prefix}.armijo_init: must be > 0, got {self.armijo_init}")
        if not 0.0 < self.armijo_shrink < 1.0:
            raise ConfigurationError(
                f"{prefix}.armijo_shrink: must be in (0, 1), got {self.armijo_shrink}")
        if self.armijo_slope <= 0.0:
            raise ConfigurationError(f"{prefix}.armijo_slope: must be > 0, got {self.armijo_slope}")
        if self.ao_tolerance <= 0.0:
            raise ConfigurationError(f"{prefix}.ao_tolerance: must be > 0, got {self.ao_tolerance}")
        if self.inner_max < 1:
            raise ConfigurationError(f"{prefix}.inner_max: must be >= 1, got {self.inner_max}")
        if self.outer_max < 1:
            raise ConfigurationError(f"{prefix}.outer_max: must be >= 1, got {self.outer_max}")


@dataclass(frozen=True)
class SimConfig:
    """Full description of one simulated downlink scenario.

    Defaults reproduce the reference setup: a 4-antenna transmitter feeding a
    7-layer stack of 7x7 programmable metasurfaces at 28 GHz, serving 4
    single-antenna users on the ground.
    """

    # system
    M: int = 4                    # transmit antennas (kept equal to K)
    K: int = 4                    # single-antenna users
    N_x: int = 7                  # meta-atoms per layer along x
    N_y: int = 7                  # meta-atoms per layer along y
    L: int = 7                    # metasurface layers
    carrier_freq: float = 28e9    # Hz
    P_T: float = 10.0             # total transmit power budget, dBm

    # geometry
    H_BS: float = 10.0            # transmitter height above the users, m
    T_SIM: float = 5.0            # stack thickness, in wavelengths
    d_UE: float = 10.0            # user spacing on the ground, m
    element_spacing: float = 0.5  # antenna/meta-atom pitch, fraction of wavelength
    d_x: float | None = None      # meta-atom aperture along x, m (None: lambda/2)
    d_y: float | None = None      # meta-atom aperture along y, m (None: lambda/2)

    # channel
    C0: float = -60.0             # path loss at 1 m, dB
    alpha: float = 3.5            # path loss exponent
    noise_power: float = -104.0   # receiver noise power, dBm (same for every user)
    gain_bs: float = 5.0          # transmit antenna gain, dBi
    gain_ue: float = 0.0          # user antenna gain, dBi

    # optimizer
    damping: float = 0.5
    armijo_init: float = 1.0
    armijo_shrink: float = 0.5
    armijo_slope: float = 1e-4
    ao_tolerance: float = 1e-6
    inner_max: int = 100
    outer_max: int = 100

    # experiment
    base_seed: int = 0
    trial_count: int = 100

    # -- derived quantities ------------------------------------------------

    @property
    def N(self) -> int:
        """Meta-atoms per layer."""
        return self.N_x * self.N_y

    @property
    def wavelength(self) -> float:
        """Carrier wavelength in meters."""
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def meta_atom_size(self) -> tuple[float, float]:
        """Aperture (d_x, d_y) of one meta-atom in meters."""
        half = 0.5 * self.wavelength
        return (self.d_x if self.d_x is not None else half,
                self.d_y if self.d_y is not None else half)

    @property
    def p_t_mw(self) -> float:
        """Transmit power budget in mW."""
        return 10.0 ** (self.P_T / 10.0)

    @property
    def noise_mw(self) -> float:
        """Per-user noise power in mW."""
        return 10.0 ** (self.noise_power / 10.0)

    @property
    def c0_linear(self) -> float:
        """Reference path loss at 1 m, linear."""
        return 10.0 ** (self.C0 / 10.0)

    @property
    def gain_linear(self) -> float:
        """Combined transmit + receive antenna gain, linear."""
        return 10.0 ** ((self.gain_bs + self.gain_ue) / 10.0)

    def optimizer_params(self) -> OptimizerParams:
        return OptimizerParams(
            damping=self.damping,
            armijo_init=self.armijo_init,
            armijo_shrink=self.armijo_shrink,
            armijo_slope=self.armijo_slope,
            ao_tolerance=self.ao_tolerance,
            inner_max=self.inner_max,
            outer_max=self.outer_max,
        )

    def validate(self) -> "SimConfig":
        """Check every invariant; raise ConfigurationError with a field path."""
        if self.M < 1:
            raise ConfigurationError(f"system.M: must be >= 1, got {self.M}")
        if self.K < 1:
            raise ConfigurationError(f"system.K: must be >= 1, got {self.K}")
        if self.M != self.K:
            raise ConfigurationError(
                f"system.M: must equal system.K (single stream per antenna), "
                f"got M={self.M}, K={self.K}")
        if self.N_x < 1 or self.N_y < 1:
            raise ConfigurationError(
                f"system.N_x/N_y: must be >= 1, got {self.N_x}x{self.N_y}")
        if self.N_x != self.N_y:
            raise ConfigurationError(
                f"system.N_x: layers are square, N_x must equal N_y, "
                f"got {self.N_x}x{self.N_y}")
        if self.L < 1:
            raise ConfigurationError(f"system.L: must be >= 1, got {self.L}")
        if self.carrier_freq <= 0:
            raise ConfigurationError(
                f"system.carrier_freq: must be > 0, got {self.carrier_freq}")
        if not _finite(self.P_T):
            raise ConfigurationError(f"system.P_T: must be finite, got {self.P_T}")
        if self.H_BS < 0:
            raise ConfigurationError(f"geometry.H_BS: must be >= 0, got {self.H_BS}")
        if self.T_SIM <= 0:
            raise ConfigurationError(f"geometry.T_SIM: must be > 0, got {self.T_SIM}")
        if self.d_UE <= 0:
            raise ConfigurationError(f"geometry.d_UE: must be > 0, got {self.d_UE}")
        if self.element_spacing <= 0:
            raise ConfigurationError(
                f"geometry.element_spacing: must be > 0, got {self.element_spacing}")
        dx, dy = self.meta_atom_size
        if dx <= 0 or dy <= 0:
            raise ConfigurationError(
                f"geometry.d_x/d_y: must be > 0, got ({dx}, {dy})")
        if self.alpha <= 0:
            raise ConfigurationError(f"channel.alpha: must be > 0, got {self.alpha}")
        self.optimizer_params().validate()
        if self.trial_count < 1:
            raise ConfigurationError(
                f"sweep.trial_count: must be >= 1, got {self.trial_count}")
        return self


# Section layout of the on-disk config file. Key names mirror the
# SimConfig field names exactly.
_SECTIONS: dict[str, tuple[str, ...]] = {
    "system": ("M", "K", "N_x", "N_y", "L", "carrier_freq", "P_T"),
    "geometry": ("H_BS", "T_SIM", "d_UE", "element_spacing", "d_x", "d_y"),
    "channel": ("C0", "alpha", "noise_power", "gain_bs", "gain_ue"),
    "optimizer": ("damping", "armijo_init", "armijo_shrink", "armijo_slope",
                  "ao_tolerance", "inner_max", "outer_max"),
    "sweep": ("base_seed", "trial_count"),
}

# Keys allowed in the sweep section beyond SimConfig fields; they hold
# defaults for the sweep runner and are read separately by the CLI.
_SWEEP_EXTRAS = ("axis", "values", "schemes", "trials")

_INT_FIELDS = {"M", "K", "N_x", "N_y", "L", "inner_max", "outer_max",
               "base_seed", "trial_count"}


def load_config(path: str | Path) -> SimConfig:
    """Read a YAML config file; absent fields fall back to the defaults.

    An empty file yields the default SimConfig. Unknown sections or keys and
    invariant violations raise ConfigurationError naming the offending field.
    """
    raw = _read_yaml(path)
    kwargs: dict[str, object] = {}
    for section, content in raw.items():
        if section not in _SECTIONS:
            raise ConfigurationError(f"{section}: unknown config section")
        if content is None:
            continue
        if not isinstance(content, dict):
            raise ConfigurationError(f"{section}: expected a mapping of keys")
        allowed = _SECTIONS[section]
        for key, value in content.items():
            if key in _SWEEP_EXTRAS and section == "sweep":
                continue  # consumed by read_sweep_defaults
            if key not in allowed:
                raise ConfigurationError(f"{section}.{key}: unknown config key")
            kwargs[key] = _coerce(section, key, value)
    cfg = SimConfig(**kwargs)
    cfg.validate()
    return cfg


def read_sweep_defaults(path: str | Path) -> dict:
    """Return the sweep-runner defaults (axis, values, schemes, trials) from a
    config file, if present."""
    raw = _read_yaml(path)
    section = raw.get("sweep") or {}
    return {k: section[k] for k in _SWEEP_EXTRAS if k in section}


def save_config(config: SimConfig, path: str | Path) -> None:
    """Write a config in the same sectioned layout that load_config reads."""
    doc: dict[str, dict] = {}
    for section, keys in _SECTIONS.items():
        body = {}
        for key in keys:
            value = getattr(config, key)
            if value is None:
                continue
            body[key] = value
        doc[section] = body
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False))


def config_key(config: SimConfig) -> tuple:
    """Hashable fingerprint of a config, for caching built geometry/stacks."""
    return dataclasses.astuple(config)


def _read_yaml(path: str | Path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigurationError(f"config file not found: {p}")
    try:
        raw = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"malformed config file {p}: {exc}") from exc
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigurationError(f"config root must be a mapping, got {type(raw).__name__}")
    return raw


def _coerce(section: str, key: str, value: object):
    if value is None:
        return None
    if key in _INT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{section}.{key}: expected an integer, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{section}.{key}: expected a number, got {value!r}")
    return float(value)


def _finite(x: float) -> bool:
    return x == x and abs(x) != float("inf")
