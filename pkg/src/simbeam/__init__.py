"""Wave-domain multiuser beamforming with stacked programmable metasurfaces.

The package models a transmitter whose antennas feed a stack of phase-
tunable metasurface layers, generates correlated Rayleigh user channels,
and maximizes the downlink sum rate by alternating damped water-filling
power allocation with gradient ascent on the layer phases.
"""

from .baselines import CodebookSpec, codebook_scheme, uniform_power_scheme
from .beamformer import (compose_beamformer, partial_products, random_phases,
                         wrap_phases)
from .channel import (ChannelSet, SpatialCovariance, build_covariance,
                      covariance_factor, path_loss, sample_channels)
from .config import (ConfigurationError, OptimizerParams, SimConfig,
                     load_config, save_config)
from .geometry import SimGeometry, build_geometry
from .harness import (ResultRow, SweepSpec, emit_trace, run_sweep, run_trial,
                      trial_context)
from .metrics import RateReport, effective_gains, rate_report, sinr, sum_rate
from .optimizer import (SolveResult, SolveTrace, alternating_optimize,
                        armijo_ascent_step, damped_power_iteration,
                        gradient_ascent, sum_rate_gradient, water_fill_update)
from .propagation import (PropagationStack, build_propagation_stack,
                          diffraction_coefficient)

__version__ = "0.1.0"
