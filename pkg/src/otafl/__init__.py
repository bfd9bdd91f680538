"""Over-the-air federated learning aggregation-error toolkit.

Simulates OFDM-based simultaneous model uploads through misaligned,
time-varying Rayleigh channels, decomposes the combined estimate's error,
evaluates closed-form bounds on each error term, validates them by Monte
Carlo, and measures how the per-round error accumulates over a federated
linear-regression run.
"""

__version__ = "0.1.0"

from .aggregation import ErrorBreakdown, RoundEstimate, decompose, gain_normalizer, mrc_combine, ota_round
from .bounds import (
    BoundParams,
    BoundReport,
    McCheck,
    accumulated_bound,
    gaussian_sinc_sq_factor,
    ici_bound,
    ici_weight,
    interference_bound,
    mc_antenna_scaling,
    mc_validate_ici,
    mc_validate_interference,
    noise_bound,
    partial_bound,
    single_round_error,
)
from .channel import (
    ChannelConfig,
    ChannelState,
    DelayExceedsCp,
    EffectiveChannel,
    apply_time_domain,
    effective_frequency_channel,
    evolve,
    init_round,
)
from .fl import FlConfig, RegressionTask, RunResult, gen_task, global_loss, local_gradient, local_update, run
from .ofdm import OfdmConfig, demodulate, modulate, pack_parameters, strip_cp, unpack_estimate

__all__ = [name for name in dir() if not name.startswith("_")]
