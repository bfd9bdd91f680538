"""Time-varying multipath uplink channel with timing misalignment.

Each device-antenna-path tap is complex Gaussian CN(0, sigma_h^2), held for
one OFDM symbol and evolved between symbols by a stationary first-order
Gauss-Markov recursion  h' = sqrt(1 - alpha^2) * h + alpha * c  with
innovation c ~ CN(0, sigma_c^2). Timing offsets split into a per-round
misalignment delay (Gaussian around ``delay_mean``) and a per-symbol jitter
redrawn every symbol. Delays are in samples and may be fractional.

Two representations of the same channel are exposed: a sample-level
application of delayed frames (:func:`apply_time_domain`) and the subcarrier
coupling matrix (:func:`effective_frequency_channel`). For block-static taps
the matrix is diagonal with per-path phase exp(-j*2*pi*tau*v/F_sc) on
transmit subcarrier v, which is exactly what the DFT of a circularly delayed
frame produces, so the two routes agree to rounding; intra-symbol tap drift
populates the off-diagonal (inter-carrier) entries.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .ofdm import OfdmConfig

TAP_MODES = ("block_static", "intra_symbol_drift")


class DelayExceedsCp(ValueError):
    """A rounded path delay reaches past the cyclic prefix."""


@dataclass(frozen=True)
class ChannelConfig:
    n_devices: int
    n_antennas: int
    n_paths: int = 1
    sigma_h: float = 0.2
    sigma_c: float | None = None  # innovation std; None keeps the tap variance
    alpha: float = 0.0
    delay_mean: float = 0.0
    delay_std: float = 0.0
    symbol_jitter_std: float = 0.0
    tap_mode: str = "block_static"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_devices < 1 or self.n_antennas < 1 or self.n_paths < 1:
            raise ValueError("n_devices, n_antennas and n_paths must all be >= 1")
        if self.sigma_h < 0 or (self.sigma_c is not None and self.sigma_c < 0):
            raise ValueError("tap standard deviations must be >= 0")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.delay_std < 0 or self.symbol_jitter_std < 0:
            raise ValueError("delay spreads must be >= 0")
        if self.tap_mode not in TAP_MODES:
            raise ValueError(f"tap_mode must be one of {TAP_MODES}, got {self.tap_mode!r}")

    @property
    def innovation_std(self) -> float:
        return self.sigma_h if self.sigma_c is None else self.sigma_c


@dataclass(frozen=True)
class ChannelState:
    """Per-symbol channel realization for every (device, antenna, path)."""

    taps: np.ndarray  # (K, N, L) complex, value at the end of this symbol
    prev_taps: np.ndarray  # (K, N, L) complex, value at the end of the previous one
    misalign: np.ndarray  # (K, N, L) delays in samples, fixed for the round
    symbol_delay: np.ndarray  # (K, N, L) per-symbol jitter in samples
    symbol_index: int

    def total_delays(self) -> np.ndarray:
        return self.misalign + self.symbol_delay


@dataclass(frozen=True)
class EffectiveChannel:
    """Subcarrier coupling H[k, n, u, v] for one OFDM symbol."""

    h: np.ndarray  # (K, N, F_sc, F_sc) complex
    symbol_index: int

    def diagonal(self) -> np.ndarray:
        """Same-subcarrier gains H[k, n, u, u], shape (K, N, F_sc)."""
        return np.einsum("knuu->knu", self.h)


def complex_gaussian(rng: np.random.Generator, shape: tuple[int, ...], std: float) -> np.ndarray:
    """CN(0, std^2) draws; the real rail is drawn before the imaginary one."""
    z = rng.standard_normal((2,) + shape)
    return (z[0] + 1j * z[1]) * (std / np.sqrt(2.0))


def init_round(cfg: ChannelConfig, rng: np.random.Generator) -> ChannelState:
    """Fresh channel for a communication round, symbol index 0.

    Draw order: taps, misalignment delays, symbol jitter.
    """
    taps = complex_gaussian(rng, (cfg.n_devices, cfg.n_antennas, cfg.n_paths), cfg.sigma_h)
    misalign = rng.normal(cfg.delay_mean, cfg.delay_std, taps.shape)
    jitter = rng.normal(0.0, cfg.symbol_jitter_std, taps.shape)
    return ChannelState(
        taps=taps, prev_taps=taps, misalign=misalign, symbol_delay=jitter, symbol_index=0
    )


def evolve(state: ChannelState, cfg: ChannelConfig, rng: np.random.Generator) -> ChannelState:
    """Advance one symbol: Gauss-Markov tap step, fresh symbol jitter.

    With sigma_c = sigma_h the tap variance is invariant for any alpha.
    """
    innovation = complex_gaussian(rng, state.taps.shape, cfg.innovation_std)
    taps = np.sqrt(1.0 - cfg.alpha**2) * state.taps + cfg.alpha * innovation
    jitter = rng.normal(0.0, cfg.symbol_jitter_std, state.taps.shape)
    return ChannelState(
        taps=taps,
        prev_taps=state.taps,
        misalign=state.misalign,
        symbol_delay=jitter,
        symbol_index=state.symbol_index + 1,
    )


def per_sample_taps(state: ChannelState, cfg: ChannelConfig, f_sc: int) -> np.ndarray:
    """Tap value at each body sample, shape (K, N, L, F_sc).

    Block-static mode holds the symbol's taps; drift mode ramps linearly from
    the previous symbol's taps, landing exactly on the current ones at the
    last sample: h_i = prev + ((i+1)/F_sc) * (cur - prev).
    """
    if cfg.tap_mode == "block_static":
        tiled = np.broadcast_to(state.taps[..., None], state.taps.shape + (f_sc,))
        return np.ascontiguousarray(tiled)
    frac = (np.arange(f_sc) + 1.0) / f_sc
    return state.prev_taps[..., None] + frac * (state.taps - state.prev_taps)[..., None]


def effective_frequency_channel(
    state: ChannelState, cfg: ChannelConfig, ofdm: OfdmConfig, d: int | None = None
) -> EffectiveChannel:
    """Subcarrier coupling matrix for the state's symbol.

    H[k, n, u, v] = (1/F_sc) * sum_l sum_i h[k, n, l, i]
                      * exp(-j*2*pi*(i*(u - v) + v*tau[k, n, l]) / F_sc)

    where tau is the total (misalignment + jitter) delay. The i-sum is the
    DFT of the per-sample taps evaluated at offset u - v, so static taps
    couple only u = v while drift leaks into neighbouring subcarriers.
    """
    if d is not None and d != state.symbol_index:
        raise ValueError(f"state is at symbol {state.symbol_index}, requested {d}")
    f = ofdm.f_sc
    tap_dft = np.fft.fft(per_sample_taps(state, cfg, f), axis=-1)
    phase = np.exp(-2j * np.pi * state.total_delays()[..., None] * np.arange(f) / f)
    h = kernels.effective_channel_fill(
        np.ascontiguousarray(tap_dft), np.ascontiguousarray(phase)
    )
    return EffectiveChannel(h=h, symbol_index=state.symbol_index)


def _delayed_bodies(
    frames_d: np.ndarray, int_delays: np.ndarray, ofdm: OfdmConfig
) -> np.ndarray:
    """Integer-delayed body reads for one symbol, shape (K, N, L, F_sc).

    Reads run through the cyclic prefix (index f_cp + i - delay into the
    frame); a negative delay would run off the frame end and falls back to
    the circular extension of the body.
    """
    f, span = ofdm.f_sc, ofdm.f_cp + ofdm.f_sc
    i = np.arange(f)
    pos = ofdm.f_cp + i - int_delays[..., None]  # (K, N, L, F)
    wrapped = ofdm.f_cp + (i - int_delays[..., None]) % f
    pos = np.where((pos < 0) | (pos >= span), wrapped, pos)
    k_idx = np.arange(frames_d.shape[0])[:, None, None, None]
    return frames_d[k_idx, pos]


def apply_time_domain(
    frames: np.ndarray,
    states: ChannelState | Sequence[ChannelState],
    cfg: ChannelConfig,
    ofdm: OfdmConfig,
    noise_std: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Superimpose all devices' delayed frames at each antenna.

    ``frames`` is (K, D, F_cp + F_sc); ``states`` is one ChannelState per
    symbol (a single state is accepted for D = 1). Integer delay parts are
    applied as sample shifts read through the cyclic prefix, the fractional
    remainder as a frequency-domain phase ramp exp(-j*2*pi*frac*u/F_sc), and
    per-sample taps multiply the delayed stream at receive time. Returns
    (N, D, F_sc) post-CP-removal samples with CN(0, noise_std^2) noise per
    sample (drawn after the channel, one block per symbol).

    Raises DelayExceedsCp if any rounded total delay reaches the CP length.
    """
    frames = np.asarray(frames, dtype=np.complex128)
    if frames.ndim != 3 or frames.shape[-1] != ofdm.f_cp + ofdm.f_sc:
        raise ValueError(
            f"frames must be (K, D, {ofdm.f_cp + ofdm.f_sc}), got {frames.shape}"
        )
    if isinstance(states, ChannelState):
        states = [states]
    n_dev, n_sym, _ = frames.shape
    if n_dev != cfg.n_devices:
        raise ValueError(f"frames carry {n_dev} devices, config says {cfg.n_devices}")
    if len(states) != n_sym:
        raise ValueError(f"need one state per symbol: {len(states)} states, {n_sym} symbols")

    f = ofdm.f_sc
    out = np.empty((cfg.n_antennas, n_sym, f), dtype=np.complex128)
    for d, state in enumerate(states):
        tau = state.total_delays()
        int_delays = np.rint(tau).astype(np.int64)
        if np.any(int_delays >= ofdm.f_cp):
            worst = float(tau.max())
            raise DelayExceedsCp(
                f"rounded delay {int_delays.max()} >= f_cp {ofdm.f_cp} (delay {worst:.3f})"
            )
        bodies = _delayed_bodies(frames[:, d], int_delays, ofdm)
        frac = tau - int_delays
        if np.any(frac != 0.0):
            ramp = np.exp(-2j * np.pi * frac[..., None] * np.arange(f) / f)
            bodies = np.fft.ifft(np.fft.fft(bodies, axis=-1) * ramp, axis=-1)
        taps_t = np.ascontiguousarray(per_sample_taps(state, cfg, f), dtype=np.complex128)
        out[:, d] = kernels.tap_reduce(taps_t, np.ascontiguousarray(bodies))
        if noise_std > 0.0:
            out[:, d] += complex_gaussian(rng, (cfg.n_antennas, f), noise_std)
    return out
