"""Over-the-air aggregation: MRC combining and the error decomposition.

Every device transmits its parameter symbols simultaneously; each receive
antenna therefore observes the superposition through its own channel. The
server combines antennas with the conjugate of the summed same-subcarrier
gains (maximum-ratio weights for the sum signal), and the combined output
splits exactly into four parts: the |H|^2-weighted desired average,
same-subcarrier cross-device interference, inter-carrier leakage, and
combined noise. ``decompose`` computes each part by direct summation so the
identity  desired + same_subcarrier + ici + noise = combined  can be checked
against :func:`mrc_combine` independently.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import (
    ChannelConfig,
    ChannelState,
    EffectiveChannel,
    apply_time_domain,
    complex_gaussian,
    effective_frequency_channel,
    evolve,
    init_round,
)
from .ofdm import OfdmConfig, demodulate, modulate, pack_parameters, unpack_estimate


@dataclass(frozen=True)
class ErrorBreakdown:
    """Additive split of the combined subcarrier estimate.

    Arrays share one shape, (F_sc,) for a single symbol or (D, F_sc) for a
    full round. Powers are mean squared magnitudes over all entries.
    """

    desired: np.ndarray
    same_subcarrier: np.ndarray
    ici: np.ndarray
    noise: np.ndarray

    def total(self) -> np.ndarray:
        return self.desired + self.same_subcarrier + self.ici + self.noise

    @property
    def same_subcarrier_power(self) -> float:
        return float(np.mean(np.abs(self.same_subcarrier) ** 2))

    @property
    def ici_power(self) -> float:
        return float(np.mean(np.abs(self.ici) ** 2))

    @property
    def noise_power(self) -> float:
        return float(np.mean(np.abs(self.noise) ** 2))


@dataclass(frozen=True)
class RoundEstimate:
    """Result of one over-the-air aggregation round."""

    theta_hat: np.ndarray  # (M,) recovered parameter average
    epsilon: np.ndarray  # (M,) theta_hat minus the true device mean
    epsilon_sq: float  # squared norm of epsilon
    combined: np.ndarray  # (D, F_sc) raw MRC output, before normalization
    breakdown: ErrorBreakdown  # terms of the raw combined output
    normalizer: np.ndarray | None  # (D, F_sc) gain divisor, None if off


def mrc_combine(y: np.ndarray, eff: EffectiveChannel) -> np.ndarray:
    """Combine one symbol's antenna spectra, (N, F_sc) -> (F_sc,).

    Yhat_u = (1/N) * sum_n conj(sum_k H[k, n, u, u]) * y[n, u]
    """
    comb = eff.diagonal().sum(axis=0)  # (N, F_sc)
    if y.shape != comb.shape:
        raise ValueError(f"y must have shape {comb.shape}, got {y.shape}")
    return np.einsum("nu,nu->u", np.conj(comb), y) / comb.shape[0]


def gain_normalizer(eff: EffectiveChannel) -> np.ndarray:
    """Average combiner energy per subcarrier, (F_sc,).

    gamma_u = (1/(N*K)) * sum_n |sum_k H[k, n, u, u]|^2. Dividing the raw
    combined output by gamma_u makes the all-ones channel recover the device
    mean exactly and removes the systematic L*sigma_h^2 amplitude bias for
    random channels.
    """
    n_dev, n_ant = eff.h.shape[:2]
    comb = eff.diagonal().sum(axis=0)
    return np.sum(np.abs(comb) ** 2, axis=0) / (n_ant * n_dev)


def decompose(eff: EffectiveChannel, symbols: np.ndarray, noise_f: np.ndarray) -> ErrorBreakdown:
    """Four-way split of the combined estimate for one symbol.

    ``symbols`` is (K, F_sc) transmitted subcarrier values, ``noise_f`` the
    (N, F_sc) post-DFT noise. With G_n = sum_k H[k, n, u, u]:

      desired          (1/N) sum_n sum_k |H[k,n,u,u]|^2 * symbols[k,u]
      same_subcarrier  (1/N) sum_n sum_k sum_{k'!=k} conj(H[k,n,u,u]) H[k',n,u,u] symbols[k',u]
      ici              (1/N) sum_n conj(G_n) * sum_{v!=u} sum_k H[k,n,u,v] symbols[k,v]
      noise            (1/N) sum_n conj(G_n) * noise_f[n,u]

    The four terms sum to mrc_combine of the noisy channel output exactly.
    """
    diag = eff.diagonal()  # (K, N, F_sc)
    n_dev, n_ant, f_sc = diag.shape
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.shape != (n_dev, f_sc):
        raise ValueError(f"symbols must have shape {(n_dev, f_sc)}, got {symbols.shape}")
    if noise_f.shape != (n_ant, f_sc):
        raise ValueError(f"noise_f must have shape {(n_ant, f_sc)}, got {noise_f.shape}")

    comb = diag.sum(axis=0)  # (N, F_sc)
    desired = np.einsum("knu,ku->u", np.abs(diag) ** 2, symbols) / n_ant
    all_pairs = np.einsum("knu,mnu,mu->u", np.conj(diag), diag, symbols)
    diag_pairs = np.einsum("knu,knu,ku->u", np.conj(diag), diag, symbols)
    same = (all_pairs - diag_pairs) / n_ant

    off = eff.h.copy()
    idx = np.arange(f_sc)
    off[:, :, idx, idx] = 0.0
    leaked = np.einsum("knuv,kv->nu", off, symbols)
    ici = np.einsum("nu,nu->u", np.conj(comb), leaked) / n_ant
    noise = np.einsum("nu,nu->u", np.conj(comb), noise_f) / n_ant
    return ErrorBreakdown(desired=desired, same_subcarrier=same, ici=ici, noise=noise)


def ota_round(
    models: np.ndarray,
    ofdm: OfdmConfig,
    ch_cfg: ChannelConfig,
    noise_std: float,
    rng: np.random.Generator,
    normalize: bool = True,
    states: list[ChannelState] | None = None,
) -> RoundEstimate:
    """Transmit all device models through one simulated round.

    ``models`` is (K, M); ``noise_std`` is the per-subcarrier noise std of
    the analysis (the per-sample time-domain std is noise_std/sqrt(F_sc),
    since the unscaled receive DFT multiplies sample variance by F_sc).

    Draw order per round: channel init, one evolve per extra symbol, then
    one noise block for the whole frame. Pass ``states`` to reuse a known
    channel realization. The reported breakdown refers to the raw combined
    output; normalization only rescales the recovered parameters.
    """
    models = np.asarray(models, dtype=np.float64)
    if models.ndim != 2 or models.shape != (ch_cfg.n_devices, ofdm.m):
        raise ValueError(
            f"models must have shape {(ch_cfg.n_devices, ofdm.m)}, got {models.shape}"
        )
    n_dev = ch_cfg.n_devices
    n_sym, f_sc = ofdm.n_symbols, ofdm.f_sc

    symbols = np.stack([pack_parameters(models[k], ofdm) for k in range(n_dev)])
    frames = modulate(symbols, ofdm)

    if states is None:
        state = init_round(ch_cfg, rng)
        states = [state]
        for _ in range(1, n_sym):
            state = evolve(state, ch_cfg, rng)
            states.append(state)
    elif len(states) != n_sym:
        raise ValueError(f"need {n_sym} channel states, got {len(states)}")

    clean = apply_time_domain(frames, states, ch_cfg, ofdm, 0.0, rng)
    noise_t = complex_gaussian(rng, clean.shape, noise_std / np.sqrt(f_sc))
    y = demodulate(clean + noise_t, ofdm)  # (N, D, F_sc)
    noise_spec = np.fft.fft(noise_t, axis=-1)

    combined = np.empty((n_sym, f_sc), dtype=np.complex128)
    scaled = np.empty_like(combined)
    norm = np.empty((n_sym, f_sc)) if normalize else None
    parts = []
    for d, st in enumerate(states):
        eff = effective_frequency_channel(st, ch_cfg, ofdm)
        combined[d] = mrc_combine(y[:, d], eff)
        parts.append(decompose(eff, symbols[:, d], noise_spec[:, d]))
        if normalize:
            norm[d] = gain_normalizer(eff)
            scaled[d] = combined[d] / norm[d]
        else:
            scaled[d] = combined[d]

    breakdown = ErrorBreakdown(
        desired=np.stack([p.desired for p in parts]),
        same_subcarrier=np.stack([p.same_subcarrier for p in parts]),
        ici=np.stack([p.ici for p in parts]),
        noise=np.stack([p.noise for p in parts]),
    )
    theta_hat = unpack_estimate(scaled, n_dev, ofdm)
    epsilon = theta_hat - models.mean(axis=0)
    return RoundEstimate(
        theta_hat=theta_hat,
        epsilon=epsilon,
        epsilon_sq=float(epsilon @ epsilon),
        combined=combined,
        breakdown=breakdown,
        normalizer=norm,
    )
