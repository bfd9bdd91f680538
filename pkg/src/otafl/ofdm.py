"""OFDM mapping between model-parameter vectors and time-domain frames.

A length-M real parameter vector is packed into D = ceil(M / (2*F_sc)) complex
subcarrier symbols (first half of each block on the real rail, second half on
the imaginary rail, zero-padded), sent through an IDFT with a cyclic prefix,
and recovered at the receiver by a plain DFT. The transmit side carries the
1/F_sc scaling, the receive side none, so ``demodulate(strip_cp(modulate(s)))``
is the identity up to rounding.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OfdmConfig:
    """Frame geometry: parameter count, subcarriers, cyclic-prefix length."""

    m: int
    f_sc: int
    f_cp: int

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.f_sc < 1:
            raise ValueError(f"f_sc must be >= 1, got {self.f_sc}")
        if not 0 <= self.f_cp <= self.f_sc:
            raise ValueError(f"f_cp must lie in [0, f_sc], got {self.f_cp}")

    @property
    def n_symbols(self) -> int:
        """Number of OFDM symbols needed for one parameter vector."""
        return -(-self.m // (2 * self.f_sc))

    @property
    def pad(self) -> int:
        """Zeros appended to fill the last symbol's two rails."""
        return 2 * self.n_symbols * self.f_sc - self.m


def pack_parameters(theta: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    """Map a real parameter vector onto complex subcarrier symbols.

    Returns a (D, F_sc) complex array. Block d carries parameters
    [2*d*F_sc, (2*d+1)*F_sc) on the real part and the following F_sc on the
    imaginary part; missing entries are zero.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim != 1 or theta.shape[0] != cfg.m:
        raise ValueError(f"theta must have shape ({cfg.m},), got {theta.shape}")
    padded = np.zeros(2 * cfg.n_symbols * cfg.f_sc)
    padded[: cfg.m] = theta
    rails = padded.reshape(cfg.n_symbols, 2, cfg.f_sc)
    return rails[:, 0] + 1j * rails[:, 1]


def modulate(symbols: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    """IDFT each symbol and prepend the cyclic prefix.

    Input (..., F_sc) subcarrier values, output (..., F_cp + F_sc) samples.
    """
    body = np.fft.ifft(symbols, axis=-1)
    return np.concatenate([body[..., cfg.f_sc - cfg.f_cp :], body], axis=-1)


def strip_cp(frame: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    """Drop the cyclic prefix, keeping the F_sc body samples."""
    return frame[..., cfg.f_cp :]


def demodulate(received: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    """Unscaled DFT of CP-stripped symbols, (..., F_sc) -> (..., F_sc)."""
    if received.shape[-1] != cfg.f_sc:
        raise ValueError(
            f"expected {cfg.f_sc} body samples on the last axis, got {received.shape[-1]}"
        )
    return np.fft.fft(received, axis=-1)


def unpack_estimate(combined: np.ndarray, n_devices: int, cfg: OfdmConfig) -> np.ndarray:
    """Invert :func:`pack_parameters` on combined symbols, dividing by K.

    ``combined`` is (D, F_sc); the real and imaginary rails are interleaved
    back into a length-M vector and the padding is dropped.
    """
    if n_devices < 1:
        raise ValueError(f"n_devices must be >= 1, got {n_devices}")
    combined = np.atleast_2d(np.asarray(combined, dtype=np.complex128))
    if combined.shape != (cfg.n_symbols, cfg.f_sc):
        raise ValueError(
            f"combined must have shape ({cfg.n_symbols}, {cfg.f_sc}), got {combined.shape}"
        )
    rails = np.stack([combined.real, combined.imag], axis=1)  # (D, 2, F_sc)
    return rails.reshape(-1)[: cfg.m] / n_devices
