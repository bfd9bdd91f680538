"""Hot numeric kernels with numba and pure-numpy twin implementations.

Backend selection: the ``OTAFL_BACKEND`` environment variable picks ``"numba"``
or ``"numpy"``; the default ``"auto"`` uses numba when it imports. Both twins
of every kernel stay importable (``*_np`` / ``*_nb``) so tests and the
benchmark can compare them directly.
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on stripped installs
    njit = None
    HAS_NUMBA = False

_BACKEND = os.environ.get("OTAFL_BACKEND", "auto").strip().lower()
if _BACKEND not in ("auto", "numba", "numpy"):
    raise RuntimeError(f"OTAFL_BACKEND must be auto, numba or numpy, got {_BACKEND!r}")
if _BACKEND == "numba" and not HAS_NUMBA:
    raise RuntimeError("OTAFL_BACKEND=numba but numba is not importable")

USE_NUMBA = HAS_NUMBA and _BACKEND != "numpy"


def active_backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# Effective frequency-channel fill.
#
# tap_dft[k, n, l, :] is the unscaled DFT of one path's per-sample taps over
# the symbol body; delay_phase[k, n, l, v] = exp(-j*2*pi*tau*v/F). The output
# couples receive subcarrier u to transmit subcarrier v:
#   H[k, n, u, v] = (1/F) * sum_l tap_dft[k, n, l, (u-v) % F] * delay_phase[k, n, l, v]

def effective_channel_fill_np(tap_dft: np.ndarray, delay_phase: np.ndarray) -> np.ndarray:
    n_dev, n_ant, n_path, f_sc = tap_dft.shape
    diff = (np.arange(f_sc)[:, None] - np.arange(f_sc)[None, :]) % f_sc
    out = np.zeros((n_dev, n_ant, f_sc, f_sc), dtype=np.complex128)
    for path in range(n_path):
        out += tap_dft[:, :, path][:, :, diff] * delay_phase[:, :, path, None, :]
    out /= f_sc
    return out


def _effective_channel_fill_nb(tap_dft, delay_phase):  # pragma: no cover - jit body
    n_dev, n_ant, n_path, f_sc = tap_dft.shape
    out = np.zeros((n_dev, n_ant, f_sc, f_sc), dtype=np.complex128)
    for k in range(n_dev):
        for n in range(n_ant):
            for l in range(n_path):
                for u in range(f_sc):
                    for v in range(f_sc):
                        out[k, n, u, v] += (
                            tap_dft[k, n, l, (u - v) % f_sc] * delay_phase[k, n, l, v]
                        )
    return out / f_sc


# ---------------------------------------------------------------------------
# Time-domain path accumulation: multiply each delayed body by its per-sample
# taps and reduce over devices and paths.
#   out[n, i] = sum_{k, l} taps_t[k, n, l, i] * bodies[k, n, l, i]

def tap_reduce_np(taps_t: np.ndarray, bodies: np.ndarray) -> np.ndarray:
    return np.einsum("knli,knli->ni", taps_t, bodies)


def _tap_reduce_nb(taps_t, bodies):  # pragma: no cover - jit body
    n_dev, n_ant, n_path, f_sc = taps_t.shape
    out = np.zeros((n_ant, f_sc), dtype=np.complex128)
    for k in range(n_dev):
        for n in range(n_ant):
            for l in range(n_path):
                for i in range(f_sc):
                    out[n, i] += taps_t[k, n, l, i] * bodies[k, n, l, i]
    return out


# ---------------------------------------------------------------------------
# Monte-Carlo reductions for the bound validators. Both take pre-drawn
# randoms so results are identical (up to rounding) across backends.
#
# pair_product_sq_sum: channels h[t, n, k], attenuations s[t, k-1] for the
# pairs (k, 0), k >= 1. Per trial
#   kappa_t = (1/N) * sum_n sum_{k>=1} conj(h[t, n, k]) * h[t, n, 0] * s[t, k-1]
# and the return value is sum_t |kappa_t|^2.

def pair_product_sq_sum_np(h: np.ndarray, s: np.ndarray) -> float:
    n_ant = h.shape[1]
    prod = np.conj(h[:, :, 1:]) * h[:, :, :1]
    kappa = np.einsum("tnk,tk->t", prod, s.astype(np.complex128)) / n_ant
    return float(np.sum(kappa.real**2 + kappa.imag**2))


def _pair_product_sq_sum_nb(h, s):  # pragma: no cover - jit body
    n_tr, n_ant, n_dev = h.shape
    total = 0.0
    for t in range(n_tr):
        acc = 0.0 + 0.0j
        for n in range(n_ant):
            for k in range(1, n_dev):
                acc += np.conj(h[t, n, k]) * h[t, n, 0] * s[t, k - 1]
        acc /= n_ant
        total += acc.real**2 + acc.imag**2
    return total


# cross_subcarrier_sq_sum: independent channels a, b at two subcarriers,
# shared per-device attenuation s[t, k]. Per trial
#   zeta_t = (1/N) * sum_{n, k} conj(a[t, n, k]) * b[t, n, k] * s[t, k]
# and the return value is sum_t |zeta_t|^2.

def cross_subcarrier_sq_sum_np(a: np.ndarray, b: np.ndarray, s: np.ndarray) -> float:
    n_ant = a.shape[1]
    zeta = np.einsum("tnk,tk->t", np.conj(a) * b, s.astype(np.complex128)) / n_ant
    return float(np.sum(zeta.real**2 + zeta.imag**2))


def _cross_subcarrier_sq_sum_nb(a, b, s):  # pragma: no cover - jit body
    n_tr, n_ant, n_dev = a.shape
    total = 0.0
    for t in range(n_tr):
        acc = 0.0 + 0.0j
        for n in range(n_ant):
            for k in range(n_dev):
                acc += np.conj(a[t, n, k]) * b[t, n, k] * s[t, k]
        acc /= n_ant
        total += acc.real**2 + acc.imag**2
    return total


if HAS_NUMBA:
    effective_channel_fill_nb = njit(cache=True)(_effective_channel_fill_nb)
    tap_reduce_nb = njit(cache=True)(_tap_reduce_nb)
    pair_product_sq_sum_nb = njit(cache=True)(_pair_product_sq_sum_nb)
    cross_subcarrier_sq_sum_nb = njit(cache=True)(_cross_subcarrier_sq_sum_nb)
else:  # pragma: no cover
    effective_channel_fill_nb = None
    tap_reduce_nb = None
    pair_product_sq_sum_nb = None
    cross_subcarrier_sq_sum_nb = None

if USE_NUMBA:
    effective_channel_fill = effective_channel_fill_nb
    tap_reduce = tap_reduce_nb
    pair_product_sq_sum = pair_product_sq_sum_nb
    cross_subcarrier_sq_sum = cross_subcarrier_sq_sum_nb
else:
    effective_channel_fill = effective_channel_fill_np
    tap_reduce = tap_reduce_np
    pair_product_sq_sum = pair_product_sq_sum_np
    cross_subcarrier_sq_sum = cross_subcarrier_sq_sum_np
