"""Federated linear regression with an ideal and a distorted trajectory.

K devices hold equal shards of a synthetic least-squares task. Every round
each device takes one gradient step from the current global model and the
server averages the local models; the distorted trajectory additionally
picks up an aggregation error epsilon each round, either injected as white
Gaussian noise with total variance matching the single-round bound, or
realized by pushing the local models through the simulated air interface.
Both trajectories start from zero and see the same data, so their squared
distance A(t) isolates the accumulated aggregation error.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aggregation import ota_round
from .bounds import BoundParams, partial_bound, single_round_error
from .channel import ChannelConfig
from .ofdm import OfdmConfig

DISTORTION_MODES = ("none", "injected", "physical")


@dataclass(frozen=True)
class RegressionTask:
    """Synthetic least-squares data split evenly across devices."""

    x: np.ndarray  # (n, dim)
    y: np.ndarray  # (n,)
    w_true: np.ndarray  # (dim,)
    n_devices: int

    def shard(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        size = self.x.shape[0] // self.n_devices
        rows = slice(k * size, (k + 1) * size)
        return self.x[rows], self.y[rows]


@dataclass(frozen=True)
class FlConfig:
    n_devices: int = 10
    n_rounds: int = 50
    beta: float = 0.01  # local learning rate
    eta: float = 5.0  # distortion constant in the per-round bound factor
    dim: int = 128
    n_samples: int = 1000
    label_noise_std: float = 0.1
    distortion_mode: str = "injected"
    normalize: bool = True  # gain normalization in physical mode
    noise_std: float = 0.1  # per-subcarrier noise std in physical mode

    def __post_init__(self) -> None:
        if self.n_devices < 1 or self.n_rounds < 1 or self.dim < 1:
            raise ValueError("n_devices, n_rounds and dim must all be >= 1")
        if self.n_samples < self.n_devices or self.n_samples % self.n_devices != 0:
            raise ValueError(
                f"n_samples must be a positive multiple of n_devices, "
                f"got {self.n_samples} over {self.n_devices}"
            )
        if self.beta <= 0 or self.eta < 0 or self.label_noise_std < 0 or self.noise_std < 0:
            raise ValueError("beta must be > 0; eta and noise stds must be >= 0")
        if self.distortion_mode not in DISTORTION_MODES:
            raise ValueError(
                f"distortion_mode must be one of {DISTORTION_MODES}, got {self.distortion_mode!r}"
            )


@dataclass(frozen=True)
class RunResult:
    """Per-round records of one FL run; arrays are indexed by round 1..T."""

    rounds: np.ndarray  # (T,) round numbers
    loss_ideal: np.ndarray
    loss_dist: np.ndarray
    eps_sq: np.ndarray  # squared norm of the round's aggregation error
    a_t: np.ndarray  # squared distance between the trajectories
    partial_bound: np.ndarray  # (t+1+beta*eta) * e_t
    single_round: float  # e_t used for injection and the bound curve
    theta_ideal: np.ndarray
    theta_dist: np.ndarray


def gen_task(cfg: FlConfig, rng: np.random.Generator) -> RegressionTask:
    """Draw the design matrix, true weights and noisy labels.

    Draw order: x, w_true, label noise.
    """
    x = rng.standard_normal((cfg.n_samples, cfg.dim))
    w_true = rng.standard_normal(cfg.dim)
    y = x @ w_true + rng.normal(0.0, cfg.label_noise_std, cfg.n_samples)
    return RegressionTask(x=x, y=y, w_true=w_true, n_devices=cfg.n_devices)


def global_loss(task: RegressionTask, w: np.ndarray) -> float:
    r = task.x @ w - task.y
    return float(r @ r) / task.x.shape[0]


def local_gradient(task: RegressionTask, k: int, w: np.ndarray) -> np.ndarray:
    """Shard gradient (2/n_k) * X_k^T (X_k w - y_k)."""
    x_k, y_k = task.shard(k)
    return 2.0 / x_k.shape[0] * (x_k.T @ (x_k @ w - y_k))


def local_update(task: RegressionTask, k: int, w: np.ndarray, beta: float) -> np.ndarray:
    return w - beta * local_gradient(task, k, w)


def all_local_updates(task: RegressionTask, w: np.ndarray, beta: float) -> np.ndarray:
    """One gradient step on every shard at once, (K, dim)."""
    per = task.x.shape[0] // task.n_devices
    x_sh = task.x.reshape(task.n_devices, per, -1)
    y_sh = task.y.reshape(task.n_devices, per)
    resid = np.einsum("kij,j->ki", x_sh, w) - y_sh
    grads = 2.0 / per * np.einsum("kij,ki->kj", x_sh, resid)
    return w - beta * grads


def run(
    cfg: FlConfig,
    bparams: BoundParams,
    rng: np.random.Generator,
    ofdm: OfdmConfig | None = None,
    ch_cfg: ChannelConfig | None = None,
) -> RunResult:
    """Run the dual-trajectory experiment for cfg.n_rounds rounds.

    The bound side (e_t, per-round factor) comes from ``bparams`` evaluated
    once, with cfg.beta and cfg.eta in the factor. Physical mode requires
    ``ofdm`` and ``ch_cfg`` and needs ofdm.m == cfg.dim and matching device
    counts. Per round the distorted trajectory consumes rng draws after the
    gradients, so "none" mode leaves the stream untouched and reproduces the
    ideal trajectory bit for bit.
    """
    if cfg.distortion_mode == "physical":
        if ofdm is None or ch_cfg is None:
            raise ValueError("physical mode needs ofdm and channel configs")
        if ofdm.m != cfg.dim:
            raise ValueError(f"ofdm.m={ofdm.m} must equal model dim {cfg.dim}")
        if ch_cfg.n_devices != cfg.n_devices:
            raise ValueError(
                f"channel has {ch_cfg.n_devices} devices, fl config {cfg.n_devices}"
            )

    e_t = single_round_error(bparams).single_round
    task = gen_task(cfg, rng)
    theta_i = np.zeros(cfg.dim)
    theta_d = np.zeros(cfg.dim)

    cols = {name: np.empty(cfg.n_rounds) for name in
            ("loss_ideal", "loss_dist", "eps_sq", "a_t", "partial_bound")}
    for t in range(1, cfg.n_rounds + 1):
        theta_i = all_local_updates(task, theta_i, cfg.beta).mean(axis=0)
        locals_d = all_local_updates(task, theta_d, cfg.beta)
        mean_d = locals_d.mean(axis=0)
        if cfg.distortion_mode == "none":
            theta_d = mean_d
            eps_sq = 0.0
        elif cfg.distortion_mode == "injected":
            eps = rng.normal(0.0, np.sqrt(e_t / cfg.dim), cfg.dim)
            theta_d = mean_d + eps
            eps_sq = float(eps @ eps)
        else:
            est = ota_round(locals_d, ofdm, ch_cfg, cfg.noise_std, rng, cfg.normalize)
            theta_d = est.theta_hat
            eps_sq = est.epsilon_sq

        diff = theta_d - theta_i
        idx = t - 1
        cols["loss_ideal"][idx] = global_loss(task, theta_i)
        cols["loss_dist"][idx] = global_loss(task, theta_d)
        cols["eps_sq"][idx] = eps_sq
        cols["a_t"][idx] = float(diff @ diff)
        cols["partial_bound"][idx] = partial_bound(e_t, t, cfg.beta, cfg.eta)

    return RunResult(
        rounds=np.arange(1, cfg.n_rounds + 1),
        loss_ideal=cols["loss_ideal"],
        loss_dist=cols["loss_dist"],
        eps_sq=cols["eps_sq"],
        a_t=cols["a_t"],
        partial_bound=cols["partial_bound"],
        single_round=e_t,
        theta_ideal=theta_i,
        theta_dist=theta_d,
    )
