"""Dual-trajectory federated regression runs."""
from __future__ import annotations

import numpy as np
import pytest

import otafl.fl
from otafl.bounds import BoundParams, single_round_error
from otafl.channel import ChannelConfig, ChannelState
from otafl.fl import (
    FlConfig,
    all_local_updates,
    gen_task,
    global_loss,
    local_gradient,
    local_update,
    run,
)
from otafl.ofdm import OfdmConfig

BP = BoundParams()
E_T = single_round_error(BP).single_round


def small_cfg(**kw) -> FlConfig:
    base = dict(n_devices=4, n_rounds=10, dim=16, n_samples=80, distortion_mode="injected")
    base.update(kw)
    return FlConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        small_cfg(n_samples=81)  # not a device multiple
    with pytest.raises(ValueError):
        small_cfg(beta=0.0)
    with pytest.raises(ValueError):
        small_cfg(distortion_mode="air")
    with pytest.raises(ValueError):
        small_cfg(n_rounds=0)


def test_gen_task_is_deterministic_and_centred():
    cfg = FlConfig(n_devices=10, dim=64, n_samples=1000)
    a = gen_task(cfg, np.random.default_rng(0))
    b = gen_task(cfg, np.random.default_rng(0))
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.y, b.y)
    assert np.max(np.abs(a.x.mean(axis=0))) < 4.0 / np.sqrt(cfg.n_samples)
    xs, ys = a.shard(3)
    assert xs.shape == (100, 64)
    np.testing.assert_array_equal(ys, a.y[300:400])


def test_gradient_zero_at_truth_without_label_noise():
    cfg = small_cfg(label_noise_std=0.0)
    task = gen_task(cfg, np.random.default_rng(1))
    for k in range(cfg.n_devices):
        np.testing.assert_allclose(local_gradient(task, k, task.w_true), 0.0, atol=1e-10)


def test_gradient_matches_central_differences():
    cfg = small_cfg()
    task = gen_task(cfg, np.random.default_rng(2))
    rng = np.random.default_rng(3)

    def shard_loss(k, w):
        xs, ys = task.shard(k)
        r = xs @ w - ys
        return float(r @ r) / xs.shape[0]

    h = 1e-6
    for _ in range(20):
        k = int(rng.integers(cfg.n_devices))
        w = rng.standard_normal(cfg.dim)
        grad = local_gradient(task, k, w)
        fd = np.empty_like(grad)
        for i in range(cfg.dim):
            e = np.zeros(cfg.dim)
            e[i] = h
            fd[i] = (shard_loss(k, w + e) - shard_loss(k, w - e)) / (2 * h)
        assert np.linalg.norm(fd - grad) / np.linalg.norm(grad) < 1e-6


def test_gradient_hand_oracle_2x2():
    # X = [[1,0],[1,1]], y = [1,3], w = [1,1]: residual [0,-1], grad = X^T r
    task = otafl.fl.RegressionTask(
        x=np.array([[1.0, 0.0], [1.0, 1.0]]), y=np.array([1.0, 3.0]),
        w_true=np.zeros(2), n_devices=1,
    )
    np.testing.assert_allclose(
        local_gradient(task, 0, np.array([1.0, 1.0])), [-1.0, -1.0], atol=1e-14
    )


def test_local_update_scalar_oracle():
    # X=[1], y=2, w=0, beta=0.5: gradient -4, one step lands on w=2
    task = otafl.fl.RegressionTask(
        x=np.array([[1.0]]), y=np.array([2.0]), w_true=np.array([2.0]), n_devices=1
    )
    out = local_update(task, 0, np.array([0.0]), 0.5)
    np.testing.assert_allclose(out, [2.0], atol=1e-14)
    np.testing.assert_array_equal(local_update(task, 0, np.array([0.7]), 0.0), [0.7])


def test_all_local_updates_matches_per_device():
    cfg = small_cfg()
    task = gen_task(cfg, np.random.default_rng(4))
    w = np.random.default_rng(5).standard_normal(cfg.dim)
    batched = all_local_updates(task, w, cfg.beta)
    for k in range(cfg.n_devices):
        np.testing.assert_allclose(batched[k], local_update(task, k, w, cfg.beta), atol=1e-12)


def test_global_loss_matches_definition():
    cfg = small_cfg()
    task = gen_task(cfg, np.random.default_rng(6))
    w = np.zeros(cfg.dim)
    assert global_loss(task, w) == pytest.approx(float(np.mean(task.y**2)), rel=1e-12)


def test_run_none_mode_trajectories_coincide():
    res = run(small_cfg(distortion_mode="none"), BP, np.random.default_rng(7))
    np.testing.assert_array_equal(res.a_t, 0.0)
    np.testing.assert_array_equal(res.eps_sq, 0.0)
    np.testing.assert_array_equal(res.theta_dist, res.theta_ideal)
    np.testing.assert_array_equal(res.loss_dist, res.loss_ideal)
    assert res.rounds[0] == 1 and res.rounds[-1] == 10


def test_run_bound_column():
    cfg = small_cfg(eta=5.0)
    res = run(cfg, BP, np.random.default_rng(8))
    assert res.single_round == pytest.approx(E_T, rel=1e-12)
    expected = (np.arange(1, 11) + 1 + cfg.beta * cfg.eta) * E_T
    np.testing.assert_allclose(res.partial_bound, expected, rtol=1e-12)


def test_run_losses_decrease():
    res = run(small_cfg(distortion_mode="none", n_rounds=100), BP, np.random.default_rng(9))
    assert np.all(np.diff(res.loss_ideal) <= 1e-12)
    assert res.loss_ideal[-1] < res.loss_ideal[0] / 10


def test_injected_epsilon_mean_power():
    # 50 seeds x 200 rounds: the mean injected power lands on e_t within 5%
    cfg = FlConfig(n_devices=4, n_rounds=200, dim=64, n_samples=80,
                   distortion_mode="injected")
    total, count = 0.0, 0
    for s in range(50):
        res = run(cfg, BP, np.random.default_rng([20, s]))
        total += float(res.eps_sq.sum())
        count += cfg.n_rounds
    assert total / count == pytest.approx(E_T, rel=0.05)


def test_injected_determinism():
    cfg = small_cfg()
    a = run(cfg, BP, np.random.default_rng(10))
    b = run(cfg, BP, np.random.default_rng(10))
    np.testing.assert_array_equal(a.a_t, b.a_t)
    np.testing.assert_array_equal(a.theta_dist, b.theta_dist)


def test_physical_mode_requires_consistent_setup():
    cfg = small_cfg(distortion_mode="physical")
    with pytest.raises(ValueError):
        run(cfg, BP, np.random.default_rng(11))  # missing air-interface configs
    ofdm = OfdmConfig(m=32, f_sc=8, f_cp=2)
    ch = ChannelConfig(n_devices=4, n_antennas=3)
    with pytest.raises(ValueError):
        run(cfg, BP, np.random.default_rng(11), ofdm=ofdm, ch_cfg=ch)  # dim mismatch
    with pytest.raises(ValueError):
        run(cfg, BP, np.random.default_rng(11),
            ofdm=OfdmConfig(m=16, f_sc=8, f_cp=2),
            ch_cfg=ChannelConfig(n_devices=5, n_antennas=3))


def test_physical_mode_runs_and_distorts():
    cfg = small_cfg(distortion_mode="physical", n_rounds=3, noise_std=0.1)
    ofdm = OfdmConfig(m=16, f_sc=8, f_cp=4)
    ch = ChannelConfig(n_devices=4, n_antennas=3, delay_mean=0.1, delay_std=0.01)
    res = run(cfg, BP, np.random.default_rng(12), ofdm=ofdm, ch_cfg=ch)
    assert np.all(res.eps_sq > 0)
    assert np.all(res.a_t > 0)


def test_physical_mode_ideal_channel_matches_none(monkeypatch):
    # pin the channel draw to unit taps and zero delays: the air interface
    # becomes an exact pass-through and the distorted trajectory collapses
    # onto the ideal one
    def ideal_init(ch_cfg, rng):
        shape = (ch_cfg.n_devices, ch_cfg.n_antennas, ch_cfg.n_paths)
        ones = np.ones(shape, dtype=np.complex128)
        zeros = np.zeros(shape)
        return ChannelState(taps=ones, prev_taps=ones, misalign=zeros,
                            symbol_delay=zeros, symbol_index=0)

    monkeypatch.setattr("otafl.aggregation.init_round", ideal_init)
    cfg = small_cfg(distortion_mode="physical", noise_std=0.0)
    ofdm = OfdmConfig(m=16, f_sc=8, f_cp=4)
    ch = ChannelConfig(n_devices=4, n_antennas=3, alpha=0.0)
    res = run(cfg, BP, np.random.default_rng(13), ofdm=ofdm, ch_cfg=ch)
    assert float(res.a_t.max()) < 1e-16
    none = run(small_cfg(distortion_mode="none"), BP, np.random.default_rng(13))
    np.testing.assert_allclose(res.theta_dist, none.theta_ideal, atol=1e-8)
