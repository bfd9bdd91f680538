"""Closed-form error terms and their Monte-Carlo validators.

Reference values are frozen from independent hand arithmetic; the Gaussian
expectation of the Lorentzian factor is cross-checked by direct sampling.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from otafl.bounds import (
    MIN_TRIALS,
    BoundParams,
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

P = BoundParams()  # K=10, N=5, L=1, sigma_h=0.2, sigma_z=0.1, mu=0.1, sigma=0.01

# frozen by hand: spread 1/sqrt(1+4*pi^2*g^2*sigma^2/F^2), centre 1/(1+(2*pi*g^m*mu/F)^2)
FACTOR_1 = 0.9999031445657949
FACTOR_2 = 0.9984583241187724
INTERFERENCE = 0.0028797210563494898  # 1.8 * 0.0016 * FACTOR_1
ICI = 0.00319876537752445  # 0.0032 * (0.8 * FACTOR_1 + 0.2 * FACTOR_2)
NOISE = 8.0e-4  # 10 * 0.04 * 0.01 / 5
E_T = 0.00687848643387394


def test_params_validation():
    with pytest.raises(ValueError):
        BoundParams(n_devices=0)
    with pytest.raises(ValueError):
        BoundParams(sigma_tau=-0.1)
    with pytest.raises(ValueError):
        BoundParams(gamma=0.0)
    with pytest.raises(ValueError):
        BoundParams(ici_mu_exponent=3)
    with pytest.raises(ValueError):
        BoundParams(eta=5.0, lipschitz=2.0)  # eta must not exceed lipschitz^2
    assert BoundParams(eta=4.0, lipschitz=2.0).eta == 4.0


def test_factor_is_one_without_timing_error():
    for gap in (1, 2, 5):
        assert gaussian_sinc_sq_factor(0.0, 0.0, 64, gap) == 1.0
    with pytest.raises(ValueError):
        gaussian_sinc_sq_factor(0.1, 0.01, 64, 0)


def test_factor_frozen_values():
    assert gaussian_sinc_sq_factor(0.1, 0.01, 64, 1) == pytest.approx(FACTOR_1, rel=1e-14)
    assert gaussian_sinc_sq_factor(0.1, 0.01, 64, 2) == pytest.approx(FACTOR_2, rel=1e-14)
    # the gap enters the mean term linearly under the alternative exponent
    assert gaussian_sinc_sq_factor(0.1, 0.01, 64, 2, mu_exponent=1) == pytest.approx(
        0.9996126902466265, rel=1e-14
    )


def test_factor_matches_sampled_lorentzian_mean():
    # 1e6 Gaussian draws of the offset, averaged through the centre curve
    rng = np.random.default_rng(0)
    tau = rng.normal(0.1, 0.01, 1_000_000)
    mc = np.mean(1.0 / (1.0 + (2.0 * np.pi * tau / 64.0) ** 2))
    assert mc == pytest.approx(FACTOR_1, rel=5e-6)


def test_factor_monotone_in_offset_and_spread():
    mus = [0.0, 0.05, 0.1, 0.5, 2.0]
    vals = [gaussian_sinc_sq_factor(m, 0.01, 64, 1) for m in mus]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    sigmas = [0.0, 0.01, 0.1, 1.0]
    vals = [gaussian_sinc_sq_factor(0.1, s, 64, 1) for s in sigmas]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    negated = gaussian_sinc_sq_factor(-0.1, 0.01, 64, 1)
    assert negated == pytest.approx(FACTOR_1, rel=1e-14)


def test_interference_bound_value_and_scalings():
    assert interference_bound(P) == pytest.approx(INTERFERENCE, rel=1e-12)
    assert interference_bound(replace(P, n_devices=1)) == 0.0
    assert interference_bound(replace(P, n_antennas=10)) == pytest.approx(
        INTERFERENCE / 2, rel=1e-12
    )
    # two paths quadruple the term
    assert interference_bound(replace(P, n_paths=2)) == pytest.approx(
        4 * INTERFERENCE, rel=1e-12
    )


def test_ici_weight_values_and_normalization():
    assert ici_weight(1, 2, 2.0) == pytest.approx(0.4, abs=1e-15)
    assert ici_weight(2, 2, 2.0) == pytest.approx(0.1, abs=1e-15)
    for q in range(1, 9):
        for gamma in (0.5, 1.0, 2.0, 4.0):
            total = sum(2.0 * ici_weight(g, q, gamma) for g in range(1, q + 1))
            assert abs(total - 1.0) < 1e-12
    with pytest.raises(ValueError):
        ici_weight(0, 2, 2.0)
    with pytest.raises(ValueError):
        ici_weight(3, 2, 2.0)
    # steep decay concentrates all weight on the nearest subcarrier pair
    assert ici_weight(1, 4, 50.0) == pytest.approx(0.5, rel=1e-10)


def test_ici_bound_value_and_degenerate_case():
    assert ici_bound(P) == pytest.approx(ICI, rel=1e-12)
    flat = replace(P, mu_tau=0.0, sigma_tau=0.0)
    assert ici_bound(flat) == pytest.approx(
        P.n_devices * P.sigma_h**4 / P.n_antennas, rel=1e-12
    )
    assert ici_bound(replace(P, mu_tau=0.5)) < ici_bound(P)


def test_noise_bound_value_and_scalings():
    assert noise_bound(P) == pytest.approx(NOISE, rel=1e-12)
    assert noise_bound(replace(P, sigma_z=0.0)) == 0.0
    assert noise_bound(replace(P, n_devices=20)) == pytest.approx(2 * NOISE, rel=1e-12)
    assert noise_bound(replace(P, n_antennas=10)) == pytest.approx(NOISE / 2, rel=1e-12)


def test_single_round_error_composition():
    r = single_round_error(P)
    assert r.single_round == pytest.approx(E_T, rel=1e-12)
    assert r.single_round == r.interference + r.ici + r.noise
    assert r.accumulated == accumulated_bound(r.single_round, P.rounds, P.beta, P.eta)
    assert r.notes == ""
    assert single_round_error(replace(P, n_paths=2)).notes != ""

    lone = single_round_error(replace(P, n_devices=1, sigma_z=0.0, mu_tau=0.0, sigma_tau=0.0))
    assert lone.single_round == pytest.approx(P.sigma_h**4 / P.n_antennas, rel=1e-12)
    assert lone.interference == 0.0 and lone.noise == 0.0


def test_accumulated_and_partial_bounds():
    assert accumulated_bound(1.0, 10, 0.01, 5.0) == pytest.approx(11.05, rel=1e-12)
    assert accumulated_bound(E_T, 0, 0.0, 0.0) == E_T
    ts = np.arange(1, 20)
    vals = np.array([partial_bound(E_T, t, 0.01, 5.0) for t in ts])
    np.testing.assert_allclose(np.diff(vals), E_T, rtol=1e-12)  # linear, slope e_t
    assert partial_bound(E_T, P.rounds, P.beta, P.eta) == accumulated_bound(
        E_T, P.rounds, P.beta, P.eta
    )


def test_monotonicity_suite():
    for field, larger_grows in [
        ("n_devices", True), ("sigma_h", True), ("sigma_z", True), ("n_antennas", False),
    ]:
        lo = single_round_error(P).single_round
        hi = single_round_error(replace(P, **{field: getattr(P, field) * 2})).single_round
        assert (hi > lo) == larger_grows, field
    assert interference_bound(replace(P, mu_tau=0.4)) < interference_bound(P)
    assert interference_bound(replace(P, sigma_tau=0.3)) < interference_bound(P)
    assert ici_bound(replace(P, sigma_tau=0.3)) < ici_bound(P)


def test_mc_interference_matches_bound():
    check = mc_validate_interference(P, 20_000, np.random.default_rng(1))
    assert check.term == "interference"
    assert check.trials == 20_000
    assert check.passed
    assert check.mc_estimate == pytest.approx(check.bound, rel=0.05)


def test_mc_interference_single_device_exact_zero():
    check = mc_validate_interference(replace(P, n_devices=1), 10_000, np.random.default_rng(2))
    assert check.mc_estimate == 0.0 and check.bound == 0.0
    assert np.isnan(check.ratio) and check.passed


def test_mc_rejects_small_trial_counts():
    rng = np.random.default_rng(3)
    with pytest.raises(ValueError):
        mc_validate_interference(P, MIN_TRIALS - 1, rng)
    with pytest.raises(ValueError):
        mc_validate_ici(P, MIN_TRIALS - 1, rng)


def test_mc_chunking_is_invisible():
    # 25k trials span two chunks; same stream, same answer as one pass
    a = mc_validate_interference(P, 25_000, np.random.default_rng(4))
    b = mc_validate_interference(P, 25_000, np.random.default_rng(4))
    assert a.mc_estimate == b.mc_estimate


def test_mc_ici_matches_bound():
    check = mc_validate_ici(P, 20_000, np.random.default_rng(5))
    assert check.term == "ici"
    assert check.passed
    assert check.mc_estimate == pytest.approx(check.bound, rel=0.05)


def test_mc_ici_zero_taps_exact():
    check = mc_validate_ici(replace(P, sigma_h=0.0), 10_000, np.random.default_rng(6))
    assert check.mc_estimate == 0.0 and check.bound == 0.0
    assert check.passed


def test_mc_ici_alternative_mu_exponent():
    alt = replace(P, ici_mu_exponent=1)
    assert ici_bound(alt) > ici_bound(P)  # milder mean attenuation at gap 2
    check = mc_validate_ici(alt, 20_000, np.random.default_rng(7))
    assert check.passed


def test_antenna_scaling_slope():
    slope, checks = mc_antenna_scaling(P, [2, 4, 8], 10_000, seed=8)
    assert abs(slope + 1.0) < 0.05
    assert [c.n_antennas for c in checks] == [2, 4, 8]
    assert all(c.passed for c in checks)
    with pytest.raises(ValueError):
        mc_antenna_scaling(P, [4], 10_000, seed=8)
