import json
import math

import numpy as np
import pytest
from scipy import integrate

from keycap import ChannelConfig, SeedSpec, estimate_capacity, sample_channel, sweep
from keycap.capacity import (
    key_rate_batch,
    key_rate_schur_batch,
    per_sample_key_rate,
    per_sample_key_rate_schur,
)
from keycap.channel import forced_sample
from keycap.errors import ConfigError
from conftest import crandn

SEED = SeedSpec(2024)


def test_zero_power_gives_zero():
    est = estimate_capacity(ChannelConfig(2, 2, 1, P=0.0), 500, SEED)
    assert est.mean_bits == 0.0 and est.stderr_bits == 0.0


def test_zero_destination_channel_gives_zero():
    cfg = ChannelConfig(2, 2, 2, P=10.0)
    s = forced_sample(np.zeros((2, 2)), np.ones((2, 2)))
    assert per_sample_key_rate(cfg, s) == pytest.approx(0.0, abs=1e-14)
    assert per_sample_key_rate_schur(cfg, s) == pytest.approx(0.0, abs=1e-12)


def test_scalar_forced_value():
    # a = b = 1 with unit gains: ln 3 - ln 2
    cfg = ChannelConfig(1, 1, 1, P=1.0)
    s = forced_sample([[1.0]], [[1.0]])
    assert per_sample_key_rate(cfg, s) == pytest.approx(math.log(3) - math.log(2), rel=1e-14)
    assert per_sample_key_rate_schur(cfg, s) == pytest.approx(math.log(3) - math.log(2), rel=1e-12)


def test_alpha_zero_is_ergodic_capacity_per_draw(rng):
    cfg = ChannelConfig(2, 3, 2, P=7.0, alpha2=0.0)
    hd, hw = crandn(rng, 4, 3, 2), crandn(rng, 4, 2, 2)
    ref = [np.linalg.slogdet(np.eye(3) + cfg.P / 2 * h @ h.conj().T)[1] for h in hd]
    np.testing.assert_allclose(key_rate_batch(cfg, hd, hw), ref, rtol=1e-12)


def test_eavesdropper_without_antennas(rng):
    cfg = ChannelConfig(2, 2, 0, P=3.0)
    hd, hw = crandn(rng, 5, 2, 2), np.zeros((5, 0, 2), complex)
    np.testing.assert_allclose(key_rate_batch(cfg, hd, hw), key_rate_schur_batch(cfg, hd, hw), rtol=1e-10)


def test_routes_agree(rng):
    for dims in [(1, 1, 1), (2, 1, 1), (2, 2, 2), (3, 2, 4), (4, 3, 2)]:
        cfg = ChannelConfig(*dims, P=10.0, sigma2_D=0.7, sigma2_W=1.3, alpha2=2.0)
        hd, hw = crandn(rng, 50, dims[1], dims[0]), crandn(rng, 50, dims[2], dims[0])
        np.testing.assert_allclose(key_rate_batch(cfg, hd, hw), key_rate_schur_batch(cfg, hd, hw),
                                   rtol=1e-8, atol=1e-12)


def test_monotone_in_power_per_draw(rng):
    base = ChannelConfig(2, 2, 1, alpha2=1.0)
    hd, hw = crandn(rng, 100, 2, 2), crandn(rng, 100, 1, 2)
    prev = np.zeros(100)
    for p in [0.1, 1.0, 10.0, 100.0]:
        cur = key_rate_batch(base.with_snr_db(10 * math.log10(p)), hd, hw)
        assert np.all(cur >= prev - 1e-12)
        prev = cur


def test_scalar_against_quadrature():
    # |h_D|^2, |h_W|^2 ~ Exp(1); integrand log2((1 + 10x + 10y) / (1 + 10y))
    def f(y, x):
        return math.log2((1 + 10 * x + 10 * y) / (1 + 10 * y)) * math.exp(-x - y)

    ref, _ = integrate.dblquad(f, 0, np.inf, 0, np.inf, epsabs=1e-10)
    est = estimate_capacity(ChannelConfig(1, 1, 1, P=10.0), 50_000, SEED)
    assert abs(est.mean_bits - ref) < 3 * est.stderr_bits


def test_worker_count_does_not_change_estimate():
    cfg = ChannelConfig(2, 2, 2, P=10.0)
    ests = [estimate_capacity(cfg, 9000, SEED, workers=w) for w in (1, 2, 8)]
    assert ests[0].to_dict() == ests[1].to_dict() == ests[2].to_dict()


def test_estimate_is_prefix_consistent():
    # sample i depends only on (seed, i): a longer run reuses the same draws
    cfg = ChannelConfig(1, 2, 1, P=10.0)
    short = estimate_capacity(cfg, 100, SEED)
    s0 = sample_channel(cfg, SEED, 0)
    assert short.n_samples == 100
    vals = [per_sample_key_rate(cfg, sample_channel(cfg, SEED, i)) for i in range(100)]
    assert short.mean_nats == pytest.approx(math.fsum(vals) / 100, rel=1e-12)
    assert s0.sample_index == 0


def test_sweep_uses_common_draws_and_serializes():
    cfg = ChannelConfig(1, 1, 1, P=10.0)
    series = sweep(cfg, "snr_db", [-np.inf, 0.0, 10.0], 400, SEED)
    assert series.means[0] == 0.0
    single = estimate_capacity(cfg.with_snr_db(10.0), 400, SEED)
    assert series.estimates[2].mean_bits == single.mean_bits
    lines = series.to_csv().strip().splitlines()
    assert lines[0] == "axis_value,mean_bits,stderr_bits,n_samples"
    assert len(lines) == 4
    assert float(lines[3].split(",")[1]) == single.mean_bits
    d = json.loads(json.dumps(series.to_dict(), default=str))
    assert d["axis_name"] == "snr_db"
    with pytest.raises(ConfigError):
        sweep(cfg, "bogus", [0.0], 10, SEED)


def test_alpha_sweep_monotone_per_draw():
    cfg = ChannelConfig(1, 1, 1, P=10.0)
    series = sweep(cfg, "alpha2_db", [0.0, 10.0, 20.0], 2000, SEED)
    assert np.all(np.diff(series.means) < 0)


def test_too_few_samples():
    with pytest.raises(ValueError):
        estimate_capacity(ChannelConfig(), 1, SEED)
