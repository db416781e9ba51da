"""One test per acceptance criterion; each records a PASS/FAIL line."""

import itertools
import json
import math

import numpy as np
import pytest
from scipy import integrate

from keycap import ChannelConfig, SeedSpec, cli, estimate_capacity, linalg, sweep
from keycap import allocation, asymptotics
from keycap.capacity import key_rate_batch, key_rate_schur_batch, sample_values
from keycap.mc import LN2, mean_stderr
from keycap.protocol import (
    DMWiretapChannel,
    ProtocolSetup,
    build_rates,
    bundled_instance,
    estimate_error_and_leakage,
    generate_codebook,
)
from conftest import ACCEPTANCE_LINES, crandn

N = 20_000


def report(number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_01_ergodic_capacity_oracle():
    seed = SeedSpec(101)
    details, ok = [], True
    for db in (0.0, 10.0, 20.0):
        rho = 10 ** (db / 10)
        # (1,1): E[log2(1 + rho x)], x ~ Exp(1), by quadrature
        ref, _ = integrate.quad(lambda x: math.log2(1 + rho * x) * math.exp(-x), 0, np.inf)
        est = estimate_capacity(ChannelConfig(1, 1, 1, alpha2=0.0).with_snr_db(db), N, seed)
        ok &= abs(est.mean_bits - ref) < 3 * est.stderr_bits
        details.append(f"(1,1)@{db:g}dB {est.mean_bits:.4f} vs {ref:.4f}")
        # (2,2): separate generator and eigenvalue route
        gen = np.random.default_rng(int(db) + 7)
        h = crandn(gen, N, 2, 2)
        ev = np.linalg.eigvalsh(h @ np.conj(np.swapaxes(h, 1, 2)))
        vals = np.sum(np.log2(1 + rho / 2 * ev), axis=1)
        m2, s2 = vals.mean(), vals.std(ddof=1) / math.sqrt(N)
        est = estimate_capacity(ChannelConfig(2, 2, 1, alpha2=0.0).with_snr_db(db), N, seed)
        ok &= abs(est.mean_bits - m2) < 3 * math.hypot(est.stderr_bits, s2)
        details.append(f"(2,2)@{db:g}dB {est.mean_bits:.4f} vs {m2:.4f}")
    report(1, ok, "; ".join(details))


def test_02_scalar_quadrature_oracle():
    def f(y, x):
        return math.log2((1 + 10 * x + 10 * y) / (1 + 10 * y)) * math.exp(-x - y)

    ref, _ = integrate.dblquad(f, 0, np.inf, 0, np.inf, epsabs=1e-10)
    est = estimate_capacity(ChannelConfig(1, 1, 1, alpha2=1.0).with_snr_db(10), 100_000, SeedSpec(102))
    ok = abs(est.mean_bits - ref) < 3 * est.stderr_bits
    report(2, ok, f"MC {est.mean_bits:.5f} +- {est.stderr_bits:.5f} vs quadrature {ref:.5f}")


def test_03_many_antennas_about_one_bit():
    cfg = ChannelConfig(1, 10, 10, alpha2=1.0)
    s = sweep(cfg, "snr_db", [0.0, 20.0], N, SeedSpec(103))
    c0, c20 = s.means
    ok = abs(c20 - 1.0) < 0.15 and abs(c20 - c0) < 0.2
    report(3, ok, f"C(20dB) = {c20:.4f} bit, C(0dB) = {c0:.4f} bit")


def test_04_snr_sweep_shape():
    grid = [0.0, 10.0, 20.0, 30.0, 40.0]
    seed = SeedSpec(104)
    curves = {d: sweep(ChannelConfig(*d, alpha2=1.0), "snr_db", grid, N, seed).means
              for d in [(2, 1, 1), (1, 1, 1), (2, 2, 2)]}
    inc = np.diff(curves[(2, 1, 1)])
    ok = bool(np.all(inc > 0) and inc[-1] > 0.3)
    ok &= bool(curves[(1, 1, 1)][-1] - curves[(1, 1, 1)][-2] < 0.1)
    ok &= bool(curves[(2, 2, 2)][-1] - curves[(2, 2, 2)][-2] < 0.1)
    detail = "; ".join(f"{d}: " + ", ".join(f"{v:.3f}" for v in c) for d, c in curves.items())
    report(4, ok, detail)


def test_05_alpha_sweep_shape():
    seed = SeedSpec(105)
    grid = [0.0, 10.0, 20.0]
    base = ChannelConfig(2, 1, 1).with_snr_db(10)
    c211 = sweep(base, "alpha2_db", grid, N, seed).means
    variation = (c211.max() - c211.min()) / c211.max()
    s111 = sweep(ChannelConfig(1, 1, 1).with_snr_db(10), "alpha2_db", grid, N, seed)
    m, se = s111.means, s111.stderrs
    drops = all(m[k] - m[k + 1] > 3 * math.hypot(se[k], se[k + 1]) for k in range(len(m) - 1))
    ok = variation < 0.25 and drops
    report(5, ok, f"(2,1,1) variation {variation:.1%}; (1,1,1) " + ", ".join(f"{v:.3f}" for v in m))


def test_06_high_power_saturation():
    cfg = ChannelConfig(2, 2, 2, alpha2=1.0).with_snr_db(40)
    seed = SeedSpec(106)
    ck = sample_values(cfg, N, seed, key_rate_batch)
    lim = sample_values(cfg, N, seed, asymptotics.high_power_batch)
    d, se = mean_stderr(ck - lim)
    d, se = d / LN2, se / LN2
    ok = abs(d) < max(3 * se, 0.05)
    report(6, ok, f"C_K(40dB) - limit = {d:.4f} bit (stderr {se:.4f})")


def test_07_unbounded_regime_ratio():
    seed = SeedSpec(107)
    ratios = []
    for db in (10.0, 20.0, 30.0, 40.0):
        cfg = ChannelConfig(2, 1, 1, alpha2=1.0).with_snr_db(db)
        ratios.append(estimate_capacity(cfg, N, seed).mean_bits / asymptotics.c_infinity(cfg, N, seed).mean_bits)
    gaps = np.abs(np.array(ratios) - 1)
    ok = bool(np.all(np.diff(gaps) < 0) and 0.9 <= ratios[-1] <= 1.02)
    report(7, ok, "ratios " + ", ".join(f"{r:.4f}" for r in ratios))


def test_08_large_antenna_closed_form():
    cfg = ChannelConfig(1, 64, 64, alpha2=1.0).with_snr_db(10)
    closed = asymptotics.large_antenna_limit(asymptotics.AsymptoticsQuery(cfg, 1.0))
    est = estimate_capacity(cfg, 5000, SeedSpec(108))
    ok = closed == 1.0 and abs(est.mean_bits - closed) < 0.05
    report(8, ok, f"closed form {closed!r}; MC (1,64,64) {est.mean_bits:.4f} bit")


def test_09_strong_eavesdropper():
    seed = SeedSpec(109)
    c111 = estimate_capacity(ChannelConfig(1, 1, 1).with_snr_db(10).with_alpha2_db(30), N, seed)
    cfg = ChannelConfig(2, 1, 1).with_snr_db(10).with_alpha2_db(30)
    ck = sample_values(cfg, N, seed, key_rate_batch)
    cinf = sample_values(cfg, N, seed, asymptotics.c_infinity_batch)
    d, se = mean_stderr(ck - cinf)
    d, se = d / LN2, se / LN2
    ok = c111.mean_bits < 0.1 and abs(d) < max(3 * se, 0.05)
    report(9, ok, f"(1,1,1) {c111.mean_bits:.4f} bit; (2,1,1) C_K - C_inf = {d:.4f} bit")


def test_10_uniform_allocation_optimal():
    details, ok = [], True
    for dims in [(2, 2, 2), (3, 2, 2)]:
        rep = allocation.check_uniform_optimal(ChannelConfig(*dims).with_snr_db(10), 100, 5000,
                                               SeedSpec(110), workers=4)
        ok &= rep.passed and rep.fraction_positive >= 0.9
        dmin, smin = rep.min_difference
        details.append(f"{dims}: min diff {dmin:.2e} (se {smin:.1e}), {rep.fraction_positive:.0%} > 1 se")
    report(10, ok, "; ".join(details))


def test_11_route_and_determinant_identities():
    gen = np.random.default_rng(111)
    worst = 0.0
    for _ in range(1000):
        m_S, m_D, m_W = gen.integers(1, 5, size=3)
        cfg = ChannelConfig(int(m_S), int(m_D), int(m_W), P=float(10 ** gen.uniform(-1, 3)),
                            sigma2_D=float(gen.uniform(0.2, 2)), sigma2_W=float(gen.uniform(0.2, 2)),
                            alpha2=float(10 ** gen.uniform(-1, 1)))
        hd, hw = crandn(gen, 1, m_D, m_S), crandn(gen, 1, m_W, m_S)
        a, b = key_rate_batch(cfg, hd, hw)[0], key_rate_schur_batch(cfg, hd, hw)[0]
        worst = max(worst, abs(a - b) / max(abs(a), 1e-300))
    det_worst = 0.0
    for _ in range(1000):
        p, q = gen.integers(1, 5, size=2)
        g = crandn(gen, p + q, p + q + 2)
        full = g @ g.conj().T
        blocks = linalg.CovarianceBlocks(full[:p, :p], full[p:, p:], full[:p, p:])
        lhs = linalg.hermitian_logdet(full)
        rhs = linalg.hermitian_logdet(blocks.K_V) + linalg.hermitian_logdet(linalg.schur_complement(blocks))
        det_worst = max(det_worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    ok = worst < 1e-8 and det_worst < 1e-9
    report(11, ok, f"route max rel diff {worst:.1e}; determinant identity max diff {det_worst:.1e}")


def _protocol(inst, n, dmc=None):
    setup = ProtocolSetup(dmc or inst.dmc, inst.quantizer, inst.epsilon)
    rates = build_rates(inst.dmc, inst.quantizer, inst.rate_slack)
    cb = generate_codebook(rates, setup.p_yhat, n, SeedSpec(inst.codebook_seed))
    return cb, setup


def _trend(inst, seed):
    series = []
    for n in (4, 6, 8, 10):
        cb, setup = _protocol(inst, n)
        rep = estimate_error_and_leakage(cb, setup, n, mode="mc", replicates=10_000, seed=seed, workers=4)
        series.append((rep.pr_key_mismatch, rep.pr_key_mismatch_stderr))
    ok = all(b - a <= 3 * math.hypot(sa, sb) for (a, sa), (b, sb) in zip(series, series[1:]))
    return ok, series


def test_12_protocol_micro_instance():
    inst = bundled_instance()
    cb, setup = _protocol(inst, 4)
    exact = estimate_error_and_leakage(cb, setup, 4)
    mc = estimate_error_and_leakage(cb, setup, 4, mode="mc", replicates=10_000, seed=SeedSpec(112), workers=4)
    p = exact.pr_key_mismatch
    se = math.sqrt(p * (1 - p) / 10_000)
    noise_z = DMWiretapChannel(inst.dmc.p_x, inst.dmc.p_y_given_x, [[0.5, 0.5], [0.5, 0.5]])
    cb_i, setup_i = _protocol(inst, 4, noise_z)
    indep = estimate_error_and_leakage(cb_i, setup_i, 4)
    trend_ok, trend = _trend(inst, SeedSpec(112))
    ok = (abs(exact.total_probability - 1) < 1e-10 and indep.leakage_rate_bits == 0.0
          and abs(mc.pr_key_mismatch - p) <= 3 * se and trend_ok)
    # the bundled micro instance never passes the quantizer at n <= 10 (see README); the
    # branch instance exercises the same checks with every protocol branch live
    branch = bundled_instance("branch_instance.json")
    bcb, bsetup = _protocol(branch, 4)
    bexact = estimate_error_and_leakage(bcb, bsetup, 4)
    bmc = estimate_error_and_leakage(bcb, bsetup, 4, mode="mc", replicates=10_000, seed=SeedSpec(112), workers=4)
    bp = bexact.pr_key_mismatch
    bse = math.sqrt(bp * (1 - bp) / 10_000)
    btrend_ok, btrend = _trend(branch, SeedSpec(112))
    ok &= abs(bexact.total_probability - 1) < 1e-10 and abs(bmc.pr_key_mismatch - bp) <= 3 * bse and btrend_ok
    fmt = lambda s: ", ".join(f"{v:.4f}" for v, _ in s)
    report(12, ok,
           f"micro: sum {exact.total_probability:.12f}, Pr(K!=L) exact {p:.4f} / MC {mc.pr_key_mismatch:.4f}, "
           f"Pr(M=0) {exact.pr_quantizer_failure:.2f}, leak(indep Z) {indep.leakage_rate_bits}, n=4..10 [{fmt(trend)}]; "
           f"branch: exact {bp:.4f} / MC {bmc.pr_key_mismatch:.4f}, n=4..10 [{fmt(btrend)}]")


COMMANDS = [
    ["capacity", "--dims", "2,2,1", "--samples", "4000"],
    ["sweep-snr", "--samples", "2000"],
    ["sweep-alpha", "--samples", "2000", "--dims", "2,1,1"],
    ["allocation-check", "--dims", "2,2,2", "--samples", "2000", "--trials", "10"],
    ["asymptotics", "--dims", "2,1,1", "--samples", "2000", "--beta", "1"],
    ["protocol", "--instance", "BRANCH", "--mode", "mc", "--replicates", "2000"],
    ["protocol"],
]


def test_13_determinism_across_workers(capsys, tmp_path):
    from pathlib import Path

    branch = str(Path(cli.__file__).parent / "data" / "branch_instance.json")
    ok, names = True, []
    for argv in COMMANDS:
        argv = [branch if a == "BRANCH" else a for a in argv] + ["--seed", "13"]
        outs = []
        for w in ("1", "2", "8"):
            assert cli.main(argv + ["--workers", w]) == 0
            outs.append(capsys.readouterr().out)
        same = outs[0] == outs[1] == outs[2]
        ok &= same
        names.append(f"{argv[0]}{'' if same else ' (DIFFERS)'}")
    report(13, ok, "byte-identical at 1/2/8 workers: " + ", ".join(names))
