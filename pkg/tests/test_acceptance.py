"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (shown in the terminal summary) and then
asserts at the stated tolerance.
"""
import math
import time
import warnings

import numpy as np
import pytest

from asyncdmt.channel_model import (ExponentPoint, FrameSplit, LinkGrams, decode_set, effective_mode, mutual_info,
                                    mutual_info_surrogate, sample_channels, surrogate_total)
from asyncdmt.dmt_closed_form import GOLDEN, KappaPolicy, dmt_curve, fixed_curve, kappa_m, optimal_curve
from asyncdmt.exponent_oracle import default_sweep, gap_table, regress_slope
from asyncdmt.gram import (build_gamma_j, build_gamma_omega, build_xi, check_psd, circulant_rank_check,
                           szego_eig_check)
from asyncdmt.outage_sim import ExperimentConfig, decode_event_estimates, run_outage
from asyncdmt.waveforms import DelayProfile, WaveformSpec, make_waveform

R_FINE = np.linspace(0, 1, 2001)


def test_criterion_1_closed_forms_match_grid_oracle(verdict):
    r_grid = np.round(np.arange(0, 0.99, 0.02), 10)
    t0 = time.perf_counter()
    worst, where, n = 0.0, None, 0
    for cfg in default_sweep():
        for r, o, c, gap, _, _ in gap_table(*cfg, r_grid, grid_step=0.005):
            n += 1
            if gap > worst:
                worst, where = gap, cfg + (r,)
    elapsed = time.perf_counter() - t0
    ok = verdict("1 closed form vs grid oracle", worst <= 0.015,
                 f"max gap {worst:.4f} over {n} points (worst at {where}), {elapsed:.0f}s")
    assert ok


def test_criterion_2_named_values(verdict):
    fails = []
    naf = dmt_curve("naf", "finite", 1, KappaPolicy.fixed(1.0))(R_FINE)
    if np.max(np.abs(naf - 2 * (1 - R_FINE))) > 1e-12:
        fails.append("naf miso line")
    for M in (1, 2, 3):
        expect = M * np.maximum(1 - 2 * R_FINE, 0) + np.maximum(1 - R_FINE, 0)
        fin, inf = optimal_curve("oaf", "finite", M), optimal_curve("oaf", "infinite", M)
        if np.max(np.abs(fin(R_FINE) - expect)) > 1e-12:
            fails.append(f"oaf M={M} formula")
        for k in ("opt", 1.0, 1.5, 3.0):
            pol = KappaPolicy.optimal() if k == "opt" else KappaPolicy.fixed(k)
            if np.max(np.abs(dmt_curve("oaf", "finite", M, pol)(R_FINE)
                             - dmt_curve("oaf", "infinite", M, pol)(R_FINE))) > 1e-12:
                fails.append(f"oaf M={M} kappa={k} modes")
        if abs(fin(0.0) - inf(0.0)) > 1e-12:
            fails.append(f"oaf M={M} r=0")
    # the golden split is optimal below 1/(1+golden) for one and two relays
    for M in (1, 2):
        opt = optimal_curve("nsdf", "finite", M)
        if abs(opt(0.0) - (M + 1)) > 1e-12:
            fails.append(f"nsdf M={M} d(0)")
        low = R_FINE[R_FINE < 1 / (1 + GOLDEN)]
        if np.max(np.abs(opt(low) - fixed_curve("nsdf", "finite", M, GOLDEN)(low))) > 1e-12:
            fails.append(f"nsdf M={M} golden branch")
    osdf = optimal_curve("osdf", "finite", 2)
    third = 1 / 3
    left, right = osdf(third - 1e-13), osdf(third + 1e-13)
    if abs(osdf(third) - 1.5) > 1e-12 or abs(left - right) > 1e-12:
        fails.append("osdf M=2 continuity at 1/3")
    ok = verdict("2 named values", not fails, "all exact to 1e-12" if not fails else ", ".join(fails))
    assert ok


def test_criterion_3_spectral_properties(verdict):
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    worst_min, worst_trace, contained, worst_dft = math.inf, 0.0, True, math.inf
    for _ in range(20):
        m = int(rng.integers(1, 4))
        specs = [WaveformSpec("raised_cosine", int(rng.integers(1, 5)), rolloff=float(rng.choice([0.25, 0.5, 1.0])))
                 for _ in range(m + 1)]
        waves = [make_waveform(s) for s in specs]
        delays = DelayProfile.random(m + 1, rng)
        u = max(s.support_u for s in specs)
        sg = build_gamma_omega(waves, delays, u)
        worst_min = min(worst_min, check_psd(sg).min_eig)
        q = int(rng.choice([8, 16, 32]))
        contained &= szego_eig_check(build_xi(waves, delays, u, q), sg).contained
        rep = szego_eig_check(build_xi(waves, delays, u, 64), sg)
        contained &= rep.contained
        worst_trace = max(worst_trace, abs(rep.trace_ratio - 1))
        sinc = make_waveform(WaveformSpec("sinc"))
        tau = float(rng.uniform(0.05, 0.95))
        qs = int(rng.choice([8, 16, 32]))
        worst_dft = min(worst_dft, circulant_rank_check(build_gamma_j(sinc, tau, qs), 2 * qs + 1).min_abs_dft)
    ok = worst_min > 0 and contained and worst_trace <= 0.01 and worst_dft > 0
    verdict("3 spectral properties", ok,
            f"min eig {worst_min:.3g}, containment {contained}, trace dev {worst_trace:.2e}, "
            f"min |DFT| {worst_dft:.3g}, {time.perf_counter() - t0:.0f}s")
    assert ok


def _gaps(protocol, mode, M, fs, rho=1e6, n=100, seed=7):
    wave = make_waveform(WaveformSpec("raised_cosine", 1, rolloff=1.0))
    lg = LinkGrams(mode, fs, [wave] * (M + 1) if mode == "finite" else None, np.arange(M + 1) / (M + 1))
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        real = sample_channels(M, rng)
        dec = decode_set(real, rho, 0.25, fs, protocol) if protocol in ("nsdf", "osdf") else None
        exact = mutual_info(protocol, mode, fs, real, lg, rho, dec) / math.log2(rho)
        out.append(exact - mutual_info_surrogate(protocol, mode, fs, ExponentPoint.from_realization(real, rho), dec))
    return np.abs(out)


def test_criterion_4_high_snr_consistency(verdict):
    lines, ok = [], True
    for protocol in ("nsdf", "osdf", "naf", "oaf"):
        worst, where = 0.0, None
        for mode in ("finite", "infinite"):
            for M in (1, 2):
                for fs in (FrameSplit(4, 4), FrameSplit(8, 4)):
                    g = _gaps(protocol, mode, M, fs).max()
                    if g > worst:
                        worst, where = g, f"{mode} M={M} p={fs.p} q={fs.q}"
        ok &= worst <= 0.05
        lines.append(f"{protocol} {worst:.3f} ({where})")
    verdict("4 high-SNR consistency", ok, "max |I/log2 rho - surrogate|: " + "; ".join(lines))
    assert ok


def test_criterion_5_monte_carlo_slopes(verdict):
    grid = tuple(range(30, 61, 5))
    t0 = time.perf_counter()
    cases = [("nsdf", 1, FrameSplit(1, 1), 0.25), ("oaf", 2, FrameSplit(3, 2), 0.3), ("naf", 1, FrameSplit(1, 1), 0.25)]
    parts, ok = [], True
    for protocol, M, fs, r in cases:
        cfg = ExperimentConfig(protocol, "finite", M, fs, r, grid, trials_per_point=1_000_000, seed=1, fit_min_db=30)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            run = run_outage(cfg)
        good = run.gap <= 0.15
        ok &= good
        parts.append(f"{protocol} {run.slope:.3f} vs {run.target:.3f}")
    for m in (0, 1):
        est, events = decode_event_estimates(2, m, FrameSplit(1, 1), 0.25, grid, 1_000_000, seed=3)
        slope = regress_slope(grid, est)
        target = (1 - 2 * 0.25) * (2 - m)
        ok &= abs(slope - target) <= 0.1 and bool(np.all(events >= 50))
        parts.append(f"E_{m} {slope:.3f} vs {target:.3f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed <= 20 * 60
    verdict("5 Monte Carlo slopes", ok, "; ".join(parts) + f"; {elapsed:.0f}s")
    assert ok


def test_criterion_6_synchrony_removes_gain(verdict):
    fails = []
    wave = make_waveform(WaveformSpec("raised_cosine", 1, rolloff=1.0))
    fs, rho = FrameSplit(4, 4), 1e6
    worst_sync = 0.0
    for M in (1, 2):
        waves, delays = [wave] * (M + 1), np.zeros(M + 1)
        mode = effective_mode("finite", waves, delays)
        if mode != "infinite":
            fails.append(f"M={M} mode {mode}")
        # the surrogate used for the synchronous set-up is the synchronous one
        rng = np.random.default_rng(M)
        for _ in range(200):
            a0, rel = rng.uniform(-0.5, 2), rng.uniform(-0.5, 2, M)
            sync = surrogate_total("nsdf", mode, fs.p, fs.q, a0, relay_alpha=rel)
            ref = fs.p * max(1 - a0, 0) + fs.q * max(1 - min(a0, rel.min()), 0)
            if abs(sync - ref) > 1e-12:
                fails.append(f"M={M} surrogate")
                break
        lg = LinkGrams("finite", fs, waves, delays)
        rng = np.random.default_rng(7)
        for _ in range(100):
            real = sample_channels(M, rng)
            dec = decode_set(real, rho, 0.25, fs)
            exact = mutual_info("nsdf", "finite", fs, real, lg, rho, dec, allow_singular=True) / math.log2(rho)
            sur = mutual_info_surrogate("nsdf", mode, fs, ExponentPoint.from_realization(real, rho), dec)
            worst_sync = max(worst_sync, abs(exact - sur))
    if worst_sync > 0.05:
        fails.append(f"exact vs synchronous surrogate {worst_sync:.3f}")
    # finite and infinite curves agree wherever the asynchrony gain is absent
    worst_curve = 0.0
    for M in (1, 2, 3):
        for k in np.linspace(1.0, kappa_m(M), 6):
            diff = np.abs(fixed_curve("nsdf", "finite", M, k)(R_FINE) - fixed_curve("nsdf", "infinite", M, k)(R_FINE))
            worst_curve = max(worst_curve, float(diff.max()))
    if worst_curve > 1e-12:
        fails.append(f"curves differ by {worst_curve:.2e}")
    ok = verdict("6 degenerate synchrony", not fails,
                 f"exact vs synchronous surrogate {worst_sync:.3f}, curve gap {worst_curve:.1e}"
                 + ("" if not fails else " | " + ", ".join(fails)))
    assert ok
