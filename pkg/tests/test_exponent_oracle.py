import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asyncdmt.channel_model import FrameSplit
from asyncdmt.dmt_closed_form import GOLDEN, fixed_curve
from asyncdmt.errors import ValidationError
from asyncdmt.exponent_oracle import (InfProblem, as_split, assemble_outage_exponent, decode_exponent,
                                      default_sweep, gap_table, outage_exponent_detail, regress_slope,
                                      solve_inf)

STEP = 0.01


def test_nsdf_one_participant():
    res = solve_inf(InfProblem("nsdf", "finite", 1.0, M=1, m=1, r=0.25), 0.005)
    assert res.value == pytest.approx(1.5, abs=0.02)
    assert res.feasible


def test_naf_finite_single_relay():
    res = solve_inf(InfProblem("naf", "finite", 1.0, M=1, r=0.25), 0.005)
    assert res.value == pytest.approx(1.5, abs=0.02)


@pytest.mark.parametrize("protocol", ["nsdf", "osdf", "naf", "oaf"])
@pytest.mark.parametrize("mode", ["finite", "infinite"])
def test_full_rate_costs_nothing(protocol, mode):
    assert assemble_outage_exponent(protocol, mode, 2, 2.0, 1.0, STEP) == 0.0
    assert solve_inf(InfProblem(protocol, mode, 2.0, M=2, m=0, r=1.0), STEP).value == 0.0


def test_argmin_satisfies_constraint():
    for pb in (InfProblem("osdf", "finite", 1.5, M=2, m=2, r=0.4),
               InfProblem("oaf", "infinite", 3.0, M=3, r=0.2),
               InfProblem("nsdf", "infinite", 2.0, M=3, m=3, r=0.1, full=True),
               InfProblem("naf", "infinite", 1.0, M=2, r=0.3, keep_alpha=True)):
        res = solve_inf(pb, STEP)
        assert pb.total(res.argmin) <= pb.fs.l * pb.r + 1e-9
        assert res.value == pytest.approx(res.argmin.sum())


def test_decode_exponent():
    assert decode_exponent(1, 0, 0.25, 1.0) == pytest.approx(0.5)
    assert decode_exponent(3, 1, 0.2, FrameSplit(2, 1)) == pytest.approx((1 - 0.3) * 2)
    for r in (0.0, 0.4, 0.9):
        assert decode_exponent(2, 2, r, 1.0) == 0.0
    assert decode_exponent(2, 1, 0.6, 1.0) == math.inf
    assert decode_exponent(2, 0, 0.6, 1.0) == 0.0
    with pytest.raises(ValidationError):
        decode_exponent(1, 2, 0.1, 1.0)


@given(st.integers(1, 3), st.data(), st.floats(0, 1), st.floats(0.2, 6))
def test_decode_exponent_nonnegative(M, data, r, kappa):
    m = data.draw(st.integers(0, M))
    assert decode_exponent(M, m, r, kappa) >= 0


def test_assembled_examples():
    assert assemble_outage_exponent("nsdf", "finite", 1, GOLDEN, 0.0, 0.005) == pytest.approx(2, abs=0.03)
    assert assemble_outage_exponent("osdf", "finite", 2, FrameSplit(2, 1), 0.2, 0.005) == pytest.approx(2.1, abs=0.03)
    # M(1-2r) + (1-r) needs the (M+1)/M split; an equal split gives 1.2 here
    for mode in ("finite", "infinite"):
        assert assemble_outage_exponent("oaf", mode, 2, FrameSplit(3, 2), 0.3, 0.005) == pytest.approx(1.5, abs=0.03)
        assert assemble_outage_exponent("oaf", mode, 2, 1.0, 0.3, 0.005) == pytest.approx(1.2, abs=0.03)


def test_integer_and_real_split_agree():
    a = assemble_outage_exponent("osdf", "infinite", 2, FrameSplit(3, 2), 0.3, STEP)
    b = assemble_outage_exponent("osdf", "infinite", 2, 1.5, 0.3, STEP)
    assert a == pytest.approx(b, abs=1e-12)
    assert as_split(FrameSplit(3, 2)).kappa == 1.5


def test_step_precondition():
    with pytest.raises(ValidationError):
        solve_inf(InfProblem("naf", "finite", 1.0, M=1, r=0.2), 0.02)
    with pytest.raises(ValidationError):
        InfProblem("naf", "finite", 1.0, M=1, r=1.2)
    with pytest.raises(ValidationError):
        InfProblem("nsdf", "finite", 1.0, M=1, m=2)


def test_detail_reports_decode_count():
    _, m, _ = outage_exponent_detail("nsdf", "finite", 2, 1.0, 0.1, STEP)
    assert 0 <= m <= 2
    _, m, _ = outage_exponent_detail("naf", "finite", 2, 1.0, 0.1, STEP)
    assert m is None


# --- agreement with the closed forms (small slice; the full sweep runs in the acceptance suite)


@pytest.mark.parametrize("protocol", ["nsdf", "osdf", "naf", "oaf"])
@pytest.mark.parametrize("mode", ["finite", "infinite"])
@pytest.mark.parametrize("M,kappa", [(1, 1.0), (2, GOLDEN), (2, 3.0)])
def test_matches_closed_form(protocol, mode, M, kappa):
    rows = gap_table(protocol, mode, M, kappa, np.arange(0, 0.99, 0.06), STEP)
    assert max(row[3] for row in rows) <= 3 * STEP


def test_sweep_covers_all_configs():
    cfgs = list(default_sweep())
    assert len(cfgs) == 4 * 2 * 3 * 6
    assert len(set(cfgs)) == len(cfgs)


# --- internal consistency


@pytest.mark.parametrize("seed", range(20))
def test_grid_refinement(seed):
    rng = np.random.default_rng(seed)
    protocol = rng.choice(["nsdf", "osdf", "naf", "oaf"])
    mode = rng.choice(["finite", "infinite"])
    M = int(rng.integers(1, 4))
    kappa = float(rng.choice([1.0, 1.5, GOLDEN, 2.0, 3.0, 5.0]))
    r = float(rng.uniform(0, 1))
    coarse = assemble_outage_exponent(protocol, mode, M, kappa, r, STEP)
    fine = assemble_outage_exponent(protocol, mode, M, kappa, r, STEP / 2)
    assert abs(coarse - fine) < 2 * STEP


@pytest.mark.parametrize("protocol", ["nsdf", "osdf"])
@pytest.mark.parametrize("mode", ["finite", "infinite"])
@pytest.mark.parametrize("m", [1, 2])
@pytest.mark.parametrize("r", [0.1, 0.35, 0.6])
def test_tied_relays_lose_nothing(protocol, mode, m, r):
    # one variable per relay vs a single shared exponent
    reduced = solve_inf(InfProblem(protocol, mode, 2.0, M=2, m=m, r=r), STEP).value
    full = solve_inf(InfProblem(protocol, mode, 2.0, M=2, m=m, r=r, full=True), STEP).value
    assert full == pytest.approx(reduced, abs=1e-9)


def test_tied_relays_three():
    reduced = solve_inf(InfProblem("osdf", "finite", 1.5, M=3, m=3, r=0.3), STEP).value
    full = solve_inf(InfProblem("osdf", "finite", 1.5, M=3, m=3, r=0.3, full=True), STEP).value
    assert full == pytest.approx(reduced, abs=1e-9)


@pytest.mark.parametrize("protocol", ["naf", "oaf"])
@pytest.mark.parametrize("M,kappa,r", [(1, 1.0, 0.2), (2, 3.0, 0.5), (3, GOLDEN, 0.1)])
def test_alpha_variable_is_slack(protocol, M, kappa, r):
    flat = solve_inf(InfProblem(protocol, "infinite", kappa, M=M, r=r), STEP).value
    kept = solve_inf(InfProblem(protocol, "infinite", kappa, M=M, r=r, keep_alpha=True), STEP)
    assert kept.value == pytest.approx(flat, abs=1e-9)
    assert kept.argmin[1] == 0.0


@pytest.mark.parametrize("kappa", [1.0, 2.0, 3.0])
@pytest.mark.parametrize("r", [0.1, 0.2, 0.3, 0.45])
def test_naf_finite_argmin_on_perturbation_path(kappa, r):
    # minimizers satisfy a0 = 1 - r + d, beta = 1 - r - kappa*d for some d >= 0
    res = solve_inf(InfProblem("naf", "finite", kappa, M=1, r=r), 0.005)
    a0, beta = res.argmin
    d = a0 - (1 - r)
    assert d >= -0.005
    assert beta == pytest.approx(1 - r - kappa * d, abs=(1 + kappa) * 0.005)


def test_naf_finite_argmin_leaves_source_floor():
    res = solve_inf(InfProblem("naf", "finite", 3.0, M=1, r=0.2), 0.005)
    assert res.argmin == pytest.approx([1.0, 0.2], abs=0.006)


@pytest.mark.parametrize("protocol", ["nsdf", "osdf", "naf", "oaf"])
@pytest.mark.parametrize("mode", ["finite", "infinite"])
def test_backends_agree(protocol, mode):
    for r in (0.05, 0.3, 0.55, 0.8):
        kw = dict(M=2, m=2 if protocol in ("nsdf", "osdf") else 0, r=r)
        a = solve_inf(InfProblem(protocol, mode, 2.0, **kw), STEP, backend="numba")
        b = solve_inf(InfProblem(protocol, mode, 2.0, **kw), STEP, backend="numpy")
        assert a.value == b.value
        assert np.array_equal(a.argmin, b.argmin)


# --- slope regression


def test_slope_exact_power_law():
    snr = np.arange(10, 41, 5)
    assert regress_slope(snr, 10 ** (-2 * snr / 10)) == pytest.approx(2.0)


def test_slope_noisy_power_law():
    rng = np.random.default_rng(4)
    snr = np.arange(10, 41, 2.5)
    p = 3.0 * 10 ** (-1.5 * snr / 10) * (1 + 0.05 * rng.standard_normal(snr.size))
    assert regress_slope(snr, p) == pytest.approx(1.5, abs=0.1)


def test_slope_constant():
    assert regress_slope([0, 10, 20], [0.1, 0.1, 0.1]) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=30)
@given(st.floats(0.1, 4), st.floats(-5, 0))
def test_slope_recovers_any_exponent(d, logc):
    snr = np.linspace(5, 35, 7)
    assert regress_slope(snr, 10 ** (logc - d * snr / 10)) == pytest.approx(d, rel=1e-9)


def test_slope_errors():
    with pytest.raises(ValidationError, match="trial count"):
        regress_slope([10, 20, 30], [1e-2, 0.0, 1e-4])
    with pytest.raises(ValidationError):
        regress_slope([10, 20], [1e-2, 1e-3])
    with pytest.raises(ValidationError):
        regress_slope([10, 10, 10], [1e-2, 1e-3, 1e-4])
