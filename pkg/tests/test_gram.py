import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from asyncdmt.errors import DimensionError, ModeMismatchError, ValidationError
from asyncdmt.gram import (build_gamma_j, build_gamma_omega, build_xi, check_psd, circulant_rank_check,
                           default_omega_grid, spectra_rows, szego_convergence, szego_eig_check)
from asyncdmt.waveforms import DelayProfile, WaveformSpec, make_waveform

BOX = make_waveform(WaveformSpec("rectangular", 1))
SINC = make_waveform(WaveformSpec("sinc"))
TWO_BOX = ([BOX, BOX], DelayProfile((0.0, 0.3)))


def rc(u, beta):
    return make_waveform(WaveformSpec("raised_cosine", u, rolloff=beta))


def test_single_node_xi_has_unit_diagonal():
    cg = build_xi([rc(1, 0.5)], DelayProfile((0.0,)), 1, 4)
    assert cg.xi.shape == (4, 4)
    assert np.allclose(np.diag(cg.xi), 1.0)


def test_two_box_xi_block():
    cg = build_xi(*TWO_BOX, 1, 3)
    assert np.allclose(cg.blocks[1, 0][:, 0], [0.7, 0.3, 0.0])
    assert np.allclose(cg.blocks[0, 1], cg.blocks[1, 0].T)


def test_synchronous_identical_pulses_collapse_rank():
    w = rc(2, 0.5)
    cg = build_xi([w, w, w], DelayProfile.synchronous(3), 2, 6)
    g00 = cg.blocks[0, 0]
    assert np.allclose(cg.xi, np.kron(np.ones((3, 3)), g00))
    assert np.linalg.matrix_rank(cg.xi, tol=1e-9) == 6


@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 3), st.data())
def test_xi_structure(m, u, extra, data):
    q = u + 1 + extra
    d = sorted(data.draw(st.lists(st.floats(0.01, 0.99), min_size=m, max_size=m, unique=True)))
    delays = DelayProfile((0.0, *d))
    waves = [rc(data.draw(st.integers(1, u)), data.draw(st.sampled_from([0.25, 0.5, 1.0]))) for _ in range(m + 1)]
    cg = build_xi(waves, delays, u, q)
    assert np.array_equal(cg.xi, cg.xi.T)
    i, j = np.indices((q, q))
    for a in range(m + 1):
        for b in range(m + 1):
            blk = cg.blocks[a, b]
            assert np.all(blk[np.abs(i - j) > u] == 0.0)
            for k in range(-q + 1, q):
                diag = np.diagonal(blk, k)
                assert np.all(diag == diag[0])


def test_xi_dimension_error():
    with pytest.raises(DimensionError):
        build_xi([make_waveform(WaveformSpec("rectangular", 3))], DelayProfile((0.0,)), 3, 3)


def test_gamma_omega_single_box_is_one():
    sg = build_gamma_omega([BOX], DelayProfile((0.0,)), 1)
    assert np.allclose(sg.matrices[:, 0, 0], 1.0)
    assert check_psd(sg).min_eig == pytest.approx(1.0)


def test_gamma_omega_two_box_offdiagonal():
    w = default_omega_grid()
    sg = build_gamma_omega(*TWO_BOX, 1, w)
    # direct DTFT of the two-tap sequence gamma_01(0)=0.7, gamma_01(-1)=0.3
    assert np.allclose(sg.matrices[:, 0, 1], 0.7 + 0.3 * np.exp(1j * w), atol=1e-12)
    pi = np.argmin(np.abs(w - np.pi))
    assert abs(sg.matrices[pi, 0, 1]) == pytest.approx(0.4, abs=1e-12)
    assert np.allclose(sg.matrices, sg.matrices.conj().transpose(0, 2, 1))
    assert sg.path_gap <= 1e-7


def random_finite(rng, m, u):
    specs = [WaveformSpec("raised_cosine", int(rng.integers(1, u + 1)), rolloff=float(rng.choice([0.25, 0.5, 1.0])))
             for _ in range(m + 1)]
    return [make_waveform(s) for s in specs], DelayProfile.random(m + 1, rng)


def test_psd_distinct_finite_pulses(rng):
    for _ in range(5):
        waves, delays = random_finite(rng, 2, 3)
        rep = check_psd(build_gamma_omega(waves, delays, 3))
        assert rep.positive_definite and rep.violating_omegas.size == 0


def test_psd_semidefinite_for_boxes():
    rep = check_psd(build_gamma_omega(*TWO_BOX, 1))
    assert rep.min_eig >= -1e-9


def test_single_node_eigenvalue_is_symbol():
    w = rc(2, 0.5)
    sg = build_gamma_omega([w], DelayProfile((0.0,)), 2)
    assert np.allclose(sg.eigenvalues[:, 0], sg.matrices[:, 0, 0].real)
    assert sg.eigenvalues.min() > 0


def test_sinc_rank_collapse_with_horizon():
    delays = DelayProfile((0.0, 0.4))
    ratios = [check_psd(build_gamma_omega([SINC, SINC], delays, None, horizon=h)).rank_ratio for h in (32, 128, 512)]
    assert ratios[0] > ratios[1] > ratios[2]
    assert ratios[-1] < 1e-2
    assert check_psd(build_gamma_omega([SINC, SINC], delays, None, horizon=512)).rank_one


def test_szego_single_box():
    cg = build_xi([BOX], DelayProfile((0.0,)), 1, 8)
    rep = szego_eig_check(cg, build_gamma_omega([BOX], DelayProfile((0.0,)), 1))
    assert rep.lam_min == pytest.approx(1.0) and rep.lam_max == pytest.approx(1.0)
    assert rep.mu_min == pytest.approx(1.0) and rep.contained


def test_szego_two_box_containment_and_trace():
    cg = build_xi(*TWO_BOX, 1, 32)
    sg = build_gamma_omega(*TWO_BOX, 1)
    lam = np.linalg.eigvalsh(cg.xi)
    assert lam[-1] <= sg.eigenvalues.max() + 1e-6 and lam[0] >= sg.eigenvalues.min() - 1e-6
    rep = szego_eig_check(cg, sg)
    assert rep.contained
    assert rep.trace_ratio == pytest.approx(1.0, abs=0.01)


def test_szego_rejects_mismatched_configs():
    with pytest.raises(ValidationError):
        szego_eig_check(build_xi(*TWO_BOX, 1, 8), build_gamma_omega([BOX], DelayProfile((0.0,)), 1))


def test_szego_extremes_approach_spectrum():
    waves = [rc(2, 0.5), rc(1, 1.0)]
    rows = szego_convergence(waves, DelayProfile((0.0, 0.35)), 2)
    lo_gap, hi_gap = rows[:, 1], rows[:, 2]
    assert np.all(lo_gap >= -1e-6) and np.all(hi_gap >= -1e-6)
    assert np.all(np.diff(lo_gap) <= 1e-12) and np.all(np.diff(hi_gap) <= 1e-12)


def test_gamma_j_examples():
    assert np.allclose(build_gamma_j(SINC, 0.0, 5).gamma_j, np.eye(5), atol=1e-15)
    g = build_gamma_j(SINC, 0.5, 2).gamma_j
    s = lambda x: np.sin(np.pi * x) / (np.pi * x)  # noqa: E731
    assert np.allclose(g, [[s(-0.5), s(-1.5)], [s(0.5), s(-0.5)]], atol=1e-12)
    assert np.allclose(g, [[0.6366, -0.2122], [0.6366, 0.6366]], atol=1e-4)
    assert abs(np.linalg.det(build_gamma_j(SINC, 0.37, 16).gamma_j)) > 1e-8


def test_gamma_j_rejects_finite():
    with pytest.raises(ModeMismatchError):
        build_gamma_j(BOX, 0.0, 3)


def test_circulant_checks():
    rep = circulant_rank_check(build_gamma_j(SINC, 0.0, 8), 32)
    assert rep.min_abs_dft == pytest.approx(1.0)
    rep = circulant_rank_check(build_gamma_j(SINC, 0.5, 8), 32)
    assert rep.full_rank and rep.bounded
    with pytest.raises(DimensionError):
        circulant_rank_check(build_gamma_j(SINC, 0.5, 8), 16)


@given(st.floats(0.01, 0.99), st.integers(2, 24))
def test_circulant_bound_holds(tau, q):
    rep = circulant_rank_check(build_gamma_j(SINC, tau, q), 2 * q + 1)
    assert rep.full_rank and rep.bounded


@given(st.floats(0.0, 0.99), st.floats(-np.pi / 2, np.pi / 2))
def test_dtft_shift_property_of_sinc_samples(tau, omega):
    # sum_k sinc(k - tau) e^{-j w k} = e^{-j w tau} inside the band
    k = np.arange(-4000, 4001)
    s = np.sum(np.sinc(k - tau) * np.exp(-1j * omega * k))
    assert abs(s - np.exp(-1j * omega * tau)) < 2e-3


def test_spectra_rows_shape():
    sg = build_gamma_omega(*TWO_BOX, 1)
    rows = spectra_rows(sg)
    assert rows.shape == (256, 3)
