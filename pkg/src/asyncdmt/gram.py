"""Structured correlation matrices of the matched-filter bank and their spectra."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .errors import DimensionError, ModeMismatchError, NumericalCheckError, ValidationError
from .waveforms import DelayProfile, Waveform, _gauss_legendre, correlate, sample_waveform

PATH_TOL = 1e-7
SZEGO_SLACK = 1e-6


def default_omega_grid(n=256):
    return 2 * np.pi * np.arange(n) / n


def _config_key(waveforms, delays, u):
    return (tuple(w.spec for w in waveforms), tuple(delays.delays), u)


def lag_table(waveforms, delays, u):
    """gamma[i, j, n + u] for lags n = -u..u."""
    k = len(waveforms)
    tau = delays.relative
    g = np.zeros((k, k, 2 * u + 1))
    for i in range(k):
        for j in range(i, k):
            for n in range(-u, u + 1):
                v = correlate(waveforms[i], waveforms[j], n, tau[i, j])
                g[i, j, n + u] = v
                g[j, i, -n + u] = v  # real pulses: gamma_ji(-n) = gamma_ij(n)
    return g


@dataclass(frozen=True)
class CorrelationGram:
    """Block-Toeplitz correlation of the matched-filter outputs.

    The filtered noise has covariance ``sigma_d^2 * xi``.
    """

    blocks: np.ndarray  # (k, k, q, q)
    xi: np.ndarray
    q: int
    u: int
    lags: np.ndarray = field(repr=False)
    key: tuple = field(repr=False, compare=False)

    @property
    def nodes(self):
        return self.blocks.shape[0]


def _check_support(waveforms, u):
    for w in waveforms:
        if not w.finite:
            raise ModeMismatchError("block-Toeplitz model needs finite-support pulses")
        if w.u > u:
            raise ValidationError(f"band order u={u} is smaller than a pulse support ({w.u})")


def build_xi(waveforms, delays: DelayProfile, u: int, q: int) -> CorrelationGram:
    waveforms = list(waveforms)
    if len(waveforms) != len(delays):
        raise ValidationError("need exactly one waveform per delay")
    if q < u + 1:
        raise DimensionError(f"block size q={q} must be at least u+1={u + 1}")
    _check_support(waveforms, u)
    g = lag_table(waveforms, delays, u)
    k = len(waveforms)
    blocks = np.zeros((k, k, q, q))
    for i in range(k):
        for j in range(k):
            col = np.zeros(q)
            row = np.zeros(q)
            m = min(u, q - 1)
            col[: m + 1] = g[i, j, u : u + m + 1]
            row[: m + 1] = g[i, j, u - m : u + 1][::-1]
            blocks[i, j] = toeplitz(col, row)
    xi = blocks.transpose(0, 2, 1, 3).reshape(k * q, k * q)
    return CorrelationGram(blocks, xi, q, u, g, _config_key(waveforms, delays, u))


@dataclass(frozen=True)
class SpectralGram:
    omega_grid: np.ndarray
    matrices: np.ndarray  # (n_omega, k, k) from the DTFT of the lag table
    eigenvalues: np.ndarray  # ascending per omega
    integral_matrices: np.ndarray | None = field(default=None, repr=False)
    key: tuple = field(default=(), repr=False, compare=False)
    band_limited: bool = False

    @property
    def path_gap(self):
        """Largest entrywise gap between the DTFT and the integral constructions."""
        if self.integral_matrices is None:
            return None
        return float(np.max(np.abs(self.matrices - self.integral_matrices)))


def dtft_matrices(lags, omega_grid, u):
    n = np.arange(-u, u + 1)
    phase = np.exp(-1j * np.outer(omega_grid, n))
    return np.einsum("wn,ijn->wij", phase, lags)


def integral_matrices(waveforms, delays, omega_grid):
    """Gamma(omega) as the Gram integral of the periodised, phase-weighted pulses over one symbol."""
    T = delays.symbol_interval
    d = np.asarray(delays.delays)
    cuts = np.unique(np.concatenate([[0.0, T], np.mod(d, T)]))
    x, w = _gauss_legendre(64)
    half = 0.5 * np.diff(cuts)[:, None]
    mid = 0.5 * (cuts[1:] + cuts[:-1])[:, None]
    t = (mid + half * x).ravel()
    wt = (half * w).ravel()
    umax = max(wf.u for wf in waveforms)
    shifts = np.arange(-1, umax + 2)
    phase = np.exp(1j * np.outer(omega_grid, shifts))  # (n_omega, n_shift)
    V = np.empty((len(omega_grid), len(t), len(waveforms)), dtype=complex)
    for j, wf in enumerate(waveforms):
        samples = wf(t[:, None] + shifts[None, :] * T - d[j])  # (n_t, n_shift)
        V[:, :, j] = np.einsum("ts,ws->wt", samples, phase)
    return np.einsum("wti,t,wtj->wij", V.conj(), wt, V)


def build_gamma_omega(waveforms, delays, u, omega_grid=None, cross_check=True, horizon=None) -> SpectralGram:
    """Spectral symbol Gamma(omega) of the correlation sequence.

    Finite pulses are evaluated twice (DTFT of the lag table and the Gram
    integral over one symbol) and the two must agree to ``PATH_TOL``.
    Band-limited pulses use the DTFT truncated at ``horizon`` lags.
    """
    waveforms = list(waveforms)
    if omega_grid is None:
        omega_grid = default_omega_grid()
    omega_grid = np.asarray(omega_grid, dtype=float)
    if all(w.finite for w in waveforms):
        _check_support(waveforms, u)
        lags = lag_table(waveforms, delays, u)
        mats = dtft_matrices(lags, omega_grid, u)
        alt = integral_matrices(waveforms, delays, omega_grid) if cross_check else None
        if alt is not None and np.max(np.abs(mats - alt)) > PATH_TOL:
            raise NumericalCheckError(
                f"DTFT and integral forms of Gamma(omega) differ by {np.max(np.abs(mats - alt)):.3g}"
            )
    elif not any(w.finite for w in waveforms):
        h = int(horizon or 256)
        lags = lag_table(waveforms, delays, h)
        mats = dtft_matrices(lags, omega_grid, h)
        alt = None
    else:
        raise ModeMismatchError("cannot mix finite and band-limited pulses")
    mats = 0.5 * (mats + mats.conj().transpose(0, 2, 1))
    eig = np.linalg.eigvalsh(mats)
    band = not waveforms[0].finite
    return SpectralGram(omega_grid, mats, eig, alt, _config_key(waveforms, delays, u), band)


@dataclass(frozen=True)
class PsdReport:
    min_eig: float
    violating_omegas: np.ndarray
    rank_ratio: float  # worst second-largest / largest eigenvalue over the grid

    @property
    def positive_definite(self):
        return self.min_eig > 0

    @property
    def rank_one(self):
        return self.rank_ratio < 1e-2


def check_psd(sg: SpectralGram, tol=1e-9) -> PsdReport:
    eig = sg.eigenvalues
    bad = sg.omega_grid[eig[:, 0] < -tol]
    if eig.shape[1] > 1:
        keep = np.ones(len(sg.omega_grid), dtype=bool)
        if sg.band_limited:
            # a fractional-delay symbol jumps at omega = pi; truncated sums ring there
            keep = np.abs(sg.omega_grid - np.pi) >= np.pi / 8
        e = eig[keep]
        ratio = float(np.max(np.abs(e[:, -2]) / np.abs(e[:, -1])))
    else:
        ratio = 0.0
    return PsdReport(float(eig.min()), bad, ratio)


@dataclass(frozen=True)
class SzegoReport:
    lam_min: float
    lam_max: float
    mu_min: float
    mu_max: float
    contained: bool
    trace_ratio: float  # (sum lambda / q) / mean_omega(sum mu)
    square_ratio: float  # same identity with F(x) = x^2


def szego_eig_check(cg: CorrelationGram, sg: SpectralGram, slack=SZEGO_SLACK) -> SzegoReport:
    if cg.key != sg.key:
        raise ValidationError("Gram and spectral objects were built from different configurations")
    lam = np.linalg.eigvalsh(cg.xi)
    mu = sg.eigenvalues
    lo, hi = float(mu.min()), float(mu.max())
    contained = bool(lam[0] >= lo - slack and lam[-1] <= hi + slack)
    # the uniform grid average is the exact circle mean for trigonometric polynomials of low degree
    tr = (lam.sum() / cg.q) / mu.sum(axis=1).mean()
    sq = (np.sum(lam**2) / cg.q) / np.sum(mu**2, axis=1).mean()
    return SzegoReport(float(lam[0]), float(lam[-1]), lo, hi, contained, float(tr), float(sq))


def szego_convergence(waveforms, delays, u, qs=(8, 16, 32, 64), omega_grid=None):
    """Distance of the extreme eigenvalues of Xi from the spectral extremes, per block size."""
    sg = build_gamma_omega(waveforms, delays, u, omega_grid)
    lo, hi = sg.eigenvalues.min(), sg.eigenvalues.max()
    rows = []
    for q in qs:
        lam = np.linalg.eigvalsh(build_xi(waveforms, delays, u, q).xi)
        rows.append((q, lam[0] - lo, hi - lam[-1]))
    return np.array(rows)


@dataclass(frozen=True)
class ToeplitzSampleMatrix:
    gamma_j: np.ndarray
    samples: np.ndarray  # lags -q+1 .. q-1

    @property
    def q(self):
        return self.gamma_j.shape[0]


def build_gamma_j(psi_j: Waveform, tau_j0: float, q: int) -> ToeplitzSampleMatrix:
    s = sample_waveform(psi_j, tau_j0, q)
    c = s[q - 1 :]
    r = s[: q][::-1]
    return ToeplitzSampleMatrix(toeplitz(c, r), s)


@dataclass(frozen=True)
class CirculantReport:
    min_abs_dft: float
    eig_abs_max: float
    abs_f_max: float
    f_min: float | None  # real-symbol bounds, only when the matrix is Hermitian
    f_max: float | None
    eig_min: float | None
    eig_max: float | None

    @property
    def full_rank(self):
        return self.min_abs_dft > 0

    @property
    def bounded(self):
        ok = self.eig_abs_max <= 2 * self.abs_f_max + 1e-9
        if self.f_min is not None:
            ok = ok and self.f_min - 1e-6 <= self.eig_min and self.eig_max <= self.f_max + 1e-6
        return ok


def circulant_rank_check(tm: ToeplitzSampleMatrix, N: int, n_fine=4096) -> CirculantReport:
    q = tm.q
    if N <= 2 * q:
        raise DimensionError(f"circulant size N={N} must exceed 2q={2 * q}")
    s = tm.samples
    seq = np.zeros(N)
    seq[:q] = s[q - 1 :]  # gamma(0..q-1)
    seq[N - q + 1 :] = s[: q - 1]  # gamma(-q+1..-1)
    dft = np.fft.fft(seq)
    w = 2 * np.pi * np.arange(n_fine) / n_fine
    k = np.arange(-q + 1, q)
    f = np.exp(-1j * np.outer(w, k)) @ s
    lam = np.linalg.eigvals(tm.gamma_j)
    herm = np.allclose(tm.gamma_j, tm.gamma_j.conj().T, atol=1e-12)
    if herm:
        lr = np.linalg.eigvalsh(tm.gamma_j)
        return CirculantReport(float(np.abs(dft).min()), float(np.abs(lam).max()), float(np.abs(f).max()),
                               float(f.real.min()), float(f.real.max()), float(lr[0]), float(lr[-1]))
    return CirculantReport(float(np.abs(dft).min()), float(np.abs(lam).max()), float(np.abs(f).max()),
                           None, None, None, None)


def spectra_rows(sg: SpectralGram):
    """Rows (omega, mu_1, ..., mu_k) for CSV output."""
    return np.column_stack([sg.omega_grid, sg.eigenvalues])
