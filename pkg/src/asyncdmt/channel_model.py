"""Fading realizations and mutual information of the asynchronous two-hop relay channel.

Two information metrics are offered.  ``mutual_info`` evaluates the exact
log-determinant of the linear Gaussian model seen by the destination
(matched-filter bank for finite pulses, Nyquist sampling for sinc pulses).
``mutual_info_surrogate`` gives the piecewise-linear high-SNR exponent of
the same quantity, in units of log(rho) and normalized by the frame length.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular

from .errors import SingularNoiseError, ValidationError
from .gram import build_gamma_j, build_xi
from .waveforms import DelayProfile, Waveform, WaveformSpec, make_waveform

DF = ("nsdf", "osdf")
AF = ("naf", "oaf")
PD_TOL = 1e-10


@dataclass(frozen=True)
class FrameSplit:
    p: int
    q: int

    def __post_init__(self):
        if int(self.p) != self.p or int(self.q) != self.q or self.p < 1 or self.q < 1:
            raise ValidationError("frame split needs positive integer phase lengths")

    @property
    def l(self):
        return self.p + self.q

    @property
    def kappa(self):
        return self.p / self.q

    @classmethod
    def from_kappa(cls, kappa, max_den=64):
        """Smallest integer split whose ratio approximates ``kappa``."""
        f = Fraction(kappa).limit_denominator(max_den)
        return cls(f.numerator, f.denominator)


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray  # node -> destination, index 0 is the source
    g: np.ndarray  # source -> relay k, k = 1..M stored at g[k-1]
    sigma_d2: float = 1.0
    sigma_r2: float = 1.0

    @property
    def M(self):
        return len(self.g)


def complex_gaussian(rng, size):
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2)


def sample_channels(M, seed) -> ChannelRealization:
    if M < 1:
        raise ValidationError("at least one relay is required")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return ChannelRealization(complex_gaussian(rng, M + 1), complex_gaussian(rng, M))


@dataclass(frozen=True)
class ExponentPoint:
    alpha: np.ndarray
    beta: np.ndarray

    @classmethod
    def from_realization(cls, real: ChannelRealization, rho):
        L = np.log(rho)
        h2 = np.abs(real.h) ** 2
        hg2 = h2[1:] * np.abs(real.g) ** 2
        with np.errstate(divide="ignore"):
            return cls(-np.log(h2) / L, -np.log(hg2) / L)


@dataclass(frozen=True)
class DecodeSet:
    relays: tuple  # 1-based relay indices
    include_source: bool

    @property
    def participants(self):
        return ((0,) if self.include_source else ()) + tuple(self.relays)

    @property
    def m(self):
        return len(self.relays)


def decode_threshold(rho, r, fs: FrameSplit):
    """|g|^2 a relay needs to decode a rate r*log2(rho) message within p channel uses."""
    return (rho ** (fs.l * r / fs.p) - 1.0) / rho


def decode_set(real: ChannelRealization, rho, r, fs: FrameSplit, protocol="nsdf") -> DecodeSet:
    if not rho > 1:
        raise ValidationError("rho must exceed 1")
    if not 0 <= r <= 1:
        raise ValidationError("r must lie in [0, 1]")
    ok = np.abs(real.g) ** 2 >= decode_threshold(rho, r, fs)
    return DecodeSet(tuple(int(k) + 1 for k in np.flatnonzero(ok)), protocol != "osdf")


# --- surrogate exponents ------------------------------------------------------------------


def _pos(x):
    return np.maximum(x, 0.0)


def surrogate_total(protocol, mode, p, q, a0, relay_alpha=None, alpha_min=None, beta_min=None):
    """Un-normalized surrogate: compare against l*r.  Broadcasts over leading axes.

    DF schemes read ``relay_alpha`` (last axis = participating relays); AF
    schemes read the minima ``alpha_min`` and ``beta_min`` over all relays.
    """
    a0 = np.asarray(a0, dtype=float)
    l = p + q
    if protocol in DF:
        ra = np.zeros(a0.shape + (0,)) if relay_alpha is None else np.asarray(relay_alpha, dtype=float)
        first = l if protocol == "nsdf" else p
        if mode == "finite":
            return first * _pos(1 - a0) + q * _pos(1 - ra).sum(axis=-1)
        if protocol == "nsdf":
            amin = np.minimum(a0, ra.min(axis=-1, initial=np.inf))
            return p * _pos(1 - a0) + q * _pos(1 - amin)
        if ra.shape[-1] == 0:
            return p * _pos(1 - a0)
        return p * _pos(1 - a0) + q * _pos(1 - ra.min(axis=-1))
    b = np.asarray(beta_min, dtype=float)
    if mode == "finite":
        first = p if protocol == "naf" else p - q
        return first * _pos(1 - a0) + q * _pos(np.maximum(1 - a0, 1 - b))
    a = np.zeros_like(a0) if alpha_min is None else np.asarray(alpha_min, dtype=float)
    inner = np.maximum(np.maximum(-a, 1 - a - a0), 1 - b)
    inner = np.maximum(inner, 2 * (1 - a0) if protocol == "naf" else 1 - a0)
    return (p - q) * _pos(1 - a0) + q * _pos(inner)


def mutual_info_surrogate(protocol, mode, fs: FrameSplit, exps: ExponentPoint, decoded: DecodeSet | None = None):
    """High-SNR mutual information in multiples of log(rho), per channel use of the frame.

    For DF schemes ``decoded`` selects which relay exponents participate
    (all relays when omitted).
    """
    a = np.asarray(exps.alpha, dtype=float)
    if protocol in DF:
        idx = np.arange(1, len(a)) if decoded is None else np.asarray(decoded.relays, dtype=int)
        total = surrogate_total(protocol, mode, fs.p, fs.q, a[0], relay_alpha=a[idx])
    else:
        total = surrogate_total(protocol, mode, fs.p, fs.q, a[0], alpha_min=a[1:].min(),
                                beta_min=np.min(exps.beta))
    return float(total) / fs.l


def effective_mode(mode, waveforms=None, delays=None):
    """Surrogate family that applies to a concrete pulse/delay setup.

    Identical finite pulses sent with no relative delay superpose at the
    receiver exactly like band-limited ones: the correlation matrix has
    rank q and the per-link parallel-channel structure is lost.
    """
    if mode != "finite" or waveforms is None or delays is None:
        return mode
    d = np.asarray(delays, dtype=float)
    specs = {w.spec if isinstance(w, Waveform) else w for w in waveforms}
    if len(specs) == 1 and np.all(d == d[0]):
        return "infinite"
    return mode


# --- exact mutual information -------------------------------------------------------------


class LinkGrams:
    """Correlation matrices the destination and relays see, for one waveform/delay setup.

    ``waveforms`` and ``delays`` list the source first, then relays 1..M.
    Phase-2 matrices depend on who transmits and are cached per subset.
    """

    def __init__(self, mode, fs: FrameSplit, waveforms=None, delays=None, u=None):
        self.mode = mode
        self.fs = fs
        if mode == "infinite":
            waveforms = waveforms or [make_waveform(WaveformSpec("sinc"))]
        if waveforms is None:
            raise ValidationError("finite-support mode needs explicit waveforms")
        self.waveforms = list(waveforms)
        self.delays = np.asarray(delays if delays is not None else np.zeros(len(self.waveforms)), dtype=float)
        if mode == "finite":
            self.u = int(u or max(w.u for w in self.waveforms))
        else:
            self.u = None
        self._cache = {}

    def _wave(self, node):
        return self.waveforms[node if len(self.waveforms) > 1 else 0]

    def phase1(self):
        """p x p correlation of the source pulse (identity for sinc sampling)."""
        if self.mode == "infinite":
            return np.eye(self.fs.p)
        key = ("p1",)
        if key not in self._cache:
            self._cache[key] = build_xi([self._wave(0)], DelayProfile((0.0,)), self.u, max(self.fs.p, self.u + 1)).xi[
                : self.fs.p, : self.fs.p]
        return self._cache[key]

    def phase2(self, nodes, allow_singular=False):
        """Per-node column blocks B_j and noise covariance for the second phase."""
        nodes = tuple(nodes)
        key = ("p2", nodes)
        if key in self._cache:
            return self._cache[key]
        q = self.fs.q
        d = self.delays[list(nodes)] - self.delays[nodes[0]]
        if self.mode == "infinite":
            blocks = [build_gamma_j(self._wave(n), float(t), q).gamma_j for n, t in zip(nodes, d)]
            out = (blocks, np.eye(q))
        else:
            if np.any(np.diff(d) <= 0):
                if not allow_singular:
                    raise SingularNoiseError("coincident delays make the matched-filter noise covariance singular")
                prof = DelayProfile.synchronous(len(nodes))
                object.__setattr__(prof, "delays", tuple(d))
            else:
                prof = DelayProfile(tuple(d))
            qq = max(q, self.u + 1)
            xi = build_xi([self._wave(n) for n in nodes], prof, self.u, qq).xi
            sel = np.concatenate([np.arange(k * qq, k * qq + q) for k in range(len(nodes))])
            xi = xi[np.ix_(sel, sel)]
            blocks = [xi[:, k * q:(k + 1) * q] for k in range(len(nodes))]
            out = (blocks, xi)
        self._cache[key] = out
        return out


def gaussian_mi_bits(G, Phi, rho):
    """log2 det(Phi + rho G G^H) - log2 det(Phi), whitening with a Cholesky factor of Phi."""
    try:
        L = cholesky(Phi, lower=True)
    except LinAlgError:
        L = None
    if L is None or np.min(np.abs(np.diag(L))) ** 2 < PD_TOL:
        raise SingularNoiseError(
            "noise covariance is not positive definite: the pulse set is linearly dependent at some frequency"
        )
    W = solve_triangular(L, G, lower=True)
    k = W.shape[1]
    _, ld = np.linalg.slogdet(np.eye(k) + rho * (W.conj().T @ W))
    return float(ld) / np.log(2)


def _gram_form_bits(Xi, H, rho):
    """log2 det(I + rho Xi^{1/2} H H^H Xi^{1/2}); valid for singular Xi."""
    w, V = np.linalg.eigh(Xi)
    s = V * np.sqrt(np.clip(w, 0, None))
    A = s.conj().T @ H
    _, ld = np.linalg.slogdet(np.eye(A.shape[0]) + rho * (A @ A.conj().T))
    return float(ld) / np.log(2)


@dataclass(frozen=True)
class RelayProcessor:
    maps: tuple  # q x p matrix per relay

    @property
    def rank(self):
        return min(np.linalg.matrix_rank(A) for A in self.maps)


def make_relay_processor(fs: FrameSplit, grams: LinkGrams, power_budget, M=1) -> RelayProcessor:
    """Keep the last q of the p received symbols and scale to the budget on average.

    With unit-variance fades the received block has covariance
    ``budget * Gp Gp^H + Gp`` (Gp the phase-1 correlation), so the scale makes
    ``E||x||^2 / q`` equal the per-symbol budget.
    """
    p, q = fs.p, fs.q
    if q > p:
        raise ValidationError("relay map needs q <= p")
    S = np.zeros((q, p))
    S[:, p - q:] = np.eye(q)
    Gp = grams.phase1()
    cov = power_budget * Gp @ Gp.conj().T + Gp
    energy = np.real(np.trace(S @ cov @ S.T))
    A = np.sqrt(power_budget * q / energy) * S
    return RelayProcessor(tuple(A for _ in range(M)))


def relay_power(A, grams: LinkGrams, power_budget):
    Gp = grams.phase1()
    cov = power_budget * Gp @ Gp.conj().T + Gp
    return float(np.real(np.trace(A @ cov @ A.conj().T))) / A.shape[0]


def mutual_info(protocol, mode, fs: FrameSplit, real: ChannelRealization, grams: LinkGrams, rho,
                decoded: DecodeSet | None = None, processor: RelayProcessor | None = None,
                allow_singular=False):
    """Exact mutual information in bits per channel use of the cooperative frame."""
    if grams.mode != mode:
        raise ValidationError("grams were built for a different waveform mode")
    p, q, l = fs.p, fs.q, fs.l
    h, g = np.asarray(real.h), np.asarray(real.g)
    Gp = grams.phase1()
    if protocol in DF:
        if decoded is None:
            decoded = DecodeSet(tuple(range(1, len(g) + 1)), protocol == "nsdf")
        _, ld = np.linalg.slogdet(np.eye(p) + rho * abs(h[0]) ** 2 * Gp)
        bits = float(ld) / np.log(2)
        nodes = decoded.participants
        if nodes:
            blocks, Xi = grams.phase2(nodes, allow_singular)
            H = np.zeros((len(nodes) * q, len(nodes) * q), dtype=complex)
            for k, n in enumerate(nodes):
                H[k * q:(k + 1) * q, k * q:(k + 1) * q] = h[n] * np.eye(q)
            if mode == "finite":
                if allow_singular:
                    bits += _gram_form_bits(Xi, H, rho)
                else:
                    bits += gaussian_mi_bits(Xi @ H, Xi, rho)
            else:
                G = np.hstack([h[n] * B for n, B in zip(nodes, blocks)])
                bits += gaussian_mi_bits(G, Xi, rho)
        return bits / l
    if protocol not in AF:
        raise ValidationError(f"unknown protocol {protocol!r}")
    M = len(g)
    if processor is None:
        processor = make_relay_processor(fs, grams, rho, M)
    relays = tuple(range(1, M + 1))
    nodes = ((0,) if protocol == "naf" else ()) + relays
    blocks, Xi = grams.phase2(nodes, allow_singular)
    off = 1 if protocol == "naf" else 0
    n2 = Xi.shape[0]
    # unknowns: phase-1 block (p) and, for NAF, the fresh phase-2 source block (q)
    cols = p + (q if protocol == "naf" else 0)
    G = np.zeros((p + n2, cols), dtype=complex)
    G[:p, :p] = h[0] * Gp
    noise2 = Xi.astype(complex)
    for k in relays:
        B, A = blocks[k - 1 + off], processor.maps[k - 1]
        G[p:, :p] += h[k] * g[k - 1] * (B @ A @ Gp)
        F = h[k] * (B @ A)
        noise2 = noise2 + F @ Gp @ F.conj().T
    if protocol == "naf":
        G[p:, p:] = h[0] * blocks[0]
    Phi = np.zeros((p + n2, p + n2), dtype=complex)
    Phi[:p, :p] = Gp
    Phi[p:, p:] = noise2
    return gaussian_mi_bits(G, Phi, rho) / l
