"""Unit-energy shaping pulses and their delayed cross-correlations.

Finite pulses live on ``[0, u*T]`` (centred pulses are shifted right by
``u*T/2``).  The band-limited kind is the unshifted sinc, so its integer
samples form a Kronecker delta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import sici

from .errors import ModeMismatchError, ValidationError

KINDS = ("rectangular", "raised_cosine", "sinc")
NODES_PER_SYMBOL = 64
SINC_HORIZON = 64  # symbol intervals


@lru_cache(maxsize=8)
def _gauss_legendre(n):
    return np.polynomial.legendre.leggauss(n)


def integrate(f, breaks, nodes_per_unit=NODES_PER_SYMBOL, unit=1.0):
    """Composite Gauss-Legendre over consecutive intervals of ``breaks``.

    Each interval is cut into panels no longer than ``unit`` and every panel
    gets ``nodes_per_unit`` nodes.
    """
    x, w = _gauss_legendre(nodes_per_unit)
    pts, wts = [], []
    breaks = np.asarray(breaks, dtype=float)
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b - a <= 1e-15:
            continue
        k = max(1, int(math.ceil((b - a) / unit - 1e-12)))
        edges = np.linspace(a, b, k + 1)
        half = 0.5 * np.diff(edges)[:, None]
        mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
        pts.append((mid + half * x).ravel())
        wts.append((half * w).ravel())
    if not pts:
        return 0.0
    t = np.concatenate(pts)
    return float(np.dot(np.concatenate(wts), f(t)))


@dataclass(frozen=True)
class WaveformSpec:
    kind: str = "rectangular"
    support_u: float = 1
    symbol_interval: float = 1.0
    rolloff: float = 0.25

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown waveform kind {self.kind!r}; expected one of {KINDS}")
        if not self.symbol_interval > 0:
            raise ValidationError("symbol_interval must be positive")
        if self.kind == "sinc":
            if not math.isinf(self.support_u):
                object.__setattr__(self, "support_u", math.inf)
        else:
            u = self.support_u
            if math.isinf(u) or int(u) != u or u < 1:
                raise ValidationError(f"finite pulses need a positive integer support, got {u}")
            object.__setattr__(self, "support_u", int(u))
        if self.kind == "raised_cosine" and not 0.0 <= self.rolloff <= 1.0:
            raise ValidationError(f"rolloff must lie in [0, 1], got {self.rolloff}")

    @property
    def finite(self):
        return not math.isinf(self.support_u)


def _rc_shape(x, beta):
    # raised-cosine impulse response in units of T, centred at 0
    x = np.asarray(x, dtype=float)
    out = np.sinc(x)
    if beta == 0:
        return out
    den = 1.0 - (2.0 * beta * x) ** 2
    sing = np.abs(den) < 1e-10
    safe = np.where(sing, 1.0, den)
    out = out * np.cos(np.pi * beta * x) / safe
    return np.where(sing, np.pi / 4 * np.sinc(1.0 / (2 * beta)), out)


@dataclass(frozen=True)
class Waveform:
    spec: WaveformSpec
    scale: float = field(default=1.0, repr=False)

    @property
    def T(self):
        return self.spec.symbol_interval

    @property
    def finite(self):
        return self.spec.finite

    @property
    def u(self):
        return self.spec.support_u

    @property
    def support(self):
        if not self.finite:
            return (-math.inf, math.inf)
        return (0.0, self.u * self.T)

    def breakpoints(self):
        """Points where the pulse (or a derivative) may be discontinuous."""
        if not self.finite:
            return np.array([])
        return np.arange(self.u + 1) * self.T

    def _raw(self, t):
        s = self.spec
        t = np.asarray(t, dtype=float)
        if s.kind == "sinc":
            return np.sinc(t / s.symbol_interval)
        inside = (t >= 0) & (t < s.support_u * s.symbol_interval)
        if s.kind == "rectangular":
            return inside.astype(float)
        x = (t - 0.5 * s.support_u * s.symbol_interval) / s.symbol_interval
        return np.where(inside, _rc_shape(x, s.rolloff), 0.0)

    def __call__(self, t):
        return self.scale * self._raw(t)

    def energy(self):
        if self.finite:
            return integrate(lambda t: self(t) ** 2, self.breakpoints(), unit=self.T)
        # quadrature inside the horizon plus the exact sinc^2 tail beyond it
        A = SINC_HORIZON * self.T
        inner = integrate(lambda t: self(t) ** 2, np.arange(-SINC_HORIZON, SINC_HORIZON + 1) * self.T, unit=self.T)
        return inner + 2 * self.scale**2 * self.T * _sinc2_tail(SINC_HORIZON)


def _sinc2_tail(a):
    # int_a^inf sinc(x)^2 dx with sinc(x) = sin(pi x)/(pi x)
    si, _ = sici(2 * np.pi * a)
    head = (si - np.sin(np.pi * a) ** 2 / (np.pi * a)) / np.pi
    return 0.5 - head


def make_waveform(spec: WaveformSpec) -> Waveform:
    if spec.kind == "sinc":
        return Waveform(spec, 1.0 / math.sqrt(spec.symbol_interval))
    raw = Waveform(spec, 1.0)
    return Waveform(spec, 1.0 / math.sqrt(raw.energy()))


def correlate(psi_i: Waveform, psi_j: Waveform, n: int, tau_ij: float) -> float:
    """gamma_ij(n) = integral of psi_j(t - n*T + tau_ij) * psi_i(t) over t."""
    T = psi_i.T
    if not (psi_i.finite and psi_j.finite):
        if psi_i.finite or psi_j.finite:
            raise ModeMismatchError("cannot correlate a finite pulse with a band-limited one")
        # sinc inner product in closed form
        return float(np.sinc(n - tau_ij / T))
    shift = n * T - tau_ij
    lo = max(psi_i.support[0], psi_j.support[0] + shift)
    hi = min(psi_i.support[1], psi_j.support[1] + shift)
    if hi <= lo:
        return 0.0
    cuts = np.concatenate([[lo, hi], psi_i.breakpoints(), psi_j.breakpoints() + shift])
    cuts = np.unique(cuts[(cuts >= lo) & (cuts <= hi)])
    return integrate(lambda t: psi_j(t - shift) * psi_i(t), cuts, unit=T)


def sample_waveform(psi_j: Waveform, tau_j0: float, q: int) -> np.ndarray:
    """Samples psi_j(k*T - tau_j0) for k = -q+1 .. q-1."""
    if psi_j.finite:
        raise ModeMismatchError("sample-domain model requires the band-limited (sinc) pulse")
    if q < 1:
        raise ValidationError("q must be positive")
    k = np.arange(-q + 1, q)
    return psi_j(k * psi_j.T - tau_j0)


@dataclass(frozen=True)
class DelayProfile:
    delays: tuple
    symbol_interval: float = 1.0

    def __post_init__(self):
        d = tuple(float(x) for x in self.delays)
        object.__setattr__(self, "delays", d)
        if not d:
            raise ValidationError("at least one delay is required")
        if d[0] != 0.0:
            raise ValidationError("the reference node must have zero delay")
        if any(b <= a for a, b in zip(d[:-1], d[1:])):
            raise ValidationError("delays must be strictly increasing")
        if d[-1] >= self.symbol_interval:
            raise ValidationError("delays must stay below one symbol interval")

    def __len__(self):
        return len(self.delays)

    @property
    def relative(self):
        d = np.asarray(self.delays)
        return d[:, None] - d[None, :]

    @classmethod
    def random(cls, n, rng, symbol_interval=1.0):
        """Uniform delays, sorted and re-referenced to the earliest node."""
        d = np.sort(rng.uniform(0.0, symbol_interval, size=n))
        return cls(tuple(d - d[0]), symbol_interval)

    @classmethod
    def synchronous(cls, n, symbol_interval=1.0):
        # equal delays break strict ordering; callers use this only for degenerate checks
        obj = object.__new__(cls)
        object.__setattr__(obj, "delays", (0.0,) * n)
        object.__setattr__(obj, "symbol_interval", symbol_interval)
        return obj
