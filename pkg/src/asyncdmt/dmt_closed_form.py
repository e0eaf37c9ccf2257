"""Closed-form diversity-multiplexing tradeoff curves for the four relaying protocols.

Every fixed-split curve is exact piecewise-linear.  Optimal-split curves are
the pointwise supremum over the frame split; they have radical or rational
pieces and, for the finite-support decode-and-forward schemes with three or
more relays, are evaluated by maximizing the exact fixed-split curve over
the split numerically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from . import curves as C
from .curves import DmtCurve, Segment, from_pieces
from .errors import SourceAloneError, UnsupportedError, ValidationError

PROTOCOLS = ("nsdf", "osdf", "naf", "oaf")
MODES = ("finite", "infinite")
GOLDEN = (1 + math.sqrt(5)) / 2


def kappa_m(M):
    """Split threshold of the band-limited NSDF scheme."""
    return (1 + math.sqrt(1 + 4 * M * M)) / (2 * M)


@dataclass(frozen=True)
class KappaPolicy:
    value: float | None = None  # None means optimized per r

    def __post_init__(self):
        if self.value is not None and not self.value >= 1:
            raise ValidationError(f"frame split kappa must be >= 1, got {self.value}")

    @classmethod
    def fixed(cls, value):
        return cls(float(value))

    @classmethod
    def optimal(cls):
        return cls(None)

    @property
    def is_optimal(self):
        return self.value is None

    def __str__(self):
        return "opt" if self.value is None else repr(self.value)


def _check(protocol, mode, M):
    if protocol not in PROTOCOLS:
        raise ValidationError(f"unknown protocol {protocol!r}")
    if mode not in MODES:
        raise ValidationError(f"unknown waveform mode {mode!r}")
    if int(M) != M or M < 1:
        raise ValidationError("number of relays must be a positive integer")


def _split(kappa):
    p, q = float(kappa), 1.0
    return p, q, p + q


def _cutoff(curve, label):
    return C.maximum(curve, C.line(1.0, -1.0, "source alone"), label)


# --- fixed-split curves -------------------------------------------------------------


def _nsdf_infinite(M, kappa):
    p, q, l = _split(kappa)
    km = kappa_m(M)
    if kappa <= km:
        return from_pieces([
            (0, p / l, M + 1, -(M * l / p + 1), "sync NSDF, small split: M(1-lr/p)+(1-r)"),
            (p / l, 1, 1, -1, "sync NSDF: source alone"),
        ])
    e = ((M + 1) * p - l) / ((M - 1) * l + p)
    return from_pieces([
        (0, q / l, M + 1, -M * l / q, "sync NSDF, large split: (M+1)(1-Ml r/((M+1)q))"),
        (q / l, e, l / p, -l / p, "sync NSDF, large split: (l/p)(1-r)"),
        (e, p / l, M + 1, -(M * l + p) / p, "sync NSDF, large split: (M+1)(1-(Ml+p)r/((M+1)p))"),
        (p / l, 1, 1, -1, "sync NSDF: source alone"),
    ])


def _decode_term(kappa, label="decode term (1-lr/p)"):
    p, q, l = _split(kappa)
    return C.line(1.0, -l / p, label)


def nsdf_all_decode(m, kappa):
    """Exponent of outage given that m relays decode, finite-support NSDF."""
    p, q, l = _split(kappa)
    return from_pieces([
        (0, m * q / l, 1 + m, -l / q, f"all-{m}-decode: 1+m-(l/q)r"),
        (m * q / l, 1, 1 + m * q / l, -1, f"all-{m}-decode: 1+mq/l-r"),
    ])


@lru_cache(maxsize=4096)
def _nsdf_finite(M, kappa):
    p, q, l = _split(kappa)
    alone = C.line(1.0, -1.0, "source alone")
    if M == 0:
        return alone
    inner = C.add(_decode_term(kappa), _nsdf_finite(M - 1, kappa),
                  provenance=f"one relay fails + {M - 1}-relay recursion")
    inner = C.minimum(inner, nsdf_all_decode(M, kappa))
    return C.restrict(inner, p / l, alone)


def nsdf_single_relay(kappa):
    """Single-relay finite-support NSDF curve in its explicit four-region form."""
    p, q, l = _split(kappa)
    if kappa <= GOLDEN:
        return from_pieces([
            (0, p / l, 2, -(l / p + 1), "single relay, small split: (1-lr/p)+(1-r)"),
            (p / l, 1, 1, -1, "source alone"),
        ])
    return from_pieces([
        (0, q / l, 2, -l / q, "single relay, large split: 2(1-lr/(2q))"),
        (q / l, p * p / (l * l), 1 + q / l, -1, "single relay, large split: 1+q/l-r"),
        (p * p / (l * l), p / l, 2, -(l / p + 1), "single relay, large split: (1-lr/p)+(1-r)"),
        (p / l, 1, 1, -1, "source alone"),
    ])


def _osdf_infinite(M, kappa):
    p, q, l = _split(kappa)
    e1 = M * p / ((M + 1) * l - p)
    if kappa <= (M + 1) / M:
        c = from_pieces([
            (0, e1, M + 1, -(M + 1) * l / p, "sync OSDF, small split: (M+1)(1-lr/p)"),
            (e1, 1, 1, -1, "source alone"),
        ])
    else:
        e3 = ((M + 1) * p - l) / (M * l)
        c = from_pieces([
            (0, q / l, M + 1, -M * l / q, "sync OSDF, large split: (M+1)(1-Ml r/((M+1)q))"),
            (q / l, e3, l / p, -l / p, "sync OSDF, large split: (l/p)(1-r)"),
            (e3, e1, M + 1, -(M + 1) * l / p, "sync OSDF, large split: (M+1)(1-lr/p)"),
            (e1, 1, 1, -1, "source alone"),
        ])
    return _cutoff(c, c.label)


@lru_cache(maxsize=4096)
def osdf_finite_raw(M, kappa):
    """Finite-support OSDF exponent before the comparison with source-only transmission."""
    p, q, l = _split(kappa)
    zero = C.line(0.0, 0.0, "relay phase useless: 0")
    if M == 0:
        return C.restrict(C.line(1.0, -l / p, "source phase: 1-lr/p"), p / l, zero)
    rec = C.add(_decode_term(kappa), osdf_finite_raw(M - 1, kappa),
                provenance=f"one relay fails + {M - 1}-relay recursion")
    if kappa <= M + 1:
        return C.restrict(rec, p / l, zero)
    e1 = (M - 1) * (p - q) * q / (l * (p - 2 * q))
    e2, e3, e4 = M * q / l, (p - q) / l, p / l
    tail = from_pieces([
        (0, e2, 1 + M, -l / q, "all relays decode: 1+M-(l/q)r"),
        (e2, e3, 1 + M * q / p, -l / p, "all relays decode: 1+Mq/p-(l/p)r"),
        (e3, e4, M + 1, -(M + 1) * l / p, "(M+1)(1-lr/p)"),
        (e4, 1, 0, 0, "relay phase useless: 0"),
    ])
    return C.restrict(rec, e1, tail)


def _osdf_finite(M, kappa):
    return _cutoff(osdf_finite_raw(M, kappa), "")


def osdf_two_relay(kappa):
    """Two-relay finite-support OSDF curve in its explicit per-split-range form."""
    p, q, l = _split(kappa)
    stop = 2 * p / (3 * l - p)
    tail = [
        (0, stop, 3, -3 * l / p, "two relays: 3(1-lr/p)"),
        (stop, 1, 1, -1, "source alone"),
    ]
    if kappa < 2:
        return from_pieces(tail)
    head = [
        (0, q / l, 3, -l * l / (p * q), "two relays: 3-(l^2/pq)r"),
    ]
    if kappa < 3:
        mid = [(q / l, (p - q) / l, 2 + q / p, -2 * l / p, "two relays: 2(1-lr/p)+q/p")]
    else:
        x = q * (p - q) / (l * (p - 2 * q))
        mid = [
            (q / l, x, 2 + q / p, -2 * l / p, "two relays: 2(1-lr/p)+q/p"),
            (x, 2 * q / l, 3, -l / q, "two relays: 3-(l/q)r"),
            (2 * q / l, (p - q) / l, 1 + 2 * q / p, -l / p, "two relays: 1-lr/p+2q/p"),
        ]
    pieces = head + mid + [((p - q) / l, stop, 3, -3 * l / p, "two relays: 3(1-lr/p)"),
                           (stop, 1, 1, -1, "source alone")]
    return from_pieces(pieces)


def _naf_infinite(M, kappa):
    p, q, l = _split(kappa)
    if kappa <= (M + 1) / M:
        return from_pieces([
            (0, 0.5, M + 1, -(2 * M + 1), "sync NAF: M(1-2r)+(1-r)"),
            (0.5, 1, 1, -1, "sync NAF: 1-r"),
        ])
    return from_pieces([
        (0, q / l, 1 + M, -(M * (p - q) / q + 2 * M), "sync NAF, large split: (1-M(p-q)r/q)+M(1-2r)"),
        (q / l, 0.5, 1 + q / (p - q), -(1 + 2 * q / (p - q)), "sync NAF, large split: (1-r)+q(1-2r)/(p-q)"),
        (0.5, 1, 1, -1, "sync NAF: 1-r"),
    ])


def _naf_finite(M, kappa):
    p, q, l = _split(kappa)
    return from_pieces([
        (0, q / l, M + 1, -M * l / q, "async NAF: (M+1)(1-Ml r/((M+1)q))"),
        (q / l, 1, 1 + q / p, -l / p, "async NAF: 1+q/p-(l/p)r"),
    ])


def _oaf(M, kappa):
    p, q, l = _split(kappa)
    if kappa <= (M + 1) / M:
        return from_pieces([
            (0, p / l, M + 1, -(M + 1) * l / p, "OAF, small split: (M+1)(1-lr/p)"),
            (p / l, 1, 0, 0, "OAF: 0"),
        ])
    return from_pieces([
        (0, q / l, M + 1, -M * l / q, "OAF, large split: (M+1)(1-Ml r/((M+1)q))"),
        (q / l, p / l, p / (p - q), -l / (p - q), "OAF, large split: p(1-lr/p)/(p-q)"),
        (p / l, 1, 0, 0, "OAF: 0"),
    ])


_FIXED = {
    ("nsdf", "infinite"): _nsdf_infinite,
    ("nsdf", "finite"): _nsdf_finite,
    ("osdf", "infinite"): _osdf_infinite,
    ("osdf", "finite"): _osdf_finite,
    ("naf", "infinite"): _naf_infinite,
    ("naf", "finite"): _naf_finite,
    ("oaf", "infinite"): _oaf,
    ("oaf", "finite"): _oaf,
}


def fixed_curve(protocol, mode, M, kappa) -> DmtCurve:
    _check(protocol, mode, M)
    KappaPolicy.fixed(kappa)
    c = _FIXED[protocol, mode](int(M), float(kappa))
    return C.relabel(c, f"{protocol} {mode} M={M} kappa={kappa!r}")


# --- optimal-split envelopes ----------------------------------------------------------


def _nonlinear(lo, hi, f, prov):
    return Segment(lo, hi, math.nan, math.nan, prov, f)


def _linear(lo, hi, a, b, prov):
    return Segment(lo, hi, b, a, prov)


def _nsdf_infinite_opt(M):
    km = kappa_m(M)
    r0 = 1 / (1 + km)
    return (
        _linear(0, r0, M + 1, -M * (1 + km), "sync NSDF, split kappa_M: (M+1)(1-M(1+kappa_M)r/(M+1))"),
        _nonlinear(r0, 1, lambda r: (M + 1 - r) * (1 - r) / ((M - 1) * r + 1),
                   "sync NSDF, split (1+(M-1)r)/(M(1-r)): (M+1-r)(1-r)/((M-1)r+1)"),
    )


def _nsdf_finite_opt(M):
    r0 = 1 / (1 + GOLDEN)
    return (
        _linear(0, r0, M + 1, -(M * (1 + 1 / GOLDEN) + 1), "async NSDF, golden split: M(1-(1+1/g)r)+(1-r)"),
        _nonlinear(r0, 1, lambda r: M * (1 - np.sqrt(r)) + (1 - r),
                   "async NSDF, split sqrt(r)/(1-sqrt(r)): M(1-sqrt(r))+(1-r)"),
    )


def _osdf_infinite_opt(M):
    r0 = M / (2 * M + 1)
    return (
        _linear(0, r0, M + 1, -(2 * M + 1), "sync OSDF, split (M+1)/M: (M+1)(1-(2M+1)r/(M+1))"),
        _nonlinear(r0, 1, lambda r: (M + 1) * (1 - r) / (1 + M * r),
                   "sync OSDF, split (1+Mr)/(M(1-r)): (M+1)(1-r)/(1+Mr)"),
    )


def _osdf_finite_opt(M):
    return (
        _linear(0, 1 / 3, M + 1, -1.5 * (M + 1), "async OSDF, split 2: (M+1)(1-3r/2)"),
        _nonlinear(1 / 3, 1, lambda r: (M + 1) * (1 - r) / (1 + r),
                   "async OSDF, split (1+r)/(1-r): (M+1)(1-r)/(1+r)"),
    )


def _naf_infinite_opt(M):
    return _naf_infinite(M, 1.0).segments


def _naf_finite_opt(M):
    return _naf_finite(M, 1.0).segments


def _oaf_opt(M):
    return (
        _linear(0, 0.5, M + 1, -(2 * M + 1), "OAF, split (M+1)/M: M(1-2r)+(1-r)"),
        _linear(0.5, 1, 1, -1, "source alone"),
    )


_OPT = {
    ("nsdf", "infinite"): _nsdf_infinite_opt,
    ("nsdf", "finite"): _nsdf_finite_opt,
    ("osdf", "infinite"): _osdf_infinite_opt,
    ("osdf", "finite"): _osdf_finite_opt,
    ("naf", "infinite"): _naf_infinite_opt,
    ("naf", "finite"): _naf_finite_opt,
    ("oaf", "infinite"): _oaf_opt,
    ("oaf", "finite"): _oaf_opt,
}

# closed-form envelopes for these are only valid up to two relays
_NUMERIC_FROM = {("nsdf", "finite"): 3, ("osdf", "finite"): 3}


def needs_numeric_envelope(protocol, mode, M):
    lim = _NUMERIC_FROM.get((protocol, mode))
    return lim is not None and M >= lim


def decomposition_value(protocol, M, kappa, r):
    """Finite-support DF exponent as min over decode counts m of decode cost + conditional outage.

    Scalar twin of the recursive curves; used where many splits must be tried.
    """
    p, q, l = _split(kappa)
    if r >= p / l:
        return 1.0 - r if protocol == "nsdf" else max(0.0, 1.0 - r)
    best = math.inf
    for m in range(M + 1):
        if protocol == "nsdf":
            b = 1 + m - l * r / q if r <= m * q / l else 1 + m * q / l - r
        else:
            b = 1 + m - l * r / q if r <= m * q / l else 1 + m * q / p - l * r / p
        best = min(best, (M - m) * (1 - l * r / p) + b)
    return best if protocol == "nsdf" else max(best, 1.0 - r)


class SplitSearch:
    """Pointwise maximization of a fixed-split curve over the split.

    The split is parameterized by t = q/l in (0, 1/2]; a coarse t-grid picks
    the basin and a bounded scalar search polishes it.
    """

    def __init__(self, protocol, mode, M):
        self.key = (protocol, mode, int(M))
        t = np.concatenate([np.linspace(0.5, 0.01, 491), np.geomspace(0.01, 1e-6, 81)[1:]])
        self.t = np.unique(np.concatenate([t, 1 / (1 + np.array([GOLDEN, 2.0, 3.0, 5.0, 1.5, 1.2]))]))[::-1]
        self._curves = [self._curve(x) for x in self.t]

    def _curve(self, t):
        return _FIXED[self.key[:2]](self.key[2], (1 - t) / t)

    def _value(self, t, r):
        if self.key[1] == "finite" and self.key[0] in ("nsdf", "osdf"):
            return decomposition_value(self.key[0], self.key[2], (1 - t) / t, r)
        return float(self._curve(t)(r))

    def grid_values(self, r):
        return np.array([c(r) for c in self._curves])

    def argmax(self, r, vals=None):
        if vals is None:
            vals = self.grid_values(r)
        i = int(np.argmax(vals))
        lo = self.t[min(i + 1, len(self.t) - 1)]
        hi = self.t[max(i - 1, 0)]
        best_t, best_v = self.t[i], vals[i]
        if hi > lo:
            res = minimize_scalar(lambda t: -self._value(t, r), bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-12})
            if -res.fun > best_v:
                best_t, best_v = float(res.x), -float(res.fun)
        return (1 - best_t) / best_t, best_v


@lru_cache(maxsize=16)
def _split_search(protocol, mode, M):
    return SplitSearch(protocol, mode, M)


def _numeric_envelope(protocol, mode, M):
    search = _split_search(protocol, mode, M)
    cache = {}

    def f(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        todo = np.array(sorted({x for x in r.tolist() if x not in cache}))
        if todo.size:
            grid = search.grid_values(todo)
            for k, x in enumerate(todo):
                cache[x] = 0.0 if x >= 1.0 else search.argmax(x, grid[:, k])[1]
        return np.array([cache[x] for x in r.tolist()])

    return (_nonlinear(0.0, 1.0, f, f"{protocol.upper()} {mode}: numerical sup over split of fixed-split curve"),)


def optimal_curve(protocol, mode, M) -> DmtCurve:
    _check(protocol, mode, M)
    if needs_numeric_envelope(protocol, mode, M):
        segs = _numeric_envelope(protocol, mode, int(M))
    else:
        segs = _OPT[protocol, mode](int(M))
    return DmtCurve(tuple(segs), f"{protocol} {mode} M={M} kappa=opt")


def dmt_curve(protocol, mode, M, policy: KappaPolicy) -> DmtCurve:
    if policy.is_optimal:
        return optimal_curve(protocol, mode, M)
    return fixed_curve(protocol, mode, M, policy.value)


def dmt_nsdf(M, mode, policy):
    return dmt_curve("nsdf", mode, M, policy)


def dmt_osdf(M, mode, policy):
    return dmt_curve("osdf", mode, M, policy)


def dmt_naf(M, mode, policy):
    return dmt_curve("naf", mode, M, policy)


def dmt_oaf(M, mode, policy):
    return dmt_curve("oaf", mode, M, policy)


def optimal_kappa(protocol, mode, M, r) -> float:
    """Frame split attaining the optimal-split curve at r."""
    _check(protocol, mode, M)
    if not 0 <= r < 1:
        raise ValidationError("optimal split is defined for r in [0, 1)")
    if needs_numeric_envelope(protocol, mode, M):
        return _split_search(protocol, mode, int(M)).argmax(r)[0]
    if protocol == "nsdf" and mode == "infinite":
        km = kappa_m(M)
        return km if r < 1 / (1 + km) else max(1.0, (1 + (M - 1) * r) / (M * (1 - r)))
    if protocol == "nsdf":
        if r <= 1 / (1 + GOLDEN):
            return GOLDEN
        return math.sqrt(r) / (1 - math.sqrt(r))
    if protocol == "osdf" and mode == "infinite":
        return (M + 1) / M if r <= M / (2 * M + 1) else (1 + M * r) / (M * (1 - r))
    if protocol == "osdf":
        return 2.0 if r <= 1 / 3 else (1 + r) / (1 - r)
    if protocol == "naf":
        return 1.0
    if r <= 0.5:
        return (M + 1) / M
    raise SourceAloneError("beyond r = 1/2 the OAF optimum is source-only transmission; no split applies")


def miso_bound(M):
    return C.line(M + 1.0, -(M + 1.0), "(M+1)x1 MISO: (M+1)(1-r)")


__all__ = [
    "DmtCurve", "KappaPolicy", "PROTOCOLS", "MODES", "GOLDEN", "kappa_m", "fixed_curve", "optimal_curve",
    "dmt_curve", "dmt_nsdf", "dmt_osdf", "dmt_naf", "dmt_oaf", "optimal_kappa", "nsdf_single_relay",
    "osdf_two_relay", "osdf_finite_raw", "decomposition_value", "nsdf_all_decode", "miso_bound", "needs_numeric_envelope",
]
