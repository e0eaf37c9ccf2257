"""Brute-force grid solutions of the outage-exponent minimizations.

Every closed-form tradeoff curve is the value of a small minimization:
minimize a weighted sum of channel exponents subject to the high-SNR
mutual information dropping below the target rate.  This module solves
those problems on a plain grid, with no knowledge of the closed forms, so
it can be used to cross-check them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .channel_model import AF, DF, surrogate_total
from .dmt_closed_form import MODES, PROTOCOLS
from .errors import ValidationError

MARGIN = 0.25
DEFAULT_STEP = 0.005


class RealSplit(NamedTuple):
    """Frame split with real phase lengths; only the ratio matters asymptotically."""
    p: float
    q: float

    @property
    def l(self):
        return self.p + self.q

    @property
    def kappa(self):
        return self.p / self.q


def as_split(fs_or_kappa) -> RealSplit:
    if isinstance(fs_or_kappa, (int, float, np.floating)):
        k = float(fs_or_kappa)
        if not k > 0:
            raise ValidationError("split ratio must be positive")
        return RealSplit(k, 1.0)
    return RealSplit(float(fs_or_kappa.p), float(fs_or_kappa.q))


@dataclass(frozen=True)
class InfProblem:
    protocol: str
    mode: str
    fs: RealSplit
    M: int
    m: int = 0
    r: float = 0.0
    keep_alpha: bool = False  # AF with an explicit common alpha variable
    full: bool = False  # DF with one variable per participating relay

    def __post_init__(self):
        if self.protocol not in PROTOCOLS or self.mode not in MODES:
            raise ValidationError(f"unknown problem {self.protocol}/{self.mode}")
        if not 0 <= self.r <= 1:
            raise ValidationError("multiplexing gain must lie in [0, 1]")
        if not 0 <= self.m <= self.M:
            raise ValidationError("participant count must lie in [0, M]")
        object.__setattr__(self, "fs", as_split(self.fs))

    @property
    def family(self):
        return K.FAMILIES[self.protocol, self.mode]

    @property
    def dimension(self):
        if self.protocol in DF:
            return 1 + (self.m if self.full else min(self.m, 1))
        return 3 if self.keep_alpha and self.mode == "infinite" else 2

    def total(self, x):
        """Un-normalized surrogate at an argmin vector (a0, per-variable sums)."""
        p, q = self.fs
        if self.protocol in DF:
            if self.full:
                rel = np.asarray(x[1:], dtype=float)
            else:
                rel = np.full(self.m, x[1] / self.m if self.m else 0.0)
            return float(surrogate_total(self.protocol, self.mode, p, q, x[0], relay_alpha=rel))
        a = x[1] / self.M if len(x) == 3 else 0.0
        b = x[-1] / self.M
        return float(surrogate_total(self.protocol, self.mode, p, q, x[0], alpha_min=a, beta_min=b))


@dataclass(frozen=True)
class OracleResult:
    value: float
    argmin: np.ndarray
    grid_step: float

    @property
    def feasible(self):
        return math.isfinite(self.value)


def solve_inf(pb: InfProblem, grid_step=DEFAULT_STEP, backend=None) -> OracleResult:
    """Grid minimum of the exponent sum over the outage region of ``pb``.

    The box is [0, 1 + MARGIN] per exponent.  In the reduced form relay
    exponents are tied together (they enter symmetrically and the objective
    is linear), and the second coordinate of ``argmin`` is the sum of the
    tied exponents.
    """
    if not 0 < grid_step <= 0.01:
        raise ValidationError("grid step must lie in (0, 0.01]")
    p, q = pb.fs
    lr = pb.fs.l * pb.r
    hi = 1.0 + MARGIN
    fam = pb.family
    if pb.protocol in DF:
        if pb.full:
            value, arg = K.select("grid_min_full_df", backend)(fam, p, q, pb.m, lr, grid_step, hi)
            arg = np.asarray(arg, dtype=float)
        else:
            value, a0, s = K.select("grid_min_2d", backend)(fam, p, q, pb.m, pb.m, lr, grid_step, hi)
            arg = np.array([a0, s])
    elif pb.keep_alpha and pb.mode == "infinite":
        value, arg = K.select("grid_min_3d_af", backend)(fam, p, q, pb.M, lr, grid_step, hi)
        arg = np.asarray(arg, dtype=float)
    else:
        value, a0, s = K.select("grid_min_2d", backend)(fam, p, q, 0, pb.M, lr, grid_step, hi)
        arg = np.array([a0, s])
    return OracleResult(float(value), arg, grid_step)


def decode_exponent(M, m, r, fs) -> float:
    """SNR exponent of the probability that exactly m of M relays decode."""
    if not 0 <= m <= M:
        raise ValidationError("participant count must lie in [0, M]")
    if m == M:
        return 0.0
    p, q = as_split(fs)
    l = p + q
    if r <= p / l:
        return (1.0 - l * r / p) * (M - m)
    return 0.0 if m == 0 else math.inf


@lru_cache(maxsize=65536)
def _conditional(protocol, mode, p, q, m, r, step, backend):
    pb = InfProblem(protocol, mode, RealSplit(p, q), M=max(m, 1), m=m, r=r)
    return solve_inf(pb, step, backend)


def outage_exponent_detail(protocol, mode, M, fs, r, grid_step=DEFAULT_STEP, backend=None):
    """(exponent, decode count, argmin) behind ``assemble_outage_exponent``.

    The decode count is None for AF schemes and -1 when sending from the
    source alone is the better option.
    """
    if protocol not in PROTOCOLS or mode not in MODES:
        raise ValidationError(f"unknown problem {protocol}/{mode}")
    s = as_split(fs)
    r = float(r)
    if protocol in AF:
        res = solve_inf(InfProblem(protocol, mode, s, M, r=r), grid_step, backend)
        return res.value, None, res.argmin
    best, m_best, arg = math.inf, -1, np.array([1.0 - r])
    for m in range(M + 1):
        e = decode_exponent(M, m, r, s)
        if math.isinf(e):
            continue
        res = _conditional(protocol, mode, s.p, s.q, m, r, grid_step, backend)
        if e + res.value < best:
            best, m_best, arg = e + res.value, m, res.argmin
    # source-only transmission is always available; redundant for NSDF
    if 1.0 - r > best:
        return 1.0 - r, -1, np.array([1.0 - r])
    return best, m_best, arg


def assemble_outage_exponent(protocol, mode, M, fs, r, grid_step=DEFAULT_STEP, backend=None) -> float:
    """Outage exponent from the grid: DF schemes are split over decode counts.

    DF: min over m of [decode exponent + conditional outage exponent], then
    compared with transmitting from the source alone.  AF: one direct solve.
    """
    return float(outage_exponent_detail(protocol, mode, M, fs, r, grid_step, backend)[0])


def oracle_curve(protocol, mode, M, fs, r_grid, grid_step=DEFAULT_STEP, backend=None):
    return np.array([assemble_outage_exponent(protocol, mode, M, fs, r, grid_step, backend) for r in r_grid])


def regress_slope(snr_db, p_out) -> float:
    """Negated least-squares slope of log10 p_out against log10 rho."""
    x = np.asarray(snr_db, dtype=float) / 10.0
    y = np.asarray(p_out, dtype=float)
    if x.shape != y.shape or x.size < 3:
        raise ValidationError("slope fit needs at least three matching points")
    if np.any(y <= 0):
        raise ValidationError("zero outage estimate in slope fit; raise the trial count or lower the SNR")
    if np.ptp(x) == 0:
        raise ValidationError("slope fit needs distinct SNR values")
    slope = np.polyfit(x, np.log10(y), 1)[0]
    return float(-slope)


def default_sweep():
    """Configurations of the full closed-form versus grid comparison."""
    from .dmt_closed_form import GOLDEN

    kappas = (1.0, 1.5, GOLDEN, 2.0, 3.0, 5.0)
    for protocol in PROTOCOLS:
        for mode in MODES:
            for M in (1, 2, 3):
                for k in kappas:
                    yield protocol, mode, M, k


def gap_table(protocol, mode, M, kappa, r_grid, grid_step=DEFAULT_STEP, backend=None):
    """Rows of (r, oracle, closed form, |gap|, decode count, argmin)."""
    from .dmt_closed_form import fixed_curve

    curve = fixed_curve(protocol, mode, M, kappa)
    rows = []
    for r in r_grid:
        o, m, arg = outage_exponent_detail(protocol, mode, M, kappa, r, grid_step, backend)
        c = float(curve(r))
        rows.append((float(r), float(o), c, abs(o - c), m, arg))
    return rows
