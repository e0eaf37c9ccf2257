"""Piecewise curves d(r) on [0, 1] with per-segment provenance.

Linear segments support exact pointwise sum, minimum and maximum (crossing
points are inserted), which is all the relay recursions need.  A segment
may instead carry a nonlinear callable; those only appear in optimal-split
envelopes and are never fed back into the algebra.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ValidationError

EPS = 1e-12


@dataclass(frozen=True)
class Segment:
    r_start: float
    r_end: float
    slope: float
    intercept: float
    provenance: str
    func: Optional[Callable] = field(default=None, compare=False, repr=False)

    @property
    def linear(self):
        return self.func is None

    def value(self, r):
        if self.func is not None:
            return self.func(r)
        return self.intercept + self.slope * np.asarray(r, dtype=float)


@dataclass(frozen=True)
class DmtCurve:
    segments: tuple
    label: str = ""

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ValidationError("a curve needs at least one segment")
        if abs(segs[0].r_start) > EPS or abs(segs[-1].r_end - 1.0) > EPS:
            raise ValidationError("segments must cover [0, 1]")
        for a, b in zip(segs[:-1], segs[1:]):
            if abs(a.r_end - b.r_start) > EPS:
                raise ValidationError("segments must be contiguous")

    @property
    def breakpoints(self):
        return np.array([s.r_start for s in self.segments] + [self.segments[-1].r_end])

    @property
    def linear(self):
        return all(s.linear for s in self.segments)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        ends = np.array([s.r_end for s in self.segments])
        # left-continuous: a breakpoint belongs to the segment that ends there
        idx = np.minimum(np.searchsorted(ends, r, side="left"), len(ends) - 1)
        out = np.empty(r.shape)
        for k in np.unique(idx):
            mask = idx == k
            out[mask] = self.segments[k].value(r[mask])
        return out if out.ndim else float(out)

    def sample(self, step):
        n = int(round(1.0 / step))
        r = np.linspace(0.0, 1.0, n + 1)
        return r, self(r)

    def jumps(self):
        """Absolute mismatch between neighbouring segments at each interior breakpoint."""
        out = []
        for a, b in zip(self.segments[:-1], self.segments[1:]):
            out.append(abs(float(a.value(a.r_end)) - float(b.value(b.r_start))))
        return np.array(out)

    def rows(self):
        for s in self.segments:
            if s.linear:
                yield s.r_start, s.r_end, s.slope, s.intercept, s.provenance
            else:
                yield s.r_start, s.r_end, math.nan, math.nan, s.provenance


def from_pieces(pieces, label=""):
    """Build a curve from ``(r_lo, r_hi, intercept, slope, provenance)`` tuples.

    Pieces are clipped to [0, 1]; empty ones are dropped.
    """
    segs = []
    for lo, hi, a, b, prov in pieces:
        lo, hi = max(lo, 0.0), min(hi, 1.0)
        if hi - lo <= EPS:
            continue
        if segs:
            lo = segs[-1].r_end
        segs.append(Segment(lo, hi, float(b), float(a), prov))
    if segs and segs[-1].r_end < 1.0 - EPS:
        raise ValidationError("pieces do not reach r = 1")
    if segs:
        last = segs[-1]
        segs[-1] = Segment(last.r_start, 1.0, last.slope, last.intercept, last.provenance)
    return merge_collinear(DmtCurve(tuple(segs), label))


def line(intercept, slope, provenance, label=""):
    return DmtCurve((Segment(0.0, 1.0, slope, intercept, provenance),), label)


def _common_breaks(a, b):
    pts = np.union1d(a.breakpoints, b.breakpoints)
    keep = [pts[0]]
    for x in pts[1:]:
        if x - keep[-1] > EPS:
            keep.append(x)
        else:
            keep[-1] = max(keep[-1], x)
    keep[0], keep[-1] = 0.0, 1.0
    return np.array(keep)


def _segment_at(c, lo, hi):
    mid = 0.5 * (lo + hi)
    for s in c.segments:
        if s.r_start - EPS <= mid <= s.r_end + EPS:
            return s
    return c.segments[-1]


def _require_linear(*curves):
    for c in curves:
        if not c.linear:
            raise ValidationError("curve algebra is defined for piecewise-linear curves only")


def add(a: DmtCurve, b: DmtCurve, provenance=None, label="") -> DmtCurve:
    _require_linear(a, b)
    br = _common_breaks(a, b)
    segs = []
    for lo, hi in zip(br[:-1], br[1:]):
        sa, sb = _segment_at(a, lo, hi), _segment_at(b, lo, hi)
        prov = provenance or f"{sa.provenance} + {sb.provenance}"
        segs.append(Segment(lo, hi, sa.slope + sb.slope, sa.intercept + sb.intercept, prov))
    return merge_collinear(DmtCurve(tuple(segs), label or a.label))


def _extremum(a, b, pick_min, label):
    _require_linear(a, b)
    br = _common_breaks(a, b)
    segs = []
    for lo, hi in zip(br[:-1], br[1:]):
        sa, sb = _segment_at(a, lo, hi), _segment_at(b, lo, hi)
        ds = sa.slope - sb.slope
        di = sa.intercept - sb.intercept
        cuts = [lo, hi]
        if abs(ds) > 0:
            x = -di / ds
            if lo + EPS < x < hi - EPS:
                cuts = [lo, x, hi]
        for u, v in zip(cuts[:-1], cuts[1:]):
            m = 0.5 * (u + v)
            va, vb = sa.intercept + sa.slope * m, sb.intercept + sb.slope * m
            take_a = (va <= vb) if pick_min else (va >= vb)
            s = sa if take_a else sb
            segs.append(Segment(u, v, s.slope, s.intercept, s.provenance))
    return merge_collinear(DmtCurve(tuple(segs), label or a.label))


def minimum(a, b, label=""):
    return _extremum(a, b, True, label)


def maximum(a, b, label=""):
    return _extremum(a, b, False, label)


def restrict(c: DmtCurve, r_cut: float, tail: DmtCurve) -> DmtCurve:
    """Use ``c`` on [0, r_cut] and ``tail`` on (r_cut, 1]."""
    _require_linear(c, tail)
    if r_cut >= 1.0 - EPS:
        return c
    if r_cut <= EPS:
        return tail
    segs = []
    for s in c.segments:
        if s.r_start < r_cut - EPS:
            segs.append(Segment(s.r_start, min(s.r_end, r_cut), s.slope, s.intercept, s.provenance))
    for s in tail.segments:
        if s.r_end > r_cut + EPS:
            segs.append(Segment(max(s.r_start, r_cut), s.r_end, s.slope, s.intercept, s.provenance))
    return merge_collinear(DmtCurve(tuple(segs), c.label))


def merge_collinear(c: DmtCurve, tol=1e-12) -> DmtCurve:
    if not c.linear:
        return c
    out = [c.segments[0]]
    for s in c.segments[1:]:
        p = out[-1]
        if abs(p.slope - s.slope) <= tol and abs(p.intercept - s.intercept) <= tol:
            out[-1] = Segment(p.r_start, s.r_end, p.slope, p.intercept, p.provenance)
        else:
            out.append(s)
    return DmtCurve(tuple(out), c.label)


def relabel(c: DmtCurve, label: str) -> DmtCurve:
    return DmtCurve(c.segments, label)


def eval_curve(c: DmtCurve, r):
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < -EPS) | np.any(r_arr > 1 + EPS) or np.any(np.isnan(r_arr)):
        raise ValidationError("multiplexing gain must lie in [0, 1]")
    return c(np.clip(r_arr, 0.0, 1.0))
