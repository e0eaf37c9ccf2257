"""Monte Carlo outage probabilities and empirical diversity slopes.

Channels are drawn in the exponent domain: a unit-mean Rayleigh power
gain X maps to alpha = -ln X / ln rho.  The plain sampler uses the true
law.  The importance sampler draws each exponent from a mixture of the
true law and a uniform density on [-0.5, 2.5], so deep fades occur often
enough that the rare outage events get counted at high SNR.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels as K
from .channel_model import (AF, DF, ChannelRealization, DecodeSet, FrameSplit, LinkGrams, decode_threshold,
                            make_relay_processor, mutual_info)
from .dmt_closed_form import MODES, PROTOCOLS, KappaPolicy, dmt_curve
from .errors import ValidationError
from .exponent_oracle import regress_slope
from .waveforms import WaveformSpec, make_waveform

log = logging.getLogger(__name__)

MIN_TRIALS = 10_000
MIN_EVENTS = 50
Z95 = 1.959963984540054
IS_LOW, IS_HIGH, IS_MIX = -0.5, 2.5, 0.5


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: str
    mode: str
    M: int
    fs: FrameSplit
    r: float
    snr_grid_db: tuple
    trials_per_point: int = 1_000_000
    seed: int = 0
    info_metric: str = "surrogate"
    sampler: str = "importance"
    waveforms: tuple = ()  # WaveformSpec per node (source first); one entry is shared
    delays: tuple = ()
    resample_delays: bool = False
    fit_min_db: float | None = None  # default: top half of the grid
    chunk: int = 250_000

    def __post_init__(self):
        if self.protocol not in PROTOCOLS or self.mode not in MODES:
            raise ValidationError(f"unknown scheme {self.protocol}/{self.mode}")
        if int(self.M) != self.M or self.M < 1:
            raise ValidationError("number of relays must be a positive integer")
        if not isinstance(self.fs, FrameSplit):
            raise ValidationError("fs must be a FrameSplit")
        if not 0 <= self.r <= 1:
            raise ValidationError("r must lie in [0, 1]")
        grid = np.asarray(self.snr_grid_db, dtype=float)
        if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
            raise ValidationError("SNR grid must be non-empty and strictly increasing")
        object.__setattr__(self, "snr_grid_db", tuple(float(x) for x in grid))
        if self.trials_per_point < MIN_TRIALS:
            raise ValidationError(f"need at least {MIN_TRIALS} trials per SNR point")
        if self.info_metric not in ("exact", "surrogate"):
            raise ValidationError("info_metric must be 'exact' or 'surrogate'")
        if self.sampler not in ("plain", "importance"):
            raise ValidationError("sampler must be 'plain' or 'importance'")
        if self.chunk < 1:
            raise ValidationError("chunk size must be positive")
        if self.info_metric == "exact":
            if self.mode == "finite" and not self.waveforms:
                raise ValidationError("exact finite-support runs need waveform specs")
            if self.delays and len(self.delays) != self.M + 1:
                raise ValidationError("need one delay per node")

    def to_dict(self):
        d = asdict(self)
        d["fs"] = [self.fs.p, self.fs.q]
        d["waveforms"] = [asdict(w) for w in self.waveforms]
        d["delays"] = list(self.delays)
        d["snr_grid_db"] = list(self.snr_grid_db)
        return d

    @property
    def config_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class PointEstimate:
    snr_db: float
    trials: int
    events: int
    p_hat: float
    ci_lo: float
    ci_hi: float


@dataclass
class OutageRun:
    config: ExperimentConfig
    points: list
    slope: float
    target: float
    fitted: list = field(default_factory=list)  # snr values used in the fit

    @property
    def gap(self):
        return abs(self.slope - self.target)

    @property
    def metadata(self):
        return {"seed": self.config.seed, "config_hash": self.config.config_hash}


def wilson_interval(k, n, z=Z95):
    if n <= 0:
        raise ValidationError("interval needs at least one trial")
    ph = k / n
    den = 1 + z * z / n
    mid = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


def _normal_interval(s1, s2, n, z=Z95):
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) / n
    sd = math.sqrt(var)
    return float(mean), float(max(0.0, mean - z * sd)), float(min(1.0, mean + z * sd))


def sample_exponents(rng, shape, L, sampler):
    """Exponents of unit-mean exponential gains plus log importance weights summed over axis 0."""
    if sampler == "plain":
        x = rng.standard_exponential(shape)
        with np.errstate(divide="ignore"):
            return -np.log(x) / L, np.zeros(shape[1:])
    use = rng.random(shape) < IS_MIX
    true = -np.log(rng.standard_exponential(shape)) / L
    a = np.where(use, true, rng.uniform(IS_LOW, IS_HIGH, shape))
    log_f = math.log(L) - a * L - np.exp(-a * L)
    g = IS_MIX * np.exp(log_f) + (1 - IS_MIX) * ((a >= IS_LOW) & (a <= IS_HIGH)) / (IS_HIGH - IS_LOW)
    return a, (log_f - np.log(g)).sum(axis=0)


def _draw(cfg: ExperimentConfig, rng, n, L):
    """(a0, relay h exponents, relay g exponents, weights) for n trials."""
    M = cfg.M
    a, lw = sample_exponents(rng, (1 + 2 * M, n), L, cfg.sampler)
    return a[0], a[1:M + 1].T, a[M + 1:].T, np.exp(lw)


def _surrogate_chunk(cfg, rho, a0, ah, ag, w, backend):
    L = math.log(rho)
    fam = K.FAMILIES[cfg.protocol, cfg.mode]
    p, q = cfg.fs.p, cfg.fs.q
    if cfg.protocol in DF:
        thr = decode_threshold(rho, cfg.r, cfg.fs)
        ok = -ag * L >= math.log(thr) if thr > 0 else np.ones_like(ag, dtype=bool)
        br = ah
    else:
        ok = np.ones_like(ah, dtype=bool)
        br = ah + ag
    count = K.select("count_outage", backend)
    return count(fam, float(p), float(q), float((p + q) * cfg.r), a0, ah, br, ok, w)


def _node_waveforms(cfg):
    if cfg.mode == "infinite":
        return [make_waveform(WaveformSpec("sinc"))]
    return [make_waveform(s) for s in cfg.waveforms]


def _grams(cfg, delays):
    return LinkGrams(cfg.mode, cfg.fs, _node_waveforms(cfg), delays)


def _random_delays(rng, M):
    # source is the phase-2 time reference only in NAF; every node gets an ordered draw
    return np.sort(rng.uniform(0.0, 1.0, M + 1))


def _exact_chunk(cfg, rho, a0, ah, ag, w, rng):
    L = math.log(rho)
    M = cfg.M
    n = len(a0)
    bits_target = cfg.r * math.log2(rho)
    fixed = None
    if not cfg.resample_delays:
        delays = np.asarray(cfg.delays, dtype=float) if cfg.delays else np.arange(M + 1) / (M + 1)
        fixed = _grams(cfg, delays)
        proc = make_relay_processor(cfg.fs, fixed, rho, M) if cfg.protocol in AF else None
    thr = decode_threshold(rho, cfg.r, cfg.fs)
    phase = rng.uniform(0, 2 * np.pi, (n, 2 * M + 1))
    hits, s1, s2 = 0, 0.0, 0.0
    for t in range(n):
        grams = fixed if fixed is not None else _grams(cfg, _random_delays(rng, M))
        if fixed is None and cfg.protocol in AF:
            proc = make_relay_processor(cfg.fs, grams, rho, M)
        amp = np.exp(-0.5 * L * np.concatenate([[a0[t]], ah[t], ag[t]])) * np.exp(1j * phase[t])
        real = ChannelRealization(amp[:M + 1], amp[M + 1:])
        if cfg.protocol in DF:
            ok = np.abs(real.g) ** 2 >= thr
            dec = DecodeSet(tuple(int(k) + 1 for k in np.flatnonzero(ok)), cfg.protocol != "osdf")
            info = mutual_info(cfg.protocol, cfg.mode, cfg.fs, real, grams, rho, decoded=dec)
        else:
            info = mutual_info(cfg.protocol, cfg.mode, cfg.fs, real, grams, rho, processor=proc)
        if info < bits_target:
            hits += 1
            s1 += w[t]
            s2 += w[t] * w[t]
    return hits, s1, s2


def _chunk_task(args):
    cfg, rho, seq, n, backend = args
    rng = np.random.default_rng(seq)
    a0, ah, ag, w = _draw(cfg, rng, n, math.log(rho))
    if cfg.info_metric == "surrogate":
        return _surrogate_chunk(cfg, rho, a0, ah, ag, w, backend)
    return _exact_chunk(cfg, rho, a0, ah, ag, w, rng)


def _tasks(cfg, backend):
    root = np.random.SeedSequence(cfg.seed)
    per_snr = root.spawn(len(cfg.snr_grid_db))
    tasks = []
    for i, db in enumerate(cfg.snr_grid_db):
        sizes = [cfg.chunk] * (cfg.trials_per_point // cfg.chunk)
        if cfg.trials_per_point % cfg.chunk:
            sizes.append(cfg.trials_per_point % cfg.chunk)
        for seq, n in zip(per_snr[i].spawn(len(sizes)), sizes):
            tasks.append((i, (cfg, 10 ** (db / 10), seq, n, backend)))
    return tasks


def estimate_points(cfg: ExperimentConfig, jobs=1, backend=None):
    """Outage estimates per SNR point.  Results do not depend on ``jobs``."""
    tasks = _tasks(cfg, backend)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_chunk_task, [t for _, t in tasks]))
    else:
        results = [_chunk_task(t) for _, t in tasks]
    acc = np.zeros((len(cfg.snr_grid_db), 3))
    for (i, _), res in zip(tasks, results):  # fixed order keeps float sums reproducible
        acc[i] += res
    n = cfg.trials_per_point
    points = []
    for db, (hits, s1, s2) in zip(cfg.snr_grid_db, acc):
        hits = int(hits)
        if cfg.sampler == "plain":
            lo, hi = wilson_interval(hits, n)
            p_hat = hits / n
        else:
            p_hat, lo, hi = _normal_interval(s1, s2, n)
        points.append(PointEstimate(db, n, hits, p_hat, lo, hi))
    return points


def fit_points(cfg: ExperimentConfig, points):
    """Points used for the slope: the fit window, minus those with too few events."""
    grid = np.asarray(cfg.snr_grid_db)
    lo = cfg.fit_min_db if cfg.fit_min_db is not None else grid[len(grid) // 2]
    window = [pt for pt in points if pt.snr_db >= lo]
    used = [pt for pt in window if pt.events >= MIN_EVENTS and pt.p_hat > 0]
    for pt in window:
        if pt not in used:
            warnings.warn(f"{pt.snr_db:g} dB has {pt.events} outage events; left out of the slope fit", stacklevel=3)
    return used


def target_slope(cfg: ExperimentConfig):
    curve = dmt_curve(cfg.protocol, cfg.mode, cfg.M, KappaPolicy.fixed(cfg.fs.kappa))
    return float(curve(cfg.r))


def run_outage(cfg: ExperimentConfig, jobs=1, backend=None) -> OutageRun:
    points = estimate_points(cfg, jobs, backend)
    used = fit_points(cfg, points)
    if len(used) >= 3:
        slope = regress_slope([pt.snr_db for pt in used], [pt.p_hat for pt in used])
    else:
        warnings.warn("fewer than three usable SNR points; slope left undefined", stacklevel=2)
        slope = math.nan
    run = OutageRun(cfg, points, slope, target_slope(cfg), [pt.snr_db for pt in used])
    log.info("%s/%s M=%d r=%g: slope %.3f (target %.3f)", cfg.protocol, cfg.mode, cfg.M, cfg.r, slope, run.target)
    return run


def sweep_r(cfg: ExperimentConfig, r_grid, jobs=1, backend=None):
    seen, rs = set(), []
    for r in r_grid:
        r = float(r)
        if r in seen:
            warnings.warn(f"duplicate r={r:g} dropped", stacklevel=2)
            continue
        seen.add(r)
        rs.append(r)
    cls = type(cfg)
    runs = []
    for r in rs:
        kw = {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}
        kw["r"] = r
        runs.append(run_outage(cls(**kw), jobs, backend))
    return runs


def decode_event_estimates(M, m, fs: FrameSplit, r, snr_grid_db, trials, seed=0, sampler="importance"):
    """Probability that exactly m of M relays decode, per SNR point.

    Returns (estimates, events); both indexed like ``snr_grid_db``.
    """
    if not 0 <= m <= M:
        raise ValidationError("participant count must lie in [0, M]")
    seqs = np.random.SeedSequence(seed).spawn(len(snr_grid_db))
    est, events = [], []
    for db, seq in zip(snr_grid_db, seqs):
        rho = 10 ** (db / 10)
        L = math.log(rho)
        rng = np.random.default_rng(seq)
        ag, lw = sample_exponents(rng, (M, trials), L, sampler)
        thr = decode_threshold(rho, r, fs)
        hit = (np.exp(-ag * L) >= thr).sum(axis=0) == m
        w = np.exp(lw)
        est.append(float((w * hit).sum() / trials))
        events.append(int(hit.sum()))
    return np.array(est), np.array(events)
