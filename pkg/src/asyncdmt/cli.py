"""Command-line entry point: ``asyncdmt {curve,oracle,gram,outage}``.

Exit codes: 0 success, 2 invalid input, 3 a numerical check failed.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import gram as G
from .dmt_closed_form import GOLDEN, MODES, PROTOCOLS, KappaPolicy, dmt_curve
from .errors import NumericalCheckError, ValidationError
from .exponent_oracle import DEFAULT_STEP, default_sweep, gap_table
from .reporting import config_hash, output_dir, write_table
from .waveforms import DelayProfile, WaveformSpec, make_waveform

EXIT_OK, EXIT_INVALID, EXIT_CHECK = 0, 2, 3
log = logging.getLogger("asyncdmt")


def _meta(settings, seed=None):
    return {"tool": f"asyncdmt {__version__}", "config_hash": config_hash(settings), "seed": seed}


def _kappa(text):
    if text in ("opt", "optimal"):
        return "opt"
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"kappa must be 'opt' or a positive number, got {text!r}") from None
    if not v > 0 or math.isinf(v):
        raise argparse.ArgumentTypeError("kappa must be positive and finite")
    return v


def _policy(k):
    return KappaPolicy.optimal() if k == "opt" else KappaPolicy.fixed(k)


def _target(args, default_name):
    if args.out:
        return Path(args.out)
    return output_dir(None, create=not args.no_create) / default_name


# --- curve -----------------------------------------------------------------------------------


def cmd_curve(args):
    if not 0 < args.step <= 0.1:
        raise ValidationError("--step must lie in (0, 0.1]")
    kappas = args.kappa or ["opt"]
    curves = [dmt_curve(args.protocol, args.mode, args.relays, _policy(k)) for k in kappas]
    settings = {"cmd": "curve", "protocol": args.protocol, "mode": args.mode, "relays": args.relays,
                "kappa": [str(k) for k in kappas], "step": args.step, "segments": args.segments}
    name = f"curve_{args.protocol}_{args.mode}_M{args.relays}.csv"
    if args.segments:
        cols = ["kappa", "r_start", "r_end", "slope", "intercept", "provenance"]
        rows = [(str(k),) + tuple(row) for k, c in zip(kappas, curves) for row in c.rows()]
    else:
        n = int(round(1.0 / args.step))
        r = np.linspace(0.0, 1.0, n + 1)
        vals = [c(r) for c in curves]
        cols = ["r", "d"] if len(curves) == 1 else ["r"] + [f"d_kappa={k}" for k in kappas]
        rows = [(float(x),) + tuple(float(v[i]) for v in vals) for i, x in enumerate(r)]
    path = write_table(_target(args, name), cols, rows, _meta(settings), create=not args.no_create)
    print(path)
    return EXIT_OK


# --- oracle ----------------------------------------------------------------------------------


def _oracle_job(job):
    (protocol, mode, M, kappa), r_grid, step = job
    return gap_table(protocol, mode, M, kappa, r_grid, step)


def cmd_oracle(args):
    if not 0 < args.grid <= 0.01:
        raise ValidationError("--grid must lie in (0, 0.01]")
    if not 0 < args.r_step <= 0.1:
        raise ValidationError("--r-step must lie in (0, 0.1]")
    configs = [c for c in default_sweep()
               if (args.protocol is None or c[0] == args.protocol)
               and (args.mode is None or c[1] == args.mode)
               and (args.relays is None or c[2] == args.relays)]
    if args.kappa is not None:
        ks = [GOLDEN if k == "opt" else k for k in args.kappa]
        configs = sorted({c[:3] + (k,) for c in configs for k in ks}, key=lambda c: (
            PROTOCOLS.index(c[0]), MODES.index(c[1]), c[2], c[3]))
    r_grid = np.round(np.arange(0.0, 1.0 - 1e-9, args.r_step), 10)
    jobs = [(c, r_grid, args.grid) for c in configs]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            tables = list(ex.map(_oracle_job, jobs))
    else:
        tables = [_oracle_job(j) for j in jobs]
    rows, worst = [], 0.0
    for (protocol, mode, M, kappa), table in zip(configs, tables):
        for r, o, c, gap, m, arg in table:
            worst = max(worst, gap)
            rows.append((protocol, mode, M, float(kappa), r, o, c, gap, "" if m is None else m,
                         " ".join(repr(float(x)) for x in arg)))
    settings = {"cmd": "oracle", "configs": [list(map(str, c)) for c in configs], "grid": args.grid,
                "r_step": args.r_step, "threshold": args.threshold}
    cols = ["protocol", "mode", "M", "kappa", "r", "oracle_d", "closed_form_d", "abs_gap", "decode_count", "argmin"]
    path = write_table(_target(args, "oracle_gaps.csv"), cols, rows, _meta(settings), create=not args.no_create)
    print(f"{path}: {len(configs)} configurations, max gap {worst:.6g} (threshold {args.threshold:g})")
    return EXIT_OK if worst <= args.threshold else EXIT_CHECK


# --- gram ------------------------------------------------------------------------------------


def _wave(text):
    """kind[:support[:rolloff]], e.g. ``rectangular:2`` or ``raised_cosine:1:0.5``."""
    parts = text.split(":")
    try:
        kw = {"kind": parts[0]}
        if len(parts) > 1:
            kw["support_u"] = math.inf if parts[0] == "sinc" else int(parts[1])
        if len(parts) > 2:
            kw["rolloff"] = float(parts[2])
        if len(parts) > 3:
            raise ValueError
        return WaveformSpec(**kw)
    except (ValueError, ValidationError) as exc:
        raise argparse.ArgumentTypeError(f"bad waveform {text!r}: {exc}") from None


def cmd_gram(args):
    specs = args.waveform or [WaveformSpec("rectangular", 1)]
    delays = args.delays if args.delays is not None else [0.0] * len(specs)
    if len(specs) == 1 and len(delays) > 1:
        specs = specs * len(delays)
    if len(specs) != len(delays):
        raise ValidationError("give one delay per waveform")
    waves = [make_waveform(s) for s in specs]
    prof = DelayProfile(tuple(delays))
    band = not specs[0].finite
    checks = []
    if band:
        if any(s.finite for s in specs):
            raise ValidationError("mixing band-limited and finite-support pulses is not supported")
        sg = G.build_gamma_omega(waves, prof, None, G.default_omega_grid(args.omega_points), horizon=args.horizon)
        psd = G.check_psd(sg)
        checks += [("psd", psd.min_eig, psd.violating_omegas.size == 0),
                   ("positive_definite", psd.min_eig, psd.positive_definite),
                   ("rank_one_flag", psd.rank_ratio, psd.rank_one)]
        for j, (w, t) in enumerate(zip(waves, prof.delays)):
            tm = G.build_gamma_j(w, t - prof.delays[0], args.q)
            circ = G.circulant_rank_check(tm, 2 * args.q + 1)
            checks.append((f"circulant_full_rank_node{j}", circ.min_abs_dft, circ.full_rank))
            checks.append((f"circulant_bounded_node{j}", circ.eig_abs_max, circ.bounded))
    else:
        u = args.u or max(s.support_u for s in specs)
        cg = G.build_xi(waves, prof, u, args.q)
        sg = G.build_gamma_omega(waves, prof, u, G.default_omega_grid(args.omega_points))
        psd = G.check_psd(sg)
        sz = G.szego_eig_check(cg, sg)
        checks += [("psd", psd.min_eig, psd.violating_omegas.size == 0),
                   ("positive_definite", psd.min_eig, psd.positive_definite),
                   ("rank_one", psd.rank_ratio, psd.rank_one),
                   ("two_path_gap", sg.path_gap, sg.path_gap <= G.PATH_TOL),
                   ("szego_containment", sz.lam_min - sz.mu_min, sz.contained),
                   ("szego_trace_ratio", sz.trace_ratio, abs(sz.trace_ratio - 1) <= 0.01)]
    settings = {"cmd": "gram", "waveforms": [repr(s) for s in specs], "delays": list(delays), "q": args.q,
                "u": args.u, "omega_points": args.omega_points, "horizon": args.horizon}
    # flags report a property of the setup rather than a pass/fail check
    rows = [(name, float(v), ("raised" if ok else "clear") if name.endswith("_flag") else ("pass" if ok else "fail"))
            for name, v, ok in checks]
    path = write_table(_target(args, "gram_report.csv"), ["check", "value", "outcome"], rows, _meta(settings),
                       create=not args.no_create)
    if args.spectra:
        sp = G.spectra_rows(sg)
        cols = ["omega"] + [f"mu_{k + 1}" for k in range(sp.shape[1] - 1)]
        write_table(Path(path).with_name(Path(path).stem + "_spectra.csv"), cols, sp.tolist(), _meta(settings),
                    create=not args.no_create)
    for name, v, outcome in rows:
        print(f"{name:28s} {v: .6g}  {outcome}")
    print(path)
    return EXIT_OK


# --- outage ----------------------------------------------------------------------------------


def _outage_settings(args):
    from .channel_model import FrameSplit
    from .config import ExperimentFile, load_experiment
    from .outage_sim import ExperimentConfig

    if args.config:
        ef = load_experiment(args.config)
        if args.seed is not None:
            cfg = ExperimentConfig(**{**{k: getattr(ef.config, k) for k in ef.config.__dataclass_fields__},
                                      "seed": args.seed})
            ef = ExperimentFile(cfg, ef.r_grid, ef.out_dir, ef.prefix, ef.source)
        return ef
    missing = [f for f in ("protocol", "mode", "relays", "p", "q") if getattr(args, f) is None]
    if missing:
        raise ValidationError("without --config, pass " + ", ".join("--" + m for m in missing))
    r_grid = tuple(args.r) if args.r else (0.25,)
    cfg = ExperimentConfig(args.protocol, args.mode, args.relays, FrameSplit(args.p, args.q), r_grid[0],
                           tuple(args.snr), args.trials, args.seed or 0, sampler=args.sampler,
                           fit_min_db=args.fit_min_db)
    return ExperimentFile(cfg, r_grid, None, "outage", {})


def cmd_outage(args):
    import warnings

    from .outage_sim import sweep_r

    ef = _outage_settings(args)
    cfg = ef.config
    create = not args.no_create
    out = Path(args.out) if args.out else output_dir(ef.out_dir, create=create)
    if not out.is_dir():
        if not create:
            raise ValidationError(f"output directory {out} does not exist (creation disabled)")
        out.mkdir(parents=True, exist_ok=True)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        runs = sweep_r(cfg, ef.r_grid, jobs=args.jobs)
    for w in caught:
        log.warning("%s", w.message)
    meta = _meta(cfg.to_dict() | {"r_grid": list(ef.r_grid)}, cfg.seed)
    rows = []
    for run in runs:
        for pt in run.points:
            rows.append((run.config.r, pt.snr_db, pt.trials, pt.events, pt.p_hat, pt.ci_lo, pt.ci_hi))
    res = write_table(out / f"{ef.prefix}_results.csv",
                      ["r", "snr_db", "trials", "outage_events", "p_hat", "ci_lo", "ci_hi"], rows, meta)
    summ = write_table(out / f"{ef.prefix}_summary.csv", ["r", "slope_hat", "slope_closed_form", "gap"],
                       [(run.config.r, run.slope, run.target, run.gap) for run in runs], meta)
    for run in runs:
        print(f"r={run.config.r:g}: slope {run.slope:.4f} vs closed form {run.target:.4f}")
    print(res)
    print(summ)
    return EXIT_OK


# --- parser ----------------------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="asyncdmt", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"asyncdmt {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--out", help="output file (curve/oracle/gram) or directory (outage)")
        p.add_argument("--no-create", action="store_true", help="fail instead of creating a missing output directory")

    p = sub.add_parser("curve", help="tabulate a closed-form tradeoff curve")
    p.add_argument("--protocol", choices=PROTOCOLS, required=True)
    p.add_argument("--mode", choices=MODES, required=True)
    p.add_argument("--relays", type=int, required=True)
    p.add_argument("--kappa", type=_kappa, action="append", help="'opt' or a split ratio; repeat to overlay")
    p.add_argument("--step", type=float, default=0.001)
    p.add_argument("--segments", action="store_true", help="emit the piecewise description instead of samples")
    common(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("oracle", help="compare closed forms with the grid oracle")
    p.add_argument("--protocol", choices=PROTOCOLS)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--relays", type=int, choices=(1, 2, 3))
    p.add_argument("--kappa", type=_kappa, action="append")
    p.add_argument("--grid", type=float, default=DEFAULT_STEP)
    p.add_argument("--r-step", type=float, default=0.02)
    p.add_argument("--threshold", type=float, default=0.015)
    p.add_argument("--jobs", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gram", help="correlation-matrix diagnostics for a pulse/delay setup")
    p.add_argument("--waveform", type=_wave, action="append", help="kind[:support[:rolloff]], once per node")
    p.add_argument("--delays", type=float, nargs="+")
    p.add_argument("--q", type=int, default=16)
    p.add_argument("--u", type=int)
    p.add_argument("--omega-points", type=int, default=256)
    p.add_argument("--horizon", type=int, default=256)
    p.add_argument("--spectra", action="store_true", help="also write the eigenvalue spectra")
    common(p)
    p.set_defaults(func=cmd_gram)

    p = sub.add_parser("outage", help="Monte Carlo outage probabilities and slopes")
    p.add_argument("--config", help="TOML experiment file")
    p.add_argument("--protocol", choices=PROTOCOLS)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--relays", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--r", type=float, nargs="+")
    p.add_argument("--snr", type=float, nargs="+", default=[30, 35, 40, 45, 50, 55, 60])
    p.add_argument("--trials", type=int, default=1_000_000)
    p.add_argument("--sampler", choices=("plain", "importance"), default="importance")
    p.add_argument("--fit-min-db", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_outage)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2 already
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalCheckError as exc:
        print(f"numerical check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
