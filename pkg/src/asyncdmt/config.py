"""Experiment files: TOML documents describing an outage run."""
from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from .channel_model import FrameSplit
from .dmt_closed_form import MODES, PROTOCOLS
from .errors import ValidationError
from .outage_sim import ExperimentConfig
from .waveforms import KINDS, WaveformSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_NUM = {"type": "number"}
_WAVE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "support_u": {"type": "integer", "minimum": 1},
        "symbol_interval": {"type": "number", "exclusiveMinimum": 0},
        "rolloff": {"type": "number", "minimum": 0, "maximum": 1},
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment", "snr"],
    "properties": {
        "experiment": {
            "type": "object",
            "additionalProperties": False,
            "required": ["protocol", "mode", "relays", "p", "q"],
            "properties": {
                "protocol": {"enum": list(PROTOCOLS)},
                "mode": {"enum": list(MODES)},
                "relays": {"type": "integer", "minimum": 1},
                "p": {"type": "integer", "minimum": 1},
                "q": {"type": "integer", "minimum": 1},
                "r": {"type": "number", "minimum": 0, "maximum": 1},
                "r_grid": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
                "seed": {"type": "integer", "minimum": 0},
                "info_metric": {"enum": ["exact", "surrogate"]},
                "sampler": {"enum": ["plain", "importance"]},
            },
        },
        "snr": {
            "type": "object",
            "additionalProperties": False,
            "required": ["grid_db"],
            "properties": {
                "grid_db": {"type": "array", "items": _NUM, "minItems": 1},
                "trials": {"type": "integer", "minimum": 10_000},
                "fit_min_db": _NUM,
                "chunk": {"type": "integer", "minimum": 1},
            },
        },
        "waveforms": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "specs": {"type": "array", "items": _WAVE},
                "delays": {"type": "array", "items": _NUM},
                "resample_delays": {"type": "boolean"},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "prefix": {"type": "string"},
            },
        },
    },
}


@dataclass(frozen=True)
class ExperimentFile:
    config: ExperimentConfig
    r_grid: tuple
    out_dir: str | None
    prefix: str
    source: dict


def parse_experiment(doc: dict) -> ExperimentFile:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(x) for x in exc.absolute_path) or "<root>"
        raise ValidationError(f"experiment file, at {where}: {exc.message}") from None
    ex, snr = doc["experiment"], doc["snr"]
    wf = doc.get("waveforms", {})
    out = doc.get("output", {})
    if "r" in ex and "r_grid" in ex:
        raise ValidationError("give either r or r_grid, not both")
    r_grid = tuple(ex["r_grid"]) if "r_grid" in ex else (ex.get("r", 0.25),)
    cfg = ExperimentConfig(
        protocol=ex["protocol"],
        mode=ex["mode"],
        M=ex["relays"],
        fs=FrameSplit(ex["p"], ex["q"]),
        r=r_grid[0] if r_grid else 0.0,
        snr_grid_db=tuple(snr["grid_db"]),
        trials_per_point=snr.get("trials", 1_000_000),
        seed=ex.get("seed", 0),
        info_metric=ex.get("info_metric", "surrogate"),
        sampler=ex.get("sampler", "importance"),
        waveforms=tuple(WaveformSpec(**w) for w in wf.get("specs", ())),
        delays=tuple(wf.get("delays", ())),
        resample_delays=wf.get("resample_delays", False),
        fit_min_db=snr.get("fit_min_db"),
        chunk=snr.get("chunk", 250_000),
    )
    return ExperimentFile(cfg, r_grid, out.get("dir"), out.get("prefix", "outage"), doc)


def load_experiment(path) -> ExperimentFile:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"{path}: not valid TOML ({exc})") from None
    except OSError as exc:
        raise ValidationError(f"cannot read experiment file {path}: {exc.strerror}") from None
    return parse_experiment(doc)


EXAMPLE = """\
[experiment]
protocol = "nsdf"
mode = "finite"
relays = 1
p = 1
q = 1
r = 0.25
seed = 42

[snr]
grid_db = [30, 35, 40, 45, 50, 55, 60]
trials = 100000
fit_min_db = 30
"""


def write_example(path):
    Path(path).write_text(EXAMPLE)
