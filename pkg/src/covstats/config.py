"""Experiment configuration: TOML in, validated plain data out.

Unknown keys are rejected so a typo cannot silently fall back to a default.
The normalized dict (all defaults resolved) is what gets hashed into the
run manifest.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .grid import GridSpec

MODEL_KINDS = (
    "compound",
    "boolean-pair",
    "wr-mixture",
    "dual-wr",
    "linked-field",
    "thinning-field",
)

LAW_KINDS = ("constant", "gamma", "gamma-linked", "uniform-balanced")
SURFACE_KINDS = ("constant", "planar", "ramp")

_GRID_DEFAULTS = {
    "x_min": 0.0,
    "x_max": 10.0,
    "y_min": 0.0,
    "y_max": 20.0,
    "h": 0.05,
    "margin": 1.0,
}


@dataclass
class ExperimentConfig:
    kind: str
    model: dict
    grid: GridSpec
    replicates: int
    seed: int
    t_values: np.ndarray
    denominator: str
    p1_mode: str
    envelope_q: float
    set_stats: bool
    output_dir: str | None
    compare_min_coverage: float
    normalized: dict


def _type_name(v) -> str:
    return type(v).__name__


def _num(table: dict, where: str, key: str, default=None, required=False) -> float:
    if key not in table:
        if required:
            raise ConfigError("missing key %s.%s" % (where, key))
        return default
    v = table.pop(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError("%s.%s must be a number, got %s" % (where, key, _type_name(v)))
    return float(v)


def _int(table: dict, where: str, key: str, default=None, required=False) -> int:
    if key not in table:
        if required:
            raise ConfigError("missing key %s.%s" % (where, key))
        return default
    v = table.pop(key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError("%s.%s must be an integer, got %s" % (where, key, _type_name(v)))
    return v


def _str(table: dict, where: str, key: str, default=None, choices=None, required=False) -> str:
    if key not in table:
        if required:
            raise ConfigError("missing key %s.%s" % (where, key))
        return default
    v = table.pop(key)
    if not isinstance(v, str):
        raise ConfigError("%s.%s must be a string" % (where, key))
    if choices is not None and v not in choices:
        raise ConfigError("%s.%s must be one of %s, got %r" % (where, key, list(choices), v))
    return v


def _bool(table: dict, where: str, key: str, default=None) -> bool:
    if key not in table:
        return default
    v = table.pop(key)
    if not isinstance(v, bool):
        raise ConfigError("%s.%s must be a boolean" % (where, key))
    return v


def _reject_leftovers(table: dict, where: str) -> None:
    if table:
        raise ConfigError("unknown key %s.%s" % (where, sorted(table)[0]))


def _surface(table: dict, where: str, default_kind="constant", default_value=0.0) -> dict:
    kind = _str(table, where, "kind", default=default_kind, choices=SURFACE_KINDS)
    out = {"kind": kind}
    if kind == "constant":
        out["value"] = _num(table, where, "value", default=default_value)
    else:
        out["scale"] = _num(table, where, "scale", required=True)
        if out["scale"] == 0:
            raise ConfigError("%s.scale must be non-zero" % where)
    _reject_leftovers(table, where)
    return out


def _law(table: dict, where: str) -> dict:
    kind = _str(table, where, "kind", required=True, choices=LAW_KINDS)
    out = {"kind": kind}
    if kind == "constant":
        out["c1"] = _num(table, where, "c1", required=True)
        out["c2"] = _num(table, where, "c2", required=True)
    elif kind in ("gamma", "gamma-linked"):
        out["shape"] = _num(table, where, "shape", required=True)
        out["rate"] = _num(table, where, "rate", required=True)
        if kind == "gamma-linked":
            out["scale"] = _num(table, where, "scale", default=1.0)
    else:
        out["scale"] = _num(table, where, "scale", required=True)
    _reject_leftovers(table, where)
    return out


def _sampler(table: dict, where: str) -> dict:
    out = {
        "mode": _str(table, where, "mode", default="mh", choices=("mh", "cftp")),
        "burn_in": _int(table, where, "burn_in", default=100_000),
        "sweeps": _int(table, where, "sweeps", default=1),
    }
    if out["burn_in"] < 0 or out["sweeps"] < 1:
        raise ConfigError("%s: burn_in >= 0 and sweeps >= 1 required" % where)
    _reject_leftovers(table, where)
    return out


def _validate_model(table: dict) -> dict:
    kind = _str(table, "model", "kind", required=True, choices=MODEL_KINDS)
    out = {"kind": kind}
    if kind == "compound":
        law = table.pop("law", None)
        if not isinstance(law, dict):
            raise ConfigError("model.law table is required for the compound model")
        out["law"] = _law(dict(law), "model.law")
        nu = table.pop("nu", None)
        out["nu"] = _surface(dict(nu) if nu else {}, "model.nu", "constant", 1.0)
    elif kind == "boolean-pair":
        both = _num(table, "model", "intensity", default=None)
        out["intensity1"] = _num(table, "model", "intensity1", default=both)
        out["intensity2"] = _num(table, "model", "intensity2", default=both)
        if out["intensity1"] is None or out["intensity2"] is None:
            raise ConfigError("model: give intensity, or intensity1 and intensity2")
        out["grain_radius"] = _num(table, "model", "grain_radius", required=True)
    elif kind in ("wr-mixture", "dual-wr"):
        out["beta1"] = _num(table, "model", "beta1", required=True)
        out["beta2"] = _num(table, "model", "beta2", required=True)
        out["r"] = _num(table, "model", "r", required=True)
        out["grain_radius"] = _num(table, "model", "grain_radius", default=out["r"] / 2.0)
        sampler = table.pop("sampler", None)
        out["sampler"] = _sampler(dict(sampler) if sampler else {}, "model.sampler")
    else:  # linked-field, thinning-field
        out["intensity"] = _num(table, "model", "intensity", required=True)
        out["grain_radius"] = _num(table, "model", "grain_radius", required=True)
        out["sigma2"] = _num(table, "model", "sigma2", required=True)
        out["beta"] = _num(table, "model", "beta", required=True)
        if kind == "linked-field":
            mean = table.pop("mean", None)
            out["mean"] = _surface(dict(mean) if mean else {}, "model.mean", "constant", 0.0)
        else:
            r1 = table.pop("r1", None)
            if not isinstance(r1, dict):
                raise ConfigError("model.r1 table is required for the thinning model")
            out["r1"] = _surface(dict(r1), "model.r1")
    for key in ("grain_radius", "intensity", "intensity1", "intensity2", "sigma2"):
        if key in out and out[key] is not None and out[key] < 0:
            raise ConfigError("model.%s must be non-negative" % key)
    _reject_leftovers(table, "model")
    return out


def validate_config(data: dict) -> ExperimentConfig:
    data = dict(data)
    model_tbl = data.pop("model", None)
    if not isinstance(model_tbl, dict):
        raise ConfigError("missing [model] table")
    model = _validate_model(dict(model_tbl))

    grid_tbl = dict(data.pop("grid", {}))
    grid_kw = {}
    for key, default in _GRID_DEFAULTS.items():
        grid_kw[key] = _num(grid_tbl, "grid", key, default=default)
    _reject_leftovers(grid_tbl, "grid")
    try:
        grid = GridSpec(**grid_kw)
    except Exception as exc:
        raise ConfigError("bad grid: %s" % exc) from exc

    run = dict(data.pop("run", {}))
    replicates = _int(run, "run", "replicates", default=100)
    seed = _int(run, "run", "seed", default=0)
    if replicates < 1 or seed < 0:
        raise ConfigError("run.replicates >= 1 and run.seed >= 0 required")
    t_list = run.pop("t_values", None)
    t_max = _num(run, "run", "t_max", default=2.0)
    t_steps = _int(run, "run", "t_steps", default=40)
    if t_list is not None:
        if not isinstance(t_list, list) or not t_list:
            raise ConfigError("run.t_values must be a non-empty list")
        t_values = np.asarray([float(v) for v in t_list])
        if np.any(t_values < 0) or (t_values.size > 1 and np.any(np.diff(t_values) <= 0)):
            raise ConfigError("run.t_values must be non-negative and ascending")
    else:
        if t_max <= 0 or t_steps < 2:
            raise ConfigError("run.t_max > 0 and run.t_steps >= 2 required")
        t_values = np.linspace(0.0, t_max, t_steps)
    denominator = _str(
        run, "run", "denominator", default="erosion-volume", choices=("erosion-volume", "hamilton")
    )
    default_p1 = "plug-in" if model["kind"] in ("wr-mixture", "dual-wr") else "analytic"
    p1_mode = _str(run, "run", "p1_mode", default=default_p1, choices=("analytic", "plug-in"))
    if model["kind"] in ("wr-mixture", "dual-wr") and p1_mode == "analytic":
        raise ConfigError(
            "run.p1_mode: no analytic coverage function exists for %s; use plug-in"
            % model["kind"]
        )
    if p1_mode == "plug-in" and replicates < 2:
        raise ConfigError("run.p1_mode plug-in needs at least 2 replicates")
    envelope_q = _num(run, "run", "envelope_q", default=0.05)
    if not 0.0 < envelope_q < 1.0:
        raise ConfigError("run.envelope_q must be in (0, 1)")
    set_backed = model["kind"] not in ("compound",)
    set_stats = _bool(run, "run", "set_stats", default=set_backed)
    if set_stats and not set_backed:
        raise ConfigError("run.set_stats: the compound model has no underlying random set")
    _reject_leftovers(run, "run")

    output = dict(data.pop("output", {}))
    output_dir = _str(output, "output", "directory", default=None)
    _reject_leftovers(output, "output")

    compare = dict(data.pop("compare", {}))
    min_coverage = _num(compare, "compare", "min_coverage", default=0.9)
    if not 0.0 <= min_coverage <= 1.0:
        raise ConfigError("compare.min_coverage must be in [0, 1]")
    _reject_leftovers(compare, "compare")

    if data:
        raise ConfigError("unknown table [%s]" % sorted(data)[0])

    normalized = {
        "model": model,
        "grid": grid_kw,
        "run": {
            "replicates": replicates,
            "seed": seed,
            "t_values": [float(v) for v in t_values],
            "denominator": denominator,
            "p1_mode": p1_mode,
            "envelope_q": envelope_q,
            "set_stats": set_stats,
        },
        "output": {} if output_dir is None else {"directory": output_dir},
        "compare": {"min_coverage": min_coverage},
    }
    return ExperimentConfig(
        kind=model["kind"],
        model=model,
        grid=grid,
        replicates=replicates,
        seed=seed,
        t_values=t_values,
        denominator=denominator,
        p1_mode=p1_mode,
        envelope_q=envelope_q,
        set_stats=set_stats,
        output_dir=output_dir,
        compare_min_coverage=min_coverage,
        normalized=normalized,
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("config file not found: %s" % path)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config is not valid TOML: %s" % exc) from exc
    return validate_config(data)


def config_from_dict(data: dict) -> ExperimentConfig:
    return validate_config(data)
