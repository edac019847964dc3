"""Replicated experiments: simulate, estimate, envelope, compare.

Every replicate draws from seed streams keyed by (master seed, replicate
index, stream), so results do not depend on execution order and parallel
runs reproduce serial ones bit for bit.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from math import exp, pi

import numpy as np

from .config import ExperimentConfig
from .errors import ConfigError, GridMismatch
from .estimators import (
    Envelope,
    StatCurve,
    cross_curves,
    estimate_J12,
    mc_envelope,
    set_curves,
)
from .grid import BinaryField, ScalarField
from .measure import (
    CompoundSpec,
    MeasurePair,
    compound_measure,
    plug_in_p1,
    random_field_measure,
    reweight,
)
from .oracles import (
    LambdaLaw,
    OracleCurve,
    compound_J12,
    compound_K12,
    compound_L2,
    compound_L12,
    germgrain_stats,
    loggauss_K12,
)
from .randfield import (
    STREAM_CHAIN,
    STREAM_FIELD,
    STREAM_GERMS_1,
    STREAM_GERMS_2,
    STREAM_LAMBDA,
    ExpCovariance,
    MeanSurface,
    SeedKey,
    exp_transform,
    sample_gaussian_field,
    thinning_weights,
)
from .setsim import WrConfig, sample_dual_wr, sample_poisson, sample_wr_mixture, union_balls

CROSS_STATS = ("K12", "L2", "L12", "J12")
SET_STATS = ("F2", "H12", "T12", "void")


def law_from_config(model: dict) -> LambdaLaw:
    law = model["law"]
    kind = law["kind"]
    if kind == "constant":
        return LambdaLaw("constant", c1=law["c1"], c2=law["c2"])
    if kind == "gamma":
        return LambdaLaw("gamma", shape=law["shape"], rate=law["rate"])
    if kind == "gamma-linked":
        return LambdaLaw("gamma-linked", shape=law["shape"], rate=law["rate"], scale=law["scale"])
    return LambdaLaw("uniform-balanced", scale=law["scale"])


def surface_from_config(d: dict) -> MeanSurface:
    if d["kind"] == "constant":
        return MeanSurface("constant", value=d["value"])
    return MeanSurface(d["kind"], scale=d["scale"])


def wr_config_from(model: dict) -> WrConfig:
    s = model["sampler"]
    return WrConfig(
        beta1=model["beta1"],
        beta2=model["beta2"],
        r=model["r"],
        mode=s["mode"],
        burn_in=s["burn_in"],
        sweeps=s["sweeps"],
    )


@dataclass
class RawReplicate:
    """One model draw before coverage normalization.

    ind1/ind2 are the underlying sets for set-backed models; p1 fields are
    None when the coverage function has to be plugged in across replicates.
    """

    psi1: ScalarField
    psi2: ScalarField
    ind1: BinaryField | None = None
    ind2: BinaryField | None = None
    p1_1: ScalarField | None = None
    p1_2: ScalarField | None = None


def _constant_field(spec, value: float) -> ScalarField:
    return ScalarField(spec, np.full(spec.shape, value))


def simulate_replicate(cfg: ExperimentConfig, rep: int) -> RawReplicate:
    """Draw replicate `rep` of the configured model."""
    spec = cfg.grid
    seed = cfg.seed
    kind = cfg.kind
    model = cfg.model

    if kind == "compound":
        cspec = CompoundSpec(law_from_config(model), surface_from_config(model["nu"]))
        pair = compound_measure(cspec, spec, SeedKey(seed, rep, STREAM_LAMBDA))
        return RawReplicate(pair.psi1, pair.psi2, p1_1=pair.p1_1, p1_2=pair.p1_2)

    if kind == "boolean-pair":
        lam1, lam2 = model["intensity1"], model["intensity2"]
        radius = model["grain_radius"]
        g1 = sample_poisson(spec, lam1, SeedKey(seed, rep, STREAM_GERMS_1), label=1)
        g2 = sample_poisson(spec, lam2, SeedKey(seed, rep, STREAM_GERMS_2), label=2)
        x1 = union_balls(g1, radius, spec)
        x2 = union_balls(g2, radius, spec)
        p1 = 1.0 - exp(-lam1 * pi * radius**2)
        p2 = 1.0 - exp(-lam2 * pi * radius**2)
        return RawReplicate(
            ScalarField(spec, x1.values.astype(np.float64)),
            ScalarField(spec, x2.values.astype(np.float64)),
            x1,
            x2,
            _constant_field(spec, p1),
            _constant_field(spec, p2),
        )

    if kind in ("wr-mixture", "dual-wr"):
        wr = wr_config_from(model)
        key = SeedKey(seed, rep, STREAM_CHAIN)
        sampler = sample_wr_mixture if kind == "wr-mixture" else sample_dual_wr
        pat1, pat2 = sampler(wr, spec, key)
        radius = model["grain_radius"]
        x1 = union_balls(pat1, radius, spec)
        x2 = union_balls(pat2, radius, spec)
        return RawReplicate(
            ScalarField(spec, x1.values.astype(np.float64)),
            ScalarField(spec, x2.values.astype(np.float64)),
            x1,
            x2,
        )

    # marked-field models: a shared log-Gaussian mark over independent
    # Boolean sets, optionally split by a deterministic thinning surface
    lam = model["intensity"]
    radius = model["grain_radius"]
    cov = ExpCovariance(model["sigma2"], model["beta"])
    if kind == "linked-field":
        mean = surface_from_config(model["mean"])
    else:
        mean = MeanSurface("constant", value=0.0)
    log_field = sample_gaussian_field(spec, mean, cov, SeedKey(seed, rep, STREAM_FIELD))
    gamma = exp_transform(log_field)
    g1 = sample_poisson(spec, lam, SeedKey(seed, rep, STREAM_GERMS_1), label=1)
    g2 = sample_poisson(spec, lam, SeedKey(seed, rep, STREAM_GERMS_2), label=2)
    x1 = union_balls(g1, radius, spec)
    x2 = union_balls(g2, radius, spec)
    p_cov = 1.0 - exp(-lam * pi * radius**2)
    mean_gamma = np.exp(mean.on_grid(spec) + 0.5 * model["sigma2"])
    if kind == "linked-field":
        pair = random_field_measure(
            gamma,
            gamma,
            x1,
            x2,
            ScalarField(spec, mean_gamma * p_cov),
            ScalarField(spec, mean_gamma * p_cov),
        )
    else:
        w1, w2 = thinning_weights(spec, surface_from_config(model["r1"]))
        pair = random_field_measure(
            ScalarField(spec, w1.values * gamma.values),
            ScalarField(spec, w2.values * gamma.values),
            x1,
            x2,
            ScalarField(spec, w1.values * mean_gamma * p_cov),
            ScalarField(spec, w2.values * mean_gamma * p_cov),
        )
    return RawReplicate(pair.psi1, pair.psi2, x1, x2, pair.p1_1, pair.p1_2)


def build_pair(raw: RawReplicate, p1_override=None) -> MeasurePair:
    """MeasurePair from a raw draw, plugging in shared p1 fields if given."""
    if p1_override is not None:
        return MeasurePair(raw.psi1, raw.psi2, p1_override[0], p1_override[1], "plug-in")
    if raw.p1_1 is None or raw.p1_2 is None:
        raise ConfigError("model has no analytic p1; run with p1_mode plug-in")
    return MeasurePair(raw.psi1, raw.psi2, raw.p1_1, raw.p1_2, "analytic")


def estimate_replicate(cfg: ExperimentConfig, pair: MeasurePair, raw: RawReplicate) -> list[StatCurve]:
    """All configured statistics of one replicate, both orderings."""
    phi1, phi2 = reweight(pair)
    t = cfg.t_values
    out: list[StatCurve] = []
    for ordering, a, b in (("12", phi1, phi2), ("21", phi2, phi1)):
        cur = cross_curves(a, b, t, cfg.denominator, ordering)
        out.extend([cur["K12"], cur["L2"], cur["L12"], estimate_J12(cur["L12"], cur["L2"])])
    if cfg.set_stats and raw.ind1 is not None:
        for ordering, a, b in (("12", raw.ind1, raw.ind2), ("21", raw.ind2, raw.ind1)):
            cur = set_curves(a, b, t, ordering, strict=False)
            out.extend(cur[name] for name in SET_STATS)
    return out


# ----------------------------------------------------------------------
# replicated runs


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    curves: list[StatCurve]
    envelopes: list[Envelope]
    oracles: list[OracleCurve]
    wall_time_s: float

    def envelope(self, name: str, ordering: str = "12") -> Envelope:
        for env in self.envelopes:
            if env.name == name and env.ordering == ordering:
                return env
        raise KeyError("no envelope for (%s, %s)" % (name, ordering))


def resolve_jobs(jobs=None) -> int:
    if jobs is None:
        jobs = int(os.environ.get("CVST_JOBS", "1"))
    if jobs < 1:
        raise ConfigError("jobs must be >= 1")
    return jobs


def _simulate_worker(args):
    cfg, rep = args
    return simulate_replicate(cfg, rep)


def _sim_est_worker(args):
    cfg, rep = args
    raw = simulate_replicate(cfg, rep)
    return estimate_replicate(cfg, build_pair(raw), raw)


def _est_plugin_worker(args):
    cfg, raw, p1_1, p1_2 = args
    return estimate_replicate(cfg, build_pair(raw, (p1_1, p1_2)), raw)


def _map(jobs: int, fn, arglist):
    if jobs <= 1 or len(arglist) <= 1:
        return [fn(a) for a in arglist]
    with ProcessPoolExecutor(max_workers=min(jobs, len(arglist))) as ex:
        return list(ex.map(fn, arglist, chunksize=1))


def run_experiment(cfg: ExperimentConfig, jobs=None) -> ExperimentResult:
    """Simulate cfg.replicates draws, estimate every statistic on each, and
    wrap replicate families into envelopes."""
    start = time.perf_counter()
    jobs = resolve_jobs(jobs)
    reps = list(range(cfg.replicates))
    if cfg.p1_mode == "plug-in":
        raws = _map(jobs, _simulate_worker, [(cfg, r) for r in reps])
        p1_1 = plug_in_p1([raw.psi1 for raw in raws])
        p1_2 = plug_in_p1([raw.psi2 for raw in raws])
        per_rep = _map(jobs, _est_plugin_worker, [(cfg, raw, p1_1, p1_2) for raw in raws])
    else:
        per_rep = _map(jobs, _sim_est_worker, [(cfg, r) for r in reps])
    curves: list[StatCurve] = []
    for rep, lst in zip(reps, per_rep):
        for c in lst:
            c.meta["replicate"] = rep
        curves.extend(lst)
    envelopes = [mc_envelope(group, cfg.envelope_q) for group in group_curves(curves).values()]
    return ExperimentResult(
        config=cfg,
        curves=curves,
        envelopes=envelopes,
        oracles=reference_curves(cfg),
        wall_time_s=time.perf_counter() - start,
    )


def group_curves(curves: list[StatCurve]) -> dict[tuple[str, str], list[StatCurve]]:
    """Replicate curves keyed by (statistic, ordering), input order kept."""
    grouped: dict[tuple[str, str], list[StatCurve]] = {}
    for c in curves:
        grouped.setdefault((c.name, c.ordering), []).append(c)
    return grouped


# ----------------------------------------------------------------------
# reference curves and envelope comparison


def reference_curves(cfg: ExperimentConfig) -> list[OracleCurve]:
    """Model-implied curves where a closed form or quadrature exists.

    The Gibbs models return an empty list: their cross statistics are only
    constrained qualitatively (ordering against the independent case).
    """
    t = cfg.t_values
    kind = cfg.kind
    if kind == "compound":
        law = law_from_config(cfg.model)
        out = []
        for o in ("12", "21"):
            out.append(compound_K12(law, t, ordering=o))
            out.append(compound_L2(law, t, ordering=o))
            out.append(compound_L12(law, t, ordering=o))
            out.append(compound_J12(law, t, ordering=o))
        return out
    if kind == "boolean-pair":
        lam1, lam2 = cfg.model["intensity1"], cfg.model["intensity2"]
        radius = cfg.model["grain_radius"]
        out = []
        for o, la, lb in (("12", lam1, lam2), ("21", lam2, lam1)):
            gg = germgrain_stats(la, lb, radius, t)
            pieces = [gg.k12, gg.j12]
            if cfg.set_stats:
                pieces += [gg.f2, gg.h12, gg.t12, gg.void_ratio]
            for c in pieces:
                out.append(OracleCurve(c.name, o, c.t, c.values.copy(), method=c.method))
        return out
    if kind in ("linked-field", "thinning-field"):
        cov = ExpCovariance(cfg.model["sigma2"], cfg.model["beta"])
        base = loggauss_K12(cov, t)
        return [
            OracleCurve("K12", o, base.t, base.values.copy(), method=base.method)
            for o in ("12", "21")
        ]
    return []


@dataclass
class CompareRow:
    name: str
    ordering: str
    coverage: float
    n_points: int
    ok: bool


@dataclass
class CompareReport:
    rows: list[CompareRow]
    min_coverage: float

    @property
    def ok(self) -> bool:
        return bool(self.rows) and all(r.ok for r in self.rows)


def compare_envelopes(
    envelopes: list[Envelope], oracles: list[OracleCurve], min_coverage: float
) -> CompareReport:
    """Fraction of t points at which each reference curve sits inside the
    matching replicate envelope."""
    by_key = {(e.name, e.ordering): e for e in envelopes}
    rows = []
    for o in oracles:
        env = by_key.get((o.name, o.ordering))
        if env is None:
            continue
        if env.t.shape != o.t.shape or np.any(env.t != o.t):
            raise GridMismatch("envelope and reference curve use different t grids")
        valid = ~(np.isnan(env.lower) | np.isnan(env.upper) | np.isnan(o.values))
        n = int(valid.sum())
        if n == 0:
            rows.append(CompareRow(o.name, o.ordering, float("nan"), 0, False))
            continue
        slack = 1e-12 * np.maximum(1.0, np.abs(o.values[valid]))
        inside = (env.lower[valid] <= o.values[valid] + slack) & (
            o.values[valid] <= env.upper[valid] + slack
        )
        cov = float(inside.mean())
        rows.append(CompareRow(o.name, o.ordering, cov, n, cov >= min_coverage))
    return CompareReport(rows, min_coverage)


# ----------------------------------------------------------------------
# canned demonstration setups


def canned_config(name: str) -> dict:
    """Config dicts for the standard demonstration runs (TOML-shaped)."""
    base_run = {"replicates": 100, "seed": 20260815}
    canned = {
        "wr": {
            "model": {"kind": "wr-mixture", "beta1": 1.0, "beta2": 1.0, "r": 1.0},
            "run": dict(base_run),
        },
        "dual-wr": {
            "model": {"kind": "dual-wr", "beta1": 0.25, "beta2": 0.25, "r": 1.0},
            "run": dict(base_run),
        },
        "boolean": {
            "model": {"kind": "boolean-pair", "intensity": 0.5, "grain_radius": 0.5},
            "run": dict(base_run),
        },
        "linked": {
            "model": {
                "kind": "linked-field",
                "intensity": 1.0,
                "grain_radius": 0.5,
                "sigma2": 1.0,
                "beta": 1.0,
            },
            "run": dict(base_run),
        },
        "thinning": {
            "model": {
                "kind": "thinning-field",
                "intensity": 1.0,
                "grain_radius": 0.5,
                "sigma2": 1.0,
                "beta": 1.0,
                "r1": {"kind": "ramp", "scale": 20.0},
            },
            "run": dict(base_run),
        },
    }
    if name not in canned:
        raise ConfigError("unknown canned setup %r; choose from %s" % (name, sorted(canned)))
    return canned[name]
