"""Command line front end.

Subcommands:
  simulate          draw replicates and write realization fields
  estimate          run the full pipeline, write curves, envelopes, figures
  oracle            write model-implied reference curves
  compare           estimate + reference coverage check (exit 1 on failure)
  reproduce-figure  canned demonstration runs with standard settings
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__
from .config import config_from_dict, load_config
from .errors import CovstatsError
from .experiments import (
    build_pair,
    canned_config,
    compare_envelopes,
    reference_curves,
    run_experiment,
    simulate_replicate,
)
from .io import (
    RunManifest,
    write_curves,
    write_envelopes,
    write_field,
    write_manifest,
    write_oracle_curves,
)
from .plots import comparison_figure, envelope_panel, realization_figure, save_figure


def _add_common(p, config_required=True):
    p.add_argument("-c", "--config", required=config_required, help="TOML experiment config")
    p.add_argument("-o", "--out", required=True, help="output directory (created if missing)")
    p.add_argument("--seed", type=int, default=None, help="override run.seed")
    p.add_argument("--replicates", type=int, default=None, help="override run.replicates")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default CVST_JOBS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvst",
        description="Cross summary statistics for pairs of random measures on pixel grids.",
    )
    parser.add_argument("--version", action="version", version="cvst %s" % __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw replicates and write realization fields")
    _add_common(p)
    p.add_argument(
        "--save-fields",
        type=int,
        default=3,
        help="number of replicates whose density fields are written (default 3)",
    )

    p = sub.add_parser("estimate", help="estimate all statistics with envelopes and figures")
    _add_common(p)
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    p = sub.add_parser("oracle", help="write model-implied reference curves")
    _add_common(p)

    p = sub.add_parser("compare", help="check envelope coverage of the reference curves")
    _add_common(p)
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    p = sub.add_parser("reproduce-figure", help="standard demonstration runs")
    p.add_argument(
        "name",
        choices=("wr", "dual-wr", "boolean", "linked", "thinning"),
        help="which demonstration to run",
    )
    _add_common(p, config_required=False)
    p.add_argument("--t-max", type=float, default=None, help="largest radius (default 2)")
    p.add_argument("--t-steps", type=int, default=None, help="radius grid size (default 40)")
    p.add_argument("--h", type=float, default=None, help="pixel size (default 0.05)")

    return parser


def _load(args):
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        data = cfg.normalized
    else:
        data = canned_config(args.name)
    return _apply_overrides(data, args)


def _apply_overrides(data: dict, args):
    data = {k: (dict(v) if isinstance(v, dict) else v) for k, v in data.items()}
    run = data.setdefault("run", {})
    if args.seed is not None:
        run["seed"] = args.seed
    if args.replicates is not None:
        run["replicates"] = args.replicates
    if getattr(args, "t_max", None) is not None:
        run["t_max"] = args.t_max
        run.pop("t_values", None)
    if getattr(args, "t_steps", None) is not None:
        run["t_steps"] = args.t_steps
        run.pop("t_values", None)
    if getattr(args, "h", None) is not None:
        data.setdefault("grid", {})["h"] = args.h
    return config_from_dict(data)


def _manifest(args, cfg, outputs, wall) -> RunManifest:
    return RunManifest(
        command=" ".join(sys.argv[1:]) or args.command,
        config=cfg.normalized,
        package_version=__version__,
        master_seed=cfg.seed,
        replicate_seeds=[[cfg.seed, r] for r in range(cfg.replicates)],
        outputs=sorted(outputs),
        wall_time_s=wall,
    )


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    start = time.perf_counter()
    n_save = max(0, min(args.save_fields, cfg.replicates))
    outputs = []
    for rep in range(n_save):
        raw = simulate_replicate(cfg, rep)
        for tag, fld in (("psi1", raw.psi1), ("psi2", raw.psi2)):
            path = out / ("rep%03d_%s.cvst" % (rep, tag))
            write_field(path, fld)
            outputs.append(path.name)
    write_manifest(out / "manifest.json", _manifest(args, cfg, outputs, time.perf_counter() - start))
    print("wrote %d field files to %s" % (len(outputs), out))
    return 0


def _estimate(args, cfg, out: Path):
    result = run_experiment(cfg, jobs=args.jobs)
    outputs = []
    write_curves(out / "curves.csv", result.curves)
    outputs.append("curves.csv")
    write_envelopes(out / "envelopes.csv", result.envelopes)
    outputs.append("envelopes.csv")
    if result.oracles:
        write_oracle_curves(out / "reference.csv", result.oracles)
        outputs.append("reference.csv")
    if not getattr(args, "no_figures", False):
        fig = envelope_panel(result.envelopes, result.oracles, title=cfg.kind)
        save_figure(fig, out / "envelopes.png")
        outputs.append("envelopes.png")
        raw = simulate_replicate(cfg, 0)
        fig = realization_figure(raw, title="%s, replicate 0" % cfg.kind)
        save_figure(fig, out / "realization.png")
        outputs.append("realization.png")
    return result, outputs


def cmd_estimate(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    result, outputs = _estimate(args, cfg, out)
    write_manifest(out / "manifest.json", _manifest(args, cfg, outputs, result.wall_time_s))
    print(
        "estimated %d statistics over %d replicates in %.1f s"
        % (len(result.envelopes), cfg.replicates, result.wall_time_s)
    )
    return 0


def cmd_oracle(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    start = time.perf_counter()
    curves = reference_curves(cfg)
    if not curves:
        print("model %s has no closed-form reference curves" % cfg.kind)
        return 1
    write_oracle_curves(out / "reference.csv", curves)
    write_manifest(
        out / "manifest.json", _manifest(args, cfg, ["reference.csv"], time.perf_counter() - start)
    )
    print("wrote %d reference curves to %s" % (len(curves), out / "reference.csv"))
    return 0


def cmd_compare(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    result, outputs = _estimate(args, cfg, out)
    if not result.oracles:
        print("model %s has no closed-form reference curves to compare against" % cfg.kind)
        return 1
    report = compare_envelopes(result.envelopes, result.oracles, cfg.compare_min_coverage)
    lines = ["stat,ordering,coverage,n_points,ok"]
    for row in report.rows:
        print(
            "%-5s ordering %s: coverage %5.1f%% over %d points -> %s"
            % (row.name, row.ordering, 100 * row.coverage, row.n_points, "ok" if row.ok else "LOW")
        )
        lines.append(
            "%s,%s,%.6g,%d,%s" % (row.name, row.ordering, row.coverage, row.n_points, row.ok)
        )
    (out / "comparison.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    outputs.append("comparison.csv")
    if not args.no_figures:
        fig = comparison_figure(result.envelopes, result.oracles, title=cfg.kind)
        save_figure(fig, out / "comparison.png")
        outputs.append("comparison.png")
    write_manifest(out / "manifest.json", _manifest(args, cfg, outputs, result.wall_time_s))
    if not report.ok:
        print("coverage below %.0f%% threshold" % (100 * cfg.compare_min_coverage))
        return 1
    print("all reference curves covered at >= %.0f%%" % (100 * cfg.compare_min_coverage))
    return 0


def cmd_reproduce(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    result, outputs = _estimate(args, cfg, out)
    write_manifest(out / "manifest.json", _manifest(args, cfg, outputs, result.wall_time_s))
    print("wrote %s demonstration outputs to %s" % (args.name, out))
    return 0


_HANDLERS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "oracle": cmd_oracle,
    "compare": cmd_compare,
    "reproduce-figure": cmd_reproduce,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except CovstatsError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
