"""Command line interface.

    holopart <command> [--config FILE] [--output DIR] [--paths N] [--seed S] [--preset NAME]
                       [--goldens FILE] [--calibrate] [--no-plots]
    holopart write-config FILE
    holopart compare REPORT [--goldens FILE]

Commands: partition, theorem1, decompose, kislyakov, havin, maximal, interpolate,
verify-all.  Exit codes: 0 all properties pass, 1 a property failed or a golden
regressed, 2 configuration or usage error.  The worker count is read from the
HOLOPART_WORKERS environment variable only; results do not depend on it.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig
from .engine import worker_count
from .pipelines import COMMANDS, Context, run_sections
from .reports import Goldens, SchemaMismatch, build_report, calibrate, compare_goldens, dumps, failures, load_report

log = logging.getLogger("holopart")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="holopart", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=f"run the {name} pipeline")
        sp.add_argument("--config", help="experiment config file (INI, [experiment] section)")
        sp.add_argument("--output", help="output directory (overrides the config)")
        sp.add_argument("--paths", type=int, help="path count (overrides the config)")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--preset", help="density preset (overrides the config)")
        sp.add_argument("--goldens", help="golden constants file (default: packaged goldens)")
        sp.add_argument("--calibrate", action="store_true",
                        help="write fresh golden constants from this run to --goldens or OUTPUT/goldens.json")
        sp.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    wc = sub.add_parser("write-config", help="write the default config file")
    wc.add_argument("path")
    cmp_ = sub.add_parser("compare", help="compare a report with golden constants")
    cmp_.add_argument("report")
    cmp_.add_argument("--goldens")
    return ap


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    over = {k: getattr(args, k) for k in ("paths", "seed", "preset") if getattr(args, k) is not None}
    if args.preset is not None:
        over["partition_presets"] = (args.preset,)
    if args.output:
        over["output"] = args.output
    try:
        return cfg.with_(**over) if over else cfg
    except TypeError as e:
        raise ConfigError(str(e)) from None


def run(command: str, cfg: ExperimentConfig, goldens: Goldens, out: Path | None, plots: bool = True) -> dict:
    """Execute a command and return its report (also written to OUT/report.json)."""
    ctx = Context(cfg, goldens, out, plots)
    started = _dt.datetime.now(_dt.timezone.utc)
    sections = run_sections(command, ctx)
    stamp = {
        "utc": started.isoformat(timespec="seconds"),
        "workers": worker_count(),
        "wall_clock_s": {k: round(s.wall_clock, 3) for k, s in sections.items()},
        "paths_per_s": {k: round(s.paths / s.wall_clock, 1) for k, s in sections.items()
                        if s.paths and s.wall_clock > 0},
    }
    rep = build_report(command, cfg.to_dict(), sections, goldens, stamp)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(dumps(rep))
        (out / "config.ini").write_text(cfg.to_text())
    return rep


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    try:
        args = _parser().parse_args(argv)
    except SystemExit as e:  # argparse usage errors exit with 2 already
        return int(e.code) if isinstance(e.code, int) else EXIT_CONFIG
    if args.command == "write-config":
        ExperimentConfig().save(args.path)
        return EXIT_OK
    if args.command == "compare":
        try:
            rep = load_report(args.report)
            gold = Goldens.load(args.goldens)
        except (OSError, json.JSONDecodeError, SchemaMismatch) as e:
            log.error("%s", e)
            return EXIT_CONFIG
        diff = compare_goldens(rep, gold)
        print(json.dumps(diff, indent=2, sort_keys=True))
        return EXIT_FAIL if diff["regressions"] else EXIT_OK
    try:
        cfg = _config(args)
        gold = Goldens.empty() if args.calibrate else Goldens.load(args.goldens)
    except (ConfigError, SchemaMismatch, OSError, json.JSONDecodeError) as e:
        log.error("configuration error: %s", e)
        return EXIT_CONFIG
    out = Path(cfg.output).expanduser().resolve()
    rep = run(args.command, cfg, gold, out, plots=not args.no_plots)
    if args.calibrate:
        target = Path(args.goldens) if args.goldens else out / "goldens.json"
        previous = Goldens.load(target) if target.exists() else None
        new = calibrate(rep["golden_measurements"], previous=previous)
        target.write_text(json.dumps(new.to_dict(), indent=2, sort_keys=True) + "\n")
        log.info("wrote golden constants to %s", target)
        rep = run_compare_after_calibration(rep, new, out)
    bad = failures(rep)
    for line in bad:
        log.error("FAIL %s", line)
    n_props = sum(len(s["properties"]) for s in rep["sections"].values())
    log.info("%s: %d properties, %d failures; report at %s", args.command, n_props, len(bad), out / "report.json")
    return EXIT_FAIL if bad else EXIT_OK


def run_compare_after_calibration(rep: dict, gold: Goldens, out: Path) -> dict:
    """Golden rows were unbounded during calibration; recheck the measurements against the new constants."""
    rep["goldens"] = compare_goldens(rep, gold)
    rep["passed"] = rep["passed"] and not rep["goldens"]["regressions"]
    (out / "report.json").write_text(dumps(rep))
    return rep


if __name__ == "__main__":
    sys.exit(main())
