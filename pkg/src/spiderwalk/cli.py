"""Command line entry point: ``spiderwalk run|list|selftest``.

Exit codes: 0 when every test passes, 1 when any test fails, 2 on an invalid
config (bad file, unknown keys, failed preconditions).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml

from .experiments import CATALOG, ConfigError, ExperimentConfig, default_config, run_experiment
from .report import ReportIOError, emit_report, table
from .selftest import run_selftest

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def load_config_file(path) -> dict:
    """Read a YAML or JSON mapping (JSON is valid YAML, so one parser serves both)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return data


def resolve_config(experiment: str, config_path=None, seed=None, threads=None,
                   emit_samples: bool = False) -> ExperimentConfig:
    """Catalog defaults, overridden by the config file, overridden by flags."""
    if experiment not in CATALOG:
        raise ConfigError(f"unknown experiment {experiment!r}; see `spiderwalk list`")
    overrides = load_config_file(config_path) if config_path else {}
    named = overrides.pop("experiment", experiment)
    if named != experiment:
        raise ConfigError(f"config names experiment {named!r} but --experiment is {experiment!r}")
    if seed is not None:
        overrides["seed"] = seed
    if threads is not None:
        overrides["threads"] = threads
    if emit_samples:
        overrides["emit_samples"] = True
    try:
        return default_config(experiment, **overrides)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_run(args) -> int:
    try:
        cfg = resolve_config(args.experiment, args.config, args.seed, args.threads, args.emit_samples)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = run_experiment(cfg)
    out = args.output or cfg.output_path or str(Path("results") / cfg.experiment)
    try:
        written = emit_report(report, out)
    except ReportIOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(table(report), end="")
    for kind, path in written.items():
        print(f"wrote {kind}: {path}")
    return EXIT_PASS if report.verdict else EXIT_FAIL


def cmd_list(args) -> int:
    width = max(len(n) for n in CATALOG)
    for name, entry in CATALOG.items():
        print(f"{name:<{width}}  {entry.anchor}")
    if args.verbose:
        for name in CATALOG:
            print(f"\n[{name}] defaults:")
            print(json.dumps(default_config(name).to_dict(), indent=2))
    return EXIT_PASS


def cmd_selftest(args) -> int:
    results = run_selftest()
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print(f"selftest: {sum(r.passed for r in results)}/{len(results)} passed")
    return EXIT_PASS if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spiderwalk", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a catalog experiment")
    run.add_argument("--experiment", required=True, help="catalog name (see `spiderwalk list`)")
    run.add_argument("--config", help="YAML/JSON config; missing fields take catalog defaults")
    run.add_argument("--seed", type=int)
    run.add_argument("--threads", type=int)
    run.add_argument("--emit-samples", action="store_true", help="also write samples.csv")
    run.add_argument("--output", help="report directory (default: config output_path or results/<name>)")
    run.set_defaults(func=cmd_run)

    ls = sub.add_parser("list", help="print the experiment catalog")
    ls.add_argument("-v", "--verbose", action="store_true", help="also print default configs")
    ls.set_defaults(func=cmd_list)

    st = sub.add_parser("selftest", help="distributional checks of samplers and closed forms")
    st.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
