"""Run every catalog experiment (or a chosen subset) and collect one verdict table.

    python3 scripts/run_catalog.py                    # all experiments, full scale
    python3 scripts/run_catalog.py dobrushin minmax   # a subset
    python3 scripts/run_catalog.py --scale 0.01       # smoke run; fixed KS distance bounds
                                                      # are sized for full scale and will fail

Configs are read from scripts/configs/<name>.yaml; reports go to results/<name>/.
"""
import argparse
import sys
from pathlib import Path

from spiderwalk.cli import load_config_file
from spiderwalk.experiments import CATALOG, default_config, run_experiment
from spiderwalk.report import emit_report

HERE = Path(__file__).resolve().parent


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", default=list(CATALOG))
    ap.add_argument("--seed", type=int)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--scale", type=float, default=1.0, help="multiply replications by this factor")
    ap.add_argument("--out", default="results")
    args = ap.parse_args(argv)

    rows = []
    for name in args.names:
        path = HERE / "configs" / f"{name}.yaml"
        fields = load_config_file(path) if path.exists() else {}
        fields.pop("experiment", None)
        if args.seed is not None:
            fields["seed"] = args.seed
        cfg = default_config(name, **fields)
        reps = max(1, round(cfg.replications * args.scale))
        cfg = default_config(name, **dict(fields, replications=reps, threads=args.threads))
        report = run_experiment(cfg)
        emit_report(report, Path(args.out) / name)
        wall = report.timing["wall_seconds"]
        rows.append((name, report.verdict, wall))
        failed = [t.name for t in report.tests if not t.passed]
        print(f"{name:<18} {'PASS' if report.verdict else 'FAIL'}  {wall:8.1f}s  {'; '.join(failed)}",
              flush=True)
    return 0 if all(ok for _, ok, _ in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
