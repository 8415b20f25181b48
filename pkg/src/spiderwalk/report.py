"""Writing experiment reports: plain-text summary, samples CSV, JSON summary."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .stats import TestResult

SUMMARY_TXT = "summary.txt"
SAMPLES_CSV = "samples.csv"
SUMMARY_JSON = "summary.json"
FORMATS = ("table", "delimited", "structured")


class ReportIOError(OSError):
    pass


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)  # "nan", "inf": JSON has no literal for these
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    return v


def _json_restore(v):
    if isinstance(v, str) and v in ("nan", "inf", "-inf"):
        return float(v)
    if isinstance(v, dict):
        return {k: _json_restore(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_json_restore(x) for x in v]
    return v


def structured(report) -> dict:
    return _json_safe({
        "experiment": report.config["experiment"],
        "anchor": report.anchor,
        "config": report.config,
        "verdict": "pass" if report.verdict else "fail",
        "tests": [t.to_dict() for t in report.tests],
        "summary": report.summary,
        "timing": report.timing,
    })


def table(report) -> str:
    cfg = report.config
    out = [
        f"experiment: {cfg['experiment']}",
        f"result:     {report.anchor}",
        f"seed:       {cfg['seed']}",
        f"verdict:    {'PASS' if report.verdict else 'FAIL'}",
        "",
        "tests:",
    ]
    out += ["  " + t.line() for t in report.tests]
    out += ["", f"{'statistic':<28}{'n':>10}{'mean':>14}{'std':>14}{'median':>14}"]
    for name, s in report.summary.items():
        if name.startswith("_"):
            continue
        med = s["quantiles99"][49] if s["quantiles99"] else float("nan")
        out.append(f"{name:<28}{s['n']:>10}{s['mean']:>14.6g}{s['std']:>14.6g}{med:>14.6g}")
    wall = report.timing.get("wall_seconds")
    if wall is not None:
        out += ["", f"wall time: {wall:.2f} s"]
    return "\n".join(out) + "\n"


def write_samples(report, path: Path) -> int:
    """Rows ``rep, statistic_name, value``; values written with ``repr`` so reruns are byte-identical."""
    rows = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rep", "statistic_name", "value"])
        for name, vals in report.samples.items():
            arr = np.asarray(vals)
            for i, v in enumerate(arr.tolist()):
                w.writerow([i, name, repr(v)])
            rows += arr.size
    return rows


def emit_report(report, output_path, formats=FORMATS, samples: bool | None = None) -> dict:
    """Write the requested formats under the directory ``output_path``.

    The samples file is written only when ``samples`` is true, defaulting to
    the config's ``emit_samples`` flag. Returns the paths written.
    """
    out = Path(output_path)
    if samples is None:
        samples = bool(report.config.get("emit_samples"))
    bad = set(formats) - set(FORMATS)
    if bad:
        raise ValueError(f"unknown report formats: {sorted(bad)}")
    written = {}
    try:
        out.mkdir(parents=True, exist_ok=True)
        if "table" in formats:
            p = out / SUMMARY_TXT
            p.write_text(table(report))
            written["table"] = p
        if "structured" in formats:
            p = out / SUMMARY_JSON
            p.write_text(json.dumps(structured(report), indent=2, sort_keys=True) + "\n")
            written["structured"] = p
        if "delimited" in formats and samples:
            p = out / SAMPLES_CSV
            write_samples(report, p)
            written["delimited"] = p
    except OSError as exc:
        raise ReportIOError(f"cannot write report to {out}: {exc}") from exc
    return written


def load_structured(path) -> dict:
    """Parse a structured summary; tests come back as :class:`TestResult` objects."""
    try:
        doc = _json_restore(json.loads(Path(path).read_text()))
    except OSError as exc:
        raise ReportIOError(f"cannot read report {path}: {exc}") from exc
    doc["tests"] = [TestResult.from_dict(t) for t in doc["tests"]]
    return doc


def read_samples(path) -> dict:
    out: dict = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(row["statistic_name"], []).append(float(row["value"]))
    return {k: np.array(v) for k, v in out.items()}
