"""
Report emission and parsing
JSON: one document with config, calibration, series, checks, metadata
CSV: a directory per report with checks.csv, one `t,value` file per series and meta.json
"""

import csv
import json
import logging
from pathlib import Path
from typing import Dict, List, Union

from binoether.errors import ReportIOError
from binoether.models import CalibrationRecord, CheckResult, Report

logger = logging.getLogger(__name__)

CHECK_COLUMNS = ["name", "value", "tolerance", "pass", "provenance", "direction", "skipped"]


def fmt(value: float) -> str:
    """17 significant digits, '.' decimal separator"""
    return f"{float(value):.17g}"


def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


def emit(report: Report, out_dir: Union[str, Path], fmt_name: str = "json", stem: str = "report") -> List[Path]:
    """Write the report; unwritable destinations raise ReportIOError"""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if fmt_name == "json":
            path = out_dir / f"{stem}.json"
            path.write_text(to_json(report), encoding="utf-8")
            written = [path]
        elif fmt_name == "csv":
            written = _emit_csv(report, out_dir, stem)
        else:
            raise ReportIOError(f"Unknown report format '{fmt_name}'")
    except OSError as e:
        raise ReportIOError(f"Failed to write report to {out_dir}: {e}") from e
    logger.info(f"✅ Report written: {', '.join(str(p) for p in written)}")
    return written


def to_json(report: Report) -> str:
    return json.dumps(report.model_dump(mode="json", by_alias=True), indent=2, sort_keys=True)


def parse_json(text: str) -> Report:
    return Report.model_validate_json(text)


def _series_files(names: List[str]) -> Dict[str, str]:
    """Series name -> unique file name"""
    files: Dict[str, str] = {}
    used = set()
    for name in names:
        base = _safe_name(name) or "series"
        candidate, i = base, 1
        while candidate.lower() in used or candidate in ("checks", "meta"):
            candidate = f"{base}-{i}"
            i += 1
        used.add(candidate.lower())
        files[name] = f"{candidate}.csv"
    return files


def _emit_csv(report: Report, out_dir: Path, stem: str) -> List[Path]:
    report_dir = out_dir / stem
    report_dir.mkdir(parents=True, exist_ok=True)
    written = []
    files = _series_files(list(report.series))
    for name, rows in report.series.items():
        path = report_dir / files[name]
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "value"])
            for t, v in rows:
                writer.writerow([fmt(t), fmt(v)])
        written.append(path)

    checks_path = report_dir / "checks.csv"
    with checks_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CHECK_COLUMNS)
        for c in report.checks:
            writer.writerow([
                c.name, fmt(c.value), fmt(c.tolerance), "true" if c.passed else "false",
                c.provenance, c.direction, c.skipped or "",
            ])
    written.append(checks_path)

    meta_path = report_dir / "meta.json"
    meta = {
        "config": report.config,
        "calibration": report.calibration.model_dump(mode="json"),
        "metadata": report.metadata,
        "exit_code": report.exit_code,
        "series_files": [[files[name], name] for name in report.series],
    }
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")
    written.append(meta_path)
    return written


def parse_csv(out_dir: Union[str, Path], stem: str = "report") -> Report:
    """Rebuild a Report from the directory written by emit(..., 'csv')"""
    report_dir = Path(out_dir) / stem
    try:
        meta = json.loads((report_dir / "meta.json").read_text(encoding="utf-8"))
        series: Dict[str, List[List[float]]] = {}
        for filename, name in meta["series_files"]:
            with (report_dir / filename).open(newline="", encoding="utf-8") as fh:
                rows = list(csv.DictReader(fh))
            series[name] = [[float(r["t"]), float(r["value"])] for r in rows]

        with (report_dir / "checks.csv").open(newline="", encoding="utf-8") as fh:
            checks = [
                CheckResult(
                    name=r["name"],
                    value=float(r["value"]),
                    tolerance=float(r["tolerance"]),
                    passed=r["pass"] == "true",
                    provenance=r["provenance"],
                    direction=r["direction"],
                    skipped=r["skipped"] or None,
                )
                for r in csv.DictReader(fh)
            ]
    except (OSError, KeyError, ValueError) as e:
        raise ReportIOError(f"Failed to read CSV report from {report_dir}: {e}") from e
    return Report(
        config=meta["config"],
        calibration=CalibrationRecord.model_validate(meta["calibration"]),
        series=series,
        checks=checks,
        metadata=meta["metadata"],
        exit_code=meta["exit_code"],
    )


def format_table(report: Report) -> str:
    """One line per check: glyph, name, value, tolerance"""
    lines = []
    width = max((len(c.name) for c in report.checks), default=10)
    for c in report.checks:
        glyph = "⏭️ " if c.skipped else ("✅" if c.passed else "❌")
        detail = f"skipped: {c.skipped}" if c.skipped else f"{c.value:.3e}  tol {c.tolerance:.1e} ({c.direction})"
        lines.append(f"{glyph} {c.name:<{width}}  {detail}")
    return "\n".join(lines)
