"""Verification reports (schema ``finsler-report/v1``) and their serialization.

Serialization is byte-stable: JSON uses sorted keys and Python's shortest
round-trip float repr; CSV has a fixed column order (``CSV_COLUMNS``) and the
same float formatting.  Wall-clock runtime is kept on the report object but
left out of exported files unless explicitly requested, so that two runs
with the same inputs produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .errors import SchemaError

REPORT_SCHEMA_ID = "finsler-report/v1"
PRNG_ID = "numpy.PCG64"

#: column order of the CSV export, one row per check record
CSV_COLUMNS = (
    "suite",
    "tag",
    "check",
    "samples",
    "max_residual",
    "mean_residual",
    "tolerance",
    "pass",
    "extra",
)


def _plain(v):
    """numpy scalars/arrays -> JSON-friendly Python values."""
    if hasattr(v, "tolist"):
        return v.tolist()
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


@dataclass
class CheckRecord:
    """One verified identity.

    ``tolerance=None`` marks an informational record (reported for
    regression only); it always passes.  Otherwise ``passed`` is true iff
    ``max_residual <= tolerance`` (NaN never passes).
    """

    tag: str
    check: str
    samples: int
    max_residual: float
    mean_residual: float
    tolerance: Optional[float]
    suite: str = ""
    extra: dict = field(default_factory=dict)
    passed: bool = field(init=False)

    def __post_init__(self):
        self.samples = int(self.samples)
        self.max_residual = float(self.max_residual)
        self.mean_residual = float(self.mean_residual)
        if self.tolerance is not None:
            self.tolerance = float(self.tolerance)
        self.extra = _plain(self.extra)
        self.passed = self.tolerance is None or bool(self.max_residual <= self.tolerance)

    def to_dict(self):
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        stored = d.pop("pass")
        rec = cls(**d)
        if rec.passed != stored:
            raise SchemaError(f"record {rec.tag}: stored pass flag disagrees with residual and tolerance")
        return rec


@dataclass
class VerificationReport:
    suite: str
    metric_fingerprint: str
    seed: int
    samples: Optional[int]
    step: float
    tool_version: str
    records: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    prng: str = PRNG_ID
    schema: str = REPORT_SCHEMA_ID
    runtime: float = field(default=0.0, compare=False)
    # plot-ready series, written as separate tables; not part of the report file
    tables: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def failures(self):
        return [r for r in self.records if not r.passed]

    def to_dict(self, include_runtime: bool = False):
        d = {
            "schema": self.schema,
            "suite": self.suite,
            "metric_fingerprint": self.metric_fingerprint,
            "seed": self.seed,
            "samples": self.samples,
            "step": self.step,
            "prng": self.prng,
            "tool_version": self.tool_version,
            "pass": self.passed,
            "records": [r.to_dict() for r in self.records],
            "skipped": [dict(s) for s in self.skipped],
        }
        if include_runtime:
            d["runtime"] = self.runtime
        return d

    @classmethod
    def from_dict(cls, d):
        if d.get("schema") != REPORT_SCHEMA_ID:
            raise SchemaError(f"not a {REPORT_SCHEMA_ID} report (schema={d.get('schema')!r})")
        return cls(
            suite=d["suite"],
            metric_fingerprint=d["metric_fingerprint"],
            seed=d["seed"],
            samples=d["samples"],
            step=d["step"],
            tool_version=d["tool_version"],
            records=[CheckRecord.from_dict(r) for r in d["records"]],
            skipped=[dict(s) for s in d.get("skipped", [])],
            prng=d["prng"],
            runtime=d.get("runtime", 0.0),
        )


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dumps_json(report: VerificationReport, include_runtime: bool = False) -> str:
    return json.dumps(report.to_dict(include_runtime), sort_keys=True, indent=2) + "\n"


def dumps_csv(report: VerificationReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.records:
        d = r.to_dict()
        row = [_fmt(d[c]) for c in CSV_COLUMNS[:-1]]
        row.append(json.dumps(d["extra"], sort_keys=True))
        w.writerow(row)
    return buf.getvalue()


def export_table(report: VerificationReport, path, format: str = "json", include_runtime: bool = False) -> Path:
    """Write ``report`` to ``path`` as ``json`` or ``csv``; returns the path.

    An unwritable path raises the usual ``OSError``.
    """
    if format == "json":
        text = dumps_json(report, include_runtime)
    elif format == "csv":
        text = dumps_csv(report)
    else:
        raise ValueError(f"unknown report format {format!r} (expected csv or json)")
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def load_report(path) -> VerificationReport:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return VerificationReport.from_dict(doc)


def write_series_csv(columns, rows, path) -> Path:
    """Plot-ready table: header row then one row per sample, repr floats."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(float(v)) if not isinstance(v, str) else v for v in row])
    return path


def finite_or_none(v):
    return v if v is None or math.isfinite(v) else None
