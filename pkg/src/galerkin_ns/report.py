"""Self-auditing experiment reports.

Each row stores (estimate, target, standard error, gate, kind) and derives its
pass flag from those numbers alone, so a CSV can be re-checked by hand.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

GATE_KINDS = ("se", "abs", "rel", "max", "min")


def mean_and_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(x.mean()), math.inf
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


@dataclass(frozen=True)
class MetricRow:
    """One gated comparison.

    kind "se":  |estimate - target| <= gate * stderr
    kind "abs": |estimate - target| <= gate
    kind "rel": |estimate - target| <= gate * |target|
    kind "max": estimate <= target          (gate unused)
    kind "min": estimate >= target          (gate unused)
    """

    name: str
    estimate: float
    target: float
    stderr: float = 0.0
    gate: float = 0.0
    kind: str = "abs"

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")

    @property
    def passed(self) -> bool:
        e, t = self.estimate, self.target
        if not (math.isfinite(e) and math.isfinite(t)):
            return False
        if self.kind == "se":
            return abs(e - t) <= self.gate * self.stderr
        if self.kind == "abs":
            return abs(e - t) <= self.gate
        if self.kind == "rel":
            return abs(e - t) <= self.gate * abs(t)
        if self.kind == "max":
            return e <= t
        return e >= t

    @property
    def z_score(self) -> float:
        if self.stderr > 0:
            return (self.estimate - self.target) / self.stderr
        return math.nan


@dataclass
class ExperimentReport:
    experiment_id: str
    rows: list[MetricRow] = field(default_factory=list)
    seed: int | None = None
    config_hash: str = ""
    version: str = __version__
    notes: list[str] = field(default_factory=list)

    def add(self, row: MetricRow) -> MetricRow:
        self.rows.append(row)
        return row

    def extend(self, other: "ExperimentReport", prefix: str = ""):
        for row in other.rows:
            self.rows.append(MetricRow(prefix + row.name, row.estimate, row.target, row.stderr, row.gate, row.kind))
        self.notes.extend(other.notes)

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def row(self, name: str) -> MetricRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def failures(self) -> list[MetricRow]:
        return [r for r in self.rows if not r.passed]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# experiment={self.experiment_id} seed={self.seed} config={self.config_hash} version={self.version}\n")
        buf.write("# columns: dimensionless unless the metric name says otherwise\n")
        for note in self.notes:
            buf.write(f"# note: {note}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "estimate", "target", "stderr", "gate", "kind", "passed"])
        for r in self.rows:
            w.writerow([r.name, _fmt(r.estimate), _fmt(r.target), _fmt(r.stderr), _fmt(r.gate), r.kind, int(r.passed)])
        return buf.getvalue()

    def write(self, path: Path | str) -> Path:
        path = Path(path)
        path.write_text(self.to_csv(), encoding="utf-8")
        return path

    @classmethod
    def read(cls, path: Path | str) -> "ExperimentReport":
        text = Path(path).read_text(encoding="utf-8").splitlines()
        header = dict(item.split("=", 1) for item in text[0][2:].split())
        report = cls(header["experiment"], seed=None if header["seed"] == "None" else int(header["seed"]),
                     config_hash=header["config"], version=header["version"])
        body = []
        for line in text[1:]:
            if line.startswith("# note: "):
                report.notes.append(line[len("# note: "):])
            elif not line.startswith("#"):
                body.append(line)
        for rec in csv.DictReader(body):
            row = MetricRow(rec["name"], float(rec["estimate"]), float(rec["target"]), float(rec["stderr"]),
                            float(rec["gate"]), rec["kind"])
            if int(rec["passed"]) != int(row.passed):
                raise ValueError(f"row {row.name!r}: recorded pass flag disagrees with its own numbers")
            report.rows.append(row)
        return report

    def summary(self) -> str:
        lines = [f"[{self.experiment_id}] {'PASS' if self.passed else 'FAIL'}"]
        for r in self.rows:
            lines.append(f"  {'ok ' if r.passed else 'BAD'} {r.name}: {r.estimate:.6g} vs {r.target:.6g}"
                         f" (se={r.stderr:.3g}, {r.kind} gate {r.gate:g})")
        return "\n".join(lines)


def _fmt(x: float) -> str:
    return repr(float(x))
