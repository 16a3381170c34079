"""CSV tables with a ``#``-comment preamble, and readers back into records."""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .fixed_points import Family, FixedPoint, Stability, Thresholds
from .integrators import Trajectory
from .model import AssumptionReport, LinearCoeffs, Rule, State

__all__ = [
    "CsvTable",
    "fmt",
    "parse_table",
    "read_coeffs",
    "read_fixed_points",
    "read_thresholds",
    "read_trajectories",
]

SIG_DIGITS = 12


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, enum.Enum):
        return str(value.value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if v == 0.0:
            return "0"  # folds -0.0
        return f"{v:.{SIG_DIGITS}g}"
    return str(value)


def round_sig(value: float) -> float:
    """``value`` as it survives a write/read cycle."""
    return float(fmt(float(value)))


@dataclass
class CsvTable:
    header: list[str]
    rows: list[list] = field(default_factory=list)
    preamble: list[str] = field(default_factory=list)
    footer: list[str] = field(default_factory=list)

    def add(self, *values):
        if len(values) != len(self.header):
            raise ValueError(f"expected {len(self.header)} values, got {len(values)}")
        self.rows.append(list(values))

    def render(self) -> str:
        buf = io.StringIO()
        for line in self.preamble:
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header)
        for row in self.rows:
            writer.writerow([fmt(v) for v in row])
        for line in self.footer:
            buf.write(f"# {line}\n")
        return buf.getvalue()

    def column(self, name: str) -> list:
        i = self.header.index(name)
        return [row[i] for row in self.rows]

    def records(self) -> list[dict]:
        return [dict(zip(self.header, row)) for row in self.rows]


def parse_table(text: str) -> CsvTable:
    """Inverse of :meth:`CsvTable.render`; cells stay as strings."""
    lines = text.splitlines()
    comments_top, body, comments_bottom = [], [], []
    for line in lines:
        if line.startswith("#"):
            (comments_bottom if body else comments_top).append(line[1:].strip())
        elif line.strip():
            body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    return CsvTable(header, [list(r) for r in reader], comments_top, comments_bottom)


def _f(s: str) -> float | None:
    return None if s == "" else float(s)


def _b(s: str) -> bool:
    return s == "true"


def read_coeffs(table: CsvTable) -> tuple[LinearCoeffs, AssumptionReport]:
    r = table.records()[0]
    coeffs = LinearCoeffs(
        a=float(r["a"]), b=float(r["b"]), c=float(r["c"]), d=float(r["d"]),
        D=float(r["D"]), n_bar=float(r["n_bar"]), x0=_f(r["x0"]),
    )
    report = AssumptionReport(_b(r["a1"]), _b(r["a2"]), _b(r["a3"]), r.get("detail", ""))
    return coeffs, report


def read_fixed_points(table: CsvTable) -> list[tuple[float, FixedPoint]]:
    """``(beta, FixedPoint)`` pairs; error rows are skipped."""
    out = []
    for r in table.records():
        if r["family"] == "error":
            continue
        eigs = (
            complex(float(r["eig1_re"]), float(r["eig1_im"])),
            complex(float(r["eig2_re"]), float(r["eig2_im"])),
        )
        fp = FixedPoint(
            State(float(r["x"]), float(r["n"])),
            Family(r["family"]),
            eigs,
            Stability(r["stability"]),
        )
        out.append((float(r["beta"]), fp))
    return out


def read_thresholds(table: CsvTable) -> tuple[Thresholds, float | None]:
    r = table.records()[0]
    return Thresholds(_f(r["beta_int"]), _f(r["beta_hat"]), _f(r["beta_h"])), _f(r["beta_u"])


def read_trajectories(table: CsvTable, key: str = "source") -> dict[str, Trajectory]:
    """Group ``t, x, n`` rows by ``key`` (``source`` or ``ic_id``)."""
    groups: dict[str, list] = {}
    for r in table.records():
        groups.setdefault(r[key], []).append((float(r["t"]), float(r["x"]), float(r["n"])))
    out = {}
    for name, rows in groups.items():
        arr = np.array(rows)
        rule = Rule.IMITATIVE if name == "imitative" else Rule.LOGIT
        out[name] = Trajectory(arr[:, 0], arr[:, 1:], len(arr) - 1, 0, rule)
    return out
