"""Run reports: per-cell records, JSON round-trip, CSV and summary output.

CSV files omit wall time so that two runs of the same configuration produce
byte-identical tables; wall time is kept in the JSON report only.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..equivalence import OptimalityCertificate

STATUS_OK = "ok"
STATUS_UNCERTIFIED = "uncertified"
STATUS_ERROR = "error"

# error codes carried by failed cells
ERR_INFEASIBLE = "infeasible"
ERR_CONVERGENCE = "convergence"
ERR_CERTIFICATE = "certificate"
ERR_PARAMETER = "parameter"
ERR_RESOURCE = "resource"
ERR_INTERNAL = "internal"


@dataclass(eq=False)
class CellRecord:
    index: int
    inputs: dict
    status: str = STATUS_OK
    error_code: str | None = None
    message: str = ""
    weights: list[float] | None = None
    logdet: float | None = None
    certificate: OptimalityCertificate | None = None
    uniform_efficiency: float | None = None
    efficiency: float | None = None
    reference_weights: list[float] | None = None
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["certificate"] = self.certificate.to_dict() if self.certificate else None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CellRecord":
        d = dict(d)
        cert = d.get("certificate")
        d["certificate"] = OptimalityCertificate.from_dict(cert) if cert else None
        return cls(**d)

    def __eq__(self, other):
        if not isinstance(other, CellRecord):
            return NotImplemented
        return _canon(self.to_dict()) == _canon(other.to_dict())


def _canon(obj):
    # NaN != NaN would break equality of otherwise identical records
    return json.dumps(obj, sort_keys=True, default=str)


@dataclass(eq=False)
class RunReport:
    mode: str
    name: str = ""
    seed: int = 0
    tol: float = 1e-8
    records: list[CellRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode, "name": self.name, "seed": self.seed, "tol": self.tol,
            "records": [r.to_dict() for r in self.records],
            "summary": summarize(self),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(mode=d["mode"], name=d.get("name", ""), seed=d.get("seed", 0),
                   tol=d.get("tol", 1e-8),
                   records=[CellRecord.from_dict(r) for r in d.get("records", [])])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=True)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, RunReport):
            return NotImplemented
        return _canon(self.to_dict()) == _canon(other.to_dict())

    @property
    def failures(self) -> list[CellRecord]:
        return [r for r in self.records if r.status != STATUS_OK]


def _stats(values):
    vals = [v for v in values if v is not None and math.isfinite(v)]
    if not vals:
        return {"count": 0, "min": None, "mean": None}
    return {"count": len(vals), "min": min(vals), "mean": sum(vals) / len(vals)}


def summarize(report: RunReport) -> dict:
    """Cell counts and uniform-design efficiency statistics by family and by kind."""
    recs = report.records
    out = {
        "cells": len(recs),
        "ok": sum(r.status == STATUS_OK for r in recs),
        "uncertified": sum(r.status == STATUS_UNCERTIFIED for r in recs),
        "errors": sum(r.status == STATUS_ERROR for r in recs),
        "max_gap": max((r.certificate.gap for r in recs if r.certificate), default=None),
        "uniform_efficiency": _stats(r.uniform_efficiency for r in recs),
        "by_family": {},
        "by_kind": {},
    }
    for key, slot in (("family", "by_family"), ("kind", "by_kind")):
        for value in sorted({r.inputs[key] for r in recs}):
            out[slot][value] = _stats(r.uniform_efficiency for r in recs
                                      if r.inputs[key] == value)
    return out


CSV_COLUMNS = ("index", "family", "kind", "J", "I", "beta", "sigma_gamma_sq", "rho",
               "sigma_eps_sq", "status", "error_code", "weights", "logdet", "gap",
               "eff_lower_bound", "optimal", "psi", "uniform_efficiency", "efficiency")


def _num(x) -> str:
    return "" if x is None else repr(float(x))


def _vec(xs) -> str:
    return "" if xs is None else " ".join(repr(float(x)) for x in xs)


def records_csv(report: RunReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(CSV_COLUMNS)
    for r in report.records:
        c, inp = r.certificate, r.inputs
        writer.writerow([
            r.index, inp["family"], inp["kind"], inp["J"], _num(inp["I"]), _vec(inp["beta"]),
            _num(inp["sigma_gamma_sq"]), _num(inp["rho"]), _num(inp["sigma_eps_sq"]),
            r.status, r.error_code or "", _vec(r.weights), _num(r.logdet),
            _num(c.gap if c else None), _num(c.eff_lower_bound if c else None),
            "" if c is None else str(c.optimal).lower(), _vec(c.psi if c else None),
            _num(r.uniform_efficiency), _num(r.efficiency),
        ])
    return buf.getvalue()


def write_report(report: RunReport, out_dir: str | Path) -> dict[str, Path]:
    """Write records.csv, report.json and summary.json into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out / "records.csv", "json": out / "report.json",
             "summary": out / "summary.json"}
    paths["csv"].write_text(records_csv(report), newline="")
    paths["json"].write_text(report.to_json())
    paths["summary"].write_text(json.dumps(summarize(report), indent=2, sort_keys=True))
    return paths


def read_report(path: str | Path) -> RunReport:
    path = Path(path)
    if path.is_dir():
        path = path / "report.json"
    return RunReport.from_json(path.read_text())
