"""Plot-ready tables derived from a run report.

Every table is long-format CSV with a fixed header.  ``a`` is the
standardised variance ratio I * sigma_gamma_sq / sigma_eps_sq and ``time``
is the 1-based index of the occasion.

===================  ==================================================
kind                 columns
===================  ==================================================
weight-vs-rho        a, rho, time, weight
weight-vs-a          rho, a, time, weight
efficiency-vs-rho    a, rho, uniform_efficiency
efficiency-vs-a      rho, a, uniform_efficiency
weights-per-time     family, kind, beta, sigma_gamma_sq, rho, time, weight
===================  ==================================================

Rows are sorted by the leading columns; failed cells are skipped.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from ..errors import UsageError
from .report import RunReport

FIGURE_COLUMNS = {
    "weight-vs-rho": ("a", "rho", "time", "weight"),
    "weight-vs-a": ("rho", "a", "time", "weight"),
    "efficiency-vs-rho": ("a", "rho", "uniform_efficiency"),
    "efficiency-vs-a": ("rho", "a", "uniform_efficiency"),
    "weights-per-time": ("family", "kind", "beta", "sigma_gamma_sq", "rho", "time", "weight"),
}
FIGURE_KINDS = tuple(FIGURE_COLUMNS)


def _a(inputs) -> float:
    return inputs["I"] * inputs["sigma_gamma_sq"] / inputs["sigma_eps_sq"]


def figure_rows(report: RunReport, kind: str) -> list[tuple]:
    if kind not in FIGURE_COLUMNS:
        raise UsageError(f"unknown figure kind {kind!r}; choose from {', '.join(FIGURE_KINDS)}")
    rows = []
    for r in report.records:
        inp = r.inputs
        a, rho = _a(inp), inp["rho"]
        if kind.startswith("efficiency"):
            if r.uniform_efficiency is None:
                continue
            lead = (a, rho) if kind == "efficiency-vs-rho" else (rho, a)
            rows.append(lead + (r.uniform_efficiency,))
            continue
        if r.weights is None:
            continue
        if kind == "weight-vs-rho":
            lead = (a, rho)
        elif kind == "weight-vs-a":
            lead = (rho, a)
        else:
            lead = (inp["family"], inp["kind"], " ".join(repr(float(b)) for b in inp["beta"]),
                    inp["sigma_gamma_sq"], rho)
        rows.extend(lead + (j + 1, w) for j, w in enumerate(r.weights))
    rows.sort(key=lambda row: row[:-1])
    return rows


def _cell(x) -> str:
    return repr(x) if isinstance(x, float) else str(x)


def figure_csv(report: RunReport, kind: str) -> str:
    rows = figure_rows(report, kind)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(FIGURE_COLUMNS[kind])
    writer.writerows([_cell(x) for x in row] for row in rows)
    return buf.getvalue()


def emit_figure_data(report: RunReport, kind: str, out_dir: str | Path) -> Path:
    """Write ``<kind>.csv`` into ``out_dir`` and return its path."""
    text = figure_csv(report, kind)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{kind}.csv"
    path.write_text(text, newline="")
    return path
