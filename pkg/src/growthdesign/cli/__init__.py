"""Batch front end: scenario configs, sweeps, reports and figure data."""

from .config import PRESETS, Cell, ScenarioConfig, load_config, parse_config, preset
from .figures import FIGURE_KINDS, emit_figure_data, figure_csv, figure_rows
from .main import main
from .report import CellRecord, RunReport, read_report, records_csv, summarize, write_report
from .runner import run_cell, run_scenario, sweep

__all__ = [
    "FIGURE_KINDS", "PRESETS", "Cell", "CellRecord", "RunReport", "ScenarioConfig",
    "emit_figure_data", "figure_csv", "figure_rows", "load_config", "main", "parse_config",
    "preset", "read_report", "records_csv", "run_cell", "run_scenario", "summarize", "sweep",
    "write_report",
]
