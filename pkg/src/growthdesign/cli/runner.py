"""Execute scenarios: single solves, certification, efficiency comparisons, sweeps."""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from ..equivalence import check_optimality
from ..errors import (
    CertificateError,
    DesignError,
    InfeasibleError,
    ParameterError,
    ResourceError,
)
from ..information import DesignWeights, d_efficiency, log_det_criterion
from ..optimize import DesignProblem, SolverOptions, closed_form_design, solve_numeric
from . import report as rp
from .config import Cell, ScenarioConfig

log = logging.getLogger(__name__)

# cells per task handed to a worker; J=7 cells take a few milliseconds each
CHUNK = 64


def _design(values, is_counts: bool, cell: Cell, what: str) -> DesignWeights:
    if values is None:
        return None
    if is_counts:
        total = float(np.sum(values))
        if abs(total - cell.I) > 1e-9 * max(1.0, cell.I):
            raise ParameterError(f"{what} counts sum to {total:g}, expected I={cell.I:g}")
    return DesignWeights.normalized(values, cell.I)


def _error_code(exc: Exception) -> str:
    if isinstance(exc, InfeasibleError):
        return rp.ERR_INFEASIBLE
    if isinstance(exc, CertificateError):
        return rp.ERR_CERTIFICATE
    if isinstance(exc, ResourceError):
        return rp.ERR_RESOURCE
    if isinstance(exc, (ParameterError, ValueError)):
        return rp.ERR_PARAMETER
    return rp.ERR_INTERNAL


def _optimum(problem: DesignProblem, opts: SolverOptions, tol: float):
    sol = solve_numeric(problem, opts)
    cert = check_optimality(sol.weights, problem.model, problem.spec, tol)
    return sol.weights, cert


def _mark(record: rp.CellRecord, cert):
    if not cert.optimal:
        record.status = rp.STATUS_UNCERTIFIED
        record.error_code = rp.ERR_CONVERGENCE
        record.message = f"equivalence gap {cert.gap:.3g} exceeds tolerance {cert.tol:.3g}"


def _uniform_eff(problem: DesignProblem, opt: DesignWeights) -> float:
    uniform = DesignWeights.uniform(problem.J, problem.I)
    return d_efficiency(uniform, opt, problem.model, problem.spec)


def run_cell(index: int, cell: Cell, config: ScenarioConfig) -> rp.CellRecord:
    """Evaluate one grid cell; every failure becomes an error record."""
    start = time.perf_counter()
    record = rp.CellRecord(index=index, inputs=cell.as_dict())
    tol, opts = config.tol, config.solver
    try:
        problem = DesignProblem(cell.J, cell.model(), cell.spec(), cell.I)
        mode = "solve" if config.mode == "sweep" else config.mode
        if mode == "solve":
            opt, cert = _optimum(problem, opts, tol)
            record.weights = [float(x) for x in opt.w]
            record.logdet = log_det_criterion(opt, problem.model, problem.spec)
            record.certificate = cert
            record.uniform_efficiency = _uniform_eff(problem, opt)
            _mark(record, cert)
        elif mode == "certify":
            design = _design(config.design, config.design_is_counts, cell, "design")
            record.weights = [float(x) for x in design.w]
            record.logdet = log_det_criterion(design, problem.model, problem.spec)
            record.certificate = check_optimality(design, problem.model, problem.spec, tol)
            opt, opt_cert = _optimum(problem, opts, tol)
            record.reference_weights = [float(x) for x in opt.w]
            record.efficiency = d_efficiency(design, opt, problem.model, problem.spec)
            record.uniform_efficiency = _uniform_eff(problem, opt)
            _mark(record, opt_cert)
        else:
            design = _design(config.design, config.design_is_counts, cell, "design")
            ref = _design(config.reference, config.reference_is_counts, cell, "reference")
            if ref is None:
                ref = closed_form_design(problem)
            if ref is None:
                ref, ref_cert = _optimum(problem, opts, tol)
                _mark(record, ref_cert)
            record.weights = [float(x) for x in design.w]
            record.reference_weights = [float(x) for x in ref.w]
            record.logdet = log_det_criterion(design, problem.model, problem.spec)
            record.efficiency = d_efficiency(design, ref, problem.model, problem.spec)
            try:
                record.certificate = check_optimality(design, problem.model, problem.spec, tol)
            except CertificateError as exc:
                record.message = f"candidate not certifiable: {exc}"
    except DesignError as exc:
        record.status, record.error_code, record.message = (
            rp.STATUS_ERROR, _error_code(exc), str(exc))
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        record.status, record.error_code, record.message = (
            rp.STATUS_ERROR, rp.ERR_INTERNAL, f"{type(exc).__name__}: {exc}")
    record.wall_time = time.perf_counter() - start
    return record


def _run_chunk(args):
    start, cells, config = args
    # solver warnings are reported through the record status instead
    logging.getLogger("growthdesign").setLevel(logging.ERROR)
    return [run_cell(start + i, c, config) for i, c in enumerate(cells)]


def default_jobs() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


def run_scenario(config: ScenarioConfig, jobs: int | None = None) -> rp.RunReport:
    """Run every cell of ``config``; records come back in grid order."""
    cells = config.cells()
    jobs = default_jobs() if jobs is None else max(1, int(jobs))
    chunks = [(i, cells[i:i + CHUNK], config) for i in range(0, len(cells), CHUNK)]
    if jobs == 1 or len(chunks) == 1:
        results = [_run_chunk(c) for c in chunks]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(chunks))) as pool:
            # map yields in submission order, so output order never depends on timing
            results = list(pool.map(_run_chunk, chunks))
    records = [r for chunk in results for r in chunk]
    report = rp.RunReport(mode=config.mode, name=config.name, seed=config.solver.seed,
                          tol=config.tol, records=records)
    bad = report.failures
    if bad:
        log.warning("%d of %d cells failed or were not certified", len(bad), len(records))
    return report


def sweep(config: ScenarioConfig, jobs: int | None = None) -> tuple[rp.RunReport, dict]:
    """Run a grid and return the report with its summary."""
    if config.mode != "sweep":
        config = replace(config, mode="sweep")
    report = run_scenario(config, jobs)
    return report, rp.summarize(report)
