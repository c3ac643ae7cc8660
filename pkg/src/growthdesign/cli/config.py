"""Scenario configuration files and built-in presets.

A scenario is a TOML document::

    version = 1
    mode = "solve"            # solve | certify | efficiency | sweep

    [problem]
    J = 7
    I = 100
    family = "exponential"
    beta = [0, 1, 1]

    [covariance]
    kind = "cs"
    sigma_gamma_sq = 1.0
    rho = 0.5
    sigma_eps_sq = 1.0

    [solver]                  # all optional
    restarts = 8
    seed = 0
    gap_tol = 1e-9
    max_iters = 500
    tol = 1e-8                # certificate tolerance

    [design]                  # certify and efficiency modes
    weights = [...]           # or counts = [...]

    [reference]               # efficiency mode; omit to compare against the optimum
    weights = [...]

    [sweep]                   # sweep mode; every key is an optional list
    family = ["exponential", "logistic"]
    kind = ["cs", "ar1"]
    beta1 = [1, 3, 5, 10]
    rho = [0.0, 0.5]
    sigma_gamma_sq = [0.1, 1.0]
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..covariance import CovarianceSpec
from ..errors import DesignError, SchemaError
from ..model import Family, GrowthCurve, TimeGrid
from ..optimize import SolverOptions

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA_VERSION = 1
MODES = ("solve", "certify", "efficiency", "sweep")
SWEEP_KEYS = ("family", "kind", "beta0", "beta1", "beta2", "beta3",
              "sigma_gamma_sq", "rho", "sigma_eps_sq")


@dataclass(frozen=True)
class Cell:
    """One fully specified design problem inside a scenario."""

    J: int
    I: float
    family: str
    beta: tuple[float, ...]
    kind: str
    sigma_gamma_sq: float
    rho: float
    sigma_eps_sq: float

    def model(self) -> GrowthCurve:
        return GrowthCurve(Family.parse(self.family), self.beta)

    def spec(self) -> CovarianceSpec:
        return CovarianceSpec(self.kind, self.sigma_gamma_sq, self.rho, self.sigma_eps_sq)

    def as_dict(self) -> dict:
        return {
            "J": self.J, "I": self.I, "family": self.family, "beta": list(self.beta),
            "kind": self.kind, "sigma_gamma_sq": self.sigma_gamma_sq, "rho": self.rho,
            "sigma_eps_sq": self.sigma_eps_sq,
        }


@dataclass(frozen=True)
class ScenarioConfig:
    base: Cell
    mode: str = "solve"
    solver: SolverOptions = field(default_factory=SolverOptions)
    tol: float = 1e-8
    design: tuple[float, ...] | None = None
    design_is_counts: bool = False
    reference: tuple[float, ...] | None = None
    reference_is_counts: bool = False
    sweep: dict[str, tuple] = field(default_factory=dict)
    version: int = SCHEMA_VERSION
    name: str = ""

    def cells(self) -> list[Cell]:
        """Grid cells in deterministic order (last axis varies fastest)."""
        if self.mode != "sweep":
            return [self.base]
        keys = [k for k in SWEEP_KEYS if k in self.sweep]
        if not keys:
            return [self.base]
        out = []
        for combo in itertools.product(*(self.sweep[k] for k in keys)):
            values = dict(zip(keys, combo))
            family = values.get("family", self.base.family)
            p = _param_count(family, self.base)
            beta = list(self.base.beta) if Family.parse(family) is Family.parse(
                self.base.family) else _default_beta(family)
            beta = (beta + [0.0] * p)[:p]
            for i in range(p):
                if f"beta{i}" in values:
                    beta[i] = float(values[f"beta{i}"])
            out.append(replace(
                self.base, family=Family.parse(family).value, beta=tuple(beta),
                kind=values.get("kind", self.base.kind),
                sigma_gamma_sq=float(values.get("sigma_gamma_sq", self.base.sigma_gamma_sq)),
                rho=float(values.get("rho", self.base.rho)),
                sigma_eps_sq=float(values.get("sigma_eps_sq", self.base.sigma_eps_sq))))
        # beta axes beyond a family's parameter count would duplicate cells
        seen, unique = set(), []
        for c in out:
            if c not in seen:
                seen.add(c)
                unique.append(c)
        return unique


def _default_beta(family) -> list[float]:
    fam = Family.parse(family)
    return {
        Family.RATIO: [1.0], Family.STRAIGHT_LINE: [0.0, 1.0],
        Family.EXPONENTIAL: [0.0, 1.0, 1.0], Family.LOGISTIC: [0.0, 1.0, 1.0, 0.0],
    }.get(fam, [])


def _param_count(family, base: Cell) -> int:
    fam = Family.parse(family)
    if fam is Family.UNSTRUCTURED:
        return base.J
    return len(_default_beta(fam))


def _get(table: dict, key: str, path: str, kind, default=None, required=False):
    if key not in table:
        if required:
            raise SchemaError(f"{path}.{key}" if path else key, "is required")
        return default
    value = table[key]
    try:
        if kind is float:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind is int:
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if kind is str:
            if not isinstance(value, str):
                raise TypeError
            return value
        if kind is list:
            if not isinstance(value, list) or not value:
                raise TypeError
            return value
    except (TypeError, ValueError):
        raise SchemaError(f"{path}.{key}" if path else key,
                          f"expected {kind.__name__}, got {value!r}") from None
    return value


def _float_list(values, path) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in values if not isinstance(v, bool))
    except (TypeError, ValueError):
        raise SchemaError(path, "expected a list of numbers") from None


def _design_block(doc: dict, key: str):
    block = doc.get(key)
    if block is None:
        return None, False
    if not isinstance(block, dict):
        raise SchemaError(key, "must be a table")
    if "weights" in block:
        return _float_list(_get(block, "weights", key, list), f"{key}.weights"), False
    if "counts" in block:
        return _float_list(_get(block, "counts", key, list), f"{key}.counts"), True
    raise SchemaError(key, "needs 'weights' or 'counts'")


def parse_config(doc: dict, name: str = "") -> ScenarioConfig:
    """Validate a decoded TOML document into a ScenarioConfig."""
    if not isinstance(doc, dict):
        raise SchemaError("<root>", "must be a table")
    version = _get(doc, "version", "", int, required=True)
    if version != SCHEMA_VERSION:
        raise SchemaError("version", f"unsupported schema version {version}")
    mode = _get(doc, "mode", "", str, default="solve")
    if mode not in MODES:
        raise SchemaError("mode", f"must be one of {', '.join(MODES)}")
    unknown = set(doc) - {"version", "mode", "name", "problem", "covariance", "solver",
                          "design", "reference", "sweep"}
    if unknown:
        raise SchemaError(sorted(unknown)[0], "unknown key")

    prob = doc.get("problem", {})
    cov = doc.get("covariance", {})
    if not isinstance(prob, dict):
        raise SchemaError("problem", "must be a table")
    if not isinstance(cov, dict):
        raise SchemaError("covariance", "must be a table")
    J = _get(prob, "J", "problem", int, required=True)
    I = _get(prob, "I", "problem", float, required=True)
    family = _get(prob, "family", "problem", str, required=True)
    try:
        fam = Family.parse(family)
    except DesignError as exc:
        raise SchemaError("problem.family", str(exc)) from None
    beta = prob.get("beta")
    if beta is None:
        beta = [0.0] * J if fam is Family.UNSTRUCTURED else _default_beta(fam)
    beta = _float_list(beta if isinstance(beta, list) else [beta], "problem.beta")
    kind = _get(cov, "kind", "covariance", str, default="cs")
    sg = _get(cov, "sigma_gamma_sq", "covariance", float, required=True)
    rho = _get(cov, "rho", "covariance", float, default=0.0)
    se = _get(cov, "sigma_eps_sq", "covariance", float, default=1.0)
    base = Cell(J, I, fam.value, beta, kind, sg, rho, se)
    _validate_cell(base, "problem", "covariance")

    solver_doc = doc.get("solver", {})
    if not isinstance(solver_doc, dict):
        raise SchemaError("solver", "must be a table")
    defaults = SolverOptions()
    try:
        solver = SolverOptions(
            max_iters=_get(solver_doc, "max_iters", "solver", int, defaults.max_iters),
            gap_tol=_get(solver_doc, "gap_tol", "solver", float, defaults.gap_tol),
            restarts=_get(solver_doc, "restarts", "solver", int, defaults.restarts),
            seed=_get(solver_doc, "seed", "solver", int, defaults.seed),
        )
    except DesignError as exc:
        raise SchemaError("solver", str(exc)) from None
    tol = _get(solver_doc, "tol", "solver", float, 1e-8)
    if not tol > 0:
        raise SchemaError("solver.tol", "must be positive")

    design, design_counts = _design_block(doc, "design")
    reference, ref_counts = _design_block(doc, "reference")
    if mode in ("certify", "efficiency") and design is None:
        raise SchemaError("design", f"required in {mode} mode")
    for vec, path in ((design, "design"), (reference, "reference")):
        if vec is not None and len(vec) != J:
            raise SchemaError(path, f"needs {J} entries, got {len(vec)}")

    sweep = {}
    sweep_doc = doc.get("sweep", {})
    if not isinstance(sweep_doc, dict):
        raise SchemaError("sweep", "must be a table")
    for key, values in sweep_doc.items():
        if key not in SWEEP_KEYS:
            raise SchemaError(f"sweep.{key}", "unknown sweep axis")
        if not isinstance(values, list) or not values:
            raise SchemaError(f"sweep.{key}", "must be a nonempty list")
        if key in ("family", "kind"):
            sweep[key] = tuple(str(v) for v in values)
        else:
            sweep[key] = _float_list(values, f"sweep.{key}")
    if mode == "sweep" and not sweep:
        raise SchemaError("sweep", "sweep mode needs at least one axis")

    config = ScenarioConfig(base=base, mode=mode, solver=solver, tol=tol, design=design,
                            design_is_counts=design_counts, reference=reference,
                            reference_is_counts=ref_counts, sweep=sweep, version=version,
                            name=str(doc.get("name", name)))
    for i, cell in enumerate(config.cells()):
        _validate_cell(cell, f"sweep[{i}]")
    return config


def _validate_cell(cell: Cell, path: str, cov_path: str | None = None):
    cov_path = cov_path or path
    try:
        CovarianceSpec(cell.kind, cell.sigma_gamma_sq, cell.rho, cell.sigma_eps_sq)
    except DesignError as exc:
        raise SchemaError(cov_path, str(exc)) from None
    if not cell.I > 0:
        raise SchemaError(f"{path}.I", "must be positive")
    try:
        TimeGrid(cell.J)
        model = cell.model()
    except DesignError as exc:
        raise SchemaError(path, str(exc)) from None
    if model.family is Family.UNSTRUCTURED and model.p != cell.J:
        raise SchemaError(f"{path}.beta", f"unstructured model needs {cell.J} entries")
    if model.p > cell.J:
        raise SchemaError(f"{path}.J", f"J={cell.J} is smaller than p={model.p}")


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise SchemaError(str(path), f"cannot read: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise SchemaError(str(path), f"invalid TOML: {exc}") from None
    return parse_config(doc, name=path.stem)


def _grid(start, stop, step):
    n = int(round((stop - start) / step))
    return [round(start + i * step, 10) for i in range(n + 1)]


GRID_RHO = _grid(0.0, 0.95, 0.05)
GRID_SIGMA_GAMMA_SQ = _grid(0.0, 2.0, 0.1) + [2.5, 5.0, 10.0]


def _preset_docs() -> dict[str, dict]:
    return {
        "paper-table1": {
            "version": 1, "mode": "sweep", "name": "paper-table1",
            "problem": {"J": 7, "I": 100, "family": "exponential", "beta": [0, 1, 1]},
            "covariance": {"kind": "cs", "sigma_gamma_sq": 1.0, "rho": 0.0,
                           "sigma_eps_sq": 1.0},
            "sweep": {
                "family": ["exponential", "logistic"],
                "kind": ["cs", "ar1"],
                "beta0": [0.0],
                "beta1": [1.0, 3.0, 5.0, 10.0],
                "beta2": [0.5, 1.0, 2.0],
                "beta3": [-2.0, -1.0, 0.0, 1.0, 2.0],
                "rho": GRID_RHO,
                "sigma_gamma_sq": GRID_SIGMA_GAMMA_SQ,
            },
        },
        # J = p = 3 under AR(1); I = 100 so sigma_gamma_sq = a / 100
        "ar1-j3": {
            "version": 1, "mode": "sweep", "name": "ar1-j3",
            "problem": {"J": 3, "I": 100, "family": "unstructured", "beta": [0, 0, 0]},
            "covariance": {"kind": "ar1", "sigma_gamma_sq": 1.0},
            "sweep": {"sigma_gamma_sq": [0.5, 1.0, 2.0], "rho": _grid(0.0, 1.0, 0.02)},
        },
        "line-j3": {
            "version": 1, "mode": "sweep", "name": "line-j3",
            "problem": {"J": 3, "I": 100, "family": "straight-line", "beta": [0, 1]},
            "covariance": {"kind": "cs", "sigma_gamma_sq": 1.0, "rho": 0.0},
            "sweep": {"sigma_gamma_sq": [round(a / 100, 12) for a in _a_grid()]},
        },
        "ratio-j2": {
            "version": 1, "mode": "sweep", "name": "ratio-j2",
            "problem": {"J": 2, "I": 100, "family": "ratio", "beta": [1]},
            "covariance": {"kind": "cs", "sigma_gamma_sq": 1.0},
            "sweep": {"rho": [0.25, 0.5, 0.8, 0.99],
                      "sigma_gamma_sq": [round(a / 100, 12) for a in _a_grid()]},
        },
    }


def _a_grid():
    return [float(x) for x in np.round(np.logspace(-1, 3, 41), 10)]


PRESETS = tuple(_preset_docs())


def preset(name: str) -> ScenarioConfig:
    docs = _preset_docs()
    if name not in docs:
        raise SchemaError("preset", f"unknown preset {name!r}; choose from {', '.join(docs)}")
    return parse_config(docs[name], name=name)
