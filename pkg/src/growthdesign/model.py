"""Mean growth curves on the equidistant testing grid and their Jacobians."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidModelError

RANK_RTOL = 1e-10


class Family(str, enum.Enum):
    UNSTRUCTURED = "unstructured"
    RATIO = "ratio"
    STRAIGHT_LINE = "straight-line"
    EXPONENTIAL = "exponential"
    LOGISTIC = "logistic"

    @classmethod
    def parse(cls, value: str | "Family") -> "Family":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"line": "straight-line", "straightline": "straight-line",
                   "exp": "exponential", "4pl": "logistic", "3pexp": "exponential"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise InvalidModelError(f"unknown growth-curve family {value!r}") from None


_FIXED_P = {
    Family.RATIO: 1,
    Family.STRAIGHT_LINE: 2,
    Family.EXPONENTIAL: 3,
    Family.LOGISTIC: 4,
}


@dataclass(frozen=True)
class TimeGrid:
    """Testing occasions t_j = j - 1 for j = 1..J."""

    J: int

    def __post_init__(self):
        if int(self.J) != self.J or self.J < 1:
            raise InvalidModelError(f"J must be a positive integer, got {self.J!r}")
        object.__setattr__(self, "J", int(self.J))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.J, dtype=float)


@dataclass(frozen=True)
class GrowthCurve:
    """A growth-curve family together with its nominal parameter vector.

    ``beta`` is indexed from zero as in the usual parameterisations:
    exponential ``b1 - (b1 - b0) exp(-b2 t)`` and logistic
    ``b0 + (b1 - b0) / (1 + exp(-(b2 t + b3)))``.
    """

    family: Family
    beta: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        beta = tuple(float(b) for b in np.atleast_1d(np.asarray(self.beta, dtype=float)))
        object.__setattr__(self, "beta", beta)
        if not all(np.isfinite(beta)):
            raise InvalidModelError("beta must be finite")
        want = _FIXED_P.get(self.family)
        if want is not None and len(beta) != want:
            raise InvalidModelError(
                f"{self.family.value} model takes {want} parameters, got {len(beta)}")
        if self.family is Family.UNSTRUCTURED and len(beta) < 1:
            raise InvalidModelError("unstructured model needs one mean per time point")
        if self.family in (Family.EXPONENTIAL, Family.LOGISTIC):
            if not beta[0] < beta[1]:
                raise InvalidModelError("requires beta_0 < beta_1")
            if not beta[2] > 0:
                raise InvalidModelError("requires beta_2 > 0")

    @property
    def p(self) -> int:
        return len(self.beta)

    @classmethod
    def unstructured(cls, J: int, mu: Sequence[float] | None = None) -> "GrowthCurve":
        return cls(Family.UNSTRUCTURED, tuple(np.zeros(J) if mu is None else mu))

    def _check_grid(self, grid: TimeGrid):
        if self.family is Family.UNSTRUCTURED and self.p != grid.J:
            raise InvalidModelError(
                f"unstructured model needs exactly J={grid.J} means, got {self.p}")
        if self.p > grid.J:
            raise InvalidModelError(f"p={self.p} parameters exceed J={grid.J} time points")


def _as_grid(grid: TimeGrid | int) -> TimeGrid:
    return grid if isinstance(grid, TimeGrid) else TimeGrid(grid)


def mean_curve(model: GrowthCurve, grid: TimeGrid | int) -> np.ndarray:
    """Mean score mu_j(beta) at every time point of ``grid``."""
    grid = _as_grid(grid)
    model._check_grid(grid)
    t = grid.times
    b = model.beta
    fam = model.family
    if fam is Family.UNSTRUCTURED:
        return np.array(b, dtype=float)
    if fam is Family.RATIO:
        return b[0] * t
    if fam is Family.STRAIGHT_LINE:
        return b[0] + b[1] * t
    if fam is Family.EXPONENTIAL:
        return b[1] - (b[1] - b[0]) * np.exp(-b[2] * t)
    z = b[2] * t + b[3]
    return b[0] + (b[1] - b[0]) / (1.0 + np.exp(-z))


def jacobian(model: GrowthCurve, grid: TimeGrid | int) -> np.ndarray:
    """J x p matrix of partial derivatives d mu_j / d beta_k."""
    grid = _as_grid(grid)
    model._check_grid(grid)
    t = grid.times
    b = model.beta
    fam = model.family
    if fam is Family.UNSTRUCTURED:
        return np.eye(grid.J)
    if fam is Family.RATIO:
        return t[:, None].copy()
    if fam is Family.STRAIGHT_LINE:
        return np.column_stack([np.ones_like(t), t])
    if fam is Family.EXPONENTIAL:
        d0 = np.exp(-b[2] * t)
        return np.column_stack([d0, 1.0 - d0, t * (b[1] - b[0]) * d0])
    z = b[2] * t + b[3]
    d0 = 1.0 / (1.0 + np.exp(z))
    # e^z / (1 + e^z)^2 written without overflow for large |z|
    d3 = (b[1] - b[0]) * d0 * (1.0 / (1.0 + np.exp(-z)))
    return np.column_stack([d0, 1.0 - d0, t * d3, d3])


def check_estimable(A: np.ndarray, w: Sequence[float]) -> bool:
    """True when the rows of ``A`` carrying positive weight have full column rank."""
    A = np.asarray(A, dtype=float)
    w = np.asarray(w, dtype=float)
    if A.ndim != 2 or w.shape != (A.shape[0],):
        return False
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(w))):
        return False
    rows = A[w > 0]
    p = A.shape[1]
    if rows.shape[0] < p:
        return False
    s = np.linalg.svd(rows, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return False
    return int(np.sum(s > RANK_RTOL * s[0])) >= p
