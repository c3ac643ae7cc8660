"""Within-subject random-effect covariance structures.

Two structures are supported: compound symmetry (equal correlation between
every pair of occasions) and first-order autoregressive (correlation decays
as rho**lag).  ``build_full_V`` expands a design into the dense per-subject
observation covariance; it exists for cross-checking the compact information
formulas and is not used on any hot path.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ResourceError

MAX_FULL_V = 10_000


class CovKind(str, enum.Enum):
    CS = "cs"
    AR1 = "ar1"

    @classmethod
    def parse(cls, value) -> "CovKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("(", "").replace(")", "").replace("-", "")
        try:
            return cls(key)
        except ValueError:
            raise ParameterError(f"unknown covariance kind {value!r}") from None


@dataclass(frozen=True)
class CovarianceSpec:
    kind: CovKind
    sigma_gamma_sq: float
    rho: float
    sigma_eps_sq: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", CovKind.parse(self.kind))
        for name in ("sigma_gamma_sq", "rho", "sigma_eps_sq"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ParameterError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.sigma_eps_sq <= 0:
            raise ParameterError("sigma_eps_sq must be positive")
        if self.sigma_gamma_sq < 0:
            raise ParameterError("sigma_gamma_sq must be nonnegative")
        if not 0.0 <= self.rho <= 1.0:
            raise ParameterError(f"rho must lie in [0, 1], got {self.rho}")

    @property
    def tau_sq(self) -> float:
        """Variance ratio sigma_gamma^2 / sigma_eps^2."""
        return self.sigma_gamma_sq / self.sigma_eps_sq

    def sigma(self, J: int) -> np.ndarray:
        return sigma_cs(self, J) if self.kind is CovKind.CS else sigma_ar1(self, J)


@dataclass(frozen=True)
class ExactDesignLayout:
    """Integer item counts per time point."""

    counts: tuple[int, ...]

    def __post_init__(self):
        raw = np.asarray(self.counts)
        if raw.ndim != 1 or raw.size == 0:
            raise ParameterError("counts must be a nonempty vector")
        if np.any(raw != np.round(raw)):
            raise ParameterError("counts must be integers")
        counts = tuple(int(c) for c in raw)
        if any(c < 0 for c in counts):
            raise ParameterError("counts must be nonnegative")
        if sum(counts) <= 0:
            raise ParameterError("an exact design needs at least one item")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def J(self) -> int:
        return len(self.counts)

    def weights(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.total


def _check_J(J):
    if int(J) != J or J < 1:
        raise ParameterError(f"J must be a positive integer, got {J!r}")
    return int(J)


def sigma_cs(spec: CovarianceSpec, J: int) -> np.ndarray:
    J = _check_J(J)
    s = spec.sigma_gamma_sq
    return s * ((1.0 - spec.rho) * np.eye(J) + spec.rho * np.ones((J, J)))


def sigma_ar1(spec: CovarianceSpec, J: int) -> np.ndarray:
    J = _check_J(J)
    lag = np.abs(np.subtract.outer(np.arange(J), np.arange(J)))
    # 0**0 == 1 keeps the diagonal intact when rho == 0
    return spec.sigma_gamma_sq * np.power(spec.rho, lag)


def incidence(layout: ExactDesignLayout) -> np.ndarray:
    """I x J matrix F = blockdiag(1_{I_j}) mapping items to time points."""
    return np.repeat(np.eye(layout.J), layout.counts, axis=0)


def build_full_V(layout: ExactDesignLayout, sigma: np.ndarray,
                 sigma_eps_sq: float) -> np.ndarray:
    """Dense covariance sigma_eps^2 I + F Sigma F^T of one subject's item scores."""
    if layout.total > MAX_FULL_V:
        raise ResourceError(f"refusing to build a {layout.total}x{layout.total} matrix")
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (layout.J, layout.J):
        raise ParameterError(f"sigma must be {layout.J}x{layout.J}")
    if sigma_eps_sq <= 0:
        raise ParameterError("sigma_eps_sq must be positive")
    F = incidence(layout)
    return sigma_eps_sq * np.eye(layout.total) + F @ sigma @ F.T

