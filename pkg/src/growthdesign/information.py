"""Per-subject Fisher information, the D-criterion and D-efficiency.

The core quantity is F^T V^{-1} F, written in the regularised form

    M0^{1/2} (s2 I + M0^{1/2} Sigma M0^{1/2})^{-1} M0^{1/2},   M0 = diag(I w)

which stays finite when some time points receive no items.  Information
matrices are standardised per subject, so the number of subjects never
appears.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import CovarianceSpec
from .errors import ParameterError
from .model import GrowthCurve, TimeGrid, check_estimable, jacobian

MAX_J = 64
SUM_TOL = 1e-12
# log(1e-300); determinants at or below this count as singular
LOGDET_FLOOR = -690.7755278982137


@dataclass(frozen=True, eq=False)
class DesignWeights:
    """Approximate design: weights ``w`` on the J time points and item budget ``I``.

    Item counts are ``I * w`` and need not be integers.
    """

    w: np.ndarray
    I: float

    def __post_init__(self):
        w = np.array(self.w, dtype=float).ravel()
        if w.size == 0 or w.size > MAX_J:
            raise ParameterError(f"design must have between 1 and {MAX_J} weights")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ParameterError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > SUM_TOL * max(1, w.size):
            raise ParameterError(f"weights must sum to 1, got {w.sum()!r}")
        if not (np.isfinite(self.I) and self.I > 0):
            raise ParameterError("item budget I must be positive")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "I", float(self.I))

    @classmethod
    def normalized(cls, w, I: float) -> "DesignWeights":
        """Build from any nonnegative vector by rescaling it to sum 1."""
        w = np.asarray(w, dtype=float)
        total = w.sum()
        if not total > 0:
            raise ParameterError("weights must have positive total")
        return cls(w / total, I)

    @classmethod
    def uniform(cls, J: int, I: float) -> "DesignWeights":
        return cls(np.full(J, 1.0 / J), I)

    @classmethod
    def from_counts(cls, counts) -> "DesignWeights":
        counts = np.asarray(counts, dtype=float)
        return cls.normalized(counts, counts.sum())

    @property
    def J(self) -> int:
        return self.w.size

    @property
    def counts(self) -> np.ndarray:
        return self.I * self.w

    def __eq__(self, other):
        if not isinstance(other, DesignWeights):
            return NotImplemented
        return self.I == other.I and np.array_equal(self.w, other.w)

    def __hash__(self):
        return hash((self.I, self.w.tobytes()))


@dataclass(frozen=True, eq=False)
class InfoMatrix:
    m: np.ndarray
    logdet: float
    singular: bool


def core_info(design: DesignWeights, sigma: np.ndarray, sigma_eps_sq: float) -> np.ndarray:
    """F^T V^{-1} F for a (possibly fractional) allocation, via the regularised form."""
    if not sigma_eps_sq > 0:
        raise ParameterError("sigma_eps_sq must be positive")
    sigma = np.asarray(sigma, dtype=float)
    J = design.J
    if sigma.shape != (J, J):
        raise ParameterError(f"sigma must be {J}x{J}")
    root = np.sqrt(design.counts)
    reg = sigma_eps_sq * np.eye(J) + root[:, None] * sigma * root[None, :]
    core = root[:, None] * np.linalg.solve(reg, np.diag(root))
    return 0.5 * (core + core.T)


def fisher_info(design: DesignWeights, model: GrowthCurve,
                spec: CovarianceSpec) -> InfoMatrix:
    """Standardised information A^T (F^T V^{-1} F) A of the growth-curve parameters."""
    grid = TimeGrid(design.J)
    A = jacobian(model, grid)
    core = core_info(design, spec.sigma(grid.J), spec.sigma_eps_sq)
    m = A.T @ core @ A
    m = 0.5 * (m + m.T)
    if not check_estimable(A, design.w):
        return InfoMatrix(m, -np.inf, True)
    sign, logdet = np.linalg.slogdet(m)
    if sign <= 0 or logdet <= LOGDET_FLOOR:
        return InfoMatrix(m, -np.inf, True)
    return InfoMatrix(m, float(logdet), False)


def log_det_criterion(design: DesignWeights, model: GrowthCurve,
                      spec: CovarianceSpec) -> float:
    """log det of the information matrix; ``-inf`` for singular designs."""
    return fisher_info(design, model, spec).logdet


def d_efficiency(candidate: DesignWeights, reference: DesignWeights,
                 model: GrowthCurve, spec: CovarianceSpec) -> float:
    """(det M(candidate) / det M(reference)) ** (1/p)."""
    ref = fisher_info(reference, model, spec)
    if ref.singular:
        raise ParameterError("reference design has a singular information matrix")
    cand = fisher_info(candidate, model, spec)
    if cand.singular:
        return 0.0
    return float(np.exp((cand.logdet - ref.logdet) / model.p))


@dataclass
class Evaluation:
    """Criterion value and derivatives of one design, in weight coordinates."""

    w: np.ndarray
    logdet: float
    psi: np.ndarray | None = None
    grad: np.ndarray | None = None
    hess: np.ndarray | None = None

    @property
    def singular(self) -> bool:
        return not np.isfinite(self.logdet)


class DesignKernel:
    """Repeated criterion evaluations for one fixed (Jacobian, covariance, I).

    The gradient of log det M with respect to item count I_j is
    ``sigma_eps_sq * psi_j``, with psi_j the diagonal of

        (s2 I + Sigma M0)^{-1} A M^{-1} A^T (s2 I + M0 Sigma)^{-1}.

    Writing B = (s2 I + Sigma M0)^{-1} A, Q = B M^{-1} B^T and
    S = (s2 I + Sigma M0)^{-1} Sigma (symmetric), the Hessian in counts is
    ``s2 * (-2 S * Q - s2 Q * Q)`` (elementwise products).  Weight
    coordinates pick up factors I and I**2.
    """

    def __init__(self, A: np.ndarray, sigma: np.ndarray, sigma_eps_sq: float, I: float):
        self.A = np.asarray(A, dtype=float)
        self.sigma = np.asarray(sigma, dtype=float)
        self.s2 = float(sigma_eps_sq)
        self.I = float(I)
        self.J, self.p = self.A.shape
        if self.J > MAX_J:
            raise ParameterError(f"J={self.J} exceeds the supported maximum {MAX_J}")
        self._rhs = np.hstack([self.A, self.sigma])
        self._eye = self.s2 * np.eye(self.J)

    @classmethod
    def for_problem(cls, model: GrowthCurve, spec: CovarianceSpec, J: int, I: float):
        grid = TimeGrid(J)
        return cls(jacobian(model, grid), spec.sigma(J), spec.sigma_eps_sq, I)

    def logdet(self, w: np.ndarray) -> float:
        m0 = self.I * w
        B = np.linalg.solve(self._eye + self.sigma * m0, self.A)
        M = self.A.T @ (m0[:, None] * B)
        sign, ld = np.linalg.slogdet(0.5 * (M + M.T))
        if sign <= 0 or ld <= LOGDET_FLOOR:
            return -np.inf
        return float(ld)

    def evaluate(self, w: np.ndarray, hessian: bool = False) -> Evaluation:
        w = np.asarray(w, dtype=float)
        m0 = self.I * w
        X = np.linalg.solve(self._eye + self.sigma * m0, self._rhs)
        B = X[:, :self.p]
        M = self.A.T @ (m0[:, None] * B)
        M = 0.5 * (M + M.T)
        try:
            L = np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            return Evaluation(w, -np.inf)
        ld = 2.0 * float(np.sum(np.log(np.diag(L))))
        if not ld > LOGDET_FLOOR:
            return Evaluation(w, -np.inf)
        # C = L^{-1} B^T, so Q = C^T C
        C = np.linalg.solve(L, B.T)
        Q = C.T @ C
        psi = np.diag(Q).copy()
        grad = self.I * self.s2 * psi
        hess = None
        if hessian:
            S = X[:, self.p:]
            S = 0.5 * (S + S.T)
            hess = (self.I ** 2) * self.s2 * (-2.0 * S * Q - self.s2 * Q * Q)
        return Evaluation(w, ld, psi, grad, hess)
