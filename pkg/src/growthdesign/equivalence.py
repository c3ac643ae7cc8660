"""Equivalence-theorem certificates for approximate designs.

A design is locally D-optimal exactly when no time point has a sensitivity
``I * psi_j`` above the design-weighted mean of those sensitivities, with
equality on the support.  The excess of the largest sensitivity over the
mean is the directional derivative of log det M towards the best single-point
design (up to the factor ``sigma_eps_sq``), so by concavity it also bounds the
distance to the optimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covariance import CovarianceSpec
from .errors import CertificateError
from .information import DesignKernel, DesignWeights
from .model import GrowthCurve, TimeGrid, check_estimable, jacobian

DEFAULT_TOL = 1e-8
SUPPORT_THRESHOLD = 1e-10


@dataclass(frozen=True, eq=False)
class OptimalityCertificate:
    psi: np.ndarray
    avg: float
    gap: float
    optimal: bool
    eff_lower_bound: float
    tol: float = DEFAULT_TOL
    support_violations: tuple[int, ...] = field(default=())
    sigma_eps_sq: float = 1.0
    I: float = 1.0

    @property
    def sensitivity(self) -> np.ndarray:
        """The vector I * psi_j compared against ``avg``."""
        return self.I * self.psi

    def to_dict(self) -> dict:
        return {
            "psi": [float(x) for x in self.psi],
            "avg": float(self.avg),
            "gap": float(self.gap),
            "optimal": bool(self.optimal),
            "eff_lower_bound": float(self.eff_lower_bound),
            "tol": float(self.tol),
            "support_violations": list(self.support_violations),
            "sigma_eps_sq": float(self.sigma_eps_sq),
            "I": float(self.I),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OptimalityCertificate":
        return cls(
            psi=np.asarray(d["psi"], dtype=float),
            avg=float(d["avg"]),
            gap=float(d["gap"]),
            optimal=bool(d["optimal"]),
            eff_lower_bound=float(d["eff_lower_bound"]),
            tol=float(d["tol"]),
            support_violations=tuple(int(j) for j in d["support_violations"]),
            sigma_eps_sq=float(d["sigma_eps_sq"]),
            I=float(d["I"]),
        )

    def __eq__(self, other):
        if not isinstance(other, OptimalityCertificate):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def _kernel(design: DesignWeights, model: GrowthCurve, spec: CovarianceSpec) -> DesignKernel:
    return DesignKernel.for_problem(model, spec, design.J, design.I)


def psi_vector(design: DesignWeights, model: GrowthCurve, spec: CovarianceSpec) -> np.ndarray:
    """Diagonal of (s2 I + Sigma M0)^{-1} A M^{-1} A^T (s2 I + M0 Sigma)^{-1}."""
    A = jacobian(model, TimeGrid(design.J))
    if not check_estimable(A, design.w):
        raise CertificateError("parameters are not estimable under this design")
    ev = _kernel(design, model, spec).evaluate(design.w)
    if ev.singular:
        raise CertificateError("information matrix is numerically singular")
    return ev.psi


def certificate_from_psi(w: np.ndarray, psi: np.ndarray, I: float, p: int,
                         sigma_eps_sq: float, tol: float = DEFAULT_TOL) -> OptimalityCertificate:
    """Assemble a certificate from precomputed sensitivities (used by the solver)."""
    sens = I * psi
    avg = float(w @ sens)
    gap = float(sens.max() - avg)
    support = w > SUPPORT_THRESHOLD
    violations = tuple(int(j) for j in np.flatnonzero(support & (np.abs(sens - avg) > tol)))
    optimal = gap <= tol and not violations
    cert = OptimalityCertificate(
        psi=np.array(psi, dtype=float), avg=avg, gap=gap, optimal=optimal,
        eff_lower_bound=1.0, tol=tol, support_violations=violations,
        sigma_eps_sq=sigma_eps_sq, I=I)
    object.__setattr__(cert, "eff_lower_bound", efficiency_lower_bound(cert, p))
    return cert


def check_optimality(design: DesignWeights, model: GrowthCurve, spec: CovarianceSpec,
                     tol: float = DEFAULT_TOL) -> OptimalityCertificate:
    psi = psi_vector(design, model, spec)
    return certificate_from_psi(design.w, psi, design.I, model.p, spec.sigma_eps_sq, tol)


def efficiency_lower_bound(cert: OptimalityCertificate, p: int) -> float:
    """Guaranteed lower bound exp(-s2 * gap / p) on the D-efficiency of the design."""
    gap = max(cert.gap, 0.0)
    return float(np.exp(-cert.sigma_eps_sq * gap / p))
