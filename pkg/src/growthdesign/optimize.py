"""Locally D-optimal approximate designs: numerical solver, closed forms, oracles.

The numerical solver maximises the concave criterion log det M(w) over the
probability simplex.  Each start runs a short vertex-direction phase (move
towards the time point with the largest sensitivity, golden-section line
search) and then polishes on the current support with Newton-scaled projected
steps.  Support points are dropped when a step reaches the boundary and
re-entered through vertex steps whenever the equivalence check says so.
"""

from __future__ import annotations

import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .covariance import CovarianceSpec, CovKind, ExactDesignLayout
from .equivalence import (
    SUPPORT_THRESHOLD,
    OptimalityCertificate,
    certificate_from_psi,
)
from .errors import InfeasibleError, ParameterError, ResourceError
from .information import DesignKernel, DesignWeights
from .model import Family, GrowthCurve, TimeGrid, jacobian

log = logging.getLogger(__name__)

GOLDEN_ITERS = 40
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
ORACLE_BUDGET = 20_000_000
CUBIC_TOL = 1e-12
LINE_THRESHOLD = 2.0 * (math.sqrt(2.0) - 1.0)


@dataclass(frozen=True)
class DesignProblem:
    grid: TimeGrid
    model: GrowthCurve
    spec: CovarianceSpec
    I: float

    def __post_init__(self):
        if isinstance(self.grid, int):
            object.__setattr__(self, "grid", TimeGrid(self.grid))
        if not self.I > 0:
            raise ParameterError("item budget I must be positive")
        # raises on family/grid mismatch
        jacobian(self.model, self.grid)

    @property
    def J(self) -> int:
        return self.grid.J

    @property
    def p(self) -> int:
        return self.model.p

    @property
    def a(self) -> float:
        """Standardised variance ratio I * sigma_gamma^2 / sigma_eps^2."""
        return self.I * self.spec.tau_sq

    def kernel(self) -> DesignKernel:
        return DesignKernel.for_problem(self.model, self.spec, self.J, self.I)


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 500
    gap_tol: float = 1e-9
    restarts: int = 8
    seed: int = 0
    vertex_steps: int = 10

    def __post_init__(self):
        if not self.gap_tol > 0:
            raise ParameterError("gap_tol must be positive")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be at least 1")
        if self.restarts < 0 or self.vertex_steps < 0:
            raise ParameterError("restarts and vertex_steps must be nonnegative")


class Solution(NamedTuple):
    weights: DesignWeights
    certificate: OptimalityCertificate


@dataclass
class _Run:
    w: np.ndarray
    logdet: float
    iterations: int = 0
    history: list = field(default_factory=list)


def golden_section(f, lo: float = 0.0, hi: float = 1.0, iters: int = GOLDEN_ITERS):
    """Maximise a unimodal ``f`` on [lo, hi]; returns (argmax, value).

    The endpoints are compared too, so a monotone ``f`` returns its boundary.
    """
    x1 = hi - INV_PHI * (hi - lo)
    x2 = lo + INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = f(x1)
    best = (x1, f1) if f1 >= f2 else (x2, f2)
    for x in (lo, hi):
        fx = f(x)
        if fx > best[1]:
            best = (x, fx)
    return best


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w >= 0, sum w = 1}."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    k = np.count_nonzero(u - css / ind > 0)
    theta = css[k - 1] / k
    return np.maximum(v - theta, 0.0)


def _gap(ev, w, s2):
    # largest sensitivity excess I*psi_j - sum_l w_l I*psi_l
    d = ev.grad / s2
    return float(d.max() - w @ d), d


def _noise(f):
    # attainable accuracy of log det for ill-conditioned information matrices
    return 1e-11 * max(1.0, abs(f))


def _vertex_step(kernel: DesignKernel, w: np.ndarray, k: int, f0: float):
    target = np.zeros_like(w)
    target[k] = 1.0
    lam, val = golden_section(lambda t: kernel.logdet((1.0 - t) * w + t * target))
    if not val > f0:
        return w, f0
    w = (1.0 - lam) * w + lam * target
    w[w < 0] = 0.0
    return w / w.sum(), val


def _newton_direction(g, H, support):
    S = np.flatnonzero(support)
    k = S.size
    if k < 2:
        return None
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = H[np.ix_(S, S)]
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.concatenate([-g[S], [0.0]])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        return None
    d = np.zeros_like(g)
    d[S] = sol[:k]
    if not np.all(np.isfinite(d)):
        return None
    return d


def _ascend(kernel: DesignKernel, w0: np.ndarray, opts: SolverOptions) -> _Run:
    s2 = kernel.s2
    w = np.array(w0, dtype=float)
    ev = kernel.evaluate(w)
    if ev.singular:
        raise InfeasibleError("starting design is not estimable")
    f = ev.logdet
    run = _Run(w, f)

    for _ in range(opts.vertex_steps):
        gap, d = _gap(ev, w, s2)
        if gap <= 0.5:
            break
        w, f = _vertex_step(kernel, w, int(np.argmax(d)), f)
        ev = kernel.evaluate(w)

    target = 1e-3 * opts.gap_tol
    best_gap, since_best = np.inf, 0
    best_w, best_f, f_max = w, f, f
    for it in range(opts.max_iters):
        run.iterations = it + 1
        ev = kernel.evaluate(w, hessian=True)
        f = ev.logdet
        gap, d = _gap(ev, w, s2)
        support = w > 0
        spread = d[support].max() - d[support].min()
        run.history.append(gap)
        if gap <= target and spread <= target:
            break
        f_max = max(f_max, f)
        if gap < best_gap and f >= f_max - _noise(f_max):
            since_best = 0 if gap < 0.999 * best_gap else since_best + 1
            best_gap, best_w, best_f = gap, w, f
        else:
            since_best += 1
        if since_best > 25:
            break
        H = ev.hess
        # steps sum to zero, so centring g only removes cancellation error
        g = ev.grad - w @ ev.grad

        outside = np.where(support, -np.inf, d)
        pull = float(outside.max() - w @ d)
        adding = pull > max(target, spread)
        if adding:
            # an outside point pulls harder than the support is unbalanced:
            # bring it in with a Newton step along its vertex direction
            k = int(np.argmax(outside))
            step = -w.copy()
            step[k] += 1.0
            slope, curv = float(g @ step), float(step @ H @ step)
            if not slope > 0:
                break
            step *= min(1.0, slope / -curv) if curv < 0 else 1.0
            newton = True
        else:
            step = _newton_direction(g, H, support)
            newton = step is not None and float(-step @ H @ step) > 0
            if not newton:
                scale = 1.0 / max(np.max(np.abs(np.diag(H))), 1e-12)
                step = project_simplex(w + scale * g) - w
        dec = float(-step @ H @ step) if newton and not adding else float(g @ step)
        if not dec > 0:
            break

        neg = step < 0
        ratio = np.full_like(w, np.inf)
        ratio[neg] = -w[neg] / step[neg]
        alpha_max = float(ratio.min())
        alpha = min(1.0, alpha_max)
        # below this the predicted gain is lost in the rounding of f itself
        flat = newton and dec < 1e3 * _noise(f)
        while True:
            trial = w + alpha * step
            if alpha == alpha_max:
                trial[ratio <= alpha_max * (1 + 1e-12)] = 0.0
            trial[trial < 0] = 0.0
            trial /= trial.sum()
            ft = kernel.logdet(trial)
            if flat:
                if ft >= f - _noise(f):
                    break
            elif ft >= f + 1e-4 * alpha * dec:
                break
            alpha *= 0.5
            if alpha < 1e-12:
                break
        if not ft >= f - _noise(f):
            break
        w, f = trial, ft
    else:
        ev = kernel.evaluate(w)
        gap, _ = _gap(ev, w, s2)
    if best_gap < gap and best_f >= f - _noise(f):
        w, f = best_w, best_f
    run.w, run.logdet = w, f
    return run


def _finalize(kernel: DesignKernel, w: np.ndarray, problem: DesignProblem, tol: float):
    w = np.where(w < SUPPORT_THRESHOLD, 0.0, w)
    w = w / w.sum()
    ev = kernel.evaluate(w)
    if ev.singular:
        raise InfeasibleError("solver ended at a singular design")
    cert = certificate_from_psi(w, ev.psi, problem.I, problem.p, kernel.s2, tol)
    return DesignWeights(w, problem.I), cert, ev.logdet


def _starts(problem: DesignProblem, opts: SolverOptions):
    J = problem.J
    yield np.full(J, 1.0 / J)
    rng = np.random.default_rng(opts.seed)
    for _ in range(opts.restarts):
        yield rng.dirichlet(np.ones(J))


def solve_numeric(problem: DesignProblem, opts: SolverOptions | None = None) -> Solution:
    """Locally D-optimal approximate design with its equivalence certificate.

    The uniform design is tried first, then up to ``opts.restarts`` Dirichlet
    starts; the best criterion value wins.  By concavity a certified start is
    the global optimum, so the remaining starts are skipped once one passes.
    When the iteration budget runs out first, the certificate reports
    ``optimal=False``.
    """
    opts = opts or SolverOptions()
    A = jacobian(problem.model, problem.grid)
    if np.linalg.matrix_rank(A) < problem.p:
        raise InfeasibleError("Jacobian is rank deficient; no design is estimable")
    kernel = problem.kernel()
    best = None
    for w0 in _starts(problem, opts):
        run = _ascend(kernel, w0, opts)
        if best is None or run.logdet > best.logdet:
            best = run
            weights, cert, _ = _finalize(kernel, best.w, problem, opts.gap_tol)
            if cert.optimal:
                break
    if not cert.optimal:
        log.warning("solver stopped with gap %.3g above tolerance %.3g", cert.gap, opts.gap_tol)
    return Solution(weights, cert)


# --- closed forms ----------------------------------------------------------------


def solve_ratio_closed_form(a: float, rho: float, I: float = 1.0) -> DesignWeights:
    """Optimal two-point design for the ratio model mu = beta_1 t on t in {0, 1}."""
    if a < 0 or not 0.0 <= rho <= 1.0:
        raise ParameterError("need a >= 0 and rho in [0, 1]")
    if a * rho > 1.0:
        w2 = (a + 1.0) / (a + a * rho)
        return DesignWeights(np.array([1.0 - w2, w2]), I)
    return DesignWeights(np.array([0.0, 1.0]), I)


def _bisect(f, lo, hi, tol=CUBIC_TOL):
    flo = f(lo)
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _check_single_root(coeffs, what):
    roots = np.roots(coeffs)
    real = roots[np.abs(roots.imag) < 1e-9].real
    inside = real[(real > 0) & (real <= 0.5 + 1e-12)]
    if inside.size > 1 and np.ptp(inside) > 1e-8:
        warnings.warn(f"{what}: {inside.size} roots in (0, 1/2]: {np.sort(inside)}",
                      RuntimeWarning, stacklevel=3)


def line_j3_rho0_cubic(w: float, a: float) -> float:
    return 18 * a * a * w ** 3 - (20 * a * a + 18 * a) * w ** 2 + 5 * (a * a + a) * w + a + 1


def solve_line_j3_rho0(a: float) -> float:
    """Optimal outer weight w1 = w3 for the straight line on J = 3, rho = 0."""
    if a < 0:
        raise ParameterError("a must be nonnegative")
    if a <= LINE_THRESHOLD:
        return 0.5
    f = lambda w: line_j3_rho0_cubic(w, a)  # noqa: E731
    lo, hi = 1e-9, 0.5
    if (f(lo) > 0) == (f(hi) > 0):
        return 0.5
    _check_single_root([18 * a * a, -(20 * a * a + 18 * a), 5 * (a * a + a), a + 1],
                       "straight-line cubic")
    return _bisect(f, lo, hi)


def line_j3_ar1_cubic(w: float, a: float, rho: float) -> float:
    a2 = a * a
    return ((a2 * w * (1 - w) + a + 1) * (1 - 3 * w)
            - a2 * rho ** 2 * w * (1 - 2 * w) ** 2 + a2 * rho ** 4 * w ** 3)


def solve_line_j3_ar1(a: float, rho: float) -> float:
    """Optimal outer weight for J = p = 3 under AR(1) (symmetric design w, 1-2w, w)."""
    if a < 0 or not 0.0 <= rho <= 1.0:
        raise ParameterError("need a >= 0 and rho in [0, 1]")
    f = lambda w: line_j3_ar1_cubic(w, a, rho)  # noqa: E731
    lo, hi = 1e-9, 0.5
    if (f(lo) > 0) == (f(hi) > 0):
        return 1.0 / 3.0
    a2, r2, r4 = a * a, rho ** 2, rho ** 4
    # expanded coefficients of the cubic in w, highest power first
    coeffs = [3 * a2 - 4 * a2 * r2 + a2 * r4,
              -4 * a2 + 4 * a2 * r2,
              a2 - 3 * (a + 1) - a2 * r2,
              a + 1]
    _check_single_root(coeffs, "AR(1) cubic")
    return _bisect(f, lo, hi)


def closed_form_design(problem: DesignProblem) -> DesignWeights | None:
    """Analytic optimum when one is known for this problem, else None."""
    fam, J, p, a, rho = problem.model.family, problem.J, problem.p, problem.a, problem.spec.rho
    if fam is Family.RATIO and J == 2:
        return solve_ratio_closed_form(a, rho, problem.I)
    if fam is Family.STRAIGHT_LINE and J == 3 and (rho == 0.0 or a == 0.0):
        w1 = solve_line_j3_rho0(a)
        return DesignWeights(np.array([w1, 1.0 - 2.0 * w1, w1]), problem.I)
    if J == p and (problem.spec.kind is CovKind.CS or a == 0.0):
        return DesignWeights.uniform(J, problem.I)
    if J == p == 3 and problem.spec.kind is CovKind.AR1:
        w1 = solve_line_j3_ar1(a, rho)
        return DesignWeights(np.array([w1, 1.0 - 2.0 * w1, w1]), problem.I)
    return None


# --- brute force ----------------------------------------------------------------


def _lattice(J: int, n: int, max_support: int):
    """All weight vectors with entries in {0, 1/n, ..., 1} and at most max_support nonzeros."""
    blocks = []
    for k in range(1, min(J, max_support) + 1):
        if k > n:
            break
        cuts = np.array(list(itertools.combinations(range(1, n), k - 1)), dtype=int)
        if cuts.size == 0:
            parts = np.full((1, 1), n)
        else:
            edges = np.hstack([np.zeros((len(cuts), 1), int), cuts, np.full((len(cuts), 1), n)])
            parts = np.diff(edges, axis=1)
        for S in itertools.combinations(range(J), k):
            block = np.zeros((parts.shape[0], J))
            block[:, S] = parts
            blocks.append(block)
    return np.vstack(blocks) / n


def _lattice_size(J: int, n: int, max_support: int) -> int:
    return sum(math.comb(J, k) * math.comb(n - 1, k - 1)
               for k in range(1, min(J, max_support, n) + 1))


def batch_logdet(kernel: DesignKernel, W: np.ndarray, chunk: int = 50_000) -> np.ndarray:
    """Criterion for many designs at once (rows of W); singular rows give -inf."""
    out = np.empty(W.shape[0])
    J = kernel.J
    eye = kernel.s2 * np.eye(J)
    for start in range(0, W.shape[0], chunk):
        m0 = kernel.I * W[start:start + chunk]
        K = eye[None] + kernel.sigma[None] * m0[:, None, :]
        B = np.linalg.solve(K, np.broadcast_to(kernel.A, (m0.shape[0],) + kernel.A.shape))
        M = np.einsum("jk,nj,njl->nkl", kernel.A, m0, B)
        M = 0.5 * (M + np.swapaxes(M, 1, 2))
        sign, ld = np.linalg.slogdet(M)
        ld = np.where((sign > 0) & (ld > -690.7755278982137), ld, -np.inf)
        out[start:start + chunk] = ld
    return out


def brute_force_oracle(problem: DesignProblem, step: float = 0.01,
                       max_support: int | None = None) -> DesignWeights:
    """Exhaustive argmax of the criterion over the simplex lattice with spacing ``step``."""
    if problem.J > 7:
        raise ResourceError("brute force is limited to J <= 7")
    n = int(round(1.0 / step))
    if n < 1 or abs(n * step - 1.0) > 1e-9:
        raise ParameterError("step must divide 1")
    max_support = problem.J if max_support is None else int(max_support)
    if _lattice_size(problem.J, n, max_support) > ORACLE_BUDGET:
        raise ResourceError("lattice too large for exhaustive search")
    W = _lattice(problem.J, n, max_support)
    vals = batch_logdet(problem.kernel(), W)
    best = int(np.argmax(vals))
    if not np.isfinite(vals[best]):
        raise InfeasibleError("no estimable design on the lattice")
    return DesignWeights(W[best], problem.I)


# --- rounding --------------------------------------------------------------------


def balanced_split(I: int, J: int) -> tuple[int, ...]:
    base, extra = divmod(I, J)
    return tuple(base + 1 if j < extra else base for j in range(J))


def _is_uniform(w: np.ndarray) -> bool:
    return bool(np.allclose(w, 1.0 / w.size, atol=1e-8, rtol=0))


def round_exact(w: DesignWeights, I: int, problem: DesignProblem) -> ExactDesignLayout:
    """Integer allocation of ``I`` items close to the approximate design ``w``."""
    if int(I) != I:
        raise ParameterError("I must be an integer")
    I = int(I)
    weights = np.asarray(w.w, dtype=float)
    support = weights > SUPPORT_THRESHOLD
    if I < support.sum():
        raise InfeasibleError(f"I={I} items cannot cover {support.sum()} support points")
    J = weights.size
    if (problem.J == problem.p and problem.spec.kind is CovKind.CS
            and _is_uniform(weights)):
        return ExactDesignLayout(balanced_split(I, J))

    target = I * weights
    counts = np.where(support, np.maximum(1, np.floor(target)), 0).astype(int)
    while counts.sum() > I:
        cand = np.flatnonzero(counts > 1)
        j = cand[np.argmin((target - counts)[cand])]
        counts[j] -= 1
    while counts.sum() < I:
        cand = np.flatnonzero(support)
        j = cand[np.argmax((target - counts)[cand])]
        counts[j] += 1

    kernel = DesignKernel.for_problem(problem.model, problem.spec, J, I)
    current = kernel.logdet(counts / I)
    while True:
        best_gain, best_move = 0.0, None
        for src in np.flatnonzero(counts > 0):
            for dst in range(J):
                if dst == src:
                    continue
                trial = counts.copy()
                trial[src] -= 1
                trial[dst] += 1
                val = kernel.logdet(trial / I)
                if val - current > best_gain + 1e-13:
                    best_gain, best_move = val - current, trial
        if best_move is None:
            break
        counts, current = best_move, current + best_gain
    return ExactDesignLayout(tuple(int(c) for c in counts))


def exact_logdet(layout: ExactDesignLayout, problem: DesignProblem) -> float:
    kernel = DesignKernel.for_problem(problem.model, problem.spec, layout.J, layout.total)
    return kernel.logdet(np.asarray(layout.counts, dtype=float) / layout.total)
