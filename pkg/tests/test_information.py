import math

import numpy as np
import pytest

from growthdesign import (
    CovarianceSpec,
    DesignWeights,
    Family,
    GrowthCurve,
    ParameterError,
    core_info,
    d_efficiency,
    fisher_info,
    jacobian,
    log_det_criterion,
    solve_line_j3_rho0,
    solve_ratio_closed_form,
)
from growthdesign.information import DesignKernel

from oracles import dense_core, dense_logdet, gls_core, random_simplex

LINE = GrowthCurve(Family.STRAIGHT_LINE, (0.0, 1.0))
LOGISTIC = GrowthCurve(Family.LOGISTIC, (0.0, 1.0, 1.0, 0.0))
EXPO = GrowthCurve(Family.EXPONENTIAL, (0.0, 1.0, 1.0))


def line_design(w1, I):
    return DesignWeights(np.array([w1, 1 - 2 * w1, w1]), I)


class TestDesignWeights:
    def test_validation(self):
        with pytest.raises(ParameterError):
            DesignWeights([0.5, 0.6], 1.0)
        with pytest.raises(ParameterError):
            DesignWeights([1.2, -0.2], 1.0)
        with pytest.raises(ParameterError):
            DesignWeights([0.5, 0.5], 0.0)
        with pytest.raises(ParameterError):
            DesignWeights(np.full(65, 1 / 65), 1.0)

    def test_constructors(self):
        d = DesignWeights.from_counts([4, 3, 3])
        assert d.I == 10
        np.testing.assert_allclose(d.counts, [4, 3, 3])
        assert DesignWeights.uniform(4, 8) == DesignWeights([0.25] * 4, 8)
        assert DesignWeights.normalized([2, 2], 3).w.tolist() == [0.5, 0.5]
        with pytest.raises(ValueError):
            d.w[0] = 1.0


class TestCoreInfo:
    def test_no_random_effect(self):
        d = DesignWeights([0.2, 0.3, 0.5], 10)
        spec = CovarianceSpec("cs", 0.0, 0.4, 2.0)
        np.testing.assert_allclose(core_info(d, spec.sigma(3), 2.0), np.diag([1, 1.5, 2.5]))

    def test_zero_weight_rows_vanish(self):
        out = core_info(DesignWeights([1.0, 0.0], 5), np.ones((2, 2)), 1.0)
        assert out[0, 0] > 0
        assert out[0, 1] == out[1, 0] == out[1, 1] == 0.0

    def test_small_example_matches_dense(self):
        sigma = CovarianceSpec("cs", 1.0, 0.5).sigma(2)
        got = core_info(DesignWeights.from_counts([2, 1]), sigma, 1.0)
        np.testing.assert_allclose(got, dense_core([2, 1], sigma, 1.0), atol=1e-12)

    def test_random_instances_match_dense(self):
        rng = np.random.default_rng(11)
        for _ in range(150):
            J = int(rng.integers(1, 7))
            counts = rng.integers(0, 6, size=J)
            if counts.sum() == 0:
                counts[0] = 1
            spec = CovarianceSpec(rng.choice(["cs", "ar1"]), rng.uniform(0, 3),
                                  rng.uniform(0, 1), rng.uniform(0.2, 3))
            sigma = spec.sigma(J)
            got = core_info(DesignWeights.from_counts(counts), sigma, spec.sigma_eps_sq)
            np.testing.assert_allclose(got, dense_core(counts, sigma, spec.sigma_eps_sq),
                                       atol=1e-10, rtol=0)

    def test_sum_inverse_identity(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            m, J = rng.integers(1, 9, size=2)
            C = rng.normal(size=(m, J))
            lhs = np.linalg.inv(np.eye(m) + C @ C.T)
            rhs = np.eye(m) - C @ np.linalg.inv(np.eye(J) + C.T @ C) @ C.T
            np.testing.assert_allclose(lhs, rhs, atol=1e-10)

    def test_rejects_bad_error_variance(self):
        with pytest.raises(ParameterError):
            core_info(DesignWeights.uniform(2, 1), np.eye(2), 0.0)


class TestFisherInfo:
    def test_unstructured_covariance_representation(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            J = int(rng.integers(1, 7))
            w = rng.dirichlet(np.ones(J))
            I = rng.uniform(1, 50)
            spec = CovarianceSpec(rng.choice(["cs", "ar1"]), rng.uniform(0, 3),
                                  rng.uniform(0, 0.99), rng.uniform(0.5, 2))
            info = fisher_info(DesignWeights(w, I), GrowthCurve.unstructured(J), spec)
            expected = spec.sigma_eps_sq * np.diag(1 / (I * w)) + spec.sigma(J)
            np.testing.assert_allclose(np.linalg.inv(info.m), expected, rtol=1e-9, atol=1e-9)

    def test_singular_flag(self):
        info = fisher_info(DesignWeights([1, 0, 0], 10), LINE, CovarianceSpec("cs", 1, 0))
        assert info.singular and info.logdet == -math.inf
        assert log_det_criterion(DesignWeights([1, 0, 0], 10), LINE,
                                 CovarianceSpec("cs", 1, 0)) == -math.inf

    def test_logistic_against_dense_oracles(self):
        spec = CovarianceSpec("cs", 1.0, 0.5)
        A = jacobian(LOGISTIC, 7)
        sigma = spec.sigma(7)
        # integer counts: explicit F and V
        info = fisher_info(DesignWeights.uniform(7, 70), LOGISTIC, spec)
        assert not info.singular
        np.testing.assert_allclose(info.m, info.m.T, atol=1e-12)
        assert np.linalg.eigvalsh(info.m).min() > 0
        assert info.logdet == pytest.approx(dense_logdet([10] * 7, A, sigma, 1.0), abs=1e-8)
        # fractional counts (I = 100): fully supported GLS representation
        info = fisher_info(DesignWeights.uniform(7, 100), LOGISTIC, spec)
        ref = np.linalg.slogdet(A.T @ gls_core([100 / 7] * 7, sigma, 1.0) @ A)[1]
        assert info.logdet == pytest.approx(ref, abs=1e-8)


class TestCriterion:
    def test_uniform_maximizes_unstructured_cs(self):
        rng = np.random.default_rng(4)
        for J in (2, 3, 5):
            spec = CovarianceSpec("cs", rng.uniform(0.1, 3), rng.uniform(0, 1))
            model = GrowthCurve.unstructured(J)
            best = log_det_criterion(DesignWeights.uniform(J, 20), model, spec)
            draws = [log_det_criterion(DesignWeights(rng.dirichlet(np.ones(J)), 20), model, spec)
                     for _ in range(1000 // 3)]
            assert max(draws) <= best + 1e-12

    def test_line_cubic_design_beats_uniform(self):
        spec = CovarianceSpec("cs", 1.0, 0.0)
        w1 = solve_line_j3_rho0(10.0)
        assert (log_det_criterion(line_design(w1, 10.0), LINE, spec)
                > log_det_criterion(DesignWeights.uniform(3, 10.0), LINE, spec))

    def test_concavity(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            J = int(rng.integers(3, 8))
            spec = CovarianceSpec(rng.choice(["cs", "ar1"]), rng.uniform(0, 3), rng.uniform())
            model = EXPO if rng.random() < 0.5 else LINE
            I = rng.uniform(1, 100)
            d1, d2 = (random_simplex(rng, J, zeros=int(rng.integers(0, J - 3 + 1)))
                      for _ in range(2))
            c1, c2 = (log_det_criterion(DesignWeights(d, I), model, spec) for d in (d1, d2))
            for lam in (0.25, 0.5, 0.75):
                mix = DesignWeights.normalized(lam * d1 + (1 - lam) * d2, I)
                assert log_det_criterion(mix, model, spec) >= lam * c1 + (1 - lam) * c2 - 1e-9

    def test_cs_permutation_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            J = int(rng.integers(3, 8))
            spec = CovarianceSpec("cs", rng.uniform(0, 3), rng.uniform())
            w = rng.dirichlet(np.ones(J))
            perm = rng.permutation(J)
            A = jacobian(EXPO, J)
            k1 = DesignKernel(A, spec.sigma(J), 1.0, 30.0)
            k2 = DesignKernel(A[perm], spec.sigma(J), 1.0, 30.0)
            assert k1.logdet(w) == pytest.approx(k2.logdet(w[perm]), abs=1e-10)
            un = GrowthCurve.unstructured(J)
            assert (log_det_criterion(DesignWeights(w, 30), un, spec)
                    == pytest.approx(log_det_criterion(DesignWeights(w[perm], 30), un, spec),
                                     abs=1e-10))

    def test_ar1_time_reversal(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            J = int(rng.integers(2, 8))
            spec = CovarianceSpec("ar1", rng.uniform(0, 3), rng.uniform())
            w = rng.dirichlet(np.ones(J))
            for model in (GrowthCurve.unstructured(J), LINE):
                a = log_det_criterion(DesignWeights(w, 40), model, spec)
                b = log_det_criterion(DesignWeights(w[::-1], 40), model, spec)
                assert a == pytest.approx(b, abs=1e-10)


class TestEfficiency:
    def test_identity(self):
        d = DesignWeights.uniform(7, 100)
        spec = CovarianceSpec("ar1", 1.0, 0.3)
        assert d_efficiency(d, d, EXPO, spec) == 1.0

    def test_ratio_limit(self):
        ratio = GrowthCurve(Family.RATIO, (1.0,))
        spec = CovarianceSpec("cs", 1e6, 0.5)
        opt = solve_ratio_closed_form(1e6, 0.5)
        eff = d_efficiency(DesignWeights([0, 1], 1.0), opt, ratio, spec)
        assert eff == pytest.approx(0.75, abs=1e-3)

    def test_singular_reference_and_candidate(self):
        spec = CovarianceSpec("cs", 1.0, 0.0)
        sing = DesignWeights([1, 0, 0], 5)
        with pytest.raises(ParameterError):
            d_efficiency(DesignWeights.uniform(3, 5), sing, LINE, spec)
        assert d_efficiency(sing, DesignWeights.uniform(3, 5), LINE, spec) == 0.0

    def test_line_uniform_efficiency_increases_with_a(self):
        spec = CovarianceSpec("cs", 1.0, 0.0)
        effs = []
        for a in np.logspace(-2, 4, 25):
            opt = line_design(solve_line_j3_rho0(a), a)
            effs.append(d_efficiency(DesignWeights.uniform(3, a), opt, LINE, spec))
        assert np.all(np.diff(effs) > 0)
        assert effs[0] < 0.95 and effs[-1] > 0.99


class TestKernelDerivatives:
    def test_matches_criterion_and_finite_differences(self):
        rng = np.random.default_rng(9)
        h = 1e-6
        for _ in range(60):
            J = int(rng.integers(3, 8))
            spec = CovarianceSpec(rng.choice(["cs", "ar1"]), rng.uniform(0, 3),
                                  rng.uniform(), rng.uniform(0.5, 2))
            I = rng.uniform(1, 100)
            k = DesignKernel.for_problem(EXPO, spec, J, I)
            w = rng.dirichlet(np.ones(J)) + 0.05
            ev = k.evaluate(w, hessian=True)
            assert ev.logdet == pytest.approx(
                log_det_criterion(DesignWeights.normalized(w, I * w.sum()), EXPO, spec),
                abs=1e-9)
            E = np.eye(J)
            fd = np.array([(k.logdet(w + h * E[j]) - k.logdet(w - h * E[j])) / (2 * h)
                           for j in range(J)])
            np.testing.assert_allclose(ev.grad, fd, rtol=1e-5, atol=1e-6)
            fdh = np.array([(k.evaluate(w + h * E[j]).grad - k.evaluate(w - h * E[j]).grad)
                            / (2 * h) for j in range(J)])
            np.testing.assert_allclose(ev.hess, fdh, rtol=1e-4, atol=1e-5)
