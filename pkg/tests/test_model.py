import math

import numpy as np
import pytest

from growthdesign import (
    Family,
    GrowthCurve,
    InvalidModelError,
    TimeGrid,
    check_estimable,
    jacobian,
    mean_curve,
)

FD_STEP = 1e-6


def random_model(rng, family):
    b0 = rng.uniform(-2, 2)
    b1 = b0 + rng.uniform(0.1, 10)
    b2 = rng.uniform(0.1, 5)
    b3 = rng.uniform(-3, 3)
    if family is Family.RATIO:
        return GrowthCurve(family, (rng.uniform(-5, 5),))
    if family is Family.STRAIGHT_LINE:
        return GrowthCurve(family, (b0, rng.uniform(-5, 5)))
    if family is Family.EXPONENTIAL:
        return GrowthCurve(family, (b0, b1, b2))
    if family is Family.LOGISTIC:
        return GrowthCurve(family, (b0, b1, b2, b3))
    raise ValueError(family)


def central_difference(model, J):
    beta = np.array(model.beta, dtype=float)
    cols = []
    for k in range(beta.size):
        up, dn = beta.copy(), beta.copy()
        up[k] += FD_STEP
        dn[k] -= FD_STEP
        cols.append((mean_curve(GrowthCurve(model.family, up), J)
                     - mean_curve(GrowthCurve(model.family, dn), J)) / (2 * FD_STEP))
    return np.column_stack(cols)


def test_time_grid():
    grid = TimeGrid(5)
    assert list(grid.times) == [0, 1, 2, 3, 4]
    with pytest.raises(ValueError):
        TimeGrid(0)


def test_exponential_values():
    m = GrowthCurve(Family.EXPONENTIAL, (0, 1, 1))
    mu = mean_curve(m, 4)
    assert mu[0] == 0.0
    # 1 - e^-3 from mpmath-grade reference
    assert mu[3] == pytest.approx(0.950212931632136, abs=1e-12)
    assert np.all(np.diff(mu) > 0)


def test_logistic_midpoint():
    m = GrowthCurve(Family.LOGISTIC, (0, 1, 1, 0))
    assert mean_curve(m, 4)[0] == pytest.approx(0.5)


def test_simple_families():
    assert np.array_equal(mean_curve(GrowthCurve(Family.RATIO, (2.0,)), 3), [0, 2, 4])
    line = GrowthCurve(Family.STRAIGHT_LINE, (1.0, 2.0))
    assert np.array_equal(mean_curve(line, 3), [1, 3, 5])
    assert np.array_equal(jacobian(line, 3), [[1, 0], [1, 1], [1, 2]])
    assert np.array_equal(jacobian(GrowthCurve(Family.RATIO, (2.0,)), 3), [[0], [1], [2]])
    un = GrowthCurve.unstructured(4, [1, 2, 3, 4])
    assert np.array_equal(mean_curve(un, 4), [1, 2, 3, 4])
    assert np.array_equal(jacobian(un, 4), np.eye(4))


def test_exponential_jacobian_at_origin():
    A = jacobian(GrowthCurve(Family.EXPONENTIAL, (0, 1, 1)), 3)
    assert np.array_equal(A[0], [1.0, 0.0, 0.0])


@pytest.mark.parametrize("bad", [
    (Family.EXPONENTIAL, (1, 0, 1)),
    (Family.EXPONENTIAL, (0, 1, -1)),
    (Family.LOGISTIC, (0, 1, 0, 0)),
    (Family.LOGISTIC, (0, 1, 1)),
    (Family.STRAIGHT_LINE, (0,)),
    (Family.RATIO, (1, 2)),
])
def test_invalid_models(bad):
    with pytest.raises(InvalidModelError):
        GrowthCurve(*bad)


def test_p_larger_than_J_rejected():
    with pytest.raises(InvalidModelError):
        jacobian(GrowthCurve(Family.LOGISTIC, (0, 1, 1, 0)), 3)
    with pytest.raises(InvalidModelError):
        jacobian(GrowthCurve.unstructured(3), 4)


def test_family_parse_aliases():
    assert Family.parse("line") is Family.STRAIGHT_LINE
    assert Family.parse("Exponential") is Family.EXPONENTIAL
    with pytest.raises(InvalidModelError):
        Family.parse("spline")


@pytest.mark.parametrize("family", [Family.RATIO, Family.STRAIGHT_LINE,
                                    Family.EXPONENTIAL, Family.LOGISTIC])
def test_jacobian_matches_finite_differences(family):
    rng = np.random.default_rng(list(Family).index(family))
    for _ in range(250):
        m = random_model(rng, family)
        J = int(rng.integers(max(m.p, 1), 10))
        A = jacobian(m, J)
        fd = central_difference(m, J)
        scale = np.maximum(np.abs(A), 1.0)
        assert np.max(np.abs(A - fd) / scale) < 1e-6


def test_jacobian_depends_on_difference_only():
    rng = np.random.default_rng(3)
    for _ in range(50):
        for fam in (Family.EXPONENTIAL, Family.LOGISTIC):
            m = random_model(rng, fam)
            c = rng.uniform(-5, 5)
            shifted = GrowthCurve(fam, (m.beta[0] + c, m.beta[1] + c) + tuple(m.beta[2:]))
            a1, a2 = jacobian(m, 7), jacobian(shifted, 7)
            np.testing.assert_allclose(a1, a2, rtol=1e-12, atol=1e-14)


def test_estimability():
    assert check_estimable(np.eye(3), [1 / 3] * 3)
    line = jacobian(GrowthCurve(Family.STRAIGHT_LINE, (0, 1)), 3)
    assert not check_estimable(line, [1, 0, 0])
    assert check_estimable(line, [0.5, 0, 0.5])
    expo = jacobian(GrowthCurve(Family.EXPONENTIAL, (0, 1, 1)), 7)
    assert check_estimable(expo, [0.3, 0, 0, 0.3, 0, 0, 0.4])
    assert not check_estimable(expo, [0.5, 0, 0, 0, 0, 0, 0.5])
    assert not check_estimable(np.full((3, 2), np.nan), [1 / 3] * 3)


def test_models_are_immutable():
    m = GrowthCurve(Family.STRAIGHT_LINE, (0, 1))
    with pytest.raises(Exception):
        m.beta = (1, 2)
    assert math.isclose(mean_curve(m, 2)[1], 1.0)
