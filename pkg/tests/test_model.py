import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from odbsample import linalg
from odbsample.model import (
    BoxTransform,
    Criterion,
    Dataset,
    DesignMeasure,
    EfficiencyError,
    Family,
    FeatureBasis,
    ModelSpec,
    criterion_value,
    efficiency,
    expand_features,
    fit_box_transform,
    glm_weight,
    info_matrix_of_design,
    info_matrix_of_rows,
)


# ---------------------------------------------------------------- features


def test_quadratic_features_at_origin():
    assert np.array_equal(expand_features(np.zeros(2), FeatureBasis.quadratic(2)), [1, 0, 0, 0, 0, 0])


def test_quadratic_feature_ordering():
    f = expand_features(np.array([-1.0, 1.0]), FeatureBasis.quadratic(2))
    assert np.array_equal(f, [1, -1, 1, 1, 1, -1])


def test_linear_p10_features():
    f = expand_features(np.full(10, 0.5), FeatureBasis.linear(10))
    assert f.shape == (11,)
    assert f[0] == 1.0 and np.all(f[1:] == 0.5)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        expand_features(np.zeros(3), FeatureBasis.linear(2))


def test_basis_validation():
    with pytest.raises(ValueError):
        FeatureBasis(1, ((1,), (0,)))  # intercept must come first
    with pytest.raises(ValueError):
        FeatureBasis(1, ((0,),))
    assert FeatureBasis.quadratic(3).q == 10


def test_basis_roundtrip():
    b = FeatureBasis.quadratic(3)
    assert FeatureBasis.from_dict(b.to_dict()) == b


# ---------------------------------------------------------------- weights


def test_glm_weight_values():
    basis = FeatureBasis.linear(1)
    logit = ModelSpec(basis, "logistic", [0.0, 1.0])
    assert glm_weight(np.array([0.0]), logit) == 0.25
    assert glm_weight(np.array([math.log(3.0)]), logit) == pytest.approx(0.1875, abs=1e-15)
    assert glm_weight(np.array([7.0]), ModelSpec(basis, "linear", [1.0, 2.0])) == 1.0


@given(st.floats(-30, 30))
def test_glm_weight_symmetric_and_bounded(eta):
    logit = ModelSpec(FeatureBasis.linear(1), "logistic", [0.0, 1.0])
    w = glm_weight(np.array([eta]), logit)
    assert 0.0 <= w <= 0.25
    assert w == pytest.approx(glm_weight(np.array([-eta]), logit), rel=1e-12, abs=1e-300)


def test_model_validation():
    with pytest.raises(ValueError):
        ModelSpec(FeatureBasis.linear(2), "linear", [1.0, 2.0])
    with pytest.raises(ValueError):
        ModelSpec(FeatureBasis.linear(1), "linear", [1.0, 2.0], sigma2=0.0)
    assert Family.parse("logit") is Family.LOGISTIC


# ---------------------------------------------------------------- information


def test_info_matrix_two_point_design_is_identity():
    d = DesignMeasure(np.array([[-1.0], [1.0]]), [0.5, 0.5])
    assert np.allclose(info_matrix_of_design(d, ModelSpec(FeatureBasis.linear(1))), np.eye(2))


def test_info_matrix_single_point_rank_one():
    d = DesignMeasure(np.array([[0.3]]), [1.0])
    m = info_matrix_of_design(d, ModelSpec(FeatureBasis.linear(1)))
    assert np.linalg.matrix_rank(m) == 1


def test_info_matrix_quadratic_three_point():
    d = DesignMeasure(np.array([[-1.0], [0.0], [1.0]]), [1 / 3, 1 / 3, 1 / 3])
    m = info_matrix_of_design(d, ModelSpec(FeatureBasis.quadratic(1)))
    expected = np.array([[1, 0, 2 / 3], [0, 2 / 3, 0], [2 / 3, 0, 2 / 3]])
    assert np.allclose(m, expected, atol=1e-15)


def test_info_of_rows_replicated_design_matches_design():
    support = np.array([[-1.0], [0.0], [1.0]])
    x = np.repeat(support, [1, 2, 1], axis=0)
    data = Dataset(x)
    model = ModelSpec(FeatureBasis.quadratic(1))
    m_rows = info_matrix_of_rows(data, np.arange(4), model, fit_box_transform(data))
    m_design = info_matrix_of_design(DesignMeasure(support, [0.25, 0.5, 0.25]), model)
    assert np.allclose(m_rows, m_design, atol=1e-15)


def test_info_of_rows_matches_naive_loop(rng):
    data = Dataset(rng.normal(size=(20, 2)))
    model = ModelSpec(FeatureBasis.quadratic(2))
    tr = fit_box_transform(data)
    m = info_matrix_of_rows(data, np.arange(20), model, tr)
    z = tr.apply(data.covariates)
    naive = np.zeros((6, 6))
    for row in z:
        f = [1.0, row[0], row[1], row[0] ** 2, row[1] ** 2, row[0] * row[1]]
        for a in range(6):
            for b in range(6):
                naive[a, b] += f[a] * f[b]
    assert np.allclose(20 * m, naive, atol=1e-12)
    assert np.linalg.matrix_rank(info_matrix_of_rows(data, [3], model, tr)) == 1


def test_info_of_rows_errors(five_points, linear1):
    tr = fit_box_transform(five_points)
    with pytest.raises(ValueError):
        info_matrix_of_rows(five_points, [], linear1, tr)
    with pytest.raises(IndexError):
        info_matrix_of_rows(five_points, [5], linear1, tr)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (12, 2), elements=st.floats(-5, 5)), st.booleans())
def test_info_matrix_symmetric_psd(x, logistic):
    if np.any(np.ptp(x, axis=0) == 0):
        return
    data = Dataset(x)
    fam = "logistic" if logistic else "linear"
    model = ModelSpec(FeatureBasis.quadratic(2), fam, np.linspace(-1, 1, 6))
    tr = fit_box_transform(data)
    m = info_matrix_of_rows(data, np.arange(12), model.in_box(tr), tr)
    assert np.allclose(m, m.T, atol=1e-10)
    assert np.linalg.eigvalsh(m).min() >= -1e-10


# ---------------------------------------------------------------- criteria and efficiency


def test_criterion_values():
    assert criterion_value(np.eye(3), "D") == 1.0
    assert criterion_value(np.eye(3), "A") == -3.0
    assert criterion_value(np.diag([2.0, 0.5]), Criterion.D) == pytest.approx(1.0)
    with pytest.raises(linalg.SingularMatrixError):
        criterion_value(np.zeros((2, 2)), "A")


def test_efficiency_basic():
    m = np.array([[2.0, 0.3], [0.3, 1.0]])
    assert efficiency(m, m, "D") == pytest.approx(1.0)
    assert efficiency(m, m, "A") == pytest.approx(1.0)
    assert efficiency(np.zeros((2, 2)), m, "D") == 0.0
    assert efficiency(np.zeros((2, 2)), m, "A") == 0.0


def test_efficiency_formula_against_hand_values():
    m_star = np.eye(2)
    m = np.diag([0.5, 0.5])
    assert efficiency(m, m_star, "D") == pytest.approx(0.5)
    assert efficiency(m, m_star, "A") == pytest.approx(2.0 / 4.0)


def test_efficiency_above_one_raises_beyond_tolerance():
    with pytest.raises(EfficiencyError):
        efficiency(2 * np.eye(2), np.eye(2), "D")
    # within tolerance: clipped
    assert efficiency((1 + 1e-6) * np.eye(2), np.eye(2), "D", tol=1e-4) == 1.0


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (6, 3), elements=st.floats(-3, 3)), st.floats(1e-3, 1e3))
def test_d_efficiency_scale_invariant(a, c):
    m = a.T @ a + 0.1 * np.eye(3)
    m_star = np.eye(3) * (np.trace(m) + 1)
    e1 = efficiency(m, m_star, "D")
    e2 = efficiency(c * m, c * m_star, "D")
    assert e1 == pytest.approx(e2, rel=1e-9)


# ---------------------------------------------------------------- box transform


def test_box_transform_identity_when_already_unit():
    data = Dataset(np.array([[-1.0], [0.2], [1.0]]))
    tr = fit_box_transform(data)
    assert np.array_equal(tr.apply(data.covariates), data.covariates)


def test_box_transform_affine():
    tr = fit_box_transform(Dataset(np.array([[0.0], [5.0], [10.0]])))
    assert np.allclose(tr.apply(np.array([[0.0], [5.0], [10.0]])).ravel(), [-1, 0, 1])


def test_constant_column_rejected():
    with pytest.raises(ValueError):
        fit_box_transform(Dataset(np.array([[1.0, 0.0], [1.0, 1.0]])))


@given(arrays(np.float64, (8, 3), elements=st.floats(-1e3, 1e3)))
def test_box_roundtrip(x):
    if np.any(np.ptp(x, axis=0) < 1e-6):
        return
    tr = fit_box_transform(x)
    z = tr.apply(x)
    assert np.all(np.abs(z) <= 1.0)
    back = tr.invert(z)
    assert np.allclose(back, x, rtol=0, atol=1e-12 * max(1.0, np.abs(x).max()))


def test_in_box_reparametrization(rng):
    x = rng.uniform(0, 1, size=(50, 2))
    tr = fit_box_transform(x)
    for basis in (FeatureBasis.linear(2), FeatureBasis.quadratic(2)):
        model = ModelSpec(basis, "logistic", rng.normal(size=basis.q))
        eta_raw = basis.expand(x) @ model.theta
        eta_box = basis.expand(tr.apply(x)) @ model.in_box(tr).theta
        assert np.allclose(eta_raw, eta_box, atol=1e-10)


# ---------------------------------------------------------------- dataset and design measure


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        Dataset(np.ones((3, 1)), np.ones(2))
    d = Dataset(np.ones((3, 2)))
    assert d.column_names == ("y", "x1", "x2")


def test_design_measure_validation():
    with pytest.raises(ValueError):
        DesignMeasure(np.array([[0.0]]), [0.9])
    with pytest.raises(ValueError):
        DesignMeasure(np.array([[2.0]]), [1.0])
    with pytest.raises(ValueError):
        DesignMeasure(np.array([[0.0], [1.0]]), [1.5, -0.5])


def test_box_transform_requires_vectors():
    with pytest.raises(ValueError):
        BoxTransform(np.zeros(2), np.ones(3))
