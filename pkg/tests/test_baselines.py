import numpy as np
import pytest

from isodist.baselines import (
    BaselineError,
    cosine_distance_matrix,
    euclidean_matrix,
    fit_covariance,
    gower_matrix,
    mahalanobis_matrix,
    mean_impute,
    pearson_corr,
)
from isodist.data import Column, Dataset
from isodist.matrix import CondensedMatrix


def numeric_dataset(rows):
    rows = np.asarray(rows, dtype=float)
    cols = [
        Column("numeric", rows[:, j], np.zeros(len(rows), dtype=bool))
        for j in range(rows.shape[1])
    ]
    return Dataset(cols)


def test_euclidean_basics():
    ds = numeric_dataset([[0, 0], [0, 0], [1, 0], [3, 4]])
    m = euclidean_matrix(ds)
    assert m[0, 1] == 0.0
    assert m[0, 2] == 1.0
    assert m[0, 3] == 5.0


def test_euclidean_rejects_categorical():
    ds = Dataset(
        [Column("categorical", np.array([0, 1]), np.zeros(2, dtype=bool), ["a", "b"])]
    )
    with pytest.raises(BaselineError):
        euclidean_matrix(ds)


def test_euclidean_rejects_missing():
    ds = Dataset([Column("numeric", np.array([1.0, 2.0]), np.array([False, True]))])
    with pytest.raises(BaselineError):
        euclidean_matrix(ds)


def test_mahalanobis_identity_covariance_equals_euclidean():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((400, 3))
    # decorrelate and rescale so the sample covariance is the identity
    X = (X - X.mean(axis=0)) @ np.linalg.inv(np.linalg.cholesky(np.cov(X.T)).T)
    ds = numeric_dataset(X)
    assert np.allclose(
        mahalanobis_matrix(ds).values, euclidean_matrix(ds).values, atol=1e-8
    )


def test_mahalanobis_scale_invariant():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((200, 2))
    scaled = X.copy()
    scaled[:, 1] *= 100.0
    a = mahalanobis_matrix(numeric_dataset(X))
    b = mahalanobis_matrix(numeric_dataset(scaled))
    assert np.allclose(a.values, b.values, rtol=1e-8)


def test_mahalanobis_affine_invariant():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((300, 3))
    A = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    a = mahalanobis_matrix(numeric_dataset(X))
    b = mahalanobis_matrix(numeric_dataset(X @ A + rng.standard_normal(3)))
    assert np.allclose(a.values, b.values, rtol=1e-8)


def test_mahalanobis_rank_deficient_uses_pseudo_inverse():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(50)
    X = np.column_stack([x, 2.0 * x, rng.standard_normal(50)])  # collinear
    m = mahalanobis_matrix(numeric_dataset(X))
    assert np.all(np.isfinite(m.values))


def test_mahalanobis_few_rows_warns():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((3, 5))
    with pytest.warns(UserWarning):
        mahalanobis_matrix(numeric_dataset(X))


def test_covariance_inverse_property():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((500, 4))
    model = fit_covariance(X)
    assert np.allclose(model.inv @ model.cov, np.eye(4), atol=1e-8)


def test_cosine_basics():
    ds = numeric_dataset([[1, 0], [2, 0], [0, 3], [-1, 0]])
    m = cosine_distance_matrix(ds)
    assert m[0, 1] == pytest.approx(0.0, abs=1e-15)
    assert m[0, 2] == pytest.approx(1.0)
    assert m[0, 3] == pytest.approx(2.0)


def test_cosine_rejects_zero_norm():
    ds = numeric_dataset([[0, 0], [1, 2]])
    with pytest.raises(BaselineError):
        cosine_distance_matrix(ds)


def mixed_dataset():
    num = Column(
        "numeric",
        np.array([0.0, 5.0, 10.0]),
        np.array([False, False, False]),
    )
    cat = Column(
        "categorical",
        np.array([0, 0, 1]),
        np.array([False, False, False]),
        ["a", "b"],
    )
    return Dataset([num, cat])


def test_gower_identical_rows_zero():
    ds = mixed_dataset()
    big = ds.take([0, 0, 1, 2])
    assert gower_matrix(big)[0, 1] == 0.0


def test_gower_extremes_reach_one():
    m = gower_matrix(mixed_dataset())
    assert m[0, 2] == pytest.approx(1.0)  # full range + category mismatch


def test_gower_hand_computed_with_missing():
    # columns: numeric range 10, numeric range 4 (jointly missing for the
    # pair), categorical; pair (0, 1): mean(|0-5|/10, mismatch=1) = 0.75
    num1 = Column("numeric", np.array([0.0, 5.0, 10.0]), np.zeros(3, dtype=bool))
    num2 = Column(
        "numeric", np.array([0.0, 2.0, 4.0]), np.array([True, False, False])
    )
    cat = Column(
        "categorical", np.array([0, 1, 1]), np.zeros(3, dtype=bool), ["a", "b"]
    )
    ds = Dataset([num1, num2, cat])
    m = gower_matrix(ds)
    assert m[0, 1] == pytest.approx((0.5 + 1.0) / 2)
    # num2 range over its non-missing values {2, 4} is 2, so |2-4|/2 = 1
    assert m[1, 2] == pytest.approx((0.5 + 1.0 + 0.0) / 3)


def test_gower_no_joint_columns_is_nan():
    num1 = Column("numeric", np.array([0.0, 1.0, 2.0]), np.array([True, False, False]))
    num2 = Column("numeric", np.array([0.0, 1.0, 2.0]), np.array([False, True, False]))
    ds = Dataset([num1, num2])
    m = gower_matrix(ds)
    assert np.isnan(m[0, 1])
    assert np.isfinite(m[0, 2])


def test_gower_zero_range_column_skipped():
    num1 = Column("numeric", np.full(3, 2.0), np.zeros(3, dtype=bool))
    num2 = Column("numeric", np.array([0.0, 1.0, 2.0]), np.zeros(3, dtype=bool))
    with pytest.warns(UserWarning):
        m = gower_matrix(Dataset([num1, num2]))
    assert m[0, 2] == pytest.approx(1.0)


def test_gower_range_in_unit_interval():
    rng = np.random.default_rng(6)
    num = Column("numeric", rng.standard_normal(50), rng.random(50) < 0.2)
    cat = Column(
        "categorical",
        rng.integers(0, 3, size=50),
        rng.random(50) < 0.2,
        ["x", "y", "z"],
    )
    m = gower_matrix(Dataset([num, cat]))
    finite = m.values[np.isfinite(m.values)]
    assert np.all((finite >= 0.0) & (finite <= 1.0))


def test_mean_impute_numeric():
    col = Column("numeric", np.array([1.0, 0.0, 3.0]), np.array([False, True, False]))
    ds = Dataset([col])
    out = mean_impute(ds)
    assert out.columns[0].values.tolist() == [1.0, 2.0, 3.0]
    assert not out.columns[0].missing.any()


def test_mean_impute_modal_category_lowest_code_ties():
    col = Column(
        "categorical",
        np.array([0, 1, 0, 1, 2]),
        np.array([False, False, False, False, True]),
        ["a", "b", "c"],
    )
    out = mean_impute(Dataset([col]))
    assert out.columns[0].values[4] == 0  # tie between codes 0 and 1


def test_mean_impute_no_missing_is_identity():
    ds = mixed_dataset()
    out = mean_impute(ds)
    for a, b in zip(ds.columns, out.columns):
        assert np.array_equal(a.values, b.values)


def test_mean_impute_all_missing_column_errors():
    col = Column("numeric", np.zeros(3), np.ones(3, dtype=bool))
    with pytest.raises(BaselineError):
        mean_impute(Dataset([col]))


def test_pearson_corr_identity_and_negation():
    rng = np.random.default_rng(7)
    a = CondensedMatrix(10, rng.random(45))
    b = CondensedMatrix(10, -a.values + 2.0)
    assert pearson_corr(a, a) == pytest.approx(1.0)
    assert pearson_corr(a, b) == pytest.approx(-1.0)


def test_pearson_corr_independent_near_zero():
    rng = np.random.default_rng(8)
    n_cells = 100 * 99 // 2
    a = CondensedMatrix(100, rng.random(n_cells))
    b = CondensedMatrix(100, rng.random(n_cells))
    assert abs(pearson_corr(a, b)) < 4 / np.sqrt(n_cells)


def test_pearson_corr_affine_invariant_and_symmetric():
    rng = np.random.default_rng(9)
    a = CondensedMatrix(12, rng.random(66))
    b = CondensedMatrix(12, rng.random(66))
    scaled = CondensedMatrix(12, 3.5 * a.values + 1.0)
    assert pearson_corr(a, b) == pytest.approx(pearson_corr(b, a))
    assert pearson_corr(scaled, b) == pytest.approx(pearson_corr(a, b))


def test_pearson_corr_errors():
    rng = np.random.default_rng(10)
    a = CondensedMatrix(5, rng.random(10))
    with pytest.raises(BaselineError):
        pearson_corr(a, CondensedMatrix(6, rng.random(15)))
    with pytest.raises(BaselineError):
        pearson_corr(a, CondensedMatrix(5, np.ones(10)))


def test_pearson_corr_skips_nan_cells():
    rng = np.random.default_rng(11)
    a = CondensedMatrix(6, rng.random(15))
    vals = a.values.copy() * 2.0
    vals[3] = np.nan
    b = CondensedMatrix(6, vals)
    assert pearson_corr(a, b) == pytest.approx(1.0)
