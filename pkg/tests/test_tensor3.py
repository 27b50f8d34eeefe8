import numpy as np
import pytest

from tenuniq.exceptions import DimensionError
from tenuniq.field_linalg import ScalarField, khatri_rao, random_matrix
from tenuniq.tensor3 import (
    FactorSet,
    fold,
    from_factors,
    frontal_slice,
    is_sfs,
    tensor_entries,
    tensor_from_entries,
    unfold,
)


@pytest.fixture
def factors(rng):
    return FactorSet(random_matrix(rng, 3, 2), random_matrix(rng, 4, 2), random_matrix(rng, 5, 2))


def test_unfoldings_match_khatri_rao(factors):
    T = from_factors(factors)
    A, B, C = factors.A, factors.B, factors.C
    np.testing.assert_allclose(unfold(T, 1), A @ khatri_rao(C, B).T)
    np.testing.assert_allclose(unfold(T, 2), B @ khatri_rao(A, C).T)
    np.testing.assert_allclose(unfold(T, 3), C @ khatri_rao(B, A).T)


def test_fold_inverts_unfold(factors):
    T = from_factors(factors)
    for mode in (1, 2, 3):
        np.testing.assert_array_equal(fold(unfold(T, mode), mode, T.shape), T)


def test_bad_mode():
    with pytest.raises(DimensionError):
        unfold(np.ones((2, 2, 2)), 4)


def test_frontal_slice_is_one_based(factors):
    T = from_factors(factors)
    S = frontal_slice(T, 1)
    np.testing.assert_allclose(S, factors.A @ np.diag(factors.C[0]) @ factors.B.T)
    with pytest.raises(DimensionError):
        frontal_slice(T, 0)
    with pytest.raises(DimensionError):
        frontal_slice(T, 6)


def test_entries_put_i_fastest():
    T = np.arange(24.0).reshape(2, 3, 4)
    flat = tensor_entries(T)
    assert flat[1] == T[1, 0, 0]
    assert flat[2] == T[0, 1, 0]
    assert flat[6] == T[0, 0, 1]
    np.testing.assert_array_equal(tensor_from_entries(flat, (2, 3, 4)), T)
    with pytest.raises(DimensionError):
        tensor_from_entries(flat[:-1], (2, 3, 4))


def test_is_sfs(rng):
    A = random_matrix(rng, 4, 3)
    C = random_matrix(rng, 2, 3)
    T = from_factors(FactorSet.symmetric(A, C))
    assert is_sfs(T)
    T[0, 1, 0] += 1.0
    assert not is_sfs(T)
    assert not is_sfs(np.ones((2, 3, 2)))


def test_factor_set_validation(rng):
    with pytest.raises(DimensionError):
        FactorSet(np.ones((2, 2)), np.ones((2, 3)), np.ones((2, 2)))
    with pytest.raises(DimensionError):
        FactorSet(np.eye(2), 2 * np.eye(2), np.eye(2), sfs=True)


def test_factor_set_unifies_field(rng):
    f = FactorSet(np.eye(2), np.eye(2), np.eye(2) * 1j)
    assert f.field is ScalarField.COMPLEX
    assert f.A.dtype == np.complex128


def test_symmetric_factor_set(rng):
    f = FactorSet.symmetric(random_matrix(rng, 3, 2), random_matrix(rng, 4, 2))
    assert f.sfs and f.B is f.A
    assert f.dims == (3, 3, 4) and f.rank == 2


def test_permuted_keeps_tensor(factors):
    p = factors.permuted([1, 0])
    np.testing.assert_allclose(from_factors(p), from_factors(factors))
    np.testing.assert_array_equal(p.A[:, 0], factors.A[:, 1])
    with pytest.raises(DimensionError):
        factors.permuted([0, 0])


def test_column_scalings_with_unit_product_keep_tensor(rng, factors):
    alpha = np.array([2.0, -0.5])
    beta = np.array([3.0, 4.0])
    gamma = 1.0 / (alpha * beta)
    scaled = FactorSet(factors.A * alpha, factors.B * beta, factors.C * gamma)
    np.testing.assert_allclose(from_factors(scaled), from_factors(factors), rtol=0, atol=1e-12)


def test_from_factors_is_linear_in_each_factor(rng, factors):
    a, b = 1.5, -2.0
    A, B, C = factors.A, factors.B, factors.C
    T = from_factors(factors)
    A2, B2, C2 = random_matrix(rng, 3, 2), random_matrix(rng, 4, 2), random_matrix(rng, 5, 2)
    cases = [
        (FactorSet(a * A + b * A2, B, C), FactorSet(A2, B, C)),
        (FactorSet(A, a * B + b * B2, C), FactorSet(A, B2, C)),
        (FactorSet(A, B, a * C + b * C2), FactorSet(A, B, C2)),
    ]
    for mixed, other in cases:
        np.testing.assert_allclose(from_factors(mixed), a * T + b * from_factors(other), rtol=0, atol=1e-12)
