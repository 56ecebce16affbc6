import numpy as np
import pytest

from mgdlab.linalg import (
    PowerIterationError,
    SingularMatrixError,
    eig_sym,
    gershgorin_bound,
    matvec,
    solve_linear,
    spectral_radius,
)


def test_matvec_identity():
    assert np.array_equal(matvec(np.eye(3), [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])


def test_matvec_diagonal_scaling():
    a = np.array([[0.5, 0.0], [0.0, 2.0]])
    assert np.array_equal(matvec(a, [2.0, 3.0]), [1.0, 6.0])


def test_matvec_matches_triple_loop_oracle():
    rng = np.random.default_rng(7)
    a = rng.standard_normal((4, 4))
    v = rng.standard_normal(4)
    expected = np.zeros(4)
    for i in range(4):
        for j in range(4):
            expected[i] += a[i, j] * v[j]
    np.testing.assert_allclose(matvec(a, v), expected, rtol=1e-14)


def test_matvec_dimension_mismatch():
    with pytest.raises(ValueError):
        matvec(np.eye(3), np.ones(4))


def test_solve_identity():
    np.testing.assert_array_equal(solve_linear(np.eye(2), [5.0, -1.0]), [5.0, -1.0])


def test_solve_diagonal():
    np.testing.assert_allclose(
        solve_linear(np.array([[2.0, 0.0], [0.0, 4.0]]), [2.0, 8.0]), [1.0, 2.0])


def test_solve_spd_residual_oracle():
    rng = np.random.default_rng(11)
    a = rng.standard_normal((5, 5))
    a = a @ a.T + 5 * np.eye(5)
    b = rng.standard_normal(5)
    x = solve_linear(a, b)
    assert np.linalg.norm(a @ x - b) <= 1e-8 * (1 + np.linalg.norm(b))


def test_solve_roundtrip_property():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = rng.standard_normal((6, 6)) + 6 * np.eye(6)
        x = rng.standard_normal(6)
        np.testing.assert_allclose(solve_linear(a, a @ x), x, rtol=1e-8, atol=1e-10)


def test_solve_singular_carries_pivot():
    a = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(SingularMatrixError) as exc:
        solve_linear(a, [1.0, 1.0])
    assert exc.value.min_pivot < 1e-12 * 4.0


def test_eig_sym_diagonal_sorted():
    np.testing.assert_allclose(eig_sym(np.diag([3.0, 1.0, 2.0])), [3.0, 2.0, 1.0])


def test_eig_sym_ar1_pair():
    # char poly of [[1, r], [r, 1]] gives 1 +/- r; r = 0.5 -> (1.5, 0.5)
    np.testing.assert_allclose(eig_sym(np.array([[1.0, 0.5], [0.5, 1.0]])),
                               [1.5, 0.5], atol=1e-12)


def test_eig_sym_identity():
    np.testing.assert_allclose(eig_sym(np.eye(4)), np.ones(4))


def test_eig_sym_residual_bound():
    rng = np.random.default_rng(21)
    a = rng.standard_normal((6, 6))
    a = (a + a.T) / 2
    vals, vecs = eig_sym(a, vectors=True)
    for k in range(6):
        assert np.linalg.norm(a @ vecs[:, k] - vals[k] * vecs[:, k]) <= 1e-8


def test_eig_sym_rejects_nonsymmetric():
    with pytest.raises(ValueError):
        eig_sym(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_eig_sym_spd_positive():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((5, 5))
    a = a @ a.T + 1e-3 * np.eye(5)
    assert (eig_sym(a) > 0).all()


def test_spectral_radius_diagonal():
    assert spectral_radius(np.diag([0.9, -0.95])) == pytest.approx(0.95, rel=1e-6)


def test_spectral_radius_contraction_formula():
    # symmetric I - alpha*S case: radius max(|1 - a*lmax|, |1 - a*lmin|)
    rng = np.random.default_rng(5)
    x = rng.standard_normal((60, 4))
    s = x.T @ x / 60
    vals = eig_sym(s)
    alpha = 0.4
    expected = max(abs(1 - alpha * vals[0]), abs(1 - alpha * vals[-1]))
    delta = np.eye(4) - alpha * s
    assert spectral_radius(delta) == pytest.approx(expected, rel=1e-6)


def test_spectral_radius_matches_dense_oracle():
    rng = np.random.default_rng(12)
    a = rng.standard_normal((3, 3))
    expected = max(abs(np.linalg.eigvals(a)))
    assert spectral_radius(a) == pytest.approx(expected, rel=1e-6)


def test_spectral_radius_below_row_sum_norm():
    rng = np.random.default_rng(13)
    for _ in range(10):
        a = rng.standard_normal((5, 5))
        a = (a + a.T) / 2  # real spectrum keeps the iteration well posed
        assert spectral_radius(a) <= gershgorin_bound(a) + 1e-9


def test_spectral_radius_nilpotent_is_zero():
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert spectral_radius(a) == 0.0


def test_spectral_radius_complex_pair_modulus():
    # rotation scaled by 0.8: complex pair, modulus 0.8
    c, s = np.cos(0.7), np.sin(0.7)
    a = 0.8 * np.array([[c, -s], [s, c]])
    assert spectral_radius(a) == pytest.approx(0.8, rel=1e-5)


def test_spectral_radius_opposite_sign_pair_via_geometric_mean():
    a = np.array([[1.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 0.3]])
    assert spectral_radius(a) == pytest.approx(1.0, rel=1e-6)


def test_spectral_radius_reports_nonconvergence():
    # non-normal complex pair: the modulus estimate never settles
    th = 0.99
    c, s = np.cos(th), np.sin(th)
    a = 0.9 * np.array([[c, -s], [s, c]]) @ np.diag([2.0, 0.5])
    with pytest.raises(PowerIterationError) as exc:
        spectral_radius(a, max_iter=50)
    assert len(exc.value.estimates) == 2
