import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from medalcast import pca
from medalcast.errors import DegenerateError, DomainRangeError, InsufficientDataError, ShapeError


def test_covariance_examples():
    assert np.array_equal(pca.covariance(np.ones((4, 50))), np.zeros((50, 50)))
    X = np.zeros((2, 50))
    X[0, 0], X[1, 0] = 1.0, -1.0
    C = pca.covariance(X)
    assert C[0, 0] == 1.0 and np.count_nonzero(C) == 1
    with pytest.raises(InsufficientDataError):
        pca.covariance(np.ones((1, 50)))


def test_covariance_matches_double_loop():
    X = np.random.default_rng(0).normal(size=(20, 50))
    mean = X.mean(axis=0)
    C = pca.covariance(X)
    for i in range(50):
        for j in range(50):
            ref = sum((X[n, i] - mean[i]) * (X[n, j] - mean[j]) for n in range(20)) / 20
            assert abs(C[i, j] - ref) < 1e-12


def test_hand_solved_3x3():
    d = pca.eigen_sym(np.array([[2.0, 1, 0], [1, 2, 0], [0, 0, 5]]))
    assert np.allclose(d.values, [5, 3, 1], atol=1e-10, rtol=0)
    assert np.allclose(d.vectors[:, 0], [0, 0, 1], atol=1e-10)
    s = 1 / np.sqrt(2)
    assert np.allclose(d.vectors[:, 1], [s, s, 0], atol=1e-10)


def test_diagonal_and_identity():
    d = pca.eigen_sym(np.diag([1.0, 3.0, 2.0]))
    assert d.values.tolist() == [3.0, 2.0, 1.0]
    assert np.array_equal(np.abs(d.vectors), np.eye(3)[:, [1, 2, 0]])
    assert pca.eigen_sym(np.eye(6)).values.tolist() == [1.0] * 6


def test_rejects_asymmetric():
    with pytest.raises(ShapeError):
        pca.eigen_sym(np.array([[1.0, 2.0], [0.0, 1.0]]))


def _check(C, d):
    V, lam = d.vectors, d.values
    scale = max(1.0, np.abs(C).max())
    assert np.abs(V.T @ V - np.eye(len(C))).max() <= 1e-8
    assert np.abs(V @ np.diag(lam) @ V.T - C).max() <= 1e-8 * scale
    assert np.all(np.diff(lam) <= 0)
    lead = np.abs(V).argmax(axis=0)
    assert np.all(V[lead, np.arange(len(C))] > 0)


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, (12, 12), elements=st.floats(-10, 10)))
def test_random_symmetric_reconstruction(A):
    C = (A + A.T) / 2
    _check(C, pca.eigen_sym(C))


def test_50x50_covariance_against_numpy():
    X = np.random.default_rng(3).normal(size=(200, 50))
    C = pca.covariance(X)
    d = pca.eigen_sym(C)
    _check(C, d)
    assert np.allclose(d.values, np.linalg.eigvalsh(C)[::-1], atol=1e-10)
    assert np.all(d.values >= -1e-9)


def test_projection_shapes_and_errors():
    d = pca.eigen_sym(pca.covariance(np.random.default_rng(1).normal(size=(30, 50))))
    P = pca.projection(d, 5)
    assert P.matrix.shape == (50, 5)
    assert np.abs(P.matrix.T @ P.matrix - np.eye(5)).max() <= 1e-8
    Q = pca.projection(d, 50).matrix
    assert np.abs(Q @ Q.T - np.eye(50)).max() <= 1e-8
    with pytest.raises(DomainRangeError):
        pca.projection(d, 51)


def test_project_centering_and_unit_axis():
    X = np.random.default_rng(2).normal(size=(40, 50))
    P, _ = pca.fit_pca(X, 5)
    assert np.allclose(pca.project(P.mean, P), 0.0, atol=0)
    e = pca.project(P.matrix[:, 0] + P.mean, P)
    assert np.allclose(e, [1, 0, 0, 0, 0], atol=1e-12)
    v = X[0]
    ref = [sum((v[i] - P.mean[i]) * P.matrix[i, j] for i in range(50)) for j in range(5)]
    assert np.allclose(pca.project(v, P), ref, atol=1e-12)
    with pytest.raises(ShapeError):
        pca.project(np.ones(49), P)


def test_rank_one_direction():
    u = np.zeros(50)
    u[[3, 7]] = [0.6, 0.8]
    X = np.outer(np.linspace(-2, 2, 9), u)
    P, d = pca.fit_pca(X, 1)
    assert np.allclose(P.matrix[:, 0], u, atol=1e-10)
    assert pca.explained_variance(d, 1) == pytest.approx(1.0, abs=1e-12)


def test_explained_variance():
    d = pca.EigenDecomposition(values=np.array([3.0, 1.0] + [0.0] * 48), vectors=np.eye(50))
    assert pca.explained_variance(d, 1) == 0.75
    assert pca.explained_variance(d, 50) == 1.0
    with pytest.raises(DegenerateError):
        pca.explained_variance(pca.EigenDecomposition(np.zeros(3), np.eye(3)), 1)


def test_projector_idempotent():
    rng = np.random.default_rng(5)
    P, _ = pca.fit_pca(rng.normal(size=(60, 50)), 5)
    Pi = P.matrix @ P.matrix.T
    x = rng.normal(size=50)
    assert np.allclose(Pi @ (Pi @ x), Pi @ x, atol=1e-12)
    assert np.linalg.norm(x - Pi @ x) <= np.linalg.norm(x) + 1e-12


def test_dot_products_preserved_in_span():
    rng = np.random.default_rng(6)
    P, _ = pca.fit_pca(rng.normal(size=(60, 50)), 5)
    a, b = rng.normal(size=5), rng.normal(size=5)
    u, v = P.mean + P.matrix @ a, P.mean + P.matrix @ b
    assert abs(pca.project(u, P) @ pca.project(v, P) - (u - P.mean) @ (v - P.mean)) <= 1e-8


def test_projection_json_round_trip(tmp_path):
    P, _ = pca.fit_pca(np.random.default_rng(7).normal(size=(10, 50)), 5)
    P.save(tmp_path / "p.json")
    Q = pca.ProjectionMatrix.load(tmp_path / "p.json")
    assert np.array_equal(P.matrix, Q.matrix) and np.array_equal(P.mean, Q.mean)
