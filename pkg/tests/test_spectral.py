import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lapcompress.graph import GraphValidationError, NetworkGraph, build_laplacian, consensus_matrix
from lapcompress.spectral import EigenbasisError, components, eigenbasis, eigenvalue_csv

from conftest import random_symmetric_graph
from oracles import char_poly_roots


def check_invariants(basis, lap):
    np.testing.assert_allclose(np.linalg.norm(basis.V, axis=0), 1.0, atol=1e-10)
    assert np.abs(basis.V @ basis.W - np.eye(basis.n)).max() <= 1e-8
    assert np.all(np.diff(basis.eigenvalues) >= 0)
    assert abs(basis.eigenvalues[0]) <= 1e-8
    for i in np.flatnonzero(~basis.pair):
        v = basis.V[:, i]
        assert np.linalg.norm(lap @ v - basis.eigenvalues[i] * v) <= 1e-7
    if basis.orthonormal:
        assert np.abs(basis.V.T @ basis.V - np.eye(basis.n)).max() <= 1e-8


def test_two_node_basis(two_node):
    b = eigenbasis(build_laplacian(two_node))
    np.testing.assert_allclose(b.eigenvalues, [0.0, 1.0], atol=1e-15)
    r = 1 / np.sqrt(2)
    np.testing.assert_allclose(b.V, [[r, r], [r, -r]], atol=1e-15)
    assert b.orthonormal and b.is_real


def test_single_node_basis():
    b = eigenbasis(np.zeros((1, 1)))
    assert b.V.tolist() == [[1.0]] and b.W.tolist() == [[1.0]]
    assert b.eigenvalues.tolist() == [0.0]


def test_directed_cycle_pair(cycle3):
    lap = build_laplacian(cycle3)
    b = eigenbasis(lap)
    roots = sorted(char_poly_roots(lap), key=lambda c: (round(c.real, 9), abs(c.imag)))
    np.testing.assert_allclose(b.eigenvalues, [r.real for r in roots], atol=1e-10)
    np.testing.assert_allclose(b.eigenvalues, [0.0, 1.5, 1.5], atol=1e-12)
    np.testing.assert_allclose(b.eigenvalues_imag, [0.0, np.sqrt(3) / 2, -np.sqrt(3) / 2], atol=1e-12)
    assert b.pair.tolist() == [False, True, True]
    assert not b.orthonormal and not b.is_real
    check_invariants(b, lap)
    # the realified pair spans the complex eigenvector
    v = b.V[:, 1] + 1j * b.V[:, 2]
    lam = 1.5 + 1j * np.sqrt(3) / 2
    w = lap @ v - lam * v
    assert np.linalg.norm(w) < 1e-10 or np.linalg.norm(lap @ v.conj() - lam * v.conj()) < 1e-10


def test_components_examples(geo_basis):
    b = geo_basis
    np.testing.assert_allclose(components(b, b.V[:, 2]), np.eye(b.n)[2], atol=1e-10)
    assert not np.any(components(b, np.zeros(b.n)))
    with pytest.raises(ValueError, match="length"):
        components(b, np.ones(b.n + 1))


def test_linear_combination_orthonormal():
    g = random_symmetric_graph(8, np.random.default_rng(5))
    b = eigenbasis(build_laplacian(g))
    s = components(b, 2 * b.V[:, 0] + 3 * b.V[:, 4])
    expected = np.zeros(8)
    expected[[0, 4]] = [2.0, 3.0]
    np.testing.assert_allclose(s, expected, atol=1e-10)


@pytest.mark.property
def test_round_trip_and_symmetric_shortcut(geo_basis):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((100, geo_basis.n))
    S = components(geo_basis, X)
    err = np.linalg.norm(S @ geo_basis.V.T - X, axis=1)
    assert np.all(err <= 1e-8 * np.linalg.norm(X, axis=1))

    g = random_symmetric_graph(20, rng)
    b = eigenbasis(build_laplacian(g))
    assert b.orthonormal
    np.testing.assert_allclose(components(b, X[:, :20]), X[:, :20] @ b.V, atol=1e-8)


@pytest.mark.property
def test_geo_basis_invariants(geo_graph, geo_basis):
    lap = build_laplacian(geo_graph)
    check_invariants(geo_basis, lap)
    assert geo_basis.is_real
    assert geo_basis.eigenvalues.min() >= -1e-8 and geo_basis.eigenvalues.max() < 2
    # A = I - L shares the eigenvectors
    A = consensus_matrix(geo_graph)
    mu = 1 - geo_basis.eigenvalues
    assert np.abs(A @ geo_basis.V - geo_basis.V * mu).max() < 1e-8


@pytest.mark.property
def test_bitwise_determinism(geo_graph):
    lap = build_laplacian(geo_graph)
    a, b = eigenbasis(lap), eigenbasis(lap.copy())
    assert a.V.tobytes() == b.V.tobytes() and a.W.tobytes() == b.W.tobytes()
    assert eigenvalue_csv(a) == eigenvalue_csv(b)


def test_sign_convention(geo_basis):
    V = geo_basis.V
    idx = np.argmax(np.abs(V), axis=0)
    assert np.all(V[idx, np.arange(V.shape[1])] > 0)


def test_defective_laplacian_rejected():
    # directed chain 0 -> 1 -> 2 with equal weights has a Jordan block
    lap = build_laplacian(NetworkGraph(3, ((0, 1, 1.0), (1, 2, 1.0))))
    with pytest.raises(EigenbasisError, match="defective"):
        eigenbasis(lap)


def test_invalid_laplacian_rejected():
    with pytest.raises(GraphValidationError):
        eigenbasis(np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_eigenvalue_csv_header(cycle3):
    text = eigenvalue_csv(eigenbasis(build_laplacian(cycle3)))
    lines = text.splitlines()
    assert lines[0] == "index,eigenvalue_real,eigenvalue_imag,pair_flag"
    assert lines[2].endswith(",1") and len(lines) == 4


@pytest.mark.property
@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 15), seed=st.integers(0, 2**32 - 1), directed=st.booleans())
def test_basis_invariants_random(n, seed, directed):
    rng = np.random.default_rng(seed)
    if directed:
        w = np.where(rng.random((n, n)) < 0.6, rng.uniform(0.1, 1.0, (n, n)), 0.0)
        np.fill_diagonal(w, 0.0)
        # keep a directed ring so the graph stays strongly connected
        for i in range(n):
            w[(i + 1) % n, i] = max(w[(i + 1) % n, i], 0.3)
        w *= 0.9 / w.sum(axis=1).max()
        g = NetworkGraph(n, tuple((i, j, w[j, i]) for i in range(n) for j in range(n) if w[j, i] > 0))
    else:
        g = random_symmetric_graph(n, rng)
    lap = build_laplacian(g)
    try:
        b = eigenbasis(lap)
    except EigenbasisError:
        return
    check_invariants(b, lap)
    assert b.eigenvalues.min() >= -1e-8 and b.eigenvalues.max() < 2
    x = rng.standard_normal(n)
    assert np.linalg.norm(b.V @ components(b, x) - x) <= 1e-8 * np.linalg.norm(x)
