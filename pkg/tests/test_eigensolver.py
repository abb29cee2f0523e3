import numpy as np
import pytest
import scipy.sparse as sp

from treespec.eigensolver import (
    EigensolverError,
    Spectrum,
    cluster_multiplicities,
    merge_spectra,
    smallest_eigenpairs,
)


def interval_mixed_bc(n, L=1.0):
    """P1 discretization of -u'' on [0, L], Dirichlet left / Neumann right."""
    h = L / n
    main_k = np.full(n, 2.0 / h)
    main_k[-1] = 1.0 / h
    K = sp.diags([np.full(n - 1, -1.0 / h), main_k, np.full(n - 1, -1.0 / h)], [-1, 0, 1])
    main_m = np.full(n, 4.0 * h / 6.0)
    main_m[-1] = 2.0 * h / 6.0
    M = sp.diags([np.full(n - 1, h / 6.0), main_m, np.full(n - 1, h / 6.0)], [-1, 0, 1])
    return K.tocsr(), M.tocsr()


def test_interval_dirichlet_neumann_ground_state():
    K, M = interval_mixed_bc(256)
    spec = smallest_eigenpairs(K, M, 2)
    assert spec.values[0] == pytest.approx((np.pi / 2) ** 2, rel=1e-3)
    assert spec.values[1] == pytest.approx((3 * np.pi / 2) ** 2, rel=1e-3)


def test_identity_pencil():
    n = 40
    rng = np.random.default_rng(0)
    A = rng.standard_normal((n, n))
    M = A @ A.T + n * np.eye(n)
    spec = smallest_eigenpairs(sp.csr_matrix(M), sp.csr_matrix(M), 5)
    assert np.allclose(spec.values, 1.0, atol=1e-10)


def test_matches_dense_oracle_random_pencil():
    n = 50
    rng = np.random.default_rng(7)
    A = rng.standard_normal((n, n))
    K = A @ A.T + 0.1 * np.eye(n)
    B = rng.standard_normal((n, n))
    M = B @ B.T + n * np.eye(n)
    import scipy.linalg
    oracle = np.sort(scipy.linalg.eigh(K, M, eigvals_only=True))[:6]
    spec = smallest_eigenpairs(sp.csr_matrix(K), sp.csr_matrix(M), 6)
    assert np.allclose(spec.values, oracle, atol=1e-10)


def test_sparse_path_used_above_cutoff():
    K, M = interval_mixed_bc(2500)
    spec = smallest_eigenpairs(K, M, 3)
    exact = [((2 * m - 1) * np.pi / 2) ** 2 for m in (1, 2, 3)]
    assert np.allclose(spec.values, exact, rtol=1e-4)
    assert spec.residuals.max() < 1e-6


def test_vectors_m_orthonormal():
    K, M = interval_mixed_bc(300)
    spec = smallest_eigenpairs(K, M, 6)
    G = spec.vectors.T @ (M @ spec.vectors)
    assert np.abs(G - np.eye(6)).max() <= 1e-8


def test_residuals_recomputed_small():
    K, M = interval_mixed_bc(500)
    spec = smallest_eigenpairs(K, M, 4, tol=1e-10)
    for i, lam in enumerate(spec.values):
        u = spec.vectors[:, i]
        res = np.linalg.norm(K @ u - lam * (M @ u)) / np.linalg.norm(M @ u)
        assert res <= 2e-6


def test_monotone_under_psd_update():
    n = 60
    rng = np.random.default_rng(3)
    A = rng.standard_normal((n, n))
    K = A @ A.T + np.eye(n)
    M = np.eye(n)
    v = rng.standard_normal(n)
    K2 = K + np.outer(v, v)
    s1 = smallest_eigenpairs(sp.csr_matrix(K), sp.csr_matrix(M), 8)
    s2 = smallest_eigenpairs(sp.csr_matrix(K2), sp.csr_matrix(M), 8)
    assert np.all(s2.values >= s1.values - 1e-10)


def test_indefinite_K_negative_shift_retry():
    K, M = interval_mixed_bc(2500)
    # shift the operator down so several eigenvalues are negative and the
    # factorization of K at sigma=0 sees an indefinite matrix
    K = (K - 30.0 * M).tocsr()
    spec = smallest_eigenpairs(K, M, 3)
    exact = [((2 * m - 1) * np.pi / 2) ** 2 - 30.0 for m in (1, 2, 3)]
    assert np.allclose(spec.values, exact, rtol=1e-3, atol=1e-3)


def test_bad_request_rejected():
    K, M = interval_mixed_bc(10)
    with pytest.raises(EigensolverError):
        smallest_eigenpairs(K, M, 0)
    with pytest.raises(EigensolverError):
        smallest_eigenpairs(K, M, 11)


def make_spec(values, mults=None):
    values = np.asarray(values, dtype=float)
    if mults is None:
        mults = np.ones(len(values), dtype=int)
    return Spectrum(values=values, multiplicities=np.asarray(mults))


def test_merge_basic():
    merged = merge_spectra([(make_spec([1.0, 3.0]), 1), (make_spec([2.0]), 2)])
    assert merged.values.tolist() == [1.0, 2.0, 3.0]
    assert merged.multiplicities.tolist() == [1, 2, 1]


def test_merge_single_input_unchanged():
    s = make_spec([0.5, 1.5, 2.5], [1, 2, 1])
    merged = merge_spectra([(s, 1)])
    assert merged.values.tolist() == s.values.tolist()
    assert merged.multiplicities.tolist() == s.multiplicities.tolist()


def test_merge_permutation_invariant():
    rng = np.random.default_rng(11)
    for _ in range(100):
        parts = []
        for _ in range(rng.integers(1, 5)):
            vals = np.sort(rng.uniform(0, 10, size=rng.integers(1, 6)))
            parts.append((make_spec(vals), int(rng.integers(1, 4))))
        ref = merge_spectra(parts)
        perm = list(np.random.default_rng(0).permutation(len(parts)))
        shuffled = merge_spectra([parts[i] for i in perm])
        assert np.array_equal(ref.expanded_values(), shuffled.expanded_values())


def test_merge_drops_zero_multiplicity():
    merged = merge_spectra([(make_spec([1.0]), 1), (make_spec([0.5]), 0)])
    assert merged.values.tolist() == [1.0]


def test_cluster_multiplicities():
    s = make_spec([1.0, 1.0 + 1e-12, 2.0])
    c = cluster_multiplicities(s)
    assert c.values.tolist() == [1.0, 2.0]
    assert c.multiplicities.tolist() == [2, 1]
