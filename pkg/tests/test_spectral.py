import math

import numpy as np
import pytest
import scipy.linalg

from nilmetric.exact import as_exact
from nilmetric.spectral import (
    SpectralError,
    generalized_eigenspaces,
    lambda_pow,
    lambda_pow_exact,
    log_unipotent,
    reconstruct,
    spectral_map,
    subspace_angles_max,
)

SPIRAL = np.array([[2.0, -1.0], [1.0, 2.0]])


def test_spiral_clusters():
    sd = generalized_eigenspaces(SPIRAL)
    vals = sorted((c.value for c in sd.clusters), key=lambda z: z.imag)
    assert np.allclose(vals, [2 - 1j, 2 + 1j])
    assert all(c.multiplicity == 1 and c.diagonalizable for c in sd.clusters)


def test_identity_single_cluster():
    sd = generalized_eigenspaces(np.eye(3))
    assert len(sd.clusters) == 1
    c = sd.clusters[0]
    assert c.value == 1 and c.multiplicity == 3 and c.diagonalizable
    assert c.basis.shape == (3, 3)


def test_jordan_block_not_diagonalizable():
    sd = generalized_eigenspaces(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert len(sd.clusters) == 1
    assert sd.clusters[0].multiplicity == 2
    assert not sd.clusters[0].diagonalizable


def test_conjugate_bases():
    sd = generalized_eigenspaces(SPIRAL)
    pos = sd.cluster_of(2 + 1j)
    neg = sd.cluster_of(2 - 1j)
    assert np.allclose(pos.basis.conj(), neg.basis)


def test_spectral_map_spiral_phase():
    # oracle: diagonalize over C by brute force, apply a/|a|, map back
    sd = generalized_eigenspaces(SPIRAL)
    Mf = spectral_map(SPIRAL, lambda a: a / abs(a), sd)
    assert np.allclose(Mf, SPIRAL / math.sqrt(5), atol=1e-12)


def test_spectral_map_identity_function():
    M = np.random.default_rng(0).normal(size=(4, 4))
    Mf = spectral_map(M, lambda a: a)
    assert np.allclose(Mf, M, atol=1e-9)


def test_spectral_map_diagonal_log():
    M = np.diag([2.0, 4.0])
    Mf = spectral_map(M, lambda a: math.log(abs(a)))
    assert np.allclose(Mf, np.diag([math.log(2), math.log(4)]), atol=1e-12)


def test_spectral_map_rejects_asymmetric_function():
    with pytest.raises(SpectralError, match="conjugation"):
        spectral_map(SPIRAL, lambda a: a.imag)


def test_spectral_map_commutes_for_multiplicative_f():
    rng = np.random.default_rng(7)
    for _ in range(10):
        M = rng.normal(size=(4, 4))
        Mf = spectral_map(M, lambda a: a / abs(a))
        assert np.abs(Mf @ M - M @ Mf).max() < 1e-10 * max(1, np.abs(M).max() ** 2)


def test_lambda_pow_jordan_formula():
    A = np.array([[2.0, 1.0], [0.0, 2.0]])
    want = np.array([[9.0, 9.0 * math.log(3)], [0.0, 9.0]])
    assert np.allclose(lambda_pow(A, 3.0), want, atol=1e-12)


def test_lambda_pow_identity_at_one():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(3, 3))
    assert np.allclose(lambda_pow(A, 1.0), np.eye(3))


def test_lambda_pow_nilpotent_terminates():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert np.allclose(lambda_pow(A, math.e), [[1, 1], [0, 1]], atol=1e-14)


def test_lambda_pow_exact_rational():
    A = as_exact([[0, 1], [0, 0]])
    E = lambda_pow_exact(A, 1)  # lam = e
    assert E[0, 1] == 1
    with pytest.raises(ValueError):
        lambda_pow_exact(as_exact([[1, 0], [0, 1]]), 1)


def test_log_unipotent_simple():
    D = log_unipotent(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert np.allclose(D, [[0, 1], [0, 0]])
    assert np.allclose(log_unipotent(np.eye(3)), np.zeros((3, 3)))


def test_log_unipotent_exact_roundtrip():
    # round-trip against the exact exponential with log(lam) = 1
    rng = np.random.default_rng(5)
    N = as_exact(np.eye(4, dtype=int))
    for i in range(4):
        for j in range(i + 1, 4):
            N[i, j] = int(rng.integers(-3, 4))
    D = log_unipotent(N)
    E = lambda_pow_exact(D, 1)
    assert all(a == b for a, b in zip(E.reshape(-1), N.reshape(-1)))


def test_log_unipotent_rejects_non_unipotent():
    with pytest.raises(ValueError, match="stabilized"):
        log_unipotent(np.diag([2.0, 1.0]))


def test_block_reconstruction():
    rng = np.random.default_rng(11)
    for _ in range(10):
        M = rng.normal(size=(5, 5))
        sd = generalized_eigenspaces(M)
        assert reconstruct(sd, M) < 1e-9


def test_exp_matches_eigenspaces():
    # E^A_a = E^{exp A}_{exp a} as subspaces (small version; the full 50
    # matrix sweep runs in the acceptance suite)
    rng = np.random.default_rng(3)
    for _ in range(5):
        n = int(rng.integers(2, 6))
        A = rng.normal(size=(n, n))
        A *= 1.2 / max(1.0, np.abs(np.linalg.eigvals(A)).max())
        sa = generalized_eigenspaces(A)
        se = generalized_eigenspaces(scipy.linalg.expm(A))
        for c in sa.clusters:
            partner = se.cluster_of(np.exp(c.value), tol=1e-5)
            assert partner.multiplicity == c.multiplicity
            assert subspace_angles_max(c.basis, partner.basis) < 1e-7


def test_spectral_data_json():
    from nilmetric.spectral import spectral_data_to_json

    sd = generalized_eigenspaces(SPIRAL)
    obj = spectral_data_to_json(sd)
    assert obj["dim"] == 2
    vals = sorted((c["value"]["re"], c["value"]["im"]) for c in obj["clusters"])
    assert vals == [(2.0, -1.0), (2.0, 1.0)]
