from fractions import Fraction

import numpy as np
import pytest

from nilmetric.algebra import abelian, engel, heisenberg, rototranslation
from nilmetric.exact import as_exact, exact_eye, expm_nilpotent
from nilmetric.group import (
    GroupOps,
    bch_coefficients,
    bch_product,
    dilate,
    float_nilpotency_step,
    inverse,
)
from nilmetric.spectral import lambda_pow


def _rand_exact(rng, n):
    return as_exact(
        [Fraction(int(rng.integers(-6, 7)), int(rng.integers(1, 5))) for _ in range(n)]
    )


def test_bch_words_against_matrix_exponential():
    # oracle: on strictly upper triangular 7x7 matrices (nilpotent of
    # step 6), the word table must reproduce log(exp X exp Y) exactly
    rng = np.random.default_rng(7)

    def rand_upper(n):
        M = exact_eye(n) * 0
        for i in range(n):
            for j in range(i + 1, n):
                M[i, j] = Fraction(int(rng.integers(-3, 4)), int(rng.integers(1, 4)))
        return M

    def comm(A, B):
        return A @ B - B @ A

    def log_u(N):
        n = N.shape[0]
        psi = N - exact_eye(n)
        D, term = psi * 0, exact_eye(n)
        for j in range(1, n + 1):
            term = term @ psi
            if all(x == 0 for x in term.reshape(-1)):
                break
            D = D + term * Fraction((-1) ** (j + 1), j)
        return D

    words = bch_coefficients(6)
    assert len(words) == 40
    for _ in range(2):
        X, Y = rand_upper(7), rand_upper(7)
        oracle = log_u(expm_nilpotent(X) @ expm_nilpotent(Y))
        memo = {}
        args = (X, Y)

        def val(w):
            if w in memo:
                return memo[w]
            v = args[w[0]] if len(w) == 1 else comm(args[w[0]], val(w[1:]))
            memo[w] = v
            return v

        Z = X * 0
        for w, c in words:
            Z = Z + val(w) * c
        assert all(a == b for a, b in zip(Z.reshape(-1), oracle.reshape(-1)))


def test_heisenberg_closed_form():
    h = heisenberg()
    a, b, c = Fraction(1), Fraction(2), Fraction(3)
    x, y, z = Fraction(4), Fraction(5), Fraction(6)
    got = bch_product(h, as_exact([a, b, c]), as_exact([x, y, z]))
    assert list(got) == [a + x, b + y, c + z + (a * y - b * x) / 2]


def test_identity_and_inverse():
    h = heisenberg()
    rng = np.random.default_rng(1)
    x = _rand_exact(rng, 3)
    zero = as_exact([0, 0, 0])
    assert list(bch_product(h, x, zero)) == list(x)
    assert list(bch_product(h, x, inverse(x))) == [0, 0, 0]
    assert list(inverse(as_exact([1, 2, 3]))) == [-1, -2, -3]


def test_associativity_exact():
    rng = np.random.default_rng(2)
    for g in (heisenberg(), engel()):
        for _ in range(25):
            x, y, z = (_rand_exact(rng, g.dim) for _ in range(3))
            lhs = bch_product(g, bch_product(g, x, y), z)
            rhs = bch_product(g, x, bch_product(g, y, z))
            assert all(a == b for a, b in zip(lhs, rhs))


def test_antihomomorphism_of_inverse():
    g = engel()
    rng = np.random.default_rng(3)
    for _ in range(10):
        x, y = _rand_exact(rng, 4), _rand_exact(rng, 4)
        lhs = inverse(bch_product(g, x, y))
        rhs = bch_product(g, inverse(y), inverse(x))
        assert all(a == b for a, b in zip(lhs, rhs))


def test_non_nilpotent_rejected():
    r = rototranslation()
    with pytest.raises(ValueError, match="not nilpotent"):
        bch_product(r, as_exact([1, 0, 0]), as_exact([0, 1, 0]))


def test_dilate_diag():
    h = heisenberg()
    A = np.diag([1.0, 1.0, 2.0])
    assert np.allclose(dilate(h, A, 1.0, np.array([1.0, 1, 1])), [1, 1, 1])
    assert np.allclose(dilate(h, A, 2.0, np.array([1.0, 1, 1])), [2, 2, 4])


def test_dilate_rejects_non_derivation():
    h = heisenberg()
    with pytest.raises(ValueError, match="derivation"):
        dilate(h, np.eye(3), 2.0, np.array([1.0, 0, 0]))


def test_dilations_one_parameter_group():
    h = heisenberg()
    A = np.diag([1.0, 1.0, 2.0])
    rng = np.random.default_rng(4)
    for _ in range(10):
        x = rng.normal(size=3)
        lam, mu = rng.uniform(0.2, 3, size=2)
        d1 = dilate(h, A, lam, dilate(h, A, mu, x), check=False)
        d2 = dilate(h, A, lam * mu, x, check=False)
        assert np.allclose(d1, d2, atol=1e-12)


def test_dilations_are_group_automorphisms_float():
    g = engel()
    ops = GroupOps.for_algebra(g)
    A = np.diag([1.0, 1.0, 2.0, 3.0])
    rng = np.random.default_rng(5)
    X = rng.normal(size=(50, 4))
    Y = rng.normal(size=(50, 4))
    for lam in (0.3, 2.5):
        M = lambda_pow(A, lam)
        lhs = ops.product(X, Y) @ M.T
        rhs = ops.product(X @ M.T, Y @ M.T)
        assert np.abs(lhs - rhs).max() < 1e-10


def test_dilations_are_group_automorphisms_exact():
    # nilpotent derivation of the Heisenberg algebra: exact lam = e^q case
    h = heisenberg()
    A = as_exact([[0, 0, 0], [0, 0, 0], [1, 2, 0]])
    from nilmetric.algebra import check_derivation
    from nilmetric.spectral import lambda_pow_exact

    assert check_derivation(h, A)
    M = lambda_pow_exact(A, Fraction(3, 2))
    rng = np.random.default_rng(6)
    for _ in range(10):
        x, y = _rand_exact(rng, 3), _rand_exact(rng, 3)
        lhs = M @ bch_product(h, x, y)
        rhs = bch_product(h, M @ x, M @ y)
        assert all(a == b for a, b in zip(lhs, rhs))


def test_float_nilpotency_step():
    assert float_nilpotency_step(heisenberg().tensor) == 2
    assert float_nilpotency_step(engel().tensor) == 3
    assert float_nilpotency_step(abelian(3).tensor) == 1
    assert float_nilpotency_step(rototranslation().tensor) is None


def test_group_ops_matches_exact():
    g = engel()
    ops = GroupOps.for_algebra(g)
    rng = np.random.default_rng(8)
    x, y = _rand_exact(rng, 4), _rand_exact(rng, 4)
    exact = np.array([float(v) for v in bch_product(g, x, y)])
    approx = ops.product(
        np.array([float(v) for v in x])[None, :],
        np.array([float(v) for v in y])[None, :],
    )[0]
    assert np.allclose(exact, approx, atol=1e-12)
