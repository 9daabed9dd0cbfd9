import numpy as np
import pytest

from skmtl.errors import InvalidInput, NotPSD, RefusedTooLarge
from skmtl.kernels import LINEAR, KernelSpec, kernel_matrix
from skmtl.model import Hyperparams, StructureMatrix, objective
from skmtl.spd_linalg import sym_eig
from skmtl.supervised import solve_supervised, solve_supervised_dense_oracle


def random_spd(rng, t, lo=0.3, hi=3.0):
    q, _ = np.linalg.qr(rng.standard_normal((t, t)))
    return (q * rng.uniform(lo, hi, size=t)) @ q.T


def random_instance(rng, n, t, d=4):
    x = rng.standard_normal((n, d))
    k = kernel_matrix(x, x, KernelSpec(LINEAR))
    y = rng.standard_normal((n, t))
    a = StructureMatrix(random_spd(rng, t))
    return k, y, a


def test_scalar_example():
    # n = 1, T = 1, K = [1], Y = [1], A = [1], lam = 1: (1 + 1) c = 1
    c = solve_supervised(np.array([[1.0]]), np.array([[1.0]]), StructureMatrix(np.array([[1.0]])), 1.0)
    assert c == pytest.approx(np.array([[0.5]]))


def test_identity_structure_decouples():
    # with A = I each task is an independent ridge solve (K + n lam I)^{-1} y_t
    rng = np.random.default_rng(0)
    n, t = 8, 3
    k, y, _ = random_instance(rng, n, t)
    lam = 0.3
    c = solve_supervised(k, y, StructureMatrix(np.eye(t)), lam)
    ref = np.linalg.solve(k + n * lam * np.eye(n), y)
    assert np.allclose(c, ref, atol=1e-10)


def test_stationarity_residual():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(2, 25))
        t = int(rng.integers(1, 6))
        k, y, a = random_instance(rng, n, t)
        lam = float(10.0 ** rng.uniform(-3, 1))
        c = solve_supervised(k, y, a, lam)
        resid = k @ c @ a.A + n * lam * c - y
        assert np.linalg.norm(resid) <= 1e-8 * np.linalg.norm(y)


def test_matches_dense_oracle():
    rng = np.random.default_rng(2)
    for _ in range(30):
        n = int(rng.integers(2, 21))
        t = int(rng.integers(1, 6))
        k, y, a = random_instance(rng, n, t)
        lam = float(10.0 ** rng.uniform(-3, 1))
        c = solve_supervised(k, y, a, lam)
        ref = solve_supervised_dense_oracle(k, y, a, lam)
        assert np.max(np.abs(c - ref)) <= 1e-8


def test_precomputed_eig_identical():
    rng = np.random.default_rng(3)
    k, y, a = random_instance(rng, 10, 3)
    direct = solve_supervised(k, y, a, 0.5)
    cached = solve_supervised(k, y, a, 0.5, k_eig=sym_eig(k))
    assert np.array_equal(direct, cached)


def test_basis_independence():
    # conjugating K and Y rows by an orthogonal Q maps C to Q C
    rng = np.random.default_rng(4)
    n, t = 9, 3
    k, y, a = random_instance(rng, n, t)
    lam = 0.2
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    c1 = solve_supervised(k, y, a, lam)
    c2 = solve_supervised(q @ k @ q.T, q @ y, a, lam)
    assert np.linalg.norm(q @ c1 - c2) <= 1e-10 * max(1.0, np.linalg.norm(c1))


def test_decreases_objective_vs_zero():
    rng = np.random.default_rng(5)
    for _ in range(10):
        n, t = 10, 3
        k, y, a = random_instance(rng, n, t)
        hp = Hyperparams(lam=0.3, mu=0.4, epsilon=0.1)
        c = solve_supervised(k, y, a, hp.lam)
        assert objective(k, c, a, y, hp) <= objective(k, np.zeros_like(y), a, y, hp) + 1e-12


def test_coefficient_norm_monotone_in_lam():
    rng = np.random.default_rng(6)
    k, y, a = random_instance(rng, 12, 4)
    lams = [0.01, 0.1, 1.0, 10.0]
    norms = [np.linalg.norm(solve_supervised(k, y, a, lam)) for lam in lams]
    assert all(n2 <= n1 + 1e-12 for n1, n2 in zip(norms, norms[1:]))


def test_rejects_indefinite_k():
    with pytest.raises(NotPSD):
        solve_supervised(
            np.diag([1.0, -0.5]), np.ones((2, 1)), StructureMatrix(np.eye(1)), 1.0
        )


def test_rejects_bad_lam_and_shapes():
    k = np.eye(2)
    y = np.ones((2, 1))
    a = StructureMatrix(np.eye(1))
    with pytest.raises(InvalidInput):
        solve_supervised(k, y, a, 0.0)
    with pytest.raises(InvalidInput):
        solve_supervised(np.eye(3), y, a, 1.0)
    with pytest.raises(InvalidInput):
        solve_supervised(k, y, StructureMatrix(np.eye(2)), 1.0)


def test_oracle_refuses_large():
    n, t = 30, 7  # n*T = 210 > 200
    with pytest.raises(RefusedTooLarge):
        solve_supervised_dense_oracle(
            np.eye(n), np.zeros((n, t)), StructureMatrix(np.eye(t)), 1.0
        )
