import numpy as np
import pytest

from lame_ci import geometry as G


def test_projectors_sum_to_identity():
    assert np.max(np.abs(sum(G.PROJECTORS) / 4 - np.eye(3))) < 1e-15


def test_identity_weights_are_quarter():
    for i in range(6):
        assert G.gamma_sq(np.eye(3), i) == 0.25


def test_reconstruction_single_offdiagonal():
    K = np.eye(3)
    K[0, 1] = K[1, 0] = 1 / 36
    assert np.max(np.abs(G.reconstruct(K) - K)) < 1e-14


def test_reconstruction_on_symmetric_basis():
    # the weights are affine, so the identity must hold on every basis matrix
    for a in range(3):
        for b in range(a, 3):
            E = np.zeros((3, 3))
            E[a, b] = E[b, a] = 1.0
            g = G.gamma_sq_all(E) - G.gamma_sq_all(np.zeros((3, 3)))
            assert np.allclose(np.einsum("i,imn->mn", g, G.PROJECTORS), E, atol=1e-15)


def test_random_reconstruction():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        E = rng.uniform(-1, 1, (3, 3))
        E = (E + E.T) / 2
        K = np.eye(3) + E / np.max(np.abs(E)) * G.R0 * rng.uniform()
        worst = max(worst, np.max(np.abs(G.reconstruct(K) - K)))
    assert worst <= 1e-13


def test_out_of_ball():
    K = np.eye(3)
    K[0, 1] = K[1, 0] = 0.5
    with pytest.raises(G.OutOfBallError):
        G.gamma_sq(K, 0)


def test_decompose_shifted():
    a = G.decompose_shifted(np.zeros((3, 3)), G.R0)
    assert np.allclose(a, 0.5)   # a_i**2 = 1/4
    rng = np.random.default_rng(1)
    R = rng.uniform(-1, 1, (3, 3))
    R = (R + R.T) / 2
    c = 2 * G.max_norm(R)
    a = G.decompose_shifted(R, c)
    assert np.all(a >= 0)
    lhs = np.einsum("i,imn->mn", a**2, G.PROJECTORS)
    assert np.max(np.abs(lhs - ((c / G.R0) * np.eye(3) - R))) < 1e-12
    with pytest.raises(ValueError):
        G.decompose_shifted(R, G.max_norm(R))


def test_f6_expansion():
    rng = np.random.default_rng(2)
    for _ in range(20):
        R = rng.uniform(-1, 1, (3, 3)) * 0.01
        R = (R + R.T) / 2
        expected = 0.25 * (1 - 3 * R[2, 2] - 4 * R[0, 1] + R[0, 0] + R[1, 1])
        assert G.gamma_sq(np.eye(3) - R, 5) == pytest.approx(expected, abs=1e-15)
