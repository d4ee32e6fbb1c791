import numpy as np
import pytest

from lame_ci import field as F
from lame_ci.field import TorusField


def sinx(N=16, d=3, times=(0.0,)):
    return TorusField.from_function(lambda t, X: np.sin(X[0]), N, times, d=d)


def test_derivative_of_sine():
    f = sinx()
    g = f.derivative((1, 0, 0)).grid()
    X = F.grid_points(16, 3)
    assert np.max(np.abs(g[0] - np.cos(X[0]))) < 1e-14


def test_derivative_of_exponential_mode():
    N, d = 12, 2
    k = np.array([3, -2])
    f = TorusField.from_function(lambda t, X: np.exp(1j * (k[0] * X[0] + k[1] * X[1])),
                                 N, [0.0], d=d, real=False)
    for j in range(d):
        alpha = tuple(int(i == j) for i in range(d))
        assert np.allclose(f.derivative(alpha).coeffs, 1j * k[j] * f.coeffs, atol=1e-14)


def test_derivative_order_guard():
    with pytest.raises(F.FieldError):
        sinx().derivative((3, 2, 0))


def test_round_trip_and_parseval():
    rng = np.random.default_rng(0)
    N, d = 16, 3
    v = F.to_grid(F.to_coeffs(rng.standard_normal((N,) * d), d), d)
    c = F.to_coeffs(v, d)
    assert np.max(np.abs(F.to_coeffs(F.to_grid(c, d), d) - c)) <= 1e-12 * np.max(np.abs(c))
    f = TorusField(c[None], [0.0], d=d)
    grid_l2 = np.sqrt(np.sum(v**2) * (2 * np.pi / N) ** d)
    assert f.l2()[0] == pytest.approx(grid_l2, rel=1e-10)
    assert f.conjugate_symmetry_error() < 1e-12


def test_derivatives_commute():
    rng = np.random.default_rng(1)
    c = F.to_coeffs(rng.standard_normal((8, 8, 8)), 3)
    a = F.derivative(F.derivative(c, 3, (1, 0, 0)), 3, (0, 1, 0))
    b = F.derivative(F.derivative(c, 3, (0, 1, 0)), 3, (1, 0, 0))
    assert np.array_equal(a, b)


def test_matrix_divergence_of_constant_and_mode():
    N, d = 8, 3
    A = np.zeros((d, d, N, N, N), complex)
    for j in range(d):
        A[j, j, 0, 0, 0] = 2.0
    assert np.max(np.abs(F.div_matrix(A, d))) == 0
    k = np.array([1, 2, -1])
    f = np.array([0.3, -1.0, 0.5])
    X = F.grid_points(N, d)
    e = np.exp(1j * sum(k[j] * X[j] for j in range(d)))
    Ag = np.einsum("m,n,...->mn...", f, f, e)
    got = F.to_grid(F.div_matrix(F.to_coeffs(Ag, d), d), d, real=False)
    want = np.einsum("p,...->p...", 1j * k.dot(f) * f, e)
    assert np.max(np.abs(got - want)) < 1e-12


def test_matrix_divergence_against_finite_differences():
    rng = np.random.default_rng(2)
    N, d = 8, 3
    c = F.to_coeffs(rng.standard_normal((d, d) + (N,) * d), d)
    c = (c + np.swapaxes(c, 0, 1)) / 2
    M = 4 * N
    fine = F.to_grid(c, d, M)
    h = 2 * np.pi / M
    # 16th-order central stencil on the refined grid
    offsets = np.arange(-8, 9)
    w = F.fd_weights(offsets * h, 0.0, 1)
    fd = np.zeros((d,) + (M,) * d)
    for n in range(d):
        for o, wo in zip(offsets, w):
            fd += wo * np.roll(fine[n], -o, axis=1 + n)
    exact = F.to_grid(F.div_matrix(c, d), d, M)
    assert np.max(np.abs(fd - exact)) / np.max(np.abs(exact)) < 1e-8


def test_time_derivatives():
    times = np.linspace(0, 1, 21)
    g = lambda X: np.cos(X[0]) * np.sin(X[1])
    f = TorusField.from_function(lambda t, X: t**2 * g(X), 8, times, d=2)
    d2 = f.time_derivative(2).grid()
    X = F.grid_points(8, 2)
    assert np.max(np.abs(d2 - 2 * g(X))) < 1e-10
    w = 3.0
    f = TorusField.from_function(lambda t, X: np.cos(w * t) * g(X), 8, times, d=2)
    d1 = f.time_derivative(1).grid()
    want = np.stack([-w * np.sin(w * t) * g(X) for t in times])
    assert np.max(np.abs(d1 - want)) < 1e-5
    const = TorusField.from_function(lambda t, X: g(X), 8, times, d=2)
    assert np.max(np.abs(const.time_derivative(1).grid())) < 1e-10
    with pytest.raises(F.FieldError):
        TorusField.from_function(lambda t, X: g(X), 8, times[:6], d=2).time_derivative(2)


def test_holder_norm_simple_cases():
    assert sinx(d=2).holder_norm(1) == pytest.approx(2.0, abs=1e-12)
    c = TorusField.from_function(lambda t, X: 0 * X[0] - 1.5, 8, [0.0], d=2)
    assert c.holder_norm(2) == pytest.approx(1.5, abs=1e-12)


@pytest.mark.parametrize("lam", [4, 8, 16])
def test_holder_seminorm_matches_dense_oracle(lam):
    # exact C^{0,1/2} seminorm of sin(lam x): sup_s 2 sin(s/2)/sqrt(s) * lam^{1/2}
    s = np.linspace(1e-4, np.pi, 200001)
    semi = np.max(2 * np.sin(s / 2) / np.sqrt(s)) * np.sqrt(lam)
    f = TorusField.from_function(lambda t, X: np.sin(lam * X[0]), 64, [0.0], d=2)
    est = f.holder_norm(0, 0.5, refine=4, neighbors=32) - 1.0
    assert est <= semi * (1 + 1e-9)
    assert est >= 0.95 * semi


def test_reality_preserved_by_products():
    rng = np.random.default_rng(3)
    a = F.to_coeffs(rng.standard_normal((8, 8)), 2)
    b = F.to_coeffs(rng.standard_normal((8, 8)), 2)
    p = TorusField(F.multiply(a, b, 2)[None], [0.0], d=2)
    assert p.conjugate_symmetry_error() < 1e-12


def test_save_load(tmp_path):
    f = sinx(d=2, times=(0.0, 0.5))
    f.save(tmp_path / "f.npz")
    g = TorusField.load(tmp_path / "f.npz")
    assert np.array_equal(f.coeffs, g.coeffs) and g.interval == f.interval
    f.to_csv(tmp_path / "f.csv")
    assert (tmp_path / "f.csv").read_text().startswith("x1,x2,c0")
