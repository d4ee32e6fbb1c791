import numpy as np
import pytest

from lame_ci import field as F
from lame_ci import operators as O
from lame_ci.field import TorusField


def mode(k, N=32, d=3, amp=1.0):
    X = F.grid_points(N, d)
    return TorusField.from_function(lambda t, X: amp * np.cos(sum(kj * x for kj, x in zip(k, X))),
                                    N, [0.0], d=d)


def test_band_project_examples():
    assert np.allclose(O.band_project(mode((0, 0, 0)), 0.25).coeffs, mode((0, 0, 0)).coeffs)
    f = mode((3, 0, 0))
    inside = np.sqrt(F.ksq(32, 3)) <= 4
    g = O.band_project(f, 0.25).coeffs
    assert np.array_equal(g[:, inside], f.coeffs[:, inside])
    assert np.max(np.abs(g - f.coeffs)) < 1e-15
    outside = np.sqrt(F.ksq(32, 3)) >= 8
    assert np.max(np.abs(O.band_project(mode((9, 0, 0)), 0.25).coeffs[:, outside])) == 0
    assert O.band_project(f, 0) is not None


def test_band_project_commutes_with_derivative():
    rng = np.random.default_rng(0)
    c = F.to_coeffs(rng.standard_normal((16, 16, 16)), 3)
    a = O.band_project_coeffs(F.derivative(c, 3, (1, 0, 1)), 3, 0.2)
    b = F.derivative(O.band_project_coeffs(c, 3, 0.2), 3, (1, 0, 1))
    assert np.max(np.abs(a - b)) <= 1e-15 * np.max(np.abs(a))


def quad_moments(kernel, n_max, npts=400):
    x, w = np.polynomial.legendre.leggauss(npts)
    phi = kernel(x)
    return np.array([np.sum(w * phi * x**n) for n in range(n_max + 1)])


@pytest.mark.parametrize("n0", [1, 5, 14, 22, 24])
def test_kernel_moments(n0):
    k = O.build_time_kernel(n0)
    m = quad_moments(k, n0 + 3)
    assert abs(m[0] - 1) < 1e-12
    assert np.max(np.abs(m[1:])) < 1e-10


def test_kernel_guard():
    with pytest.raises(O.OperatorError):
        O.build_time_kernel(41)
    with pytest.raises(O.OperatorError):
        O.build_time_kernel(0)


@pytest.mark.parametrize("n0", [1, 8, 24])
def test_polynomial_reproduction(n0):
    k = O.build_time_kernel(n0)
    ell = 0.1
    for p in range(n0 + 4):
        for t in (0.3, 0.55, 0.8):
            got = O.mollify_callable(lambda s: s**p, t, ell, k)
            assert got == pytest.approx(t**p, abs=1e-9)
    assert O.mollify_callable(lambda s: 1.0, 0.5, ell, k) == pytest.approx(1.0, abs=1e-12)


def test_mollified_derivatives():
    k = O.build_time_kernel(6)
    ell = 0.05
    got1 = O.mollify_callable(lambda s: s**3, 0.4, ell, k, order=1)
    got2 = O.mollify_callable(lambda s: s**3, 0.4, ell, k, order=2)
    assert got1 == pytest.approx(3 * 0.4**2, abs=1e-9)
    assert got2 == pytest.approx(6 * 0.4, abs=1e-8)


def test_time_mollify_field():
    k = O.build_time_kernel(1)
    times = np.linspace(0, 1, 41)
    g = lambda X: np.sin(X[0])
    f = TorusField.from_function(lambda t, X: t**2 * g(X), 8, times, d=2)
    ell = 0.1
    m = O.time_mollify(f, ell, k)
    assert m.interval == pytest.approx((ell, 1 - ell))
    X = F.grid_points(8, 2)
    want = np.stack([t**2 * g(X) for t in m.times])
    assert np.max(np.abs(m.grid() - want)) < 1e-9
    const = TorusField.from_function(lambda t, X: g(X), 8, times, d=2)
    assert np.max(np.abs(O.time_mollify(const, ell, k).coeffs - const.coeffs[0])) < 1e-12
    with pytest.raises(O.OperatorError):
        O.time_mollify(f, ell, k, target=(0.05, 0.5))


def test_time_mollify_cosine_deviation_small():
    k = O.build_time_kernel(4)
    w, ell = 2.0, 0.05
    got = O.mollify_callable(lambda s: np.cos(w * s), 0.3, ell, k)
    # Taylor remainder of order n0 + 4
    assert abs(got - np.cos(w * 0.3)) < (w * ell) ** 8


def test_leray_examples():
    N, d = 16, 3
    X = F.grid_points(N, d)
    grad_psi = TorusField.from_function(lambda t, X: np.stack([np.cos(X[0]), 0 * X[0], 0 * X[0]]),
                                        N, [0.0], d=d)
    assert np.max(np.abs(O.leray_project(grad_psi).coeffs)) < 1e-15
    v = TorusField.from_function(lambda t, X: np.stack([0 * X[0], np.cos(X[0]), 0 * X[0]]),
                                 N, [0.0], d=d)
    assert np.max(np.abs(O.leray_project(v).coeffs - v.coeffs)) < 1e-15
    rng = np.random.default_rng(0)
    c = F.to_coeffs(rng.standard_normal((d,) + (N,) * d), d)
    u = TorusField(c[None], [0.0], d=d)
    Pu = O.leray_project(u)
    assert np.max(np.abs(Pu.divergence().coeffs)) < 1e-12
    assert np.max(np.abs(O.leray_project(Pu).coeffs - Pu.coeffs)) < 1e-12
    assert np.max(np.abs(Pu.space_mean())) == 0


def test_inverse_divergence():
    N, d = 16, 3
    rng = np.random.default_rng(1)
    c = F.to_coeffs(rng.standard_normal((d,) + (N,) * d), d)
    v = TorusField(c[None], [0.0], d=d)
    R = O.inverse_divergence(v)
    assert R.symmetry_error() == 0
    mean = v.space_mean()
    back = R.divergence().coeffs[0].copy()
    target = c.copy()
    target[(Ellipsis, 0, 0, 0)] = 0
    assert np.max(np.abs(back - target)) <= 1e-11 * np.max(np.abs(c))
    const = TorusField(np.zeros_like(c)[None], [0.0], d=d)
    assert np.max(np.abs(O.inverse_divergence(const).coeffs)) == 0
    assert mean.shape == (1, d)


def test_inverse_divergence_of_divergence():
    N, d = 12, 3
    rng = np.random.default_rng(2)
    A = F.to_coeffs(rng.standard_normal((d, d) + (N,) * d), d)
    A = (A + np.swapaxes(A, 0, 1)) / 2
    divA = F.div_matrix(A, d)
    back = F.div_matrix(O.inverse_divergence_coeffs(divA, d), d)
    assert np.max(np.abs(back - divA)) <= 1e-11 * np.max(np.abs(divA))


def test_kernel_dump():
    text = O.build_time_kernel(2).dump()
    assert text.startswith("# n0 = 2")
