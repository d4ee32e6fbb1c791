import itertools
import math

import numpy as np
import pytest

from lame_ci import assembly as A
from lame_ci import field as F
from lame_ci.geometry import DIRECTIONS
from lame_ci.params import LameParams, Schedule

P = LameParams()


def zero_grad(t):
    return np.zeros((3, 3, 8, 8, 8), complex)


def make_pert(N=20, K=1, cells=2, tau=0.7, i=0, signs=None, check=False, weight=None,
              grad_at=zero_grad):
    cut = A.CutoffSystem(tau, cells)
    blocks = A.AnchoredBlocks(grad_at, cut, i, P)
    w = weight if weight is not None else A.constant_weight(0.25, i)
    return A.Perturbation(cutoffs=cut, blocks=blocks, weight=w, carrier_freq=K,
                          direction_index=i, N=N, params=P, sign_overrides=signs,
                          check_resolution=check)


# ---------------------------------------------------------------- parity

@pytest.mark.parametrize("s,u,code", [(1, (1, 1, 1), 1), (0, (0, 0, 0), 16), (0, (1, 1, 1), 2)])
def test_parity_examples(s, u, code):
    assert A.parity(s, u) == code
    assert A.WaveIndex(s, u).parity_code == code


def test_parity_range_and_neighbours_differ():
    codes = set()
    for s, u in itertools.product(range(-2, 3), itertools.product(range(4), repeat=3)):
        c = A.parity(s, u)
        codes.add(c)
        # an index and any lattice neighbour carry different codes
        for ax in range(4):
            s2, u2 = s, list(u)
            if ax == 0:
                s2 += 1
            else:
                u2[ax - 1] += 1
            assert A.parity(s2, u2) != c
    assert codes == set(range(1, 17))


# ---------------------------------------------------------------- partitions

def test_space_partition_exact():
    rng = np.random.default_rng(0)
    x = rng.uniform(-np.pi, np.pi, (100000, 3))
    for cells in (2, 4):
        c = A.CutoffSystem(0.5, cells)
        tot = sum(c.chi(u, x) ** 2 for u in c.cell_indices())
        assert np.max(np.abs(tot - 1)) <= 1e-12


def test_time_partition_exact_and_plateau():
    c = A.CutoffSystem(0.37, 2)
    t = np.random.default_rng(1).uniform(-5, 5, 100000)
    tot = sum(c.theta(s, t) ** 2 for s in range(-20, 20))
    assert np.max(np.abs(tot - 1)) <= 1e-12
    lo, hi = c.slab_plateau(3)
    tp = np.linspace(lo, hi, 50)
    assert np.all(c.theta(3, tp) == 1.0)
    for s in (1, 2, 4, 5):
        assert np.all(c.theta(s, tp) == 0.0)


def test_theta_jet_matches_profile_and_derivatives():
    c = A.CutoffSystem(0.6, 2)
    for t in np.linspace(-0.2, 1.5, 23):
        for s in c.active_slabs(t):
            j = c.theta_jet(s, t)
            assert j.v == pytest.approx(float(c.theta(s, t)), abs=1e-14)
            h = 1e-5
            d1 = (c.theta(s, t + h) - c.theta(s, t - h)) / (2 * h)
            d2 = (c.theta(s, t + h) - 2 * c.theta(s, t) + c.theta(s, t - h)) / h**2
            assert j.d1 == pytest.approx(float(d1), abs=1e-6 * (1 + abs(j.d1)))
            assert j.d2 == pytest.approx(float(d2), abs=1e-3 * (1 + abs(j.d2)))


def test_cells_tile_torus_with_cube_support():
    c = A.CutoffSystem(0.5, 4)
    cells = c.cell_indices()
    assert len(cells) == 64
    x = np.random.default_rng(2).uniform(-np.pi, np.pi, (20000, 3))
    for u in cells[::7]:
        center, half = c.cell_support(u)
        d = np.abs((x - center + np.pi) % (2 * np.pi) - np.pi)
        outside = np.any(d >= half, axis=1)
        assert np.all(c.chi(u, x[outside]) == 0.0)
        # chi = 1 on the inner cube of half-width 3 pi / (4 cells)
        inner = np.all(d <= 0.75 * np.pi / 4 - 1e-12, axis=1)
        assert np.allclose(c.chi(u, x[inner]), 1.0, atol=1e-14)


def test_odd_cell_count_rejected():
    with pytest.raises(A.CutoffError):
        A.CutoffSystem(0.5, 3)


def test_build_cutoffs_uses_stage_scales():
    s = Schedule(mode="toy-override", lambdas=(4, 16), deltas=(1 / 16, 1 / 64))
    c = A.build_cutoffs(s, 0, 0)
    assert c.cells % 2 == 0 and c.cells >= 2


def test_disjointness_exact():
    c = A.CutoffSystem(0.5, 4)
    x = np.random.default_rng(3).uniform(-np.pi, np.pi, (40000, 3))
    t = np.linspace(-1, 3, 4001)
    cells = c.cell_indices()
    rng = np.random.default_rng(4)
    checked = 0
    for _ in range(300):
        I = A.WaveIndex(int(rng.integers(0, 4)), cells[rng.integers(64)])
        J = A.WaveIndex(int(rng.integers(0, 4)), cells[rng.integers(64)])
        if I.distance(J, 4) <= 1:
            continue
        checked += 1
        time_disjoint = abs(I.s - J.s) > 1
        if time_disjoint:
            assert np.all(c.theta(I.s, t) * c.theta(J.s, t) == 0.0)
        else:
            assert np.all(c.chi(I.upsilon, x) * c.chi(J.upsilon, x) == 0.0)
    assert checked > 100


# ---------------------------------------------------------------- weight

def test_weight_zero_stress():
    N = 8
    R = np.zeros((3, 3, N, N, N), complex)
    for i in range(6):
        d = A.weight_field(R, 0.3, i)
        assert np.allclose(F.to_grid(d, 3), math.sqrt(0.3) / 2, atol=1e-15)


def random_small_stress(N, scale, seed):
    rng = np.random.default_rng(seed)
    g = rng.uniform(-scale, scale, (3, 3, N, N, N))
    g = 0.5 * (g + np.swapaxes(g, 0, 1))
    return F.to_coeffs(g, 3), F.to_grid(F.to_coeffs(g, 3), 3)


def test_weight_f6_lower_bound_and_expansion():
    N, delta = 8, 0.2
    Rc, Rg = random_small_stress(N, 0.02 * delta, 5)
    dv = A.weight_values(Rg, delta, 5)
    assert np.all(dv**2 >= delta / 8)
    S = Rg / delta
    expansion = delta / 4 * (1 - 3 * S[2, 2] - 4 * S[0, 1] + S[0, 0] + S[1, 1])
    assert np.max(np.abs(dv**2 - expansion)) <= 1e-15


def test_weight_out_of_ball_names_point():
    N = 8
    R = np.zeros((3, 3, N, N, N))
    R[0, 0, 2, 3, 4] = 0.5
    with pytest.raises(A.WeightError, match=r"grid index \(2, 3, 4\)"):
        A.weight_values(R, 1.0, 0, F.grid_points(N, 3))


def test_weight_jet_time_derivatives():
    N, delta = 8, 0.2
    rng = np.random.default_rng(6)
    B = [random_small_stress(N, 0.01 * delta, 10 + j)[0] for j in range(3)]
    Rt = lambda t: B[0] + t * B[1] + t**2 * B[2]
    wj = A.weight_jet((Rt(0.3), B[1] + 0.6 * B[2], 2 * B[2]), delta, 1)
    h = 1e-4
    d = lambda t: A.weight_field(Rt(t), delta, 1)
    d1 = (d(0.3 + h) - d(0.3 - h)) / (2 * h)
    d2 = (d(0.3 + h) - 2 * d(0.3) + d(0.3 - h)) / h**2
    assert np.max(np.abs(wj.d1 - d1)) <= 1e-8
    assert np.max(np.abs(wj.d2 - d2)) <= 1e-5


# ---------------------------------------------------------------- perturbation

def test_snapshot_real_mean_free_and_split():
    p = make_pert(N=20)
    for t in (0.1, 0.45, 0.9):
        s = p.snapshot(t, (0, 1, 2), split=True)
        g = s.gradient()
        scale = np.max(np.abs(g))
        assert np.max(np.abs(g - s.w_p - s.w_c)) <= 1e-11 * scale
        for r in range(3):
            tot = s.total(r)
            assert np.max(np.abs(F.mean(tot, 3))) <= 1e-12
            tf = F.TorusField(tot[None], [t])
            assert tf.conjugate_symmetry_error() <= 1e-14


def test_split_with_variable_weight():
    N = 16
    rng = np.random.default_rng(7)
    x = F.grid_points(N, 3)
    d0 = 0.5 + 0.05 * np.sin(x[0]) * np.cos(x[2])
    wj = A.WeightJet(F.to_coeffs(d0, 3), F.to_coeffs(0.1 * d0, 3), F.to_coeffs(0.0 * d0, 3))
    p = make_pert(N=N, weight=wj)
    s = p.snapshot(0.4, (0,), split=True)
    g = s.gradient()
    assert np.max(np.abs(g - s.w_p - s.w_c)) <= 1e-11 * np.max(np.abs(g))


def test_time_channels_match_stencil_derivatives():
    p = make_pert(N=16)
    t = 0.4
    s = p.snapshot(t, (0, 1, 2))
    errs = []
    # steps large enough to stay above the roundoff floor
    for h in (0.08, 0.04, 0.02):
        times = t + h * np.arange(-4, 5)
        tf = F.TorusField(np.stack([p.snapshot(x).total(0) for x in times]), times)
        d1 = tf.time_derivative(1).coeffs[4]
        d2 = tf.time_derivative(2).coeffs[4]
        errs.append((np.max(np.abs(d1 - s.total(1))), np.max(np.abs(d2 - s.total(2)))))
    for (a1, a2), (b1, b2) in zip(errs, errs[1:]):
        # 6th-order stencils: a halving gains close to 2^6
        assert a1 / b1 > 2**5
        assert a2 / b2 > 2**5


def test_sign_flip_only_on_slab():
    p0 = make_pert(N=16)
    cut = p0.cutoffs
    flip = {A.WaveIndex(1, u): -1 for u in cut.cell_indices()}
    p1 = make_pert(N=16, signs=flip)
    lo, hi = cut.slab_support(1)
    for t in np.linspace(-0.5, 2.5, 31):
        diff = np.max(np.abs(p0.snapshot(t).total(0) - p1.snapshot(t).total(0)))
        if t <= lo or t >= hi:
            assert diff == 0.0
    a, b = cut.slab_plateau(1)
    t = 0.5 * (a + b)
    assert np.allclose(p1.snapshot(t).total(0), -p0.snapshot(t).total(0), atol=1e-15)


def test_amplitude_bounds_single_slab():
    K = 2
    p = make_pert(N=40, K=K, check=False)
    a, b = p.cutoffs.slab_plateau(1)
    s = p.snapshot(0.5 * (a + b), (0,), split=True)
    dl = math.sqrt(0.25)
    up = np.max(np.abs(F.to_grid(s.principal[0], 3)))
    wp = np.max(np.abs(F.to_grid(s.w_p, 3)))
    # sum_I theta chi <= sqrt(#overlaps) = 4 by Cauchy-Schwarz
    assert up <= 2 * dl / K
    assert wp <= 2 * math.sqrt(2) * dl


def test_resolution_guard():
    with pytest.raises(A.ResolutionError):
        make_pert(N=64, K=2, check=True)
    make_pert(N=66, K=2, check=True)


def test_missing_block_and_non_integer_carrier():
    cut = A.CutoffSystem(0.7, 2)
    p = A.Perturbation(cutoffs=cut, blocks=A.BlockTable({}), weight=A.constant_weight(0.2, 0),
                       carrier_freq=1, direction_index=0, N=8, params=P, check_resolution=False)
    with pytest.raises(A.AssemblyError, match="no building block"):
        p.snapshot(0.3)
    with pytest.raises(A.AssemblyError):
        A.Perturbation(cutoffs=cut, blocks=A.BlockTable({}), weight=A.constant_weight(0.2, 0),
                       carrier_freq=1.5, direction_index=0, N=8, params=P)


def test_index_amplitude_partition():
    """2 |f|^2 sum_I |u_I|^2 = d^2 pointwise (partition of unity)."""
    p = make_pert(N=8)
    t = 0.5
    x = np.random.default_rng(8).uniform(-np.pi, np.pi, (2000, 3))
    idx = [I for I, _ in p.active(t)]
    tot = sum(np.sum(p.index_vector(I, t, x) ** 2, axis=0) for I in idx)
    f2 = 2.0
    # d = delta^{1/2} / 2 with delta = 0.25
    assert np.max(np.abs(2 * f2 * tot - 0.0625)) <= 1e-13


def test_blocks_frozen_at_anchors():
    N = 8
    G0 = np.array([[0.0, 1e-3, 0], [2e-3, 0, 0], [0, 0, -1e-3]])

    def grad_at(t):
        out = np.zeros((3, 3, N, N, N), complex)
        out[:, :, 0, 0, 0] = G0 * (1 + t)
        return out
    p = make_pert(N=N, grad_at=grad_at)
    I = A.WaveIndex(2, (1, 0, 1))
    blk, G = p.blocks.get(I)
    assert np.allclose(G, G0 * (1 + 2 * p.cutoffs.tau))
    assert abs(blk.a2) + abs(blk.a3) > 0


def test_point_values_match_grid():
    N = 8
    rng = np.random.default_rng(9)
    c = F.to_coeffs(rng.standard_normal((2, N, N, N)), 3)
    X = F.grid_points(N, 3)
    pts = np.stack([X[j][1, 2, 3] for j in range(3)])[None]
    v = A.point_values(c, pts)
    assert np.allclose(v[:, 0], F.to_grid(c, 3)[:, 1, 2, 3], atol=1e-12)


def test_spectral_mass_fraction_decreases_with_carrier():
    """Mass outside [K/2, 64 K] shrinks as the carrier grows relative to the cutoffs."""
    out = []
    for K, N in ((1, 40), (2, 72)):
        p = make_pert(N=N, K=K)
        a, b = p.cutoffs.slab_plateau(1)
        s = p.snapshot(0.5 * (a + b))
        out.append(A.spectral_mass_outside(s.principal[0], K / 2, 16 * math.sqrt(2) * K * 2))
    assert out[1] < out[0]
