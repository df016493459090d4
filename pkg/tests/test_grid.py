import math

import numpy as np
import pytest

import fuzzboltz as fb
from fuzzboltz.grid import DistributionFunction, GridError, l1_distance, moments, weighted_norm

from conftest import maxwellian_on, random_f


def test_make_grid_basic():
    g = fb.make_grid(1, 1.0, 8, 6.0, 8, 8)
    assert g.n_xcells == 8
    assert g.n_vcells == 64
    assert g.domega == pytest.approx(math.pi / 4.0, abs=0.0)


def test_make_grid_rejects_odd_nv():
    with pytest.raises(GridError):
        fb.make_grid(1, 1.0, 8, 6.0, 7, 8)


def test_make_grid_rejects_bad_extents():
    with pytest.raises(GridError):
        fb.make_grid(1, -1.0, 8, 6.0, 8, 8)
    with pytest.raises(GridError):
        fb.make_grid(1, 1.0, 8, 0.0, 8, 8)
    with pytest.raises(GridError):
        fb.make_grid(3, 1.0, 8, 6.0, 8, 8)
    with pytest.raises(GridError):
        fb.make_grid(1, 1.0, 8, 6.0, 8, 7)


def test_make_grid_2d():
    g = fb.make_grid(2, 1.0, 8, 6.0, 16, 16)
    assert g.n_xcells == 64
    assert g.n_vcells == 256


def test_velocity_axis_mirror_exact():
    g = fb.make_grid(1, 1.0, 4, 5.0, 12, 8)
    assert np.all(g.v_axis[::-1] == -g.v_axis)


def test_moments_maxwellian(default_grid):
    f = maxwellian_on(default_grid)
    m = moments(f)
    assert abs(m.mass - 1.0) <= 1e-6
    assert abs(m.energy - 2.0) <= 1e-6
    assert m.momentum[0] == 0.0 and m.momentum[1] == 0.0


def test_moments_zero(default_grid):
    f = DistributionFunction.zeros(default_grid)
    m = moments(f)
    assert m.mass == 0.0 and m.energy == 0.0
    assert np.all(m.momentum == 0.0)


def test_moments_single_cell():
    g = fb.make_grid(1, 1.0, 4, 6.0, 8, 8)
    # node with velocity (1.125, 0.375): dv = 1.5
    i0 = int(np.argmin(np.abs(g.v_axis - 1.125)))
    i1 = int(np.argmin(np.abs(g.v_axis - 0.375)))
    vals = np.zeros((g.n_xcells, g.n_vcells))
    vals[2, i0 * g.Nv + i1] = 1.0
    m = moments(DistributionFunction(g, vals))
    w = g.wx * g.wv
    assert m.mass == pytest.approx(w, rel=1e-15)
    assert m.momentum[0] == pytest.approx(w * g.v_axis[i0], rel=1e-15)
    assert m.momentum[1] == pytest.approx(w * g.v_axis[i1], rel=1e-15)
    assert m.energy == pytest.approx(w * (g.v_axis[i0] ** 2 + g.v_axis[i1] ** 2), rel=1e-15)


def test_moments_linear(small_grid):
    fa = random_f(small_grid, seed=1)
    fb_ = random_f(small_grid, seed=2)
    a, b = 0.7, 1.9
    comb = DistributionFunction(small_grid, a * fa.values + b * fb_.values)
    mc = moments(comb).as_array()
    ma = moments(fa).as_array()
    mb = moments(fb_).as_array()
    assert np.allclose(mc, a * ma + b * mb, rtol=1e-13, atol=1e-15)


def test_momentum_zero_for_even_f(small_grid):
    rng = np.random.default_rng(9)
    g = small_grid
    half = rng.random((g.n_xcells, g.Nv // 2, g.Nv))
    sym0 = np.concatenate([half, half[:, ::-1, :]], axis=1)  # even in v1
    sym = 0.5 * (sym0 + sym0[:, :, ::-1])  # and in v2
    m = moments(DistributionFunction(g, sym.reshape(g.n_xcells, g.n_vcells)))
    assert m.momentum[0] == 0.0 and m.momentum[1] == 0.0


def test_weighted_norm_p0_q0_exact(small_grid):
    f = random_f(small_grid, seed=3)
    assert weighted_norm(f, 0.0, 0.0) == 2.0 * moments(f).mass


def test_weighted_norm_zero(small_grid):
    assert weighted_norm(DistributionFunction.zeros(small_grid), 1.0, 2.0) == 0.0


def test_weighted_norm_maxwellian_q2(default_grid):
    # (<x>^0 + <v>^2) integrates to 2*mass + energy = 4 for the unit
    # Maxwellian; discretisation error checked against the continuum value
    f = maxwellian_on(default_grid)
    assert abs(weighted_norm(f, 0.0, 2.0) - 4.0) <= 1e-5


def test_l1_distance_metric(small_grid):
    f = random_f(small_grid, seed=4)
    g2 = random_f(small_grid, seed=5)
    h = random_f(small_grid, seed=6)
    assert l1_distance(f, f) == 0.0
    assert l1_distance(f, g2) == l1_distance(g2, f)
    assert l1_distance(f, h) <= l1_distance(f, g2) + l1_distance(g2, h) + 1e-15


def test_l1_distance_scaling(small_grid):
    vals = random_f(small_grid, seed=7).values
    vals *= 1.0 / (vals.sum() * small_grid.wx * small_grid.wv)  # unit mass
    f = DistributionFunction(small_grid, vals)
    f2 = DistributionFunction(small_grid, 2.0 * vals)
    assert l1_distance(f2, f) == pytest.approx(1.0, rel=1e-12)


def test_l1_distance_disjoint_indicators():
    g = fb.make_grid(1, 1.0, 4, 6.0, 8, 8)
    a = np.zeros((g.n_xcells, g.n_vcells))
    b = np.zeros((g.n_xcells, g.n_vcells))
    a[0, 3] = 1.0
    b[1, 7] = 1.0
    d = l1_distance(DistributionFunction(g, a), DistributionFunction(g, b))
    assert d == pytest.approx(2.0 * g.wx * g.wv, rel=1e-15)


def test_l1_distance_grid_mismatch(tiny_grid, small_grid):
    with pytest.raises(GridError):
        l1_distance(DistributionFunction.zeros(tiny_grid), DistributionFunction.zeros(small_grid))


def test_distribution_validation(small_grid):
    bad = np.zeros((small_grid.n_xcells, small_grid.n_vcells))
    bad[0, 0] = -1e-9
    with pytest.raises(GridError):
        DistributionFunction(small_grid, bad)
    nan = np.zeros((small_grid.n_xcells, small_grid.n_vcells))
    nan[0, 0] = np.nan
    with pytest.raises(GridError):
        DistributionFunction(small_grid, nan)
    with pytest.raises(GridError):
        DistributionFunction(small_grid, np.zeros((3, 3)))
