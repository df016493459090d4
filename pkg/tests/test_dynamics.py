import math

import numpy as np
import pytest

import fuzzboltz as fb
from fuzzboltz.dynamics import (
    CFLError,
    DynamicsError,
    SimConfig,
    advect,
    discrete_maxwellian,
    initial_condition,
    run,
    strang_step,
)
from fuzzboltz.grid import DistributionFunction, l1_distance, moments, _wrap
from fuzzboltz.kernels import build_spatial_kernel

from conftest import maxwellian_on, random_f


# --- advect -----------------------------------------------------------------


def test_advect_constant_in_x_bitwise(small_grid):
    f = maxwellian_on(small_grid)
    out = advect(f, 0.0137)
    assert np.array_equal(out.values, f.values)


def test_advect_integer_shift_is_permutation():
    g = fb.make_grid(1, 1.0, 8, 6.0, 8, 8)
    f = random_f(g, seed=50)
    # pick dt so the fastest positive node moves exactly 2 cells
    a0 = g.Nv - 1
    dt = 2 * g.dx_cell / g.v_axis[a0]
    out = advect(f, dt)
    vals = f.values.reshape(g.Nx, g.Nv, g.Nv)
    got = out.values.reshape(g.Nx, g.Nv, g.Nv)
    assert np.array_equal(got[:, a0, :], np.roll(vals[:, a0, :], 2, axis=0))


def test_advect_roundtrip_integer_exact():
    g = fb.make_grid(1, 1.0, 8, 4.0, 8, 8)
    f = random_f(g, seed=51)
    dt = g.dx_cell / g.v_axis[-1]
    back = advect(advect(f, dt), -dt)
    # node velocities are +-(2k-1)*dv/2; with dt = dx/vmax' the shifts are
    # rational; only exact-integer slices return bitwise, so compare those
    vals = f.values.reshape(g.Nx, g.Nv, g.Nv)
    got = back.values.reshape(g.Nx, g.Nv, g.Nv)
    assert np.array_equal(got[:, -1, :], vals[:, -1, :])
    assert np.array_equal(got[:, 0, :], vals[:, 0, :])


def test_advect_roundtrip_error_refines_in_x():
    errs = {}
    for Nx in (16, 32, 64):
        g = fb.make_grid(1, 1.0, Nx, 6.0, 8, 8)
        dens = 1.0 + 0.5 * np.cos(2 * np.pi * g.x_axis)
        M = np.exp(-g.vsq / 2) / (2 * np.pi)
        f = DistributionFunction(g, dens[:, None] * M[None, :])
        dt = 0.0137
        errs[Nx] = l1_distance(f, advect(advect(f, dt), -dt))
    assert errs[32] < errs[16]
    assert errs[64] < errs[32]
    assert errs[16] / errs[32] >= 1.5  # at least first order


def test_advect_conserves_slice_mass_and_positivity(small_grid):
    f = random_f(small_grid, seed=52)
    out = advect(f, 0.003)
    assert np.all(out.values >= 0.0)
    sl_in = f.values.sum(axis=0)
    sl_out = out.values.sum(axis=0)
    assert np.abs(sl_out - sl_in).max() <= 1e-13 * max(1.0, sl_in.max())


def test_advect_2d_mass():
    g = fb.make_grid(2, 1.0, 6, 6.0, 8, 8)
    f = random_f(g, seed=53)
    out = advect(f, 0.007)
    assert moments(out).mass == pytest.approx(moments(f).mass, rel=1e-13)
    assert np.all(out.values >= 0.0)


def test_transport_reversibility_integer_steps():
    # pure transport: N forward then N backward integer-shift steps is exact
    g = fb.make_grid(1, 1.0, 8, 4.0, 8, 8)
    f0 = random_f(g, seed=54)
    dt = g.dx_cell / g.v_axis[-1] * 8.0  # all slices shift integer cells
    # (2k-1)/15 * 8 cells: not integer for all k; use per-slice exactness of
    # the fastest slice only when fractional -- instead test the documented
    # property with a velocity grid whose shifts are all integers:
    f = f0
    shifts = g.v_axis * dt / g.dx_cell
    if not np.allclose(shifts, np.round(shifts)):
        # construct dt making every node an integer shift: v = (2k-1)*dv/2,
        # dt = 2*dx/dv makes shift = 2k-1 cells
        dt = 2.0 * g.dx_cell / g.dv_cell
    for _ in range(3):
        f = advect(f, dt)
    for _ in range(3):
        f = advect(f, -dt)
    assert np.array_equal(f.values, f0.values)


# --- initial conditions -----------------------------------------------------


def test_ic_maxwellian_moments(default_grid):
    f = initial_condition("maxwellian", {}, default_grid)
    m = moments(f)
    assert abs(m.mass - 1.0) <= 1e-6
    assert abs(m.energy - 2.0) <= 1e-6
    assert m.momentum[0] == 0.0


def test_ic_modulated_a0_equals_maxwellian(small_grid):
    f0 = initial_condition("maxwellian", {}, small_grid)
    f1 = initial_condition("x_modulated_maxwellian", {"a": 0.0}, small_grid)
    assert np.array_equal(f0.values, f1.values)


def test_ic_modulated_rejects_large_a(small_grid):
    with pytest.raises(ValueError):
        initial_condition("x_modulated_maxwellian", {"a": 1.0}, small_grid)


def test_ic_indicator_box_mass(small_grid):
    f = initial_condition("indicator_box", {"v1_lo": -2, "v1_hi": 2, "v2_lo": -1, "v2_hi": 1}, small_grid)
    assert moments(f).mass == pytest.approx(1.0, rel=1e-13)


def test_ic_unknown_id(small_grid):
    with pytest.raises(ValueError):
        initial_condition("bimaxwellian", {}, small_grid)


def test_ic_unused_params(small_grid):
    with pytest.raises(ValueError):
        initial_condition("maxwellian", {"a": 0.3}, small_grid)


def test_ic_two_bump_even(small_grid):
    f = initial_condition("two_bump_v", {"u0": 1.4}, small_grid)
    m = moments(f)
    assert m.momentum[0] == 0.0 and m.momentum[1] == 0.0
    assert f.is_x_uniform()


def test_ic_custom_snapshot_roundtrip(tmp_path, small_grid):
    from fuzzboltz.io import write_snapshot

    f = random_f(small_grid, seed=55)
    path = tmp_path / "ic.fbz"
    write_snapshot(path, f, 0.25)
    f2 = initial_condition("custom_snapshot", {"path": str(path)}, small_grid)
    assert np.array_equal(f2.values, f.values)


def test_discrete_maxwellian_is_collision_fixed_point(maxwell_kernel):
    g = fb.make_grid(1, 1.0, 2, 6.0, 32, 16)
    f = discrete_maxwellian(g, maxwell_kernel)
    from fuzzboltz.collision import q_classical

    cf = q_classical(f, maxwell_kernel)
    assert np.abs(cf.projected).max() <= 1e-12 * f.values.max()
    # close to the sampled Gaussian, with matched leading moments
    fs = maxwellian_on(g)
    assert l1_distance(f, fs) <= 5e-2
    m, ms = moments(f), moments(fs)
    assert m.mass == pytest.approx(ms.mass, rel=1e-6)


# --- strang step and run ----------------------------------------------------


def test_strang_mass_exact_per_step(small_grid, maxwell_kernel):
    f = random_f(small_grid, seed=56)
    sk = build_spatial_kernel(0.3, small_grid)
    out, info = strang_step(f, 0.002, sk, maxwell_kernel)
    m0 = moments(f)
    m1 = moments(out)
    assert abs(m1.mass - m0.mass) <= 1e-13 * m0.mass
    norm = abs(m0.momentum[0]) + abs(m0.momentum[1]) + m0.energy
    drift = abs(m1.momentum[0] - m0.momentum[0]) + abs(m1.momentum[1] - m0.momentum[1]) + abs(
        m1.energy - m0.energy
    )
    assert drift - np.abs(info.clip_moment_budget[1:]).sum() <= 1e-12 * norm


def test_strang_cfl_refusal(small_grid, maxwell_kernel):
    f = random_f(small_grid, seed=57, scale=100.0)  # huge density -> large L
    with pytest.raises(CFLError):
        strang_step(f, 1.0, None, maxwell_kernel, cfl_eta=0.5)


def test_run_substepping_recovers(maxwell_kernel):
    # dt chosen so dt*maxL slightly exceeds eta: run must split the step
    g = fb.make_grid(1, 1.0, 4, 6.0, 12, 8)
    cfg = SimConfig(
        dx=1, Lx=1.0, Nx=4, vmax=6.0, Nv=12, Nomega=8, mu=0.0,
        mode="local", sigma=None, ic_id="maxwellian",
        ic_params={"rho": 3.0}, T_final=0.4, dt=0.2, cfl_eta=0.5,
    )
    traj = run(cfg)
    assert len(traj.records) == 3
    r0, rT = traj.records[0], traj.records[-1]
    assert abs(rT.mass - r0.mass) <= 1e-12 * r0.mass


def test_run_zero_T_is_ic_only(small_grid):
    cfg = SimConfig(Nx=8, Nv=16, Nomega=8, mode="local", sigma=None,
                    ic_id="maxwellian", T_final=0.0, dt=0.01)
    traj = run(cfg)
    assert len(traj.snapshots) == 1
    assert traj.times == [0.0]


def test_run_records_every_step():
    cfg = SimConfig(Nx=4, Nv=8, Nomega=8, mode="fuzzy", sigma=0.3,
                    ic_id="two_bump_v", ic_params={"u0": 1.0},
                    T_final=0.05, dt=0.01, output_stride=2)
    traj = run(cfg)
    assert len(traj.records) == 6
    assert len(traj.snapshots) == 4  # t = 0, 0.02, 0.04, 0.05(final)
    assert traj.snapshot_times[-1] == pytest.approx(0.05)
    ts = [r.t for r in traj.records]
    assert all(b > a for a, b in zip(ts, ts[1:]))


def test_run_deterministic_rerun():
    cfg = SimConfig(Nx=8, Nv=12, Nomega=8, mu=0.5, mode="fuzzy", sigma=0.2,
                    ic_id="x_modulated_maxwellian", ic_params={"a": 0.3},
                    T_final=0.05, dt=0.01)
    t1 = run(cfg)
    t2 = run(cfg)
    for a, b in zip(t1.snapshots, t2.snapshots):
        assert np.array_equal(a.values, b.values)


def test_run_thread_count_invariance():
    cfg = SimConfig(Nx=8, Nv=12, Nomega=8, mu=0.5, mode="fuzzy", sigma=0.2,
                    ic_id="x_modulated_maxwellian", ic_params={"a": 0.3},
                    T_final=0.03, dt=0.01)
    t1 = run(cfg, threads=1)
    t2 = run(cfg, threads=2)
    for a, b in zip(t1.snapshots, t2.snapshots):
        assert np.array_equal(a.values, b.values)


def test_fuzzy_equals_local_bitwise_on_uniform():
    def cfg(mode, sigma):
        return SimConfig(Nx=8, Nv=12, Nomega=8, mu=0.0, mode=mode, sigma=sigma,
                         ic_id="two_bump_v", ic_params={"u0": 1.4},
                         T_final=0.05, dt=0.01)

    t_local = run(cfg("local", None))
    for s in (0.4, 0.1):
        t_fuzzy = run(cfg("fuzzy", s))
        for a, b in zip(t_fuzzy.snapshots, t_local.snapshots):
            assert np.array_equal(a.values, b.values)


def test_config_validation_errors():
    with pytest.raises(ValueError):
        SimConfig(mode="fuzzy", sigma=0.0).validate()
    with pytest.raises(ValueError):
        SimConfig(mode="middle").validate()
    with pytest.raises(ValueError):
        SimConfig(dt=-0.01).validate()
    with pytest.raises(ValueError):
        SimConfig(T_final=1.0, dt=0.3).validate()  # not an integer multiple
    with pytest.raises(ValueError):
        SimConfig(cfl_eta=1.5).validate()
    with pytest.raises(ValueError):
        SimConfig(ic_id="nope").validate()
