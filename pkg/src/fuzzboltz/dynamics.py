"""Free transport, Strang splitting, and the time loop with diagnostics.

One step is advect(dt/2) o collide(dt) o advect(dt/2); the collision substep
is explicit midpoint (RK2) on the moment-projected collision field, guarded
by the positivity condition dt * max L(ff) <= cfl_eta.  Negative values from
interpolation/RK are clipped to zero and the clipped mass is removed
proportionally from the positive part, keeping mass exact; the clipped mass
and the induced momentum/energy perturbation are recorded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .collision import (
    CollisionField,
    conserve_project,
    get_tables,
    loss_rate,
    q_gain,
)
from .diagnostics import DiagnosticsRecord, dissipation, entropy, moment_s
from .grid import (
    DistributionFunction,
    GridError,
    MomentVector,
    PhaseGrid,
    _wrap,
    make_grid,
    moments,
)
from .kernels import (
    CollisionKernelSpec,
    SpatialKernelSpec,
    build_spatial_kernel,
    convolve_x,
    make_kernel,
)

__all__ = [
    "SimConfig",
    "Trajectory",
    "CFLError",
    "DynamicsError",
    "advect",
    "strang_step",
    "run",
    "initial_condition",
    "discrete_maxwellian",
]

KNOWN_ICS = (
    "maxwellian",
    "discrete_maxwellian",
    "two_bump_v",
    "x_modulated_maxwellian",
    "indicator_box",
    "custom_snapshot",
)


class CFLError(RuntimeError):
    """Positivity condition dt * max L(ff) <= eta violated; carries the
    largest admissible dt."""

    def __init__(self, admissible_dt: float):
        super().__init__(f"collision substep refused; admissible dt <= {admissible_dt:.3e}")
        self.admissible_dt = admissible_dt


class DynamicsError(RuntimeError):
    """Numerical abort (non-finite values or persistent substep failure)."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


@dataclass
class SimConfig:
    """Everything needed to reproduce one run bit-for-bit."""

    dx: int = 1
    Lx: float = 1.0
    Nx: int = 32
    vmax: float = 6.0
    Nv: int = 32
    Nomega: int = 16

    mu: float = 0.0
    b_profile: str = "constant"
    b_value: float = 1.0 / (2.0 * math.pi)

    mode: str = "fuzzy"  # 'fuzzy' or 'local'
    sigma: float | None = 0.4
    K_images: int = 3

    ic_id: str = "maxwellian"
    ic_params: dict = field(default_factory=dict)

    T_final: float = 1.0
    dt: float = 0.01
    cfl_eta: float = 0.5
    output_stride: int = 1
    seed: int = 0

    s_moments: tuple = ()
    dissipation: bool = False
    dissipation_stride: int = 5

    def validate(self):
        if self.mode not in ("fuzzy", "local"):
            raise ValueError(f"mode must be 'fuzzy' or 'local', got {self.mode!r}")
        if self.mode == "fuzzy":
            if self.sigma is None:
                raise ValueError("mode=fuzzy requires sigma")
            if not 0.0 < self.sigma <= 1.0:
                raise ValueError(
                    f"sigma must lie in (0, 1], got {self.sigma} "
                    "(use mode=local for the classical limit)"
                )
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.T_final < self.dt and self.T_final != 0.0:
            raise ValueError("T_final must be 0 or >= dt")
        if not 0.0 < self.cfl_eta < 1.0:
            raise ValueError(f"cfl_eta must lie in (0, 1), got {self.cfl_eta}")
        if self.output_stride < 1:
            raise ValueError("output_stride must be >= 1")
        if self.ic_id not in KNOWN_ICS:
            raise ValueError(f"unknown initial condition id {self.ic_id!r}")
        n = self.n_steps()
        if abs(n * self.dt - self.T_final) > 1e-9 * max(self.T_final, self.dt):
            raise ValueError(
                f"T_final={self.T_final} is not an integer multiple of dt={self.dt}"
            )
        if self.dissipation and self.dissipation_stride < 1:
            raise ValueError("dissipation_stride must be >= 1")

    def n_steps(self) -> int:
        return int(round(self.T_final / self.dt))

    def build_grid(self) -> PhaseGrid:
        return make_grid(self.dx, self.Lx, self.Nx, self.vmax, self.Nv, self.Nomega)

    def build_kernel(self) -> CollisionKernelSpec:
        return make_kernel(self.mu, self.b_profile, self.b_value)

    def build_spatial(self, grid: PhaseGrid) -> SpatialKernelSpec | None:
        if self.mode == "local":
            return None
        return build_spatial_kernel(self.sigma, grid, self.K_images)


@dataclass
class Trajectory:
    """Snapshots at the output stride plus per-step diagnostics records."""

    config: SimConfig
    times: list
    snapshots: list  # DistributionFunction at the output stride (+ final)
    snapshot_times: list
    records: list  # DiagnosticsRecord, one per step incl. t=0


def advect(f: DistributionFunction, dt: float) -> DistributionFunction:
    """Semi-Lagrangian free transport over the torus.

    Per velocity node, shifts in x by v*dt with conservative periodic linear
    interpolation: f_new(x) = f(x-m) + frac*(f(x-m-1) - f(x-m)) in cell
    units.  Exact circular shift when v*dt is a multiple of dx_cell; bitwise
    identity on x-uniform slices; preserves nonnegativity and per-slice mass.
    """
    g = f.grid
    if dt == 0.0:
        return f.copy()
    if g.dx == 1:
        vals = f.values.reshape(g.Nx, g.Nv, g.Nv)
        out = np.empty_like(vals)
        for a0 in range(g.Nv):
            s = g.v_axis[a0] * dt / g.dx_cell
            m = math.floor(s)
            fr = s - m
            block = vals[:, a0, :]
            base = np.roll(block, m, axis=0)
            if fr == 0.0:
                out[:, a0, :] = base
            else:
                nxt = np.roll(block, m + 1, axis=0)
                out[:, a0, :] = base + fr * (nxt - base)
        return _wrap(g, out.reshape(g.n_xcells, g.n_vcells))
    # dx=2: tensor-product of two 1D passes (axis 0 moves with v1, axis 1 with v2)
    vals = f.values.reshape(g.Nx, g.Nx, g.Nv, g.Nv)
    out = np.empty_like(vals)
    for a0 in range(g.Nv):
        s = g.v_axis[a0] * dt / g.dx_cell
        m = math.floor(s)
        fr = s - m
        block = vals[:, :, a0, :]
        base = np.roll(block, m, axis=0)
        if fr == 0.0:
            out[:, :, a0, :] = base
        else:
            out[:, :, a0, :] = base + fr * (np.roll(block, m + 1, axis=0) - base)
    out2 = np.empty_like(out)
    for a1 in range(g.Nv):
        s = g.v_axis[a1] * dt / g.dx_cell
        m = math.floor(s)
        fr = s - m
        block = out[:, :, :, a1]
        base = np.roll(block, m, axis=1)
        if fr == 0.0:
            out2[:, :, :, a1] = base
        else:
            out2[:, :, :, a1] = base + fr * (np.roll(block, m + 1, axis=1) - base)
    return _wrap(g, out2.reshape(g.n_xcells, g.n_vcells))


def _collision_rhs(f: DistributionFunction, sk: SpatialKernelSpec | None, spec):
    """Projected collision field plus the loss-rate for the CFL check."""
    ff = convolve_x(f, sk) if sk is not None else f
    L = loss_rate(ff, spec)
    gain = q_gain(f, ff, spec)
    cf = CollisionField(grid=f.grid, raw_gain=gain, raw_loss=f.values * L)
    projected, proj_l1, skipped = conserve_project(cf, f)
    return projected, L, proj_l1, skipped


def _moment_row(vals: np.ndarray, g: PhaseGrid) -> np.ndarray:
    m = moments(_wrap(g, vals))
    return np.array([m.mass, m.momentum[0], m.momentum[1], m.energy])


def _clip_rebalance(vals: np.ndarray, g: PhaseGrid):
    """Clip negatives and remove the clipped mass from the positive part."""
    neg = vals < 0.0
    if not neg.any():
        return vals, 0.0, np.zeros(4)
    before = _moment_row(vals, g)
    clipped = -float(vals[neg].sum()) * g.wx * g.wv
    vals = vals.copy()
    vals[neg] = 0.0
    pos_mass = float(vals.sum()) * g.wx * g.wv
    if pos_mass > 0.0:
        vals *= (pos_mass - clipped) / pos_mass
    after = _moment_row(vals, g)
    return vals, clipped, np.abs(after - before)


@dataclass
class StepInfo:
    clipped_mass: float
    projection_l1: float
    clip_moment_budget: np.ndarray  # |d(mass, px, py, E)| caused by clipping
    skipped_projection: tuple


def strang_step(
    f: DistributionFunction,
    dt: float,
    sk: SpatialKernelSpec | None,
    spec: CollisionKernelSpec,
    cfl_eta: float = 0.5,
):
    """One advect(dt/2) o collide(dt) o advect(dt/2) step.

    Raises CFLError when dt * max L(ff) > cfl_eta so the caller can substep.
    """
    g = f.grid
    f1 = advect(f, 0.5 * dt)

    q1, L1, pl1, skip1 = _collision_rhs(f1, sk, spec)
    lmax = float(L1.max())
    if dt * lmax > cfl_eta:
        raise CFLError(admissible_dt=cfl_eta / lmax if lmax > 0 else dt)

    mid_vals, cm1, _ = _clip_rebalance(f1.values + 0.5 * dt * q1, g)
    fmid = _wrap(g, mid_vals)

    q2, L2, pl2, skip2 = _collision_rhs(fmid, sk, spec)
    new_vals, cm2, budget = _clip_rebalance(f1.values + dt * q2, g)
    f2 = _wrap(g, new_vals)

    f3 = advect(f2, 0.5 * dt)
    info = StepInfo(
        clipped_mass=cm1 + cm2,
        projection_l1=0.5 * dt * pl1 + dt * pl2,
        clip_moment_budget=budget,
        skipped_projection=tuple(sorted(set(skip1) | set(skip2))),
    )
    return f3, info


def _step_with_substepping(f, dt, sk, spec, cfl_eta, max_halvings=10):
    """Binary substep fallback; aborts below dt/2^10."""
    k = 0
    while True:
        sub_dt = dt / (1 << k)
        try:
            cur = f
            tot_clip = 0.0
            tot_proj = 0.0
            tot_budget = np.zeros(4)
            skipped = set()
            for _ in range(1 << k):
                cur, info = strang_step(cur, sub_dt, sk, spec, cfl_eta)
                tot_clip += info.clipped_mass
                tot_proj += info.projection_l1
                tot_budget += info.clip_moment_budget
                skipped |= set(info.skipped_projection)
            agg = StepInfo(tot_clip, tot_proj, tot_budget, tuple(sorted(skipped)))
            return cur, agg
        except CFLError:
            k += 1
            if k > max_halvings:
                raise DynamicsError(
                    f"positivity substep failure persists below dt/{1 << max_halvings}"
                )


def _make_record(t, f, info, D, s_list) -> DiagnosticsRecord:
    m = moments(f, t)
    ms = {s: moment_s(f, s) for s in s_list}
    return DiagnosticsRecord(
        t=t,
        mass=m.mass,
        momentum=m.momentum,
        energy=m.energy,
        H=entropy(f),
        D=D,
        clipped_mass=info.clipped_mass if info else 0.0,
        projection_l1=info.projection_l1 if info else 0.0,
        m_s=ms,
    )


def run(config: SimConfig, threads: int | None = None) -> Trajectory:
    """Iterate strang_step from the initial condition to T_final.

    Deterministic for a fixed config: bit-identical trajectories across
    reruns and numba worker counts.  Aborts (DynamicsError) on non-finite
    values or persistent positivity-substep failure.
    """
    if threads is not None:
        import numba

        numba.set_num_threads(threads)
    config.validate()
    g = config.build_grid()
    spec = config.build_kernel()
    sk = config.build_spatial(g)
    get_tables(g, spec)  # build quadrature tables up front

    f = initial_condition(config.ic_id, config.ic_params, g, spec=spec)
    n_steps = config.n_steps()

    def diss_due(step):
        return config.dissipation and (
            step % config.dissipation_stride == 0 or step == n_steps
        )

    records = [_make_record(0.0, f, None, dissipation(f, spec, sk) if diss_due(0) else None, config.s_moments)]
    snapshots = [f]
    snap_times = [0.0]
    times = [0.0]

    for step in range(1, n_steps + 1):
        f, info = _step_with_substepping(f, config.dt, sk, spec, config.cfl_eta)
        if not np.all(np.isfinite(f.values)):
            raise DynamicsError(f"non-finite values detected at step {step}", step=step)
        t = step * config.dt
        times.append(t)
        D = dissipation(f, spec, sk) if diss_due(step) else None
        records.append(_make_record(t, f, info, D, config.s_moments))
        if step % config.output_stride == 0 or step == n_steps:
            snapshots.append(f)
            snap_times.append(t)

    return Trajectory(
        config=config,
        times=times,
        snapshots=snapshots,
        snapshot_times=snap_times,
        records=records,
    )


# ---------------------------------------------------------------------------
# Initial conditions
# ---------------------------------------------------------------------------


def _maxwellian_values(grid: PhaseGrid, rho, T, ux, uy) -> np.ndarray:
    if rho < 0 or T <= 0:
        raise ValueError(f"maxwellian requires rho >= 0 and T > 0, got rho={rho}, T={T}")
    w = (grid.v_nodes[:, 0] - ux) ** 2 + (grid.v_nodes[:, 1] - uy) ** 2
    return rho / (2.0 * math.pi * T) * np.exp(-w / (2.0 * T))


def discrete_maxwellian(
    grid: PhaseGrid,
    spec: CollisionKernelSpec,
    rho: float = 1.0,
    T: float = 1.0,
    ux: float = 0.0,
    uy: float = 0.0,
    tol: float = 1e-13,
    max_iter: int = 2000,
) -> DistributionFunction:
    """Scheme-consistent equilibrium: the fixed point of the projected
    discrete collision operator nearest the sampled Gaussian.

    The sampled Gaussian is not exactly stationary under interpolated
    quadrature (its defect is O(dv^2) before projection); iterating
    f <- f + tau * Q(f) corrects it to a machine-precision equilibrium with
    the same conserved moments, the discrete analogue of the corrected
    discrete-Maxwellian constructions used by discrete-velocity solvers.
    """
    m = _maxwellian_values(grid, rho, T, ux, uy)
    f = _wrap(grid, np.tile(m, (grid.n_xcells, 1)))
    scale = max(float(np.abs(m).max()), 1e-300)
    best_vals = f.values
    best_resid = np.inf
    stall = 0
    for _ in range(max_iter):
        q, L, _, _ = _collision_rhs(f, None, spec)
        resid = float(np.abs(q).max())
        if resid < best_resid:
            best_resid = resid
            best_vals = f.values
            stall = 0
        else:
            stall += 1  # positivity clipping can pin coarse-tail nodes
            if stall >= 50:
                break
        if resid <= tol * scale:
            break
        lmax = float(L.max())
        tau = 0.8 / lmax if lmax > 0 else 1.0
        vals = np.maximum(f.values + tau * q, 0.0)
        f = _wrap(grid, vals)
    return DistributionFunction(grid, best_vals)


def initial_condition(
    ic_id: str, params: dict, grid: PhaseGrid, spec: CollisionKernelSpec | None = None
) -> DistributionFunction:
    """Fixed library of reproducible initial conditions."""
    p = dict(params or {})

    def take(name, default):
        return float(p.pop(name, default))

    if ic_id == "maxwellian":
        vals = _maxwellian_values(grid, take("rho", 1.0), take("T", 1.0), take("ux", 0.0), take("uy", 0.0))
        f = DistributionFunction(grid, np.tile(vals, (grid.n_xcells, 1)))
    elif ic_id == "discrete_maxwellian":
        if spec is None:
            raise ValueError("discrete_maxwellian requires the collision kernel spec")
        f = discrete_maxwellian(
            grid, spec, rho=take("rho", 1.0), T=take("T", 1.0), ux=take("ux", 0.0), uy=take("uy", 0.0)
        )
    elif ic_id == "two_bump_v":
        rho = take("rho", 1.0)
        T = take("T", 1.0)
        u0 = take("u0", 2.0)
        vals = 0.5 * (
            _maxwellian_values(grid, rho, T, u0, 0.0)
            + _maxwellian_values(grid, rho, T, -u0, 0.0)
        )
        f = DistributionFunction(grid, np.tile(vals, (grid.n_xcells, 1)))
    elif ic_id == "x_modulated_maxwellian":
        rho = take("rho", 1.0)
        T = take("T", 1.0)
        a = take("a", 0.3)
        if abs(a) >= 1.0:
            raise ValueError(f"x_modulated_maxwellian requires |a| < 1, got a={a}")
        m = _maxwellian_values(grid, rho, T, 0.0, 0.0)
        dens = 1.0 + a * np.cos(2.0 * math.pi * grid.x_nodes[:, 0] / grid.Lx)
        f = DistributionFunction(grid, dens[:, None] * m[None, :])
    elif ic_id == "indicator_box":
        v1_lo = take("v1_lo", -1.0)
        v1_hi = take("v1_hi", 1.0)
        v2_lo = take("v2_lo", -1.0)
        v2_hi = take("v2_hi", 1.0)
        mass = take("mass", 1.0)
        ind = (
            (grid.v_nodes[:, 0] >= v1_lo)
            & (grid.v_nodes[:, 0] <= v1_hi)
            & (grid.v_nodes[:, 1] >= v2_lo)
            & (grid.v_nodes[:, 1] <= v2_hi)
        ).astype(float)
        total = ind.sum() * grid.wx * grid.wv * grid.n_xcells
        if total == 0.0:
            raise ValueError("indicator_box does not cover any velocity node")
        vals = ind * (mass / total)
        f = DistributionFunction(grid, np.tile(vals, (grid.n_xcells, 1)))
    elif ic_id == "custom_snapshot":
        from .io import read_snapshot

        path = p.pop("path", None)
        if path is None:
            raise ValueError("custom_snapshot requires a 'path' parameter")
        f, _t = read_snapshot(str(path), expected_grid=grid)
    else:
        raise ValueError(f"unknown initial condition id {ic_id!r}")
    if p:
        raise ValueError(f"unused parameters for ic {ic_id!r}: {sorted(p)}")
    return f
