"""Collision transform, gain/loss operators, fuzzy and classical collision
operators, renormalised operators, and the conservative moment projection.

The fuzzy operator is evaluated in factorised form: mollify once in x, then
run independent homogeneous-type collision evaluations per x node.  The gain
interpolates its arguments bilinearly in v with zero extension outside the
velocity box; pairs whose post-collision stencil leaves the box contribute
zero gain (truncation is repaired in moments by the projection, and tracked).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .grid import DistributionFunction, GridError, PhaseGrid, _wrap
from .kernels import CollisionKernelSpec, KernelError, SpatialKernelSpec, convolve_x

__all__ = [
    "CollisionField",
    "collision_transform",
    "loss_rate",
    "q_gain",
    "q_fuzzy",
    "q_classical",
    "q_renormalized",
    "conserve_project",
    "CollisionTables",
    "get_tables",
]


def collision_transform(v, v_star, omega):
    """Pre/post collision map: v' = v - <v-v*, w>w, v*' = v* + <v-v*, w>w.

    Conserves momentum and kinetic energy; applying it twice with the same
    omega returns the inputs exactly.
    """
    omega = np.asarray(omega, dtype=np.float64)
    if abs(float(omega[0] ** 2 + omega[1] ** 2) - 1.0) > 1e-12:
        raise KernelError("omega must be a unit vector (|omega|=1 to 1e-12)")
    v = np.asarray(v, dtype=np.float64)
    v_star = np.asarray(v_star, dtype=np.float64)
    c = float((v[0] - v_star[0]) * omega[0] + (v[1] - v_star[1]) * omega[1])
    return v - c * omega, v_star + c * omega


class CollisionTables:
    """Precomputed per-(index difference, angle) collision quadrature data.

    For each velocity index difference d = i - j and half-circle angle node
    k, stores the kernel value (premultiplied by 2*domega*dv^2), the bilinear
    stencil base offsets of v' relative to node i and of v*' relative to
    node j, and the four corner weights of each stencil.  Also holds the
    angular average A on the difference grid (times dv^2) for the loss term.
    """

    def __init__(self, grid: PhaseGrid, spec: CollisionKernelSpec):
        self.grid = grid
        N = grid.Nv
        dv = grid.dv_cell
        NW2 = grid.Nomega // 2

        d = np.arange(-(N - 1), N)
        D0, D1 = np.meshgrid(d, d, indexing="ij")
        ux = (D0 * dv)[:, :, None]
        uy = (D1 * dv)[:, :, None]
        r = np.hypot(ux, uy)

        om = grid.omega_nodes[:NW2]  # omega_{k+NW2} = -omega_k contributes equally
        ox = om[:, 0][None, None, :]
        oy = om[:, 1][None, None, :]
        c = ux * ox + uy * oy

        ratio = np.divide(np.abs(c), r, out=np.zeros_like(c * r), where=r > 0)
        theta = np.arccos(np.clip(ratio, 0.0, 1.0))  # r=0 lands on theta=pi/2
        bval = spec.b_of_theta(theta)
        if spec.mu == 0.0:
            Bv = np.broadcast_to(bval, c.shape).copy()
        else:
            Bv = np.where(r > 0, r**spec.mu, 0.0) * bval
        self.Bw = np.ascontiguousarray(Bv * (2.0 * grid.domega * dv * dv))

        sx = -c * ox  # shift s = v' - v_i; v*' = v_j - s
        sy = -c * oy
        tx = np.broadcast_to(sx / dv, self.Bw.shape)
        ty = np.broadcast_to(sy / dv, self.Bw.shape)

        def stencil(t0, t1):
            o0 = np.floor(t0)
            o1 = np.floor(t1)
            fa = t0 - o0
            fb = t1 - o1
            w = np.stack(
                [(1 - fa) * (1 - fb), (1 - fa) * fb, fa * (1 - fb), fa * fb],
                axis=-1,
            )
            return o0.astype(np.int64), o1.astype(np.int64), np.ascontiguousarray(w)

        self.o1a, self.o1b, self.w1 = stencil(tx, ty)
        self.o2a, self.o2b, self.w2 = stencil(-tx, -ty)

        # Angular average on the difference grid, full Nomega quadrature.
        omf = grid.omega_nodes
        cf = ux * omf[:, 0][None, None, :] + uy * omf[:, 1][None, None, :]
        ratio_f = np.divide(np.abs(cf), r, out=np.zeros_like(cf * r), where=r > 0)
        theta_f = np.arccos(np.clip(ratio_f, 0.0, 1.0))
        bf = spec.b_of_theta(theta_f)
        if spec.mu == 0.0:
            Av = np.broadcast_to(bf, cf.shape).sum(axis=-1) * grid.domega
        else:
            Av = (np.where(r > 0, r**spec.mu, 0.0) * bf).sum(axis=-1) * grid.domega
        self.Atab = np.ascontiguousarray(Av)
        self.Ltab = np.ascontiguousarray(Av * dv * dv)


_TABLE_CACHE: dict = {}


def _kernel_key(spec: CollisionKernelSpec) -> tuple:
    return (spec.mu, spec.profile, spec.b_table.tobytes())


def get_tables(grid: PhaseGrid, spec: CollisionKernelSpec) -> CollisionTables:
    key = (grid.key(), _kernel_key(spec))
    tab = _TABLE_CACHE.get(key)
    if tab is None:
        tab = CollisionTables(grid, spec)
        _TABLE_CACHE[key] = tab
    return tab


def _to_vmajor(values: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    """(nx, nv) -> contiguous (Nv, Nv, nx)."""
    return np.ascontiguousarray(values.T.reshape(grid.Nv, grid.Nv, -1))


def _from_vmajor(arr: np.ndarray, grid: PhaseGrid, nx: int) -> np.ndarray:
    return np.ascontiguousarray(arr.reshape(grid.n_vcells, nx).T)


def _pad_vmajor(arr: np.ndarray) -> np.ndarray:
    N = arr.shape[0]
    out = np.zeros((N + 2, N + 2, arr.shape[2]))
    out[1 : N + 1, 1 : N + 1, :] = arr
    return out


def _uniform_slice(values: np.ndarray) -> np.ndarray | None:
    """First x-slice when all slices are bitwise equal, else None."""
    if values.shape[0] == 1:
        return values[:1]
    if np.all(values == values[0]):
        return values[:1]
    return None


def loss_rate(f: DistributionFunction, spec: CollisionKernelSpec) -> np.ndarray:
    """Loss-rate field L(f)(x, v) = sum_{v*} f(x, v*) A(v - v*) dv^2."""
    g = f.grid
    tab = get_tables(g, spec)
    uni = _uniform_slice(f.values)
    src = uni if uni is not None else f.values
    nx = src.shape[0]
    fv = _to_vmajor(src, g)
    out = np.empty_like(fv)
    _accel.loss_kernel(fv, tab.Ltab, out)
    res = _from_vmajor(out, g, nx)
    if uni is not None and g.n_xcells > 1:
        res = np.repeat(res, g.n_xcells, axis=0)
    return res


def q_gain(
    f: DistributionFunction, ff: DistributionFunction, spec: CollisionKernelSpec
) -> np.ndarray:
    """Gain field sum_{v*,omega} B(v-v*,omega) I[f](x,v') I[ff](x,v*') dv^2 domega.

    I is bilinear interpolation in v with zero extension outside the box.
    """
    g = f.grid
    if ff.grid != g:
        raise GridError("q_gain requires f and ff on the same grid")
    tab = get_tables(g, spec)
    uni_f = _uniform_slice(f.values)
    uni_ff = _uniform_slice(ff.values)
    if uni_f is not None and uni_ff is not None:
        src_f, src_ff = uni_f, uni_ff
    else:
        src_f, src_ff = f.values, ff.values
    nx = src_f.shape[0]
    fp = _pad_vmajor(_to_vmajor(src_f, g))
    ffp = _pad_vmajor(_to_vmajor(src_ff, g))
    out = np.empty((g.Nv, g.Nv, nx))
    _accel.gain_kernel(fp, ffp, tab.Bw, tab.o1a, tab.o1b, tab.o2a, tab.o2b, tab.w1, tab.w2, out)
    res = _from_vmajor(out, g, nx)
    if nx == 1 and g.n_xcells > 1:
        res = np.repeat(res, g.n_xcells, axis=0)
    return res


@dataclass
class CollisionField:
    """Raw gain/loss fields plus the moment-projected net field."""

    grid: PhaseGrid
    raw_gain: np.ndarray
    raw_loss: np.ndarray
    projected: np.ndarray | None = None
    projection_l1: float = 0.0
    skipped_x: tuple = ()


def conserve_project(cf: CollisionField, f: DistributionFunction):
    """Project the net field onto the discrete collision-invariant constraints.

    Returns (projected, projection_l1, skipped) where projected =
    gain - loss - sum_j lambda_j psi_j f with psi in {1, v1, v2, |v|^2} and
    lambda solved per x node so that sum_v projected * psi_j * dv^2 = 0.
    X nodes where the local Gram matrix is singular (f vanishing there) are
    skipped and flagged.
    """
    g = f.grid
    net = cf.raw_gain - cf.raw_loss
    # invariants scaled to O(1) magnitude so the 4x4 Gram solves stay
    # well-conditioned; the scaling cancels in the correction field
    psi = np.stack(
        [
            np.ones(g.n_vcells),
            g.v_nodes[:, 0] / g.vmax,
            g.v_nodes[:, 1] / g.vmax,
            g.vsq / (2.0 * g.vmax**2),
        ]
    )  # (4, nv)
    fw = f.values
    G = np.einsum("jv,xv,kv->xjk", psi, fw, psi) * g.wv
    r = np.einsum("jv,xv->xj", psi, net) * g.wv

    lam = np.zeros((g.n_xcells, 4))
    skipped = []
    for x in range(g.n_xcells):
        Gx = G[x]
        if fw[x].max(initial=0.0) <= 0.0:
            skipped.append(x)
            continue
        try:
            if np.linalg.cond(Gx) > 1e14:
                skipped.append(x)
                continue
            l = np.linalg.solve(Gx, r[x])
            for _ in range(3):  # iterative refinement to eps-level residuals
                res = r[x] - Gx @ l
                if np.abs(res).max() <= 1e-16 * max(np.abs(r[x]).max(), 1e-300):
                    break
                l = l + np.linalg.solve(Gx, res)
        except np.linalg.LinAlgError:
            skipped.append(x)
            continue
        if not np.all(np.isfinite(l)):
            skipped.append(x)
            continue
        lam[x] = l

    corr = (lam @ psi) * fw
    projected = net - corr
    projection_l1 = float(np.abs(corr).sum()) * g.wx * g.wv
    return projected, projection_l1, tuple(skipped)


def q_fuzzy(
    f: DistributionFunction, sk: SpatialKernelSpec, spec: CollisionKernelSpec
) -> CollisionField:
    """Fuzzy collision operator: mollify in x, then Q(f, mollified f)."""
    ff = convolve_x(f, sk)
    return _collision_field(f, ff, spec)


def q_classical(f: DistributionFunction, spec: CollisionKernelSpec) -> CollisionField:
    """Classical local collision operator: Q(f, f) (Dirac spatial kernel)."""
    return _collision_field(f, f, spec)


def _collision_field(
    f: DistributionFunction, ff: DistributionFunction, spec: CollisionKernelSpec
) -> CollisionField:
    gain = q_gain(f, ff, spec)
    loss = f.values * loss_rate(ff, spec)
    cf = CollisionField(grid=f.grid, raw_gain=gain, raw_loss=loss)
    projected, proj_l1, skipped = conserve_project(cf, f)
    cf.projected = projected
    cf.projection_l1 = proj_l1
    cf.skipped_x = skipped
    return cf


def q_renormalized(
    f: DistributionFunction,
    ff: DistributionFunction,
    spec: CollisionKernelSpec,
    alpha: float,
) -> CollisionField:
    """Renormalised operator: gain and loss divided pointwise by 1 + alpha*f."""
    if alpha < 0:
        raise KernelError(f"alpha must be nonnegative, got {alpha}")
    gain = q_gain(f, ff, spec)
    loss = f.values * loss_rate(ff, spec)
    if alpha > 0:
        denom = 1.0 + alpha * f.values
        gain = gain / denom
        loss = loss / denom
    return CollisionField(grid=f.grid, raw_gain=gain, raw_loss=loss)
