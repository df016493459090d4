"""Brute-force reference implementations for cross-checking the fast kernels.

Everything here is written as plain direct sums from the defining formulas,
independent of the table-driven production path: own kernel evaluation, own
collision transform, own bilinear interpolation.  Intended for tiny grids
(Nx^dx * Nv^2 * Nomega <= 2^15) where a naive sweep finishes in seconds.
"""
from __future__ import annotations

import math

import numpy as np

from .grid import DistributionFunction, PhaseGrid
from .kernels import CollisionKernelSpec, SpatialKernelSpec

LOG_FLOOR = math.log(1e-30)

__all__ = [
    "brute_gain",
    "brute_loss_rate",
    "brute_h_field",
    "brute_dissipation",
    "grid_is_tiny",
]


def grid_is_tiny(grid: PhaseGrid) -> bool:
    return grid.n_xcells * grid.n_vcells * grid.Nomega <= 2**15


def _b_of(spec: CollisionKernelSpec, theta: np.ndarray) -> np.ndarray:
    nodes = np.linspace(0.0, np.pi, spec.b_table.shape[0])
    return np.interp(theta, nodes, spec.b_table)


def _B_vals(spec: CollisionKernelSpec, u: np.ndarray, om: np.ndarray) -> np.ndarray:
    """B(u, omega_k) for one relative velocity u against all omega rows."""
    r = math.hypot(u[0], u[1])
    if r == 0.0:
        if spec.mu > 0.0:
            return np.zeros(om.shape[0])
        return np.full(om.shape[0], float(_b_of(spec, np.pi / 2.0)))
    cosal = np.abs(om @ u) / r
    theta = np.arccos(np.clip(cosal, 0.0, 1.0))
    return r**spec.mu * _b_of(spec, theta)


def _interp_slice(slice_v: np.ndarray, pts: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    """Bilinear interpolation of one (Nv, Nv) v-slice at points (n, 2).

    Zero extension outside the velocity box.
    """
    N = grid.Nv
    dv = grid.dv_cell
    # fractional index: node a sits at (2a - N + 1) * dv/2
    fi = pts / dv + (N - 1) / 2.0
    i0 = np.floor(fi[:, 0]).astype(int)
    i1 = np.floor(fi[:, 1]).astype(int)
    fa = fi[:, 0] - i0
    fb = fi[:, 1] - i1

    def val(a, b):
        ok = (a >= 0) & (a < N) & (b >= 0) & (b < N)
        out = np.zeros(len(a))
        out[ok] = slice_v[a[ok], b[ok]]
        return out

    return (
        (1 - fa) * (1 - fb) * val(i0, i1)
        + (1 - fa) * fb * val(i0, i1 + 1)
        + fa * (1 - fb) * val(i0 + 1, i1)
        + fa * fb * val(i0 + 1, i1 + 1)
    )


def brute_loss_rate(ff: DistributionFunction, spec: CollisionKernelSpec) -> np.ndarray:
    g = ff.grid
    om = g.omega_nodes
    out = np.zeros((g.n_xcells, g.n_vcells))
    for i in range(g.n_vcells):
        vi = g.v_nodes[i]
        a_col = np.empty(g.n_vcells)
        for j in range(g.n_vcells):
            a_col[j] = _B_vals(spec, vi - g.v_nodes[j], om).sum() * g.domega
        out[:, i] = ff.values @ a_col * g.wv
    return out


def brute_gain(
    f: DistributionFunction, ff: DistributionFunction, spec: CollisionKernelSpec
) -> np.ndarray:
    """Direct quadruple sum over (x, v, v*, omega) from the definition."""
    g = f.grid
    om = g.omega_nodes
    out = np.zeros((g.n_xcells, g.n_vcells))
    fsl = f.values.reshape(g.n_xcells, g.Nv, g.Nv)
    ffsl = ff.values.reshape(g.n_xcells, g.Nv, g.Nv)
    for i in range(g.n_vcells):
        vi = g.v_nodes[i]
        for j in range(g.n_vcells):
            vj = g.v_nodes[j]
            u = vi - vj
            c = om @ u  # <v - v*, omega> per angle node
            vp = vi[None, :] - c[:, None] * om
            vsp = vj[None, :] + c[:, None] * om
            bb = _B_vals(spec, u, om)
            for x in range(g.n_xcells):
                t1 = _interp_slice(fsl[x], vp, g)
                t2 = _interp_slice(ffsl[x], vsp, g)
                out[x, i] += float(np.dot(bb, t1 * t2))
    return out * g.wv * g.domega


def brute_h_field(
    f: DistributionFunction,
    spec: CollisionKernelSpec,
    sk: SpatialKernelSpec | None,
) -> np.ndarray:
    """Direct quintuple sum for the dissipation integrand field h(x, v).

    sk=None gives the strictly local (Dirac) pairing.  Logs are taken on the
    products directly and clamped below at the 1e-30 floor, matching the
    production convention; summands are nonnegative by construction.
    """
    g = f.grid
    om = g.omega_nodes
    fsl = f.values.reshape(g.n_xcells, g.Nv, g.Nv)
    out = np.zeros((g.n_xcells, g.n_vcells))
    if sk is None:
        pair_w = np.eye(g.n_xcells)
    else:
        pair_w = np.empty((g.n_xcells, g.n_xcells))
        for x in range(g.n_xcells):
            for xs in range(g.n_xcells):
                if g.dx == 1:
                    off = (x - xs) % g.Nx
                else:
                    x0, x1 = divmod(x, g.Nx)
                    s0, s1 = divmod(xs, g.Nx)
                    off = ((x0 - s0) % g.Nx) * g.Nx + (x1 - s1) % g.Nx
                pair_w[x, xs] = sk.weights[off] * g.wx

    for i in range(g.n_vcells):
        vi = g.v_nodes[i]
        for j in range(g.n_vcells):
            vj = g.v_nodes[j]
            u = vi - vj
            c = om @ u
            vp = vi[None, :] - c[:, None] * om
            vsp = vj[None, :] + c[:, None] * om
            bb = _B_vals(spec, u, om)
            for x in range(g.n_xcells):
                fp_i = _interp_slice(fsl[x], vp, g)
                b_i = fsl[x].reshape(-1)[i]
                for xs in range(g.n_xcells):
                    w = pair_w[x, xs]
                    if w == 0.0:
                        continue
                    fp_j = _interp_slice(fsl[xs], vsp, g)
                    a = fp_i * fp_j
                    b = b_i * fsl[xs].reshape(-1)[j]
                    la = np.maximum(np.log(np.maximum(a, 1e-300)), LOG_FLOOR)
                    lb = max(math.log(b) if b > 0 else -np.inf, LOG_FLOOR)
                    terms = (a - b) * (la - lb)
                    np.maximum(terms, 0.0, out=terms)
                    out[x, i] += w * float(np.dot(bb, terms))
    return out * g.wv * g.domega


def brute_dissipation(
    f: DistributionFunction,
    spec: CollisionKernelSpec,
    sk: SpatialKernelSpec | None,
) -> float:
    h = brute_h_field(f, spec, sk)
    return 0.25 * float(h.sum()) * f.grid.wx * f.grid.wv
