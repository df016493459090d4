"""Numba inner loops for collision gain/loss and the dissipation integrand.

All kernels parallelise over independent output nodes and accumulate in a
fixed loop order, so results are bitwise identical for any thread count.

Field layout is v-major: arrays shaped (Nv, Nv, nx) with the spatial index
contiguous, so the innermost x loop vectorises.  Padded arrays carry a
one-cell zero ring ((Nv+2, Nv+2, nx)); post-collision stencils that fall
outside the velocity box are either skipped (gain: zero contribution) or
evaluated as zero (dissipation integrand).
"""
import math

import numpy as np
from numba import njit, prange

LOG_FLOOR = math.log(1e-30)  # clamp floor for logarithms in the integrand


@njit(parallel=True, cache=True)
def gain_kernel(fp, ffp, Bw, o1a, o1b, o2a, o2b, w1, w2, out):
    """Collision gain: sum_{v*,omega} B * I[f](v') * I[ff](v*').

    fp, ffp: padded (N+2, N+2, nx) fields; Bw carries B premultiplied by
    2*domega*dv^2 (the factor 2 folds the omega -> -omega symmetry);
    o*/w* are the (d0, d1, k)-indexed interpolation offsets and corner
    weights for v' (side 1, relative to i) and v*' (side 2, relative to j).
    """
    N = out.shape[0]
    nx = out.shape[2]
    NW2 = Bw.shape[2]
    for i0 in prange(N):
        acc = np.empty(nx)
        for i1 in range(N):
            for xx in range(nx):
                acc[xx] = 0.0
            for j0 in range(N):
                d0 = i0 - j0 + N - 1
                for j1 in range(N):
                    d1 = i1 - j1 + N - 1
                    for k in range(NW2):
                        b = Bw[d0, d1, k]
                        if b == 0.0:
                            continue
                        p0 = i0 + o1a[d0, d1, k]
                        if p0 < -1 or p0 >= N:
                            continue
                        p1 = i1 + o1b[d0, d1, k]
                        if p1 < -1 or p1 >= N:
                            continue
                        q0 = j0 + o2a[d0, d1, k]
                        if q0 < -1 or q0 >= N:
                            continue
                        q1 = j1 + o2b[d0, d1, k]
                        if q1 < -1 or q1 >= N:
                            continue
                        a00 = w1[d0, d1, k, 0]
                        a01 = w1[d0, d1, k, 1]
                        a10 = w1[d0, d1, k, 2]
                        a11 = w1[d0, d1, k, 3]
                        c00 = w2[d0, d1, k, 0]
                        c01 = w2[d0, d1, k, 1]
                        c10 = w2[d0, d1, k, 2]
                        c11 = w2[d0, d1, k, 3]
                        for xx in range(nx):
                            v1 = (
                                a00 * fp[p0 + 1, p1 + 1, xx]
                                + a01 * fp[p0 + 1, p1 + 2, xx]
                                + a10 * fp[p0 + 2, p1 + 1, xx]
                                + a11 * fp[p0 + 2, p1 + 2, xx]
                            )
                            v2 = (
                                c00 * ffp[q0 + 1, q1 + 1, xx]
                                + c01 * ffp[q0 + 1, q1 + 2, xx]
                                + c10 * ffp[q0 + 2, q1 + 1, xx]
                                + c11 * ffp[q0 + 2, q1 + 2, xx]
                            )
                            acc[xx] += b * v1 * v2
            for xx in range(nx):
                out[i0, i1, xx] = acc[xx]


@njit(parallel=True, cache=True)
def loss_kernel(ffv, Ltab, out):
    """Loss rate L(ff)(x, v_i) = sum_j ff(x, v_j) * A(v_i - v_j) * dv^2.

    Ltab is A on the (2N-1, 2N-1) index-difference grid, premultiplied
    by dv^2.
    """
    N = out.shape[0]
    nx = out.shape[2]
    for i0 in prange(N):
        acc = np.empty(nx)
        for i1 in range(N):
            for xx in range(nx):
                acc[xx] = 0.0
            for j0 in range(N):
                d0 = i0 - j0 + N - 1
                for j1 in range(N):
                    a = Ltab[d0, i1 - j1 + N - 1]
                    if a == 0.0:
                        continue
                    for xx in range(nx):
                        acc[xx] += a * ffv[j0, j1, xx]
            for xx in range(nx):
                out[i0, i1, xx] = acc[xx]


@njit(parallel=True, cache=True)
def h_kernel(fv, fp, lfv, wmat, Bw, o1a, o1b, o2a, o2b, w1, w2, out):
    """Pointwise dissipation integrand field h(x, v).

    h(x, v_i) = sum_{x*, v*, omega} w(x - x*) * B * (a - b) *
                (log a - log b) * dx^dx * dv^2 * domega
    with a the interpolated product f(x, v') f(x*, v*'), b = f(x, v) f(x*, v*),
    logs clamped below at the 1e-30 floor, and each summand clamped at 0
    (the exact summand is nonnegative; clamping removes rounding noise from
    evaluating log a as log f' + log f'_*).

    wmat holds w(x - x*) * dx^dx as a dense (nx, nx) matrix; zero entries
    are skipped, which also serves the strictly local (Dirac) variant.
    """
    N = out.shape[0]
    nx = out.shape[2]
    NW2 = Bw.shape[2]
    for i0 in prange(N):
        F1 = np.empty(nx)
        L1 = np.empty(nx)
        F2 = np.empty(nx)
        L2 = np.empty(nx)
        hacc = np.empty(nx)
        for i1 in range(N):
            for xx in range(nx):
                hacc[xx] = 0.0
            for j0 in range(N):
                d0 = i0 - j0 + N - 1
                for j1 in range(N):
                    d1 = i1 - j1 + N - 1
                    for k in range(NW2):
                        b = Bw[d0, d1, k]
                        if b == 0.0:
                            continue
                        p0 = i0 + o1a[d0, d1, k]
                        p1 = i1 + o1b[d0, d1, k]
                        q0 = j0 + o2a[d0, d1, k]
                        q1 = j1 + o2b[d0, d1, k]
                        if -1 <= p0 < N and -1 <= p1 < N:
                            a00 = w1[d0, d1, k, 0]
                            a01 = w1[d0, d1, k, 1]
                            a10 = w1[d0, d1, k, 2]
                            a11 = w1[d0, d1, k, 3]
                            for xx in range(nx):
                                val = (
                                    a00 * fp[p0 + 1, p1 + 1, xx]
                                    + a01 * fp[p0 + 1, p1 + 2, xx]
                                    + a10 * fp[p0 + 2, p1 + 1, xx]
                                    + a11 * fp[p0 + 2, p1 + 2, xx]
                                )
                                F1[xx] = val
                                L1[xx] = np.log(val)
                        else:
                            for xx in range(nx):
                                F1[xx] = 0.0
                                L1[xx] = -np.inf
                        if -1 <= q0 < N and -1 <= q1 < N:
                            c00 = w2[d0, d1, k, 0]
                            c01 = w2[d0, d1, k, 1]
                            c10 = w2[d0, d1, k, 2]
                            c11 = w2[d0, d1, k, 3]
                            for xx in range(nx):
                                val = (
                                    c00 * fp[q0 + 1, q1 + 1, xx]
                                    + c01 * fp[q0 + 1, q1 + 2, xx]
                                    + c10 * fp[q0 + 2, q1 + 1, xx]
                                    + c11 * fp[q0 + 2, q1 + 2, xx]
                                )
                                F2[xx] = val
                                L2[xx] = np.log(val)
                        else:
                            for xx in range(nx):
                                F2[xx] = 0.0
                                L2[xx] = -np.inf
                        for x in range(nx):
                            f1 = F1[x]
                            l1 = L1[x]
                            fb = fv[i0, i1, x]
                            lb1 = lfv[i0, i1, x]
                            for xs in range(nx):
                                wxx = wmat[x, xs]
                                if wxx == 0.0:
                                    continue
                                a = f1 * F2[xs]
                                la = l1 + L2[xs]
                                if la < LOG_FLOOR:
                                    la = LOG_FLOOR
                                bb = fb * fv[j0, j1, xs]
                                lb = lb1 + lfv[j0, j1, xs]
                                if lb < LOG_FLOOR:
                                    lb = LOG_FLOOR
                                t = (a - bb) * (la - lb)
                                if t > 0.0:
                                    hacc[x] += wxx * b * t
            for xx in range(nx):
                out[i0, i1, xx] = hacc[xx]
