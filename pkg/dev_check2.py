"""Dev probe: equilibrium defect scaling across grid parameters."""
import numpy as np

import fuzzboltz as fb
from fuzzboltz import collision
from fuzzboltz.grid import DistributionFunction, moments

spec = fb.make_kernel(0.0, "constant", 1.0 / (2 * np.pi))

print(f"{'Nv':>4} {'Nom':>4} {'vmax':>5} {'T':>4} {'raw/m':>10} {'proj/m':>10}")
for Nv, Nom, vmax, T in [
    (24, 16, 6.0, 1.0),
    (32, 16, 6.0, 1.0),
    (48, 16, 6.0, 1.0),
    (64, 16, 6.0, 1.0),
    (32, 32, 6.0, 1.0),
    (32, 64, 6.0, 1.0),
    (64, 64, 6.0, 1.0),
    (32, 16, 8.0, 1.0),
    (32, 16, 6.0, 2.0),
    (48, 32, 7.0, 1.0),
]:
    g = fb.make_grid(1, 1.0, 2, vmax, Nv, Nom)
    M = np.exp(-g.vsq / (2 * T)) / (2 * np.pi * T)
    fM = DistributionFunction(g, np.tile(M, (g.n_xcells, 1)))
    cf = collision.q_classical(fM, spec)
    mass = moments(fM).mass
    raw = np.abs(cf.raw_gain - cf.raw_loss).sum() * g.wx * g.wv
    proj = np.abs(cf.projected).sum() * g.wx * g.wv
    print(f"{Nv:>4} {Nom:>4} {vmax:>5.1f} {T:>4.1f} {raw/mass:>10.3e} {proj/mass:>10.3e}")

# discrete-equilibrium fixed-point iteration: f <- f + tau * Qtilde(f)
g = fb.make_grid(1, 1.0, 2, 6.0, 32, 16)
M = np.exp(-g.vsq / 2.0) / (2 * np.pi)
f = DistributionFunction(g, np.tile(M, (g.n_xcells, 1)))
tau = 0.5
for it in range(200):
    cf = collision.q_classical(f, spec)
    resid = np.abs(cf.projected).sum() * g.wx * g.wv
    if it % 20 == 0 or resid < 1e-12:
        print("iter", it, "projected |Q|_L1 =", f"{resid:.3e}")
    if resid < 1e-13:
        break
    vals = f.values + tau * cf.projected
    np.maximum(vals, 0.0, out=vals)
    f = DistributionFunction(g, vals)
dist = np.abs(f.values - M[None, :]).sum() * g.wx * g.wv
print("distance of discrete equilibrium from sampled Maxwellian:", f"{dist:.3e}")
print("moments of f*:", moments(f))
