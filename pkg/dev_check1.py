"""Dev probe: oracle agreement + performance + equilibrium defect."""
import time

import numpy as np

import fuzzboltz as fb
from fuzzboltz import collision, oracle
from fuzzboltz.grid import DistributionFunction, moments, _wrap

rng = np.random.default_rng(42)

# ---- tiny-grid oracle match ----
g = fb.make_grid(1, 1.0, 2, 6.0, 8, 8)
print("tiny grid cells:", g.n_xcells * g.n_vcells * g.Nomega)
spec = fb.make_kernel(0.0, "constant", 1.0 / (2 * np.pi))
f = DistributionFunction(g, rng.random((g.n_xcells, g.n_vcells)))
sk = fb.build_spatial_kernel(0.3, g)
ff = fb.convolve_x(f, sk)

t0 = time.time()
gain_fast = collision.q_gain(f, ff, spec)
t1 = time.time()
gain_brute = oracle.brute_gain(f, ff, spec)
t2 = time.time()
print(f"gain fast {t1-t0:.2f}s (incl jit), brute {t2-t1:.2f}s")
print("gain max |diff|:", np.abs(gain_fast - gain_brute).max(), "scale", gain_fast.max())

loss_fast = collision.loss_rate(ff, spec)
loss_brute = oracle.brute_loss_rate(ff, spec)
print("loss max |diff|:", np.abs(loss_fast - loss_brute).max(), "scale", loss_fast.max())

spec05 = fb.make_kernel(0.5, "cosine_squared", 0.1)
gain_fast2 = collision.q_gain(f, ff, spec05)
gain_brute2 = oracle.brute_gain(f, ff, spec05)
print("gain mu=0.5 cos2 max |diff|:", np.abs(gain_fast2 - gain_brute2).max(), "scale", gain_fast2.max())

# ---- default-scale performance ----
gd = fb.make_grid(1, 1.0, 32, 6.0, 32, 16)
V = gd.v_nodes
M = np.exp(-gd.vsq / 2.0) / (2 * np.pi)
rho = 1.0 + 0.3 * np.cos(2 * np.pi * gd.x_nodes[:, 0] / gd.Lx)
fmod = DistributionFunction(gd, rho[:, None] * M[None, :])
skd = fb.build_spatial_kernel(0.2, gd)
ffd = fb.convolve_x(fmod, skd)

collision.q_gain(fmod, ffd, spec)  # compile/warm
t0 = time.time()
for _ in range(3):
    gaind = collision.q_gain(fmod, ffd, spec)
t1 = time.time()
print(f"default-scale gain eval: {(t1-t0)/3:.3f} s")

t0 = time.time()
lossd = collision.loss_rate(ffd, spec)
t1 = time.time()
print(f"default-scale loss eval: {t1-t0:.3f} s")

# ---- equilibrium defect (criterion 3 risk) ----
fM = DistributionFunction(gd, np.tile(M, (gd.n_xcells, 1)))
cf = collision.q_classical(fM, spec)
mass = moments(fM).mass
raw_l1 = np.abs(cf.raw_gain - cf.raw_loss).sum() * gd.wx * gd.wv
proj_l1 = np.abs(cf.projected).sum() * gd.wx * gd.wv
print(f"Maxwellian mass={mass:.6f}  raw |gain-loss|_L1={raw_l1:.3e}  projected |Q|_L1={proj_l1:.3e}")
print(f"relative: raw {raw_l1/mass:.3e}  projected {proj_l1/mass:.3e}")
