"""Dev probe: entropy-inequality defect S(t) under (dt, Nv) refinement."""
import time

import numpy as np

from fuzzboltz.diagnostics import entropy_inequality_check
from fuzzboltz.dynamics import SimConfig, run


def relax_cfg(Nv, dt, T=2.0):
    return SimConfig(
        Nx=32, Nv=Nv, Nomega=16, vmax=6.0,
        mu=0.0, mode="fuzzy", sigma=0.4,
        ic_id="two_bump_v", ic_params={"u0": 2.0},
        T_final=T, dt=dt, output_stride=10,
        dissipation=True, dissipation_stride=1,
    )


for Nv, dt in [(24, 0.01), (32, 0.005)]:
    t0 = time.time()
    traj = run(relax_cfg(Nv, dt))
    rep = entropy_inequality_check(traj)
    t1 = time.time()
    H = [r.H for r in traj.records]
    print(
        f"Nv={Nv} dt={dt}: max_S={rep.max_S:.4e}  monotone={rep.H_monotone} "
        f"max_uptick={rep.max_H_uptick:.2e}  H0={H[0]:.5f} HT={H[-1]:.5f} "
        f"S_final={rep.S[-1]:.4e}  [{t1-t0:.1f}s]"
    )
