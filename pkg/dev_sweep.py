"""Dev probe: the default acceptance sweep (criterion 6)."""
import time

from fuzzboltz.dynamics import SimConfig
from fuzzboltz.harness import run_sweep, sweep_report_lines

base = SimConfig(
    dx=1, Lx=1.0, Nx=32, vmax=6.0, Nv=32, Nomega=16,
    mu=0.0, b_profile="constant",
    ic_id="x_modulated_maxwellian", ic_params={"a": 0.3},
    T_final=1.0, dt=0.01, output_stride=1,
)
t0 = time.time()
rep = run_sweep(base, [0.4, 0.2, 0.1, 0.05])
t1 = time.time()
print("\n".join(sweep_report_lines(rep)))
print(f"elapsed {t1-t0:.1f}s")
print("ratio final/first sup:", rep.sup_l1[-1] / rep.sup_l1[0])
