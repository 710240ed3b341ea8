"""The surface dip under a single concentration front.

A steady front between the two phases pulls the film down. The dip deepens
as the backreaction r grows and becomes shallower as the repulsive Van der
Waals term strengthens. At the dip the capillary and Van der Waals forces
push in opposite directions.

    python demos/equilibrium_dip.py
"""
import numpy as np

from _common import out_path
from thinfilm import Params, forces, solve_bvp, sweep_dip
from thinfilm.plotting import write_chart

base = Params(C=1.0, Cn=1.0, r=1.0, A=-1.0)

print("   r     h_min   max c_x")
series = []
for r in (0.1, 1.0, 10.0, 50.0):
    prof = solve_bvp(base.replace(r=r))
    print(f"{r:5g}  {prof.h_min:.5f}  {prof.max_grad_c:.4f}")
    series.append((f"r={r:g}", prof.x, prof.h))
write_chart(out_path("dip_profiles.svg"), series, title="h(x)", xlabel="x")

p = base.replace(r=50.0)
prof = solve_bvp(p)
F_cap, F_vdw = forces(prof, p)
both = (np.abs(F_cap) > 0.01 * np.abs(F_cap).max()) & (np.abs(F_vdw) > 0.01 * np.abs(F_vdw).max())
print(f"r = 50: forces opposed at {np.mean(F_cap[both] * F_vdw[both] <= 0):.0%} of the points where both matter")
write_chart(out_path("dip_forces.svg"), [("capillary", prof.x, F_cap), ("Van der Waals", prof.x, F_vdw)],
            title="forces at r = 50", xlabel="x")

for name, values in (("A", np.geomspace(0.1, 10, 9)), ("r", [0.1, 1, 5, 10, 20, 30, 40, 50])):
    rows = sweep_dip(base, name, values)
    print(f"sweep over {name}: " + "  ".join(f"{row.value:g}:{row.h_min:.3f}" for row in rows))
