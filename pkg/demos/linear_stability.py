"""Linear stability of the flat, mixed film.

Small concentration waves longer than 2 pi Cn grow, and shorter ones decay.
Height waves always decay, from surface tension and the repulsive Van der
Waals term. Each rate is measured by seeding a single Fourier mode and
fitting its amplitude.

    python demos/linear_stability.py
"""
import numpy as np

from _common import out_path
from thinfilm import Grid, Params, linear_growth_rates, measure_growth_rate
from thinfilm.plotting import write_chart

p = Params(C=1 / 3, Cn=1.0, r=1.0, A=-1.0)
g = Grid(8 * np.pi, 64)

print("field  mode      k     predicted   measured")
for field, idx in (("c", 1), ("h", 0)):
    for mode in (1, 2, 3, 5):
        k = 2 * np.pi * mode / g.length
        lam = linear_growth_rates(p, k)[idx]
        got = measure_growth_rate(p, g, mode, field=field)
        print(f"  {field}    {mode:3d}  {k:6.3f}  {lam:+10.5f}  {got:+10.5f}")

k = np.linspace(0, 1.5, 151)
lh, lc = linear_growth_rates(p, k)
write_chart(out_path("dispersion.svg"), [("concentration", k, lc), ("height", k, lh)],
            title="growth rate", xlabel="k")
