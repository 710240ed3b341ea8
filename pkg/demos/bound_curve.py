"""How the analytic height bound depends on the Hamaker constant.

The bound M(|A|) rises and then falls. A stronger repulsion first helps
and then hurts, because |A| also inflates the initial energy. The
simulated dip does not behave this way: it keeps getting shallower as |A|
grows. Past the peak the two curves move in opposite directions, so the
bound misses the physics there.

    python demos/bound_curve.py
"""
import numpy as np

from _common import out_path
from thinfilm import Params, m_curve, sweep_dip
from thinfilm.plotting import write_chart

A = np.geomspace(0.1, 10, 9)
M = m_curve(A, F0=0.5, F1=0.5, C=1.0)
rows = sweep_dip(Params(C=1.0, Cn=1.0, r=1.0, A=-1.0), "A", A)
h = np.array([row.h_min for row in rows])

print("  |A|       M        h_min")
for a, m, hm in zip(A, M, h):
    print(f"{a:6.3f}  {m:.3e}  {hm:.4f}")
peak = A[np.argmax(M)]
print(f"M peaks near |A| = {peak:.2f}; beyond it M falls while h_min keeps rising")

fine = np.geomspace(0.1, 10, 201)
write_chart(out_path("bound_curve.svg"), [("M", fine, m_curve(fine, 0.5, 0.5, 1.0))],
            title="M(|A|)", xlabel="|A|")
write_chart(out_path("dip_vs_hamaker.svg"), [("h_min", A, h)], title="equilibrium h_min", xlabel="|A|")
