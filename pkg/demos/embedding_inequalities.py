"""Numerical check of two periodic embedding inequalities.

The first bounds sup|f| by the L2 norms of f and f_x. The second bounds
||f_x||^2 by L1 norms of f and f_xx. The analysis uses them to turn an
energy bound into a pointwise height bound. Random trigonometric
polynomials never violate either one. A constant field makes the first
inequality an equality.

    python demos/embedding_inequalities.py
"""
import numpy as np

from thinfilm.grid import Grid, check_sobolev_inequalities, random_trig_polynomial

g = Grid(2 * np.pi, 128)
sup, grad = [], []
for i in range(1000):
    rng = np.random.default_rng([0, i])
    f, _ = random_trig_polynomial(g, int(rng.integers(1, 32)), rng)
    sl = check_sobolev_inequalities(f, g)
    sup.append(sl.sup_slack / sl.sup_bound)
    grad.append(sl.grad_slack / sl.grad_bound)
print(f"sup inequality:      smallest relative slack {min(sup):.3f}")
print(f"gradient inequality: smallest relative slack {min(grad):.3f}")
print(f"constant field slack: {check_sobolev_inequalities(g.full(2.0), g).sup_slack:.1e}")
