"""Maximal norm of a martingale by interior point, certified from below by
dual candidates, compared with p' ||x||_p."""
import math

import numpy as np

from ncmart import doob_report, maximal_primal, random_tower
from ncmart.algebra import make_rng, random_psd

# commuting family: the optimal witness is the entrywise maximum
res = maximal_primal([np.diag([1.0, 0.0]), np.diag([0.0, 2.0])], 2.0)
print(f"commuting pair: value {res.value:.10f}  exact {math.sqrt(2.5):.10f}  gap {res.gap:.1e}")

rng = make_rng(7)
_, tower = random_tower(6, 4, rng, kind="pinch_coarsen")
x = random_psd(6, 11).entries
print(f"\n{'p':>5} {'maximal':>10} {'dual':>10} {'gap':>9} {'iters':>6} {'p_conj*|x|':>11}")
for p in (2.0, 3.0, 4.0, math.inf):
    rep, res = doob_report(tower, x, p)
    print(f"{p:5} {res.value:10.6f} {res.dual_bound:10.6f} {res.gap:9.1e} {res.iterations:6d} "
          f"{rep.constant * rep.rhs:11.6f}")
