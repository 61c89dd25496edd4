"""Block conditional expectations: pinching, averaging, and the tower rule."""
import numpy as np

from ncmart import FULL, SCALAR, SubalgebraSpec, cond_exp, validate_tower
from ncmart.errors import NotIncreasing

x = np.arange(16, dtype=float).reshape(4, 4)
x = x + x.T

m1 = SubalgebraSpec.from_blocks([(0, 1, 2, 3)], SCALAR)
m2 = SubalgebraSpec.from_blocks([(0, 1), (2, 3)], [SCALAR, FULL])
m3 = SubalgebraSpec.from_blocks([(0, 1), (2, 3)], FULL)
tower = validate_tower([m1, m2, m3])

for k, s in enumerate(tower):
    print(f"E_{k + 1} onto {s.to_dict()}:\n{cond_exp(s, x).real}\n")

e = tower.cond_exp
print("E_1 E_3 x == E_1 x:", np.allclose(e(0, e(2, x)), e(0, x)))
print("trace preserved:", np.isclose(np.trace(e(1, x)), np.trace(x)))

try:
    validate_tower([m3, m2])
except NotIncreasing as exc:
    print("reversed tower rejected:", exc)
