"""Two point masses on the classical two-step filtration.

x_1 = diag(1, 0) is averaged by the trivial algebra, x_2 = diag(0, 1) is seen
by the diagonal one.  The lower bound ratio sits strictly between 1 and 1/p.
"""
import numpy as np

from ncmart import dual_doob_report, preset_tower

tower = preset_tower("dyadic_scalar", 2, levels=1)
xs = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]

print(f"{'p':>6} {'down ratio':>12} {'1/p':>8} {'up ratio':>10} {'p':>6}")
for p in (0.25, 0.5, 0.75, 1.0, 1.5, 2.0):
    down, up = dual_doob_report(tower, xs, p)
    d_const = f"{down.constant:8.3f}" if down.claimed else f"{'-':>8}"
    u_const = f"{up.constant:6.2f}" if up.claimed else f"{'-':>6}"
    print(f"{p:6.2f} {down.ratio:12.8f} {d_const} {up.ratio:10.6f} {u_const}")

# closed form at p = 1/2: 1 / ((sqrt(1/2) + sqrt(3/2)) / 2)^2
print("closed form at p=1/2:", 1 / ((np.sqrt(0.5) + np.sqrt(1.5)) / 2) ** 2)
