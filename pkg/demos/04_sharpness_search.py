"""How close do random and locally optimized instances get to the constants?

Fractions stay below one everywhere; for p < 1 the point-mass instance keeps
the best ratio above one."""
from ncmart.search import evaluate, local_ascent, p_sweep, random_instance

for theorem, grid in (("dd_down", [0.25, 0.5, 0.75, 1.0]), ("dd_up", [1.0, 1.5, 2.0]),
                      ("stein", [4 / 3, 2.0, 4.0])):
    recs, _ = p_sweep(theorem, grid, dim=3, n=3, trials=100, master_seed=1)
    for r in recs:
        print(f"{theorem:<8} p={r.p:5.3f}  best ratio {r.best_ratio:.6f}  bound {r.bound:.4f}  "
              f"fraction {r.fraction:.4f}")

# random draws whose last algebra is all of M give ratio exactly 1; local
# ascent from a generic start moves past that
for theorem, p, seed in (("dd_down", 0.5, 0), ("stein", 4.0, 5)):
    inst = random_instance(theorem, p, 4, 2, seed=seed)
    rec = local_ascent(inst, steps=1500, seed=seed)
    print(f"\nNelder-Mead, {theorem} at p={p}: start {evaluate(inst):.6f} -> {rec.best_ratio:.6f} "
          f"(fraction {rec.fraction:.4f})")
