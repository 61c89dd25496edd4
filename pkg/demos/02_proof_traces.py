"""Step-by-step slacks of the dual Doob arguments and of the square function
bound on one random noncommutative instance."""
import numpy as np

from ncmart import bg_report, proof_trace_thm11, proof_trace_thm12, random_tower
from ncmart.algebra import complex_gaussian, make_rng

rng = make_rng(2024)
kind, tower = random_tower(4, 4, rng, kind="mixed")
xs = []
for _ in range(len(tower)):
    g = complex_gaussian(4, rng)
    xs.append(g @ g.conj().T / 4)
x = complex_gaussian(4, rng) / 2

print("tower:", tower.dumps())
for tr in (proof_trace_thm11(tower, xs, 0.5), proof_trace_thm12(tower, xs, 1.5),
           proof_trace_thm12(tower, xs, 2.5), bg_report(tower, x, 3.0)[1]):
    flag = "" if tr.asserted else "   (outside proof range, not asserted)"
    print(f"\n{tr.name} at p={tr.p}{flag}")
    for st in tr.steps:
        print(f"  {st.label:<12} {st.lhs:12.6f} <= {st.rhs:12.6f}   slack {st.slack:10.3e}   [{st.anchor}]")
    if "composition_residual" in tr.params:
        print(f"  composition residual {tr.params['composition_residual']:.2e}")
    if "dual_doob_exponent_covered" in tr.params:
        print(f"  dual exponent q={tr.params['q']:.3f}, covered by the p<=2 bound: "
              f"{tr.params['dual_doob_exponent_covered']}")
