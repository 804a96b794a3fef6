"""Open strings, their endpoints, and the spin/braiding read off from them.

A charge is carried by the generators flipped at the end of an open string.
Spin comes from three legs meeting at a point; braiding from a horizontal
string crossing a vertical one.
"""

from __future__ import annotations

import numpy as np

from topocharge.charges import build_charge_analysis, canonical_generators
from topocharge.lattice import fixture

ca = build_charge_analysis(fixture("color"))
canon, ch = canonical_generators(ca)
print("color code characteristic", ch)

c = canon.c[0]
vec = ca.gauge_string(c, (0, 0), (ca.period * 4, 0))
n = ca.canvas.n
print(f"string for c1 = {c} from (0,0) to ({ca.period * 4},0): weight {int((vec[:n] | vec[n:]).sum())}")

# the endpoints are exactly the morphism instances at each end
insts = ca.gauge_table.morphism(c, (0, 0)) + ca.gauge_table.morphism(c, (ca.period * 4, 0))
syn = ca.g_solver.syndrome(vec, insts)
print("flipped endpoint generators:", syn.tolist())

print("\nspin of each charge (gauge group):")
for bits in ca.all_charges():
    print("  ", "".join(map(str, bits)), f"{ca.theta(bits):+d}")

print("\nbraiding matrix between basis charges (0 = commute, 1 = anticommute):")
print(ca.kappa_matrix())

print("\nι sends gauge charges to stabilizer charges:")
print(np.array(ca.iota_matrix))
