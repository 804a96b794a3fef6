"""Charge characteristics of the bundled codes.

Each code is reduced to four numbers (alpha, beta, f1, f2): alpha hyperbolic
charge pairs, beta charges invisible to the stabilizer group, and the spins
of the first fermionic candidates.  Stacking two codes composes the numbers.
"""

from __future__ import annotations

import time

from topocharge.charges import build_charge_analysis, canonical_generators, compose_characteristics
from topocharge.lattice import FIXTURES, compose, fixture

found = {}
for name in FIXTURES:
    t = time.perf_counter()
    ca = build_charge_analysis(fixture(name))
    canon, ch = canonical_generators(ca)
    found[name] = ch
    print(f"{name:<18} {str(ch):<16} period {ca.period}  |λG| = 2^{ca.dim_g}  ({time.perf_counter() - t:.1f}s)")

# Stacking: the composed code is analysed from scratch and compared to the rule.
a, b = "toric", "honeycomb"
ca = build_charge_analysis(compose(fixture(a), fixture(b)))
_, ch = canonical_generators(ca)
print(f"\n{a}+{b}: measured {ch}, predicted {compose_characteristics(found[a], found[b])}")
