"""Greedy charge-matching decoder on the toric code.

Defects are bucketed by charge, paired by torus distance and joined with
strings.  Larger tori suppress the logical failure rate below threshold.
"""

from __future__ import annotations

from topocharge.charges import build_charge_analysis, canonical_generators
from topocharge.decode import MatchingDecoder, NoiseModel, run_trials
from topocharge.lattice import fixture
from topocharge.torus import build_torus_code

ca = build_charge_analysis(fixture("toric"))
canon, _ = canonical_generators(ca)

for p in (0.01, 0.03, 0.06):
    line = []
    for L in (4, 8, 12):
        dec = MatchingDecoder(ca, build_torus_code(ca, canon, L))
        s = run_trials(dec, NoiseModel("xz", p), 2000, seed=7)
        lo, hi = s.interval
        line.append(f"L={L:<2} {s.rate:.4f} [{lo:.4f}, {hi:.4f}]")
    print(f"p = {p:.2f}:  " + "   ".join(line))
