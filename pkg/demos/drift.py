"""Watch the planner react when the size distribution switches mid-stream.

The Poisson-P preset alternates between two regimes every 2000 items.  The
replan log shows section starts, KL-divergence triggers and tolerance-table
triggers.
Run: python3 demos/drift.py [n_items]
"""

import sys
from collections import Counter

from cgpp import DEFAULT_PARAMS, l2_lower_bound, load_preset, run_policy, sample_instance

n = int(sys.argv[1]) if len(sys.argv) > 1 else 8000
spec, B = load_preset("Poisson-P")
inst = sample_instance(spec, B, n, seed=1)
l2 = l2_lower_bound(inst)
print(f"{n} items, {inst.n_types} types, L2 = {l2}")

for policy in ("bestfit", "cgpp"):
    sol, st = run_policy(policy, inst, DEFAULT_PARAMS)
    print(f"{policy:>8}: {sol.n_bins} bins, gap {sol.n_bins - l2}, replans {st.replans}")
    if st.replans:
        print(f"          causes {dict(Counter(st.replan_causes))}")
        for step, cause in zip(st.replan_steps, st.replan_causes):
            marker = "  <- regime switch" if step % spec.section_size < 250 and step >= spec.section_size else ""
            if cause != "tolerance":
                print(f"          step {step:>6} {cause}{marker}")
