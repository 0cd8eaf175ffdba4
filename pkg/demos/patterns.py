"""Compare the bin contents each policy ends up with against the offline plan.

On a two-mode size mixture the planner reuses the offline oracle's full
patterns far more often than Best-Fit does.
Run: python3 demos/patterns.py
"""

from cgpp import load_preset, run_policy, sample_instance, solve_offline
from cgpp.bench import histogram_overlap, pattern_histogram

spec, B = load_preset("Bimodal")
inst = sample_instance(spec, B, 5000, seed=1)
offline = pattern_histogram(solve_offline(inst)[0], inst)
print("offline: most used patterns")
for p, n, rate in sorted(offline, key=lambda r: -r[1])[:5]:
    print(f"  {n:>4} x [{p.label(inst.sizes)}] fill {rate:.2f}")

for policy in ("bestfit", "cgpp"):
    hist = pattern_histogram(run_policy(policy, inst)[0], inst)
    full = sum(n for _, n, rate in hist if rate == 1.0) / sum(n for _, n, _ in hist)
    print(f"{policy:>8}: overlap with offline {histogram_overlap(hist, offline):.3f}, full bins {full:.1%}")
