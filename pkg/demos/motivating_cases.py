"""Two short sequences where Best-Fit wastes a bin and a plan does not.

Sizes 5, 4, 3, 2 arrive in a bin of capacity 10.  Best-Fit decides each item
greedily; the offline planner sees the whole sequence and packs full patterns.
Run: python3 demos/motivating_cases.py
"""

import numpy as np

from cgpp import Instance, PolicyParams, run_policy, solve_offline

SIZES = np.array([5, 4, 3, 2])


def instance(items):
    return Instance(10, SIZES, [int(np.flatnonzero(SIZES == s)[0]) for s in items])


def show(title, solution, inst):
    print(f"  {title}: {solution.n_bins} bins")
    for b in solution.bins:
        items = sorted(inst.sizes[np.repeat(np.arange(inst.n_types), b.content)].tolist(), reverse=True)
        print(f"    {items}  fill {int(b.content @ inst.sizes)}/10")


for name, items in (("case 1", [5, 4, 4, 3, 2, 2]), ("case 2", [5, 4, 4, 3, 3, 3, 3, 3, 2, 2, 2, 2, 2, 2])):
    inst = instance(items)
    print(f"{name}: {items}")
    show("best-fit", run_policy("bestfit", inst)[0], inst)
    show("offline", solve_offline(inst)[0], inst)
    # Knowing the distribution up front, the online planner reproduces the offline packing.
    # theta_o is lifted because with six items the risk ratio is never small.
    params = PolicyParams(section_length=len(items), memory_length=len(items), theta_o=10)
    show("cgpp-l", run_policy("cgpp-l", inst, params.with_prior(inst.empirical_distribution()))[0], inst)
    print()
