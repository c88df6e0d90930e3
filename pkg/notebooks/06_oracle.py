# %% [markdown]
# # Checking the search against brute force
# Tiny random networks, exhaustive enumeration on one side, the real optimizer on the other.

# %%
import random

from multiclp import CnnSpec, InfeasibleError, LayerDims, ResourceBudget, brute_force_optimize, run_optimizer

rng = random.Random(0)
agree = 0
for trial in range(20):
    net = CnnSpec([LayerDims(f"l{i}", *(rng.randint(1, 8) for _ in range(6))) for i in range(rng.randint(1, 4))])
    b = ResourceBudget(rng.randint(5, 200), rng.randint(10, 400), 10 ** rng.uniform(8, 11))
    try:
        want = brute_force_optimize(net, b)[0]
    except ValueError:
        want = None
    try:
        got = run_optimizer(net, b).design.metrics.segment_cycles
    except InfeasibleError:
        got = None
    agree += want == got
    print(trial, len(net), b.n_dsp, want, got)
print(f"{agree}/20 agree")
