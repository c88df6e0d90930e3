# %% [markdown]
# # Segment pipeline
# Each CLP works on a different image; a segment ends when the slowest CLP finishes.

# %%
from multiclp import builtin_alexnet, make_design, simulate
from multiclp.pipeline import STEADY, summary

net = builtin_alexnet()
four = make_design(net, [
    ((1, 48), [("1a", (14, 28))]),
    ((3, 48), [("1b", (11, 28)), ("4a", (13, 13)), ("4b", (13, 13))]),
    ((1, 128), [("2a", (9, 27)), ("5a", (13, 13))]),
    ((4, 64), [("2b", (9, 27)), ("3a", (13, 13)), ("3b", (13, 13)), ("5b", (13, 13))]),
])
trace = simulate(four, net, 100)
print(summary(trace))

# %%
s = trace.segments(STEADY)[0]
for k, runs in enumerate(trace.work[s]):
    print(f"CLP{k}", [(name, img) for name, img, _ in runs], "idle", trace.idle(s, k))

# %%
# fill and drain drag the whole-run figure down; it creeps up with longer streams
for n in (10, 100, 1000):
    print(n, f"{simulate(four, net, n).utilization():.3%}")
