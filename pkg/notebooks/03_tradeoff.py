# %% [markdown]
# # BRAM against bandwidth
# Every point here runs within one refinement step of the best throughput.

# %%
from multiclp import ResourceBudget, builtin_alexnet, tradeoff_frontier
from multiclp.cost import GIB

net = builtin_alexnet()
front = tradeoff_frontier(net, ResourceBudget(2880, 2352, 4.5 * GIB))
for d in front:
    m = d.metrics
    print(f"{m.total_bram:5} BRAM  {m.bandwidth_gib:5.2f} GiB/s  {m.throughput_img_s:6.2f} img/s  {len(d.clps)} CLPs")

# %%
# optional plot
try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None
if plt:
    plt.step([d.metrics.total_bram for d in front], [d.metrics.bandwidth_gib for d in front], where="post")
    plt.xlabel("BRAM-18K")
    plt.ylabel("GiB/s")
    plt.savefig("tradeoff_690t.png")
