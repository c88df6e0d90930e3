# %% [markdown]
# # Cost model on AlexNet
# Cycle counts, transfers, BRAM and bandwidth for a single 7x64 CLP.

# %%
from multiclp import builtin_alexnet, ClpShape, LayerTiling, cycles, transfer_breakdown, design_metrics, make_design
from multiclp.cost import GIB

net = builtin_alexnet()
shape = ClpShape(7, 64)
for layer in net:
    c = cycles(layer, shape)
    util = layer.macs / (shape.macs_per_cycle * c)
    print(f"{layer.name:3} {layer.dims}  {c:>9,} cycles  {util:6.1%}")

# %% [markdown]
# Layer 1a has N = 3, so four of the seven input lanes sit idle.

# %%
t = transfer_breakdown(net[0], shape, LayerTiling(14, 19))
print(t, t.total_words)

# %%
tiles = {"1": (14, 19), "2": (14, 27), "3": (13, 13), "4": (13, 13), "5": (13, 13)}
single = make_design(net, [((7, 64), [(l.name, tiles[l.name[0]]) for l in net])])
m = design_metrics(single, net, 100e6)
print(f"{m.segment_cycles:,} cycles, {m.throughput_img_s:.2f} img/s, {m.utilization:.1%}, "
      f"{m.total_bram} BRAM, {m.bandwidth_gib:.2f} GiB/s")
