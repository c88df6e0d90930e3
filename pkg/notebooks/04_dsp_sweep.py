# %% [markdown]
# # Scaling the DSP budget
# BRAM follows the DSP count at 1 per 1.3, bandwidth stays at 4.5 GiB/s.
# A coarse grid keeps this quick; the CLI sweep does the full 100-step range.

# %%
from multiclp import builtin_alexnet
from multiclp.report import sweep

net = builtin_alexnet()
points = sweep(net, range(1000, 10_001, 1000))
by = {(p.dsp, p.mode): p.design for p in points}

# %%
for dsp in range(1000, 10_001, 1000):
    s, m = by[dsp, "single"], by[dsp, "multi"]
    print(f"{dsp:6}  single {s.metrics.throughput_img_s:7.2f}  multi {m.metrics.throughput_img_s:7.2f}  "
          f"x{m.metrics.throughput_img_s / s.metrics.throughput_img_s:.2f}")
