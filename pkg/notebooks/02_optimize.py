# %% [markdown]
# # Single vs multi CLP
# Same budgets, two search modes.

# %%
import time

from multiclp import OptimizerConfig, ResourceBudget, builtin_alexnet, run_optimizer
from multiclp.cost import GIB
from multiclp.report import design_report

net = builtin_alexnet()
budgets = {"485t": ResourceBudget(2240, 1648, 4.5 * GIB), "690t": ResourceBudget(2880, 2352, 4.5 * GIB)}

# %%
results = {}
for dev, b in budgets.items():
    for mode in ("single", "multi"):
        t = time.perf_counter()
        res = run_optimizer(net, b, OptimizerConfig(mode=mode))
        results[dev, mode] = res.design
        print(f"{dev} {mode:6} {res.design.metrics.throughput_img_s:6.2f} img/s  "
              f"{res.design.metrics.utilization:6.1%}  {time.perf_counter() - t:.2f} s")

# %%
print(design_report(results["690t", "multi"], net, budgets["690t"]))

# %%
for dev in budgets:
    r = results[dev, "multi"].metrics.throughput_img_s / results[dev, "single"].metrics.throughput_img_s
    print(dev, f"{r:.2f}x")
