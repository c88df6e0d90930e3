"""Acceptance criteria, one check each, at the stated tolerances.

Run under pytest (a summary line per criterion is printed at the end) or
directly with `python tests/test_acceptance.py`.
"""
import math
import random
import sys
import time
from functools import lru_cache
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import BUDGET_485T, BUDGET_690T, MULTI_690T, SINGLE_485T, SINGLE_690T  # noqa: E402
from multiclp.cnn import CnnSpec, LayerDims, builtin_alexnet, builtin_vgg_e  # noqa: E402
from multiclp.cost import (GIB, ClpShape, ResourceBudget, bram_count, buffer_spec, clp_peak_bandwidth,  # noqa: E402
                           cycles, design_metrics, make_design, num_dsp)
from multiclp.optimizer import InfeasibleError, OptimizerConfig, run_optimizer, tradeoff_frontier  # noqa: E402
from multiclp.oracle import brute_force_optimize  # noqa: E402
from multiclp.pipeline import STEADY, dependency_safe, simulate  # noqa: E402
from multiclp.report import sweep  # noqa: E402

RESULTS: dict[int, tuple[bool, str]] = {}
NET = builtin_alexnet()


def _best_time(fn, reps=200):
    best = math.inf
    for _ in range(reps):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


@lru_cache(maxsize=None)
def _opt(device, mode):
    budget = {"485t": BUDGET_485T, "690t": BUDGET_690T}[device]
    t = time.perf_counter()
    res = run_optimizer(NET, budget, OptimizerConfig(mode=mode))
    return res, time.perf_counter() - t


def crit_1():
    shape = ClpShape(7, 64)
    per_pair = [cycles(NET[i], shape) for i in range(0, 10, 2)]
    want = [366, 255, 169, 128, 85]
    total = sum(cycles(l, shape) for l in NET)
    dt = _best_time(lambda: sum(cycles(l, shape) for l in NET))
    ok = [round(c / 1000) for c in per_pair] == want and round(total / 1000) == 2006 and dt < 1e-3
    return ok, (f"per-pair k-cycles {[round(c / 1000) for c in per_pair]}, total {total:,} -> {round(total / 1000):,}k "
                f"(the literal 2,006,050 is not the sum of the listed per-layer counts), {dt * 1e6:.0f} us")


def crit_2():
    d485, d690 = make_design(NET, SINGLE_485T), make_design(NET, SINGLE_690T)

    def brams():
        return [bram_count(d.clps[0].shape, buffer_spec(d.clps[0], NET)) for d in (d485, d690)]

    b = brams()
    dt = _best_time(brams)
    ok = num_dsp(ClpShape(7, 64)) == 2240 and b == [730, 866] and dt < 1e-3
    return ok, f"DSP {num_dsp(ClpShape(7, 64))}, BRAM {b}, {dt * 1e6:.0f} us"


def crit_3():
    bw = [clp_peak_bandwidth(make_design(NET, d).clps[0], NET, 100e6) / GIB for d in (SINGLE_485T, SINGLE_690T)]
    ok = abs(bw[0] - 1.47) <= 0.01 and abs(bw[1] - 1.89) <= 0.01
    return ok, f"peak bandwidth {bw[0]:.4f} / {bw[1]:.4f} GiB/s"


def crit_4():
    u = [100 * design_metrics(make_design(NET, d), NET, 100e6).utilization for d in (SINGLE_485T, SINGLE_690T)]
    l1 = NET[0]
    u1 = 100 * l1.macs / (7 * 64 * cycles(l1, ClpShape(7, 64)))
    ok = abs(u[0] - 74.1) <= 0.1 and abs(u[1] - 65.4) <= 0.1 and abs(u1 - 32.1) <= 0.1
    return ok, f"utilization {u[0]:.2f}% / {u[1]:.2f}%, layer 1a {u1:.2f}%"


def crit_5():
    s485, _ = _opt("485t", "single")
    m485, _ = _opt("485t", "multi")
    s690, ts = _opt("690t", "single")
    m690, tm = _opt("690t", "multi")
    seg = s485.design.metrics.segment_cycles
    ok = (s485.design.shapes == [ClpShape(7, 64)] and round(seg / 1000) == 2006
          and m485.design.metrics.segment_cycles <= 1.01 * 1_531_000
          and m690.design.metrics.segment_cycles <= 1.01 * 1_167_000 and ts + tm < 60)
    return ok, (f"485T single {s485.design.shapes[0]} {seg:,}; multi 485T "
                f"{m485.design.metrics.segment_cycles:,}, 690T {m690.design.metrics.segment_cycles:,}; "
                f"690T runtime {ts + tm:.2f} s")


def crit_6():
    r = []
    for dev in ("485t", "690t"):
        r.append(_opt(dev, "multi")[0].design.metrics.throughput_img_s
                 / _opt(dev, "single")[0].design.metrics.throughput_img_s)
    return r[0] >= 1.30 and r[1] >= 1.49, f"multi/single {r[0]:.3f} (485T), {r[1]:.3f} (690T)"


def crit_7():
    detail, ok = [], True
    for dev, budget, pts in (("485t", BUDGET_485T, [(891, 1.49), (729, 1.61)]),
                             ("690t", BUDGET_690T, [(1264, 1.88), (866, 3.44)])):
        front = tradeoff_frontier(NET, budget, result=_opt(dev, "multi")[0])
        got = [(d.metrics.total_bram, d.metrics.bandwidth_gib) for d in front]
        for b, bw in pts:
            near = sorted(((x, y) for x, y in got if abs(x - b) <= 10 and abs(y - bw) <= 0.05),
                          key=lambda p: abs(p[0] - b) / 10 + abs(p[1] - bw) / 0.05)
            ok &= bool(near)
            detail.append(f"({b}, {bw}) -> " + (f"({near[0][0]}, {near[0][1]:.3f})" if near else "missing"))
    return ok, "; ".join(detail)


def crit_8():
    t = time.perf_counter()
    points = sweep(NET, range(100, 10_001, 100))
    dt = time.perf_counter() - t
    by = {(p.dsp, p.mode): p.design for p in points}
    s, m = by[(9600, "single")], by[(9600, "multi")]
    ratio = m.metrics.throughput_img_s / s.metrics.throughput_img_s
    bad = [k for k, d in by.items() if d is None]
    ok = ratio >= 3.0 and dt < 1800 and not bad
    return ok, f"ratio at 9,600 DSPs {ratio:.3f}; 200 points in {dt:.0f} s; infeasible points {bad}"


def crit_9(n=200, seed=9):
    rng = random.Random(seed)
    mismatches, feasible = [], 0
    for k in range(n):
        L = rng.randint(1, 4)
        net = CnnSpec([LayerDims(f"l{i}", *(rng.randint(1, 8) for _ in range(6))) for i in range(L)])
        budget = ResourceBudget(rng.randint(5, 200), rng.randint(10, 400), 10 ** rng.uniform(8, 11))
        try:
            want = brute_force_optimize(net, budget)[0]
        except ValueError:
            want = None
        try:
            got = run_optimizer(net, budget).design.metrics.segment_cycles
        except InfeasibleError:
            got = None
        feasible += want is not None
        if got != want:
            mismatches.append((k, want, got))
    return not mismatches, f"{n} instances ({feasible} feasible), mismatches {mismatches}"


def crit_10():
    d = make_design(NET, MULTI_690T)
    m = design_metrics(d, NET, 100e6)
    tr = simulate(d, NET, 100)
    thr = tr.steady_throughput()
    u_steady = 100 * tr.utilization(STEADY)
    u_all = 100 * tr.utilization()
    ok = (f"{thr:.2f}" == f"{m.throughput_img_s:.2f}" == "85.65" and dependency_safe(tr, NET)
          and abs(u_steady - 100 * m.utilization) <= 0.5)
    return ok, (f"steady {thr:.2f} img/s vs model {m.throughput_img_s:.2f}; dependency-safe "
                f"{dependency_safe(tr, NET)}; steady utilization {u_steady:.3f}% vs {100 * m.utilization:.3f}% "
                f"(whole run incl. fill/drain {u_all:.2f}%)")


def crit_11():
    net = builtin_vgg_e()
    budget = ResourceBudget(10_000, int(10_000 // 1.3), 4.5 * GIB)
    s = run_optimizer(net, budget, OptimizerConfig(mode="single")).design.metrics
    m = run_optimizer(net, budget, OptimizerConfig(mode="multi")).design.metrics
    ratio = m.throughput_img_s / s.throughput_img_s
    return abs(ratio - 1.18) <= 0.05, (f"optional; VGG-E multi/single {ratio:.3f} (single {s.utilization:.1%} util at "
                                       f"{s.bandwidth_gib:.2f} GiB/s, multi {m.utilization:.1%})")


CRITERIA = {i: globals()[f"crit_{i}"] for i in range(1, 12)}


def _record(n):
    t = time.perf_counter()
    ok, detail = CRITERIA[n]()
    RESULTS[n] = (ok, f"{detail} [{time.perf_counter() - t:.1f} s]")
    return ok, detail


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n):
    ok, detail = _record(n)
    assert ok, detail


def lines():
    return [f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}" for n, (ok, detail) in sorted(RESULTS.items())]


if __name__ == "__main__":
    only = [int(a) for a in sys.argv[1:]] or sorted(CRITERIA)
    for n in only:
        _record(n)
        print(lines()[-1] if len(RESULTS) == 1 else [l for l in lines() if l.startswith(f"criterion {n:2d}")][0],
              flush=True)
    sys.exit(0 if all(ok for ok, _ in RESULTS.values()) else 1)
