import random

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from multiclp.cnn import CnnSpec, LayerDims
from multiclp.cost import ClpShape, ResourceBudget, cycles, fits_budget
from multiclp.optimizer import InfeasibleError, OptimizerConfig, run_optimizer
from multiclp.oracle import InstanceTooLarge, brute_force_optimize, set_partitions

AMPLE = dict(n_bram=10**7, bw_bytes_per_s=1e18)


def test_one_layer():
    net = CnnSpec([LayerDims("a", 2, 2, 2, 2, 1, 1)])
    seg, d = brute_force_optimize(net, ResourceBudget(20, **AMPLE))
    assert seg == 4
    assert d.shapes == [ClpShape(2, 2)]


def test_two_identical_layers():
    net = CnnSpec([LayerDims("a", 4, 4, 4, 4, 1, 1), LayerDims("b", 4, 4, 4, 4, 1, 1)])
    seg, d = brute_force_optimize(net, ResourceBudget(40, **AMPLE))
    # 8 multiply-add units and 512 MACs: nothing beats 64 cycles, and both layouts reach it
    assert seg == 64
    assert d.metrics.segment_cycles == 64
    one_clp = max(cycles(net[0], ClpShape(4, 2)), 0) * 2
    two_clp = cycles(net[0], ClpShape(2, 2))
    assert one_clp == two_clp == 64


def test_rejects_large():
    net = CnnSpec([LayerDims(f"l{i}", 1, 1, 1, 1, 1, 1) for i in range(5)])
    with pytest.raises(InstanceTooLarge):
        brute_force_optimize(net, ResourceBudget(20, **AMPLE))
    with pytest.raises(InstanceTooLarge):
        brute_force_optimize(CnnSpec([net[0]]), ResourceBudget(201, **AMPLE))


def test_infeasible():
    net = CnnSpec([LayerDims("a", 4, 4, 4, 4, 3, 1)])
    with pytest.raises(ValueError, match="infeasible"):
        brute_force_optimize(net, ResourceBudget(40, 3, 1e18))


def test_set_partitions_bell_numbers():
    assert [sum(1 for _ in set_partitions(range(n))) for n in range(6)] == [1, 1, 2, 5, 15, 52]


def test_single_mode_one_clp():
    net = CnnSpec([LayerDims("a", 3, 5, 4, 4, 1, 1), LayerDims("b", 5, 3, 4, 4, 1, 1)])
    seg, d = brute_force_optimize(net, ResourceBudget(100, **AMPLE), "single")
    assert len(d.clps) == 1
    assert seg >= brute_force_optimize(net, ResourceBudget(100, **AMPLE))[0]


def small_instances():
    dim = st.integers(1, 8)
    layer = st.tuples(dim, dim, dim, dim, dim, dim)
    return st.tuples(st.lists(layer, min_size=1, max_size=3), st.integers(5, 120), st.integers(10, 400),
                     st.floats(8, 11))


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(small_instances())
def test_optimizer_matches_oracle(inst):
    rows, n_dsp, n_bram, log_bw = inst
    net = CnnSpec([LayerDims(f"l{i}", *r) for i, r in enumerate(rows)])
    budget = ResourceBudget(n_dsp, n_bram, 10**log_bw)
    try:
        want = brute_force_optimize(net, budget)
    except ValueError:
        want = None
    try:
        got = run_optimizer(net, budget).design
    except InfeasibleError:
        got = None
    assert (want is None) == (got is None)
    if got is not None:
        assert got.metrics.segment_cycles == want[0]
        assert fits_budget(got.metrics, budget)
        assert fits_budget(want[1].metrics, budget)


def test_single_mode_matches_oracle():
    rng = random.Random(5)
    for _ in range(15):
        net = CnnSpec([LayerDims(f"l{i}", *(rng.randint(1, 8) for _ in range(6))) for i in range(rng.randint(1, 4))])
        budget = ResourceBudget(rng.randint(5, 200), rng.randint(20, 400), 10 ** rng.uniform(8.5, 11))
        try:
            want = brute_force_optimize(net, budget, "single")[0]
        except ValueError:
            want = None
        try:
            got = run_optimizer(net, budget, OptimizerConfig(mode="single")).design.metrics.segment_cycles
        except InfeasibleError:
            got = None
        assert got == want


def random_instance(rng):
    L = rng.randint(1, 4)
    net = CnnSpec([LayerDims(f"l{i}", *(rng.randint(1, 8) for _ in range(6))) for i in range(L)])
    return net, ResourceBudget(rng.randint(5, 200), rng.randint(10, 400), 10 ** rng.uniform(8, 11))


def test_random_instances_mix():
    rng = random.Random(2024)
    kinds = {"infeasible": 0, "memory-bound": 0, "compute-bound": 0}
    for _ in range(30):
        net, budget = random_instance(rng)
        try:
            want = brute_force_optimize(net, budget)[0]
        except ValueError:
            want = None
        try:
            got = run_optimizer(net, budget).design.metrics.segment_cycles
        except InfeasibleError:
            got = None
        assert got == want
        if want is None:
            kinds["infeasible"] += 1
        else:
            free = brute_force_optimize(net, ResourceBudget(budget.n_dsp, **AMPLE))[0]
            kinds["memory-bound" if want > free else "compute-bound"] += 1
    assert all(v > 0 for v in kinds.values()), kinds
