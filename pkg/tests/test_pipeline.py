import csv
import io

import pytest

from multiclp.cnn import CnnSpec, LayerDims
from multiclp.cost import ClpConfig, ClpShape, Design, DesignError, LayerTiling, design_metrics
from multiclp.pipeline import STEADY, dependency_safe, simulate, summary


def toy():
    # five layers; CLP0 runs L1, L3, L4 and CLP1 runs L2, L5
    net = CnnSpec([LayerDims(f"L{i}", 2, 2, 2, 2, 1, 1) for i in range(1, 6)])
    t = LayerTiling(2, 2)
    d = Design((ClpConfig(ClpShape(1, 2), ((0, t), (2, t), (3, t))),
                ClpConfig(ClpShape(1, 1), ((1, t), (4, t)))))
    return net, d


def test_toy_five_segments():
    net, d = toy()
    tr = simulate(d, net, 12)
    assert all(tr.latency_segments(i) == 5 for i in range(12))
    assert all(tr.in_flight(s) == 5 for s in tr.segments(STEADY))
    assert dependency_safe(tr, net)
    # layer at position p of image i runs in segment i + p
    for s in range(tr.n_segments):
        for runs in tr.work[s]:
            for name, img, _ in runs:
                assert s == img + net.index_of(name)


def test_segment_invariants():
    net, d = toy()
    tr = simulate(d, net, 7)
    for s in range(tr.n_segments):
        assert tr.segment_length[s] == max(tr.busy(s, k) for k in range(2))
        for k in range(2):
            assert tr.idle(s, k) == tr.segment_length[s] - tr.busy(s, k) >= 0
    seen = [(n, i) for s in range(tr.n_segments) for runs in tr.work[s] for n, i, _ in runs]
    assert sorted(seen) == sorted((l.name, i) for l in net for i in range(7))


def test_trivial():
    net = CnnSpec([LayerDims("x", 2, 2, 3, 3, 1, 1)])
    d = Design((ClpConfig(ClpShape(2, 2), ((0, LayerTiling(3, 3)),)),))
    tr = simulate(d, net, 1)
    assert tr.n_segments == 1 and tr.idle(0, 0) == 0
    assert len(tr.to_csv().strip().splitlines()) == 2


def test_690t_multi(alexnet, reference):
    d = reference["690t-multi"]
    m = design_metrics(d, alexnet, 100e6)
    tr = simulate(d, alexnet, 100)
    assert dependency_safe(tr, alexnet)
    assert tr.steady_segment_length() == m.segment_cycles == 1_167_480
    assert tr.steady_throughput() == pytest.approx(m.throughput_img_s, rel=1e-12)
    assert round(tr.steady_throughput(), 2) == 85.65
    steady = tr.segments(STEADY)
    idle0 = tr.clp_idle(0) / len(steady)
    assert idle0 == 1_167_480 - 1_098_075
    assert abs(idle0 - 69_000) < 1_000
    assert tr.utilization(STEADY) == pytest.approx(m.utilization, abs=1e-12)
    assert summary(tr)["in_flight"] == 10


def test_overall_utilization_converges(alexnet, reference):
    d = reference["690t-multi"]
    m = design_metrics(d, alexnet, 100e6)
    gaps = [m.utilization - simulate(d, alexnet, n).utilization() for n in (20, 100, 400)]
    assert gaps[0] > gaps[1] > gaps[2] > 0
    # fill and drain cost a fixed number of partial segments
    assert gaps[2] < 0.015


def test_csv_totals(alexnet, reference):
    tr = simulate(reference["485t-multi"], alexnet, 15)
    rows = list(csv.DictReader(io.StringIO(tr.to_csv())))
    assert list(rows[0]) == ["segment", "clp", "layer", "image", "busy_cycles", "idle_cycles"]
    assert sum(int(r["busy_cycles"]) + int(r["idle_cycles"]) for r in rows) == 3 * tr.total_cycles()
    assert "\r" not in tr.to_csv()


def test_mismatch(alexnet):
    net, d = toy()
    with pytest.raises(DesignError):
        simulate(d, alexnet, 3)
    with pytest.raises(ValueError):
        simulate(d, net, 0)
