"""Throughput-optimal Single-CLP and Multi-CLP design search.

The outer loop lowers a utilisation target in fixed steps: the cycle target is the ideal cycle count divided by
the target, and the first target that admits a design inside all three
budgets ends the loop.  Within that last step a bisection on the cycle
target finds the fastest feasible design exactly, and PickBest chooses
among the designs that reach it.

Feasibility at a cycle target is a depth-first search over layer groups
and CLP shapes.  Branches are cut with partition-DP lower bounds on DSP,
BRAM and bandwidth, and the per-CLP memory frontiers are merged as the
search descends.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .cnn import CnnSpec
from .compute import INF, ComputeCandidate, Workload, cycles_lower_bound
from .cost import (BW_RTOL, DSP_PER_MAC, ClpConfig, ClpShape, Design, LayerTiling, ResourceBudget, bank_brams, cycles,
                   design_metrics, fits_budget, num_dsp)
from .memory import Frontier, TilingTable, clp_frontier, merge_frontiers, pareto_indices

log = logging.getLogger(__name__)

SINGLE = "single"
MULTI = "multi"


class InfeasibleError(RuntimeError):
    """No design fits the budget."""


@dataclass(frozen=True)
class OptimizerConfig:
    step: float = 0.01
    mode: str = MULTI
    # PickBest enumerates at most this many compute candidates at the optimum
    max_candidates: int = 200_000

    def __post_init__(self):
        if not 0 < self.step < 1:
            raise ValueError("step must lie strictly between 0 and 1")
        if self.mode not in (SINGLE, MULTI):
            raise ValueError(f"mode must be {SINGLE!r} or {MULTI!r}")


@dataclass
class _Partial:
    bram: np.ndarray
    bw: np.ndarray
    picks: np.ndarray  # [points, clps] frontier index per CLP so far


@dataclass
class DesignSet:
    """Designs sharing one compute candidate: one per memory Pareto point."""
    groups: list[tuple[int, int]]  # (group state, shape index)
    segment_cycles: int
    total_dsp: int
    bram: np.ndarray
    bw: np.ndarray
    picks: np.ndarray


class Search:
    def __init__(self, cnn: CnnSpec, budget: ResourceBudget, single: bool = False):
        self.cnn = cnn
        self.budget = budget
        self.single = single
        self.w = Workload(cnn, budget.n_dsp)
        self.bw_cap = budget.bw_bytes_per_s * (1 + BW_RTOL)
        self.tables = [TilingTable(l) for l in self.w.type_layers]
        self._frontiers: dict[tuple[int, int], Frontier] = {}
        self.cycles_min = cycles_lower_bound(cnn, budget.n_dsp)
        self._lower_bounds()

    def _lower_bounds(self):
        # closed-form ends of each (group, shape) memory frontier:
        # smallest tiles give least BRAM, whole-layer tiles the least traffic
        w = self.w
        f = self.budget.freq_hz
        kmax = np.zeros(w.n_states, dtype=np.int64)
        for t, l in enumerate(w.type_layers):
            kmax = np.where(w.present[:, t], np.maximum(kmax, l.K * l.K), kmax)
        kb = np.array([bank_brams(int(k)) for k in kmax])[:, None]
        self.bram_lb = w.tn[None, :] * kb + w.tn * w.tm * kb + 2 * w.tm[None, :]
        type_bw = np.array([[t.words(s).min() * 4 * f / cycles(t.layer, s) for s in w.shapes]
                            for t in self.tables])
        self.bw_lb = np.zeros((w.n_states, len(w.shapes)))
        for t in range(len(self.tables)):
            self.bw_lb = np.where(w.present[:, t][:, None], np.maximum(self.bw_lb, type_bw[t]), self.bw_lb)

    def frontier(self, g: int, p: int) -> Frontier:
        key = (g, p)
        if key not in self._frontiers:
            tabs = [self.tables[t] for t in np.flatnonzero(self.w.present[g])]
            self._frontiers[key] = clp_frontier(tabs, self.w.shapes[p], self.budget.freq_hz)
        return self._frontiers[key]

    def _group_minima(self, target: float):
        w = self.w
        ok = w.valid & (w.state_cycles <= target)
        bram = np.where(ok, self.bram_lb, INF).min(axis=1)
        bw = np.where(ok, self.bw_lb, np.inf).min(axis=1)
        return bram, bw

    def _float_dp(self, cost: np.ndarray) -> np.ndarray:
        w = self.w
        if self.single:
            out = cost.copy()
            out[0] = 0.0
            return out
        best = np.full(w.n_states, np.inf)
        best[0] = 0.0
        for s in range(1, w.n_states):
            subs = w.subgroups(s)
            best[s] = (cost[subs] + best[s - subs]).min()
        return best

    def designs(self, target: float, first_only: bool = False, limit: int | None = None) -> Iterator[DesignSet]:
        """Every compute candidate meeting `target` that has a memory assignment within budget."""
        w, budget = self.w, self.budget
        min_dsp = w.min_dsp(target)
        lb_dsp = w.partition_dp(min_dsp, self.single)
        if lb_dsp[w.full] > budget.n_dsp:
            return
        g_bram, g_bw = self._group_minima(target)
        lb_bram = self._float_dp(g_bram.astype(float))
        lb_bw = self._float_dp(g_bw)
        if lb_bram[w.full] > budget.n_bram or lb_bw[w.full] > self.bw_cap:
            return
        stack: list[tuple[int, int]] = []
        count = 0

        def rec(rem, used, prev_g, prev_p, part: _Partial | None, seg):
            nonlocal count
            if rem == 0:
                count += 1
                yield DesignSet(list(stack), seg, used, part.bram, part.bw, part.picks)
                return
            groups = [w.full] if self.single else w.subgroups(rem)
            for g in groups[::-1]:
                g = int(g)
                if g > prev_g:
                    continue
                rest = rem - g
                if rest and w.top_type_weight(rest) > g:
                    continue
                if used + min_dsp[g] + lb_dsp[rest] > budget.n_dsp:
                    continue
                base_bram = part.bram[0] if part is not None else 0
                base_bw = part.bw[-1] if part is not None else 0.0
                if base_bram + g_bram[g] + lb_bram[rest] > budget.n_bram:
                    continue
                if base_bw + g_bw[g] + lb_bw[rest] > self.bw_cap:
                    continue
                cap = budget.n_dsp - used - lb_dsp[rest]
                for p in w.shapes_within(g, target, cap)[::-1]:
                    p = int(p)
                    if g == prev_g and p > prev_p:
                        continue
                    if base_bram + self.bram_lb[g, p] + lb_bram[rest] > budget.n_bram:
                        continue
                    if base_bw + self.bw_lb[g, p] + lb_bw[rest] > self.bw_cap:
                        continue
                    fr = self.frontier(g, p)
                    bram_cap = budget.n_bram - lb_bram[rest]
                    bw_cap = self.bw_cap - lb_bw[rest]
                    if part is None:
                        ok = np.flatnonzero((fr.bram <= bram_cap) & (fr.bw <= bw_cap))
                        if len(ok) == 0:
                            continue
                        nxt = _Partial(fr.bram[ok], fr.bw[ok], ok[:, None])
                    else:
                        m = merge_frontiers(part.bram, part.bw, fr.bram, fr.bw, bram_cap, bw_cap)
                        if m is None:
                            continue
                        nxt = _Partial(m[0], m[1], np.column_stack([part.picks[m[2]], m[3]]))
                    stack.append((g, p))
                    yield from rec(rest, used + int(w.dsp[p]), g, p, nxt,
                                   max(seg, int(w.state_cycles[g, p])))
                    stack.pop()
                    if first_only and count:
                        return
                    if limit is not None and count >= limit:
                        return

        yield from rec(w.full, 0, w.full, len(w.shapes), None, 0)

    def first(self, target: float) -> DesignSet | None:
        return next(self.designs(target, first_only=True), None)

    def materialize(self, ds: DesignSet, point: int) -> Design:
        w = self.w
        layers = w.assign_layers([g for g, _ in ds.groups])
        clps = []
        for k, ((g, p), idx) in enumerate(zip(ds.groups, layers)):
            fr = self.frontier(g, p)
            j = int(ds.picks[point, k])
            shape = w.shapes[p]
            chosen = {}
            for t in np.flatnonzero(w.present[g]):
                chosen[int(t)] = self.tables[t].pick(shape, int(fr.in_cap[j]), int(fr.out_cap[j]))
            type_of = {i: t for t, ms in enumerate(w.members) for i in ms}
            clps.append(ClpConfig(shape, tuple((i, chosen[type_of[i]]) for i in idx)))
        return Design(tuple(_canonical_order(clps)))


def _canonical_order(clps: list[ClpConfig]) -> list[ClpConfig]:
    # CLPs listed by their first layer in CNN order
    return sorted(clps, key=lambda c: c.layer_indices[0])


def _sort_key(d: Design):
    m = d.metrics
    return (m.segment_cycles, m.total_bram, m.aggregate_bandwidth, len(d.clps),
            [(s.Tn, s.Tm) for s in d.shapes])


def dominates(a: Design, b: Design) -> bool:
    ma, mb = a.metrics, b.metrics
    no_worse = (ma.throughput_img_s >= mb.throughput_img_s and ma.total_bram <= mb.total_bram
                and ma.aggregate_bandwidth <= mb.aggregate_bandwidth)
    better = (ma.throughput_img_s > mb.throughput_img_s or ma.total_bram < mb.total_bram
              or ma.aggregate_bandwidth < mb.aggregate_bandwidth)
    return no_worse and better


def prune_dominated(designs: Sequence[Design]) -> list[Design]:
    # a dominator always sorts earlier, and dominance is transitive, so checking
    # against the survivors so far is enough
    order = sorted(range(len(designs)), key=lambda i: (-designs[i].metrics.throughput_img_s,
                                                       designs[i].metrics.total_bram,
                                                       designs[i].metrics.aggregate_bandwidth))
    kept: list[int] = []
    for i in order:
        if not any(dominates(designs[k], designs[i]) for k in kept):
            kept.append(i)
    return [designs[i] for i in sorted(kept)]


def pick_best(designs: Iterable[Design]) -> Design:
    """Highest throughput, then fewest BRAMs, least bandwidth, fewest CLPs, smallest shapes."""
    designs = list(designs)
    if not designs:
        raise ValueError("pick_best needs at least one design")
    if any(d.metrics is None for d in designs):
        raise ValueError("designs must carry metrics")
    return min(designs, key=_sort_key)


def _to_designs(search: Search, sets: Iterable[DesignSet]) -> list[Design]:
    out = []
    for ds in sets:
        for k in range(len(ds.bram)):
            d = search.materialize(ds, k)
            out.append(Design(d.clps, design_metrics(d, search.cnn, search.budget)))
    return out


def _best_of(search: Search, sets: Iterable[DesignSet]) -> Design:
    # only the least-BRAM point of each candidate's frontier can win PickBest
    # outright; ties on BRAM are impossible within one frontier
    best_sets = []
    for ds in sets:
        best_sets.append(DesignSet(ds.groups, ds.segment_cycles, ds.total_dsp,
                                   ds.bram[:1], ds.bw[:1], ds.picks[:1]))
    return pick_best(_to_designs(search, best_sets))


def optimize_memory(cnn: CnnSpec, n_bram: int, bw_bytes_per_s: float, candidates: Iterable[ComputeCandidate],
                    freq_hz: float = 100e6) -> list[Design]:
    """All (BRAM, bandwidth) Pareto-optimal tilings of each candidate that fit both budgets."""
    bw_cap = bw_bytes_per_s * (1 + BW_RTOL)
    tables: dict[tuple, TilingTable] = {}
    fronts_seen: dict[tuple, Frontier] = {}
    picked: dict[tuple, LayerTiling] = {}

    def table(l):
        if l.dims not in tables:
            tables[l.dims] = TilingTable(l)
        return tables[l.dims]

    def front(idx, shape):
        key = (tuple(sorted(l.dims for l in _distinct(cnn, idx))), shape)
        if key not in fronts_seen:
            fronts_seen[key] = clp_frontier([table(l) for l in _distinct(cnn, idx)], shape, freq_hz)
        return fronts_seen[key]

    out = []
    for cand in candidates:
        fronts = [front(idx, shape) for idx, shape in cand.groups]
        bram, bw = fronts[0].bram, fronts[0].bw
        picks = np.arange(len(bram))[:, None]
        ok = np.flatnonzero((bram <= n_bram) & (bw <= bw_cap))
        bram, bw, picks = bram[ok], bw[ok], picks[ok]
        for fr in fronts[1:]:
            if len(bram) == 0:
                break
            m = merge_frontiers(bram, bw, fr.bram, fr.bw, n_bram, bw_cap)
            if m is None:
                bram = bram[:0]
                break
            bram, bw, picks = m[0], m[1], np.column_stack([picks[m[2]], m[3]])
        for k in range(len(bram)):
            clps = []
            for (idx, shape), fr, j in zip(cand.groups, fronts, picks[k]):
                tilings = {}
                for l in _distinct(cnn, idx):
                    key = (l.dims, shape, int(fr.in_cap[j]), int(fr.out_cap[j]))
                    if key not in picked:
                        picked[key] = table(l).pick(shape, key[2], key[3])
                    tilings[l.dims] = picked[key]
                clps.append(ClpConfig(shape, tuple((i, tilings[cnn[i].dims]) for i in idx)))
            d = Design(tuple(_canonical_order(clps)))
            out.append(Design(d.clps, design_metrics(d, cnn, freq_hz)))
    return out


def _distinct(cnn, idx):
    seen = {}
    for i in idx:
        seen.setdefault(cnn[i].dims, cnn[i])
    return list(seen.values())


@dataclass
class OptimizeResult:
    design: Design
    target: float          # utilisation target at which the loop stopped
    cycles_target: float
    iterations: int
    search: Search = field(repr=False)


def _cycles_target(cmin: int, target: float) -> int:
    # cycle counts are integers, so compare against the floor
    return math.floor(cmin / target * (1 + 1e-12))


def run_optimizer(cnn: CnnSpec, budget: ResourceBudget, config: OptimizerConfig = OptimizerConfig()) -> OptimizeResult:
    if budget.n_dsp < DSP_PER_MAC:
        raise InfeasibleError(f"{budget.n_dsp} DSP slices cannot build one arithmetic unit "
                              f"(need {DSP_PER_MAC} per multiply-add)")
    search = Search(cnn, budget, single=config.mode == SINGLE)
    cmin = search.cycles_min
    k = 0
    prev_target = cmin - 1
    found = None
    while True:
        target = 1.0 - k * config.step
        if target <= 1e-9:
            # every finite target failed; last resort is no cycle bound at all
            ct = INF
        else:
            ct = _cycles_target(cmin, target)
        found = search.first(ct)
        if found is not None:
            break
        if ct == INF:
            raise InfeasibleError("no design fits the DSP, BRAM and bandwidth budgets")
        log.debug("target %.2f (%d cycles): no design", target, ct)
        prev_target = ct
        k += 1

    # exact optimum within the last step
    lo, hi = prev_target, found.segment_cycles
    while hi - lo > 1:
        mid = (lo + hi) // 2
        d = search.first(mid)
        if d is None:
            lo = mid
        else:
            hi = d.segment_cycles
    sets = list(search.designs(hi, limit=config.max_candidates))
    best = _best_of(search, sets)
    assert best.metrics.segment_cycles == hi
    validate(best, cnn, budget)
    return OptimizeResult(best, max(target, 0.0), ct, k + 1, search)


def optimize_multi_clp(cnn: CnnSpec, budget: ResourceBudget, config: OptimizerConfig = OptimizerConfig()) -> Design:
    return run_optimizer(cnn, budget, config).design


def validate(design: Design, cnn: CnnSpec, budget: ResourceBudget):
    m = design_metrics(design, cnn, budget)
    if not fits_budget(m, budget):
        raise AssertionError(f"design exceeds budget: dsp={m.total_dsp} bram={m.total_bram} "
                             f"bw={m.aggregate_bandwidth:.4g}")


def tradeoff_frontier(cnn: CnnSpec, budget: ResourceBudget, config: OptimizerConfig = OptimizerConfig(),
                      result: OptimizeResult | None = None) -> list[Design]:
    """BRAM/bandwidth Pareto designs among all that meet the loop's final cycle target.

    These are the designs the last refinement step accepted, so their
    throughputs differ from the best by less than one step.
    """
    res = result or run_optimizer(cnn, budget, config)
    search = res.search
    sets = list(search.designs(res.cycles_target, limit=config.max_candidates))
    bram = np.concatenate([s.bram for s in sets])
    bw = np.concatenate([s.bw for s in sets])
    owner = np.concatenate([[i] * len(s.bram) for i, s in enumerate(sets)]).astype(int)
    point = np.concatenate([np.arange(len(s.bram)) for s in sets]).astype(int)
    keep = pareto_indices(bram, bw)
    out = []
    for k in keep:
        ds = sets[owner[k]]
        d = search.materialize(ds, point[k])
        out.append(Design(d.clps, design_metrics(d, cnn, budget)))
    return sorted(out, key=lambda d: d.metrics.total_bram)
