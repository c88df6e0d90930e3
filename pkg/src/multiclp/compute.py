"""Compute partitioning: which layers share a CLP, and at what grid shape.

Layers with identical dimensions are interchangeable, so the search runs
over multisets of layer *types* rather than subsets of layers.  A group is
a count vector (how many layers of each type) packed into one mixed-radix
integer; AlexNet's ten layers form five types of two, giving 3**5 groups
instead of 2**10.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .cnn import CnnSpec, LayerDims, total_macs
from .cost import DSP_PER_MAC, ClpShape, cdiv, cycles

INF = np.iinfo(np.int64).max // 4


def canonical_factors(n: int) -> set[int]:
    """Unroll factors t <= n whose ceil(n / t) differs from that of t - 1.

    Any other factor needs the same number of passes as the next smaller
    canonical one while costing more hardware, so it is never worth trying.
    """
    return {cdiv(n, q) for q in range(1, n + 1)}


def cycles_lower_bound(cnn: CnnSpec, n_dsp: int) -> int:
    if n_dsp < DSP_PER_MAC:
        raise ValueError(f"{n_dsp} DSP slices cannot build one arithmetic unit "
                         f"(need {DSP_PER_MAC} per multiply-add)")
    return cdiv(total_macs(cnn), n_dsp // DSP_PER_MAC)


@dataclass(frozen=True)
class ComputeCandidate:
    """Layer groups and their CLP shapes; `groups` holds (layer indices, shape)."""
    groups: tuple[tuple[tuple[int, ...], ClpShape], ...]
    total_dsp: int
    segment_cycles: int


class Workload:
    """Precomputed per-group cycle tables for one CNN and DSP budget."""

    def __init__(self, cnn: CnnSpec, n_dsp: int):
        self.cnn = cnn
        self.n_dsp = n_dsp
        cycles_lower_bound(cnn, n_dsp)  # validates n_dsp

        types: dict[tuple, list[int]] = {}
        for i, layer in enumerate(cnn):
            types.setdefault(layer.dims, []).append(i)
        self.type_layers: list[LayerDims] = [cnn[m[0]] for m in types.values()]
        self.members: list[list[int]] = list(types.values())
        self.counts = np.array([len(m) for m in self.members])
        T = len(self.members)

        self.weights = np.ones(T, dtype=np.int64)
        for t in range(1, T):
            self.weights[t] = self.weights[t - 1] * (self.counts[t - 1] + 1)
        self.n_states = int(self.weights[-1] * (self.counts[-1] + 1))
        self.full = self.n_states - 1
        self.vectors = np.array(list(itertools.product(*[range(c + 1) for c in self.counts[::-1]])))[:, ::-1]
        assert np.array_equal(self.vectors @ self.weights, np.arange(self.n_states))
        self.present = self.vectors > 0

        max_tm = n_dsp // DSP_PER_MAC
        canon_n = [canonical_factors(l.N) for l in self.type_layers]
        canon_m = [canonical_factors(l.M) for l in self.type_layers]
        tns = sorted(set().union(*canon_n))
        tms = sorted(set().union(*canon_m))
        shapes = [(tn, tm) for tn in tns for tm in tms if tn * tm <= max_tm]
        self.shapes = [ClpShape(tn, tm) for tn, tm in shapes]
        self.tn = np.array([s[0] for s in shapes], dtype=np.int64)
        self.tm = np.array([s[1] for s in shapes], dtype=np.int64)
        self.dsp = DSP_PER_MAC * self.tn * self.tm

        self.type_cycles = np.array([[cycles(l, s) for s in self.shapes] for l in self.type_layers],
                                    dtype=np.int64)
        self.state_cycles = self.vectors @ self.type_cycles

        is_cn = np.array([[tn in c for tn in self.tn] for c in canon_n])
        is_cm = np.array([[tm in c for tm in self.tm] for c in canon_m])
        pres = self.present.astype(np.int64)
        self.valid = ((pres @ is_cn) > 0) & ((pres @ is_cm) > 0)

        # per group: valid shapes by increasing DSP with running-min cycles,
        # so the cheapest shape meeting a target is one searchsorted away
        self._by_dsp = []
        for s in range(self.n_states):
            idx = np.flatnonzero(self.valid[s])
            idx = idx[np.lexsort((self.state_cycles[s, idx], self.dsp[idx]))]
            runmin = np.minimum.accumulate(self.state_cycles[s, idx]) if len(idx) else idx
            self._by_dsp.append((idx, runmin))

        self._subs = [None] * self.n_states

    # -- group helpers -------------------------------------------------
    def subgroups(self, s: int) -> np.ndarray:
        """All non-empty groups contained in group s."""
        if self._subs[s] is None:
            v = self.vectors[s]
            subs = np.array([np.dot(c, self.weights) for c in itertools.product(*[range(x + 1) for x in v])],
                            dtype=np.int64)
            self._subs[s] = np.sort(subs[subs > 0])
        return self._subs[s]

    def group_layers(self, s: int) -> list[LayerDims]:
        return [self.type_layers[t] for t in np.flatnonzero(self.present[s])]

    def top_type_weight(self, s: int) -> int:
        return int(self.weights[np.flatnonzero(self.present[s])[-1]]) if s else 0

    def min_dsp(self, target: float) -> np.ndarray:
        """Cheapest DSP count for each group to finish within `target` cycles (INF if impossible)."""
        out = np.full(self.n_states, INF, dtype=np.int64)
        for s in range(1, self.n_states):
            idx, runmin = self._by_dsp[s]
            if len(idx) == 0 or runmin[-1] > target:
                continue
            k = int(np.argmax(runmin <= target))
            out[s] = self.dsp[idx[k]]
        return out

    def shapes_within(self, s: int, target: float, dsp_cap: float) -> np.ndarray:
        idx = self._by_dsp[s][0]
        idx = idx[self.dsp[idx] <= dsp_cap]
        return idx[self.state_cycles[s, idx] <= target]

    def partition_dp(self, cost: np.ndarray, single: bool) -> np.ndarray:
        """Minimum over partitions of each group of the summed per-group cost."""
        if single:
            out = cost.copy()
            out[0] = 0
            return out
        best = np.full(self.n_states, INF, dtype=np.int64)
        best[0] = 0
        for s in range(1, self.n_states):
            subs = self.subgroups(s)
            tot = cost[subs] + best[s - subs]
            best[s] = min(int(tot.min()), INF)
        return best

    def assign_layers(self, groups: list[int]) -> list[tuple[int, ...]]:
        """Hand out concrete layer indices to groups, in CNN order within each type."""
        nxt = [0] * len(self.members)
        out = []
        for s in groups:
            idx = []
            for t in np.flatnonzero(self.present[s]):
                c = int(self.vectors[s, t])
                idx.extend(self.members[t][nxt[t]:nxt[t] + c])
                nxt[t] += c
            out.append(tuple(sorted(idx)))
        return out


def enumerate_partitions(w: Workload, target: float, single: bool,
                         cost: np.ndarray | None = None, budget: float | None = None) -> Iterator[list[tuple[int, int]]]:
    """Yield every (group, shape index) list covering all layers within the DSP budget.

    Groups come out in non-increasing packed order, and equal consecutive
    groups in non-increasing shape order, so each multiset partition and
    shape assignment appears once.
    """
    min_dsp = w.min_dsp(target)
    lb = w.partition_dp(min_dsp, single)
    if lb[w.full] > w.n_dsp:
        return
    stack: list[tuple[int, int]] = []

    def rec(rem: int, used: int, prev_g: int, prev_p: int):
        if rem == 0:
            yield list(stack)
            return
        groups = [w.full] if single else w.subgroups(rem)
        for g in groups[::-1]:
            g = int(g)
            if g > prev_g:
                continue
            rest = rem - g
            if rest and w.top_type_weight(rest) > g:
                continue
            if used + min_dsp[g] + lb[rest] > w.n_dsp:
                continue
            cap = w.n_dsp - used - lb[rest]
            for p in w.shapes_within(g, target, cap)[::-1]:
                p = int(p)
                if g == prev_g and p > prev_p:
                    continue
                stack.append((g, p))
                yield from rec(rest, used + int(w.dsp[p]), g, p)
                stack.pop()

    yield from rec(w.full, 0, w.full, len(w.shapes))


def optimize_compute(cnn: CnnSpec, n_dsp: int, cycles_target: float, single: bool = False,
                     workload: Workload | None = None) -> list[ComputeCandidate]:
    """All partitions and shapes that fit in `n_dsp` and finish within `cycles_target`."""
    w = workload or Workload(cnn, n_dsp)
    out = []
    for part in enumerate_partitions(w, cycles_target, single):
        layers = w.assign_layers([g for g, _ in part])
        groups = tuple((ls, w.shapes[p]) for ls, (_, p) in zip(layers, part))
        out.append(ComputeCandidate(groups, int(sum(w.dsp[p] for _, p in part)),
                                    int(max(w.state_cycles[g, p] for g, p in part))))
    return out
