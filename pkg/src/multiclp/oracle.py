"""Exhaustive reference optimizer for toy instances.

Shares nothing with the main search except the cost model.  It walks every
set partition of the individual layers, every CLP shape per group and, per
CLP, every pair of input/output bank BRAM costs, letting each layer take
its cheapest tile under those caps.  Any concrete tiling is matched or beaten
by the caps equal to its own bank costs, so this covers all tilings.
Shapes are limited to Tn <= max N and Tm <= max M of the group; a larger
unroll never saves a cycle and costs strictly more DSPs.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

from .cnn import CnnSpec
from .cost import (BW_RTOL, ClpConfig, ClpShape, Design, LayerTiling, ResourceBudget, bank_brams, bram_count,
                   buffer_spec, clp_peak_bandwidth, cycles, design_metrics, num_dsp, output_bank_brams,
                   transfer_breakdown)

MAX_LAYERS = 4
MAX_DSP = 200


class InstanceTooLarge(ValueError):
    pass


def set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def _pareto(points):
    points = sorted(points, key=lambda p: (p[0], p[1]))
    out = []
    for p in points:
        if not out or p[1] < out[-1][1]:
            out.append(p)
    return out


def brute_force_optimize(cnn: CnnSpec, budget: ResourceBudget, mode: str = "multi"):
    """Return (optimal segment cycles, one design achieving it)."""
    if len(cnn) > MAX_LAYERS or budget.n_dsp > MAX_DSP:
        raise InstanceTooLarge(f"oracle handles at most {MAX_LAYERS} layers and {MAX_DSP} DSPs")
    if budget.n_dsp < 5:
        raise ValueError("cannot build one arithmetic unit")
    L = len(cnn)
    freq = budget.freq_hz
    bw_cap = budget.bw_bytes_per_s * (1 + BW_RTOL)

    def tilings(i):
        l = cnn[i]
        return [LayerTiling(tr, tc) for tr in range(1, l.R + 1) for tc in range(1, l.C + 1)]

    @lru_cache(maxsize=None)
    def clp_options(group: tuple[int, ...], tn: int, tm: int):
        """Pareto (bram, bw, tiling tuple) over all tile choices for this CLP."""
        shape = ClpShape(tn, tm)
        per_layer = []
        for i in group:
            rows = []
            for t in tilings(i):
                l = cnn[i]
                inw = ((t.Tr - 1) * l.S + l.K) * ((t.Tc - 1) * l.S + l.K)
                rows.append((bank_brams(inw), output_bank_brams(t.Tr * t.Tc),
                             transfer_breakdown(l, shape, t).total_words, t))
            per_layer.append(rows)
        in_caps = sorted({r[0] for rows in per_layer for r in rows})
        out_caps = sorted({r[1] for rows in per_layer for r in rows})
        pts = []
        for a in in_caps:
            for b in out_caps:
                choice = []
                for rows in per_layer:
                    ok = [r for r in rows if r[0] <= a and r[1] <= b]
                    if not ok:
                        break
                    choice.append(min(ok, key=lambda r: r[2])[3])
                else:
                    clp = ClpConfig(shape, tuple(zip(group, choice)))
                    pts.append((bram_count(shape, buffer_spec(clp, cnn)), clp_peak_bandwidth(clp, cnn, freq),
                                tuple(choice)))
        return _pareto(pts)

    def memory_fit(groups, shapes):
        opts = [clp_options(g, s.Tn, s.Tm) for g, s in zip(groups, shapes)]
        for combo in itertools.product(*opts):
            if sum(c[0] for c in combo) <= budget.n_bram and sum(c[1] for c in combo) <= bw_cap:
                return [c[2] for c in combo]
        return None

    parts = [[list(range(L))]] if mode == "single" else list(set_partitions(range(L)))
    best, witness = None, None
    for part in parts:
        groups = [tuple(sorted(g)) for g in part]
        shape_lists = []
        for g in groups:
            nmax = max(cnn[i].N for i in g)
            mmax = max(cnn[i].M for i in g)
            shape_lists.append([ClpShape(tn, tm) for tn in range(1, nmax + 1) for tm in range(1, mmax + 1)
                                if num_dsp(ClpShape(tn, tm)) <= budget.n_dsp])
        for shapes in itertools.product(*shape_lists):
            if sum(num_dsp(s) for s in shapes) > budget.n_dsp:
                continue
            seg = max(sum(cycles(cnn[i], s) for i in g) for g, s in zip(groups, shapes))
            if best is not None and seg >= best:
                continue
            tiles = memory_fit(groups, shapes)
            if tiles is None:
                continue
            best = seg
            witness = Design(tuple(ClpConfig(s, tuple(zip(g, t))) for g, s, t in zip(groups, shapes, tiles)))
    if best is None:
        raise ValueError("infeasible budget")
    return best, Design(witness.clps, design_metrics(witness, cnn, budget))
