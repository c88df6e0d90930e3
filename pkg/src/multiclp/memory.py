"""On-chip buffering versus off-chip traffic.

For a fixed CLP (shape plus the layers it runs) the only free choices are
the per-layer (Tr, Tc) tiles.  Larger tiles cut refills and bandwidth but
grow the input and output banks; the bank sizes are set by the most
demanding layer.  `clp_frontier` enumerates every BRAM cost level of the
input and output banks and, under each pair of caps, lets every layer take
its cheapest tile.  The result is the exact (BRAM, bandwidth) Pareto curve
of that CLP.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cnn import LayerDims
from .cost import BRAM_WORDS, WORD_BYTES, ClpShape, LayerTiling, bank_brams, cdiv, cycles
from .compute import canonical_factors


def input_level(words):
    # BRAM cost of a level-i input/weight bank is 1 for i == 0, else 2 * i
    return np.where(words <= BRAM_WORDS // 2, 0, -(-words // BRAM_WORDS))


def output_level(words):
    # BRAM cost of a level-j output bank is 2 * (j + 1)
    return np.maximum(1, -(-words // BRAM_WORDS)) - 1


def input_level_cost(n: int) -> np.ndarray:
    return np.maximum(1, 2 * np.arange(n))


def output_level_cost(n: int) -> np.ndarray:
    return 2 * (np.arange(n) + 1)


class TilingTable:
    """Candidate tiles of one layer, pruned to those no other tile beats for any CLP shape.

    Transfer volume is nt * (a * in_words + b) + c * nt * out_words + M with
    shape-dependent a, b, c >= 0, so a tile is only useful if it is not
    dominated in (tile count, halo'd input words, output words, bank levels).
    """

    def __init__(self, layer: LayerDims):
        self.layer = layer
        trs = np.array(sorted(canonical_factors(layer.R)))
        tcs = np.array(sorted(canonical_factors(layer.C)))
        tr, tc = (a.ravel() for a in np.meshgrid(trs, tcs, indexing="ij"))
        nt = (-(-layer.R // tr)) * (-(-layer.C // tc))
        inw = ((tr - 1) * layer.S + layer.K) * ((tc - 1) * layer.S + layer.K)
        outw = tr * tc
        keys = np.stack([nt, nt * inw, nt * outw, input_level(inw), output_level(outw)], axis=1)
        keep = _nondominated(keys)
        self.tr, self.tc = tr[keep], tc[keep]
        self.nt, self.inw, self.outw = nt[keep], inw[keep], outw[keep]
        self.in_idx = input_level(self.inw)
        self.out_idx = output_level(self.outw)
        self.n_in = int(self.in_idx.max()) + 1
        self.n_out = int(self.out_idx.max()) + 1

    def words(self, shape: ClpShape) -> np.ndarray:
        l = self.layer
        passes_m = cdiv(l.M, shape.Tm)
        a = passes_m * cdiv(l.N, shape.Tn) * shape.Tn
        b = passes_m * cdiv(l.N, shape.Tn) * shape.Tn * shape.Tm * l.K * l.K
        c = passes_m * shape.Tm
        return self.nt * (a * self.inw + b) + c * self.nt * self.outw + l.M

    def best_words_grid(self, shape: ClpShape, n_in: int, n_out: int) -> np.ndarray:
        """Least transfer volume with input level <= i and output level <= j (inf if none)."""
        grid = np.full((n_in, n_out), np.inf)
        np.minimum.at(grid, (self.in_idx, self.out_idx), self.words(shape).astype(float))
        np.minimum.accumulate(grid, axis=0, out=grid)
        np.minimum.accumulate(grid, axis=1, out=grid)
        return grid

    def pick(self, shape: ClpShape, in_cap: int, out_cap: int) -> LayerTiling:
        ok = (self.in_idx <= in_cap) & (self.out_idx <= out_cap)
        idx = np.flatnonzero(ok)
        w = self.words(shape)[idx]
        order = np.lexsort((self.tc[idx], self.tr[idx], self.out_idx[idx], self.in_idx[idx], w))
        k = idx[order[0]]
        return LayerTiling(int(self.tr[k]), int(self.tc[k]))


def _nondominated(keys: np.ndarray) -> np.ndarray:
    """Indices of rows not weakly dominated by a distinct row (all columns minimised)."""
    order = np.lexsort(keys.T[::-1])
    keys = keys[order]
    keep = []
    for i in range(len(keys)):
        row = keys[i]
        if keep:
            k = keys[keep]
            if np.any(np.all(k <= row, axis=1)):
                continue
        keep.append(i)
    return np.sort(order[keep])


@dataclass
class Frontier:
    """Pareto points (increasing BRAM, strictly decreasing bandwidth) of one CLP."""
    bram: np.ndarray
    bw: np.ndarray
    in_cap: np.ndarray
    out_cap: np.ndarray

    def __len__(self):
        return len(self.bram)


def pareto_indices(bram: np.ndarray, bw: np.ndarray) -> np.ndarray:
    order = np.lexsort((bw, bram))
    b = bw[order]
    prev = np.concatenate(([np.inf], np.minimum.accumulate(b)[:-1]))
    return order[b < prev]


def clp_frontier(tables: list[TilingTable], shape: ClpShape, freq_hz: float) -> Frontier:
    n_in = max(t.n_in for t in tables)
    n_out = max(t.n_out for t in tables)
    bw = np.zeros((n_in, n_out))
    for t in tables:
        grid = t.best_words_grid(shape, n_in, n_out)
        grid = np.pad(grid[:t.n_in, :t.n_out], ((0, n_in - t.n_in), (0, n_out - t.n_out)), mode="edge")
        np.maximum(bw, grid * WORD_BYTES * freq_hz / cycles(t.layer, shape), out=bw)
    wbank = bank_brams(max(t.layer.K ** 2 for t in tables))
    bram = (shape.Tn * input_level_cost(n_in)[:, None] + shape.Tn * shape.Tm * wbank
            + shape.Tm * output_level_cost(n_out)[None, :])
    ii, jj = np.meshgrid(np.arange(n_in), np.arange(n_out), indexing="ij")
    bram, bw, ii, jj = bram.ravel(), bw.ravel(), ii.ravel(), jj.ravel()
    ok = np.isfinite(bw)
    bram, bw, ii, jj = bram[ok], bw[ok], ii[ok], jj[ok]
    keep = pareto_indices(bram, bw)
    return Frontier(bram[keep].astype(np.int64), bw[keep], ii[keep], jj[keep])


def merge_frontiers(a_bram, a_bw, b_bram, b_bw, bram_cap: float, bw_cap: float):
    """Pareto set of all pairwise sums within the caps; returns (bram, bw, ia, ib)."""
    s_bram = (a_bram[:, None] + b_bram[None, :]).ravel()
    s_bw = (a_bw[:, None] + b_bw[None, :]).ravel()
    ok = np.flatnonzero((s_bram <= bram_cap) & (s_bw <= bw_cap))
    if len(ok) == 0:
        return None
    keep = ok[pareto_indices(s_bram[ok], s_bw[ok])]
    return s_bram[keep], s_bw[keep], keep // len(b_bram), keep % len(b_bram)
