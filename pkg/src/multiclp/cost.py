"""Analytic cost model of a convolutional layer processor (CLP).

A CLP has a Tn x Tm grid of multiply-accumulate units and runs each of its
layers with a per-layer (Tr, Tc) output tile.  Everything here is exact
integer arithmetic except bandwidth, which is a rate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .cnn import CnnSpec, LayerDims, total_macs

WORD_BYTES = 4
DSP_PER_MAC = 5  # 2 for the fp multiplier, 3 for the fp adder
BRAM_WORDS = 512
GIB = 2**30
# bandwidth sums are compared with this relative slack to absorb summation order
BW_RTOL = 1e-12


def cdiv(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True, order=True)
class ClpShape:
    Tn: int
    Tm: int

    def __post_init__(self):
        if self.Tn < 1 or self.Tm < 1:
            raise ValueError(f"CLP shape must be positive, got ({self.Tn}, {self.Tm})")

    @property
    def macs_per_cycle(self) -> int:
        return self.Tn * self.Tm


@dataclass(frozen=True)
class LayerTiling:
    Tr: int
    Tc: int

    def check(self, layer: LayerDims):
        if not (1 <= self.Tr <= layer.R and 1 <= self.Tc <= layer.C):
            raise ValueError(f"tiling ({self.Tr}, {self.Tc}) out of range for layer {layer.name} "
                             f"(R={layer.R}, C={layer.C})")


@dataclass(frozen=True)
class TransferBreakdown:
    d_ib: int
    n_ib: int
    d_wb: int
    n_wb: int
    d_ob: int
    n_ob: int
    bias_words: int

    @property
    def total_words(self) -> int:
        return self.d_ib * self.n_ib + self.d_wb * self.n_wb + self.d_ob * self.n_ob + self.bias_words


@dataclass(frozen=True)
class BufferSpec:
    input_bank_words: int
    weight_bank_words: int
    output_bank_words: int


@dataclass(frozen=True)
class ResourceBudget:
    n_dsp: int
    n_bram: int
    bw_bytes_per_s: float
    freq_hz: float = 100e6

    def __post_init__(self):
        if self.n_dsp <= 0 or self.n_bram <= 0 or self.bw_bytes_per_s <= 0 or self.freq_hz <= 0:
            raise ValueError("all budget fields must be positive")

    @property
    def bw_gib(self) -> float:
        return self.bw_bytes_per_s / GIB


@dataclass(frozen=True)
class ClpConfig:
    """One CLP: its grid shape and the (layer index, tiling) pairs it runs, in run order."""
    shape: ClpShape
    layers: tuple[tuple[int, LayerTiling], ...]

    @property
    def layer_indices(self) -> list[int]:
        return [i for i, _ in self.layers]


@dataclass(frozen=True)
class Metrics:
    segment_cycles: int
    clp_cycles: tuple[int, ...]
    throughput_img_s: float
    total_dsp: int
    total_bram: int
    clp_bram: tuple[int, ...]
    clp_bandwidth: tuple[float, ...]
    aggregate_bandwidth: float  # bytes/s
    utilization: float
    gflops: float

    @property
    def bandwidth_gib(self) -> float:
        return self.aggregate_bandwidth / GIB


@dataclass(frozen=True)
class Design:
    clps: tuple[ClpConfig, ...]
    metrics: Metrics | None = field(default=None, compare=False)

    @property
    def shapes(self) -> list[ClpShape]:
        return [c.shape for c in self.clps]


class DesignError(ValueError):
    """A design does not cover its CNN exactly once."""


def cycles(layer: LayerDims, shape: ClpShape) -> int:
    return layer.R * layer.C * cdiv(layer.N, shape.Tn) * cdiv(layer.M, shape.Tm) * layer.K * layer.K


def transfer_breakdown(layer: LayerDims, shape: ClpShape, tiling: LayerTiling) -> TransferBreakdown:
    tiling.check(layer)
    Tn, Tm, Tr, Tc = shape.Tn, shape.Tm, tiling.Tr, tiling.Tc
    n_ob = cdiv(layer.R, Tr) * cdiv(layer.C, Tc) * cdiv(layer.M, Tm)
    n_ib = n_ob * cdiv(layer.N, Tn)
    return TransferBreakdown(
        d_ib=Tn * ((Tr - 1) * layer.S + layer.K) * ((Tc - 1) * layer.S + layer.K),
        n_ib=n_ib,
        d_wb=Tn * Tm * layer.K * layer.K,
        n_wb=n_ib,
        d_ob=Tm * Tr * Tc,
        n_ob=n_ob,
        bias_words=layer.M,
    )


def layer_bandwidth(layer: LayerDims, shape: ClpShape, tiling: LayerTiling, freq_hz: float) -> float:
    """Average (= peak, under double buffering) off-chip traffic in bytes/s."""
    words = transfer_breakdown(layer, shape, tiling).total_words
    return words * WORD_BYTES * freq_hz / cycles(layer, shape)


def clp_peak_bandwidth(clp: ClpConfig, cnn: CnnSpec, freq_hz: float) -> float:
    if not clp.layers:
        raise ValueError("CLP has no layers")
    return max(layer_bandwidth(cnn[i], clp.shape, t, freq_hz) for i, t in clp.layers)


def num_dsp(shape: ClpShape) -> int:
    return DSP_PER_MAC * shape.Tn * shape.Tm


def bank_brams(words: int) -> int:
    # a double-buffered bank of <= 256 words fits in the two halves of one BRAM
    return 1 if words <= BRAM_WORDS // 2 else 2 * cdiv(words, BRAM_WORDS)


def output_bank_brams(words: int) -> int:
    # accumulation needs a read and a write port per buffer half
    return max(2, 2 * cdiv(words, BRAM_WORDS))


def buffer_spec(clp: ClpConfig, cnn: CnnSpec) -> BufferSpec:
    if not clp.layers:
        raise ValueError("CLP has no layers")
    ins, ws, outs = [], [], []
    for i, t in clp.layers:
        layer = cnn[i]
        t.check(layer)
        ins.append(((t.Tr - 1) * layer.S + layer.K) * ((t.Tc - 1) * layer.S + layer.K))
        ws.append(layer.K * layer.K)
        outs.append(t.Tr * t.Tc)
    return BufferSpec(max(ins), max(ws), max(outs))


def bram_count(shape: ClpShape, buffers: BufferSpec) -> int:
    Tn, Tm = shape.Tn, shape.Tm
    return (Tn * bank_brams(buffers.input_bank_words)
            + Tn * Tm * bank_brams(buffers.weight_bank_words)
            + Tm * output_bank_brams(buffers.output_bank_words))


def clp_cycles(clp: ClpConfig, cnn: CnnSpec) -> int:
    return sum(cycles(cnn[i], clp.shape) for i in clp.layer_indices)


def check_coverage(design: Design, cnn: CnnSpec):
    seen: dict[int, int] = {}
    for k, clp in enumerate(design.clps):
        if not clp.layers:
            raise DesignError(f"CLP{k} has no layers")
        for i in clp.layer_indices:
            if not 0 <= i < len(cnn):
                raise DesignError(f"CLP{k} refers to layer index {i}, CNN has {len(cnn)} layers")
            if i in seen:
                raise DesignError(f"layer {cnn[i].name} assigned to both CLP{seen[i]} and CLP{k}")
            seen[i] = k
    missing = [cnn[i].name for i in range(len(cnn)) if i not in seen]
    if missing:
        raise DesignError(f"unassigned layers: {', '.join(missing)}")


def design_metrics(design: Design, cnn: CnnSpec, budget: ResourceBudget | float) -> Metrics:
    """Aggregate metrics of a design; `budget` supplies the clock (a bare number is taken as Hz)."""
    freq = budget.freq_hz if isinstance(budget, ResourceBudget) else float(budget)
    check_coverage(design, cnn)
    per_cycles = tuple(clp_cycles(c, cnn) for c in design.clps)
    segment = max(per_cycles)
    brams = tuple(bram_count(c.shape, buffer_spec(c, cnn)) for c in design.clps)
    bws = tuple(clp_peak_bandwidth(c, cnn, freq) for c in design.clps)
    macs = total_macs(cnn)
    grid = sum(c.shape.macs_per_cycle for c in design.clps)
    thr = freq / segment
    return Metrics(
        segment_cycles=segment,
        clp_cycles=per_cycles,
        throughput_img_s=thr,
        total_dsp=sum(num_dsp(c.shape) for c in design.clps),
        total_bram=sum(brams),
        clp_bram=brams,
        clp_bandwidth=bws,
        aggregate_bandwidth=sum(bws),
        utilization=macs / (grid * segment),
        gflops=2 * macs * thr / 1e9,
    )


def with_metrics(design: Design, cnn: CnnSpec, budget: ResourceBudget | float) -> Design:
    return Design(design.clps, design_metrics(design, cnn, budget))


def fits_budget(metrics: Metrics, budget: ResourceBudget) -> bool:
    return (metrics.total_dsp <= budget.n_dsp and metrics.total_bram <= budget.n_bram
            and metrics.aggregate_bandwidth <= budget.bw_bytes_per_s * (1 + BW_RTOL))


def make_design(cnn: CnnSpec, clps: Sequence[tuple[tuple[int, int], Sequence[tuple[str, tuple[int, int]]]]]) -> Design:
    """Build a design from literal data: [((Tn, Tm), [(layer name, (Tr, Tc)), ...]), ...]."""
    out = []
    for (tn, tm), layers in clps:
        out.append(ClpConfig(ClpShape(tn, tm),
                             tuple((cnn.index_of(name), LayerTiling(tr, tc)) for name, (tr, tc) in layers)))
    return Design(tuple(out))
