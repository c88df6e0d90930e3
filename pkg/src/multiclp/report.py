"""Design files, text reports, CSV rows and the DSP sweep."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

from .cnn import CnnSpec
from .cost import GIB, ClpConfig, ClpShape, Design, DesignError, LayerTiling, ResourceBudget, cycles, design_metrics
from .optimizer import InfeasibleError, OptimizerConfig, run_optimizer

PRESETS = {
    "485t": dict(n_dsp=2240, n_bram=1648, bw_gib=4.5),
    "690t": dict(n_dsp=2880, n_bram=2352, bw_gib=4.5),
}
SWEEP_COLUMNS = ["dsp", "mode", "segment_cycles", "img_per_s", "utilization", "bram_used", "bw_gib", "infeasible"]


def design_to_dict(design: Design, cnn: CnnSpec) -> dict:
    return {"clps": [{"tn": c.shape.Tn, "tm": c.shape.Tm,
                      "layers": [{"name": cnn[i].name, "tr": t.Tr, "tc": t.Tc} for i, t in c.layers]}
                     for c in design.clps]}


def design_from_dict(data: dict, cnn: CnnSpec) -> Design:
    try:
        clps = []
        for c in data["clps"]:
            layers = []
            for l in c["layers"]:
                i = cnn.index_of(l["name"])
                t = LayerTiling(int(l["tr"]), int(l["tc"]))
                t.check(cnn[i])
                layers.append((i, t))
            clps.append(ClpConfig(ClpShape(int(c["tn"]), int(c["tm"])), tuple(layers)))
    except (KeyError, TypeError) as e:
        raise DesignError(f"malformed design document: {e}") from None
    except ValueError as e:
        raise DesignError(str(e)) from None
    return Design(tuple(clps))


def dump_design(design: Design, cnn: CnnSpec) -> str:
    return json.dumps(design_to_dict(design, cnn), indent=2) + "\n"


def load_design(text: str, cnn: CnnSpec) -> Design:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise DesignError(f"design file is not JSON: {e}") from None
    return design_from_dict(data, cnn)


def fmt(v) -> str:
    """CSV cell: integers bare, reals with four decimals, None empty."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def design_report(design: Design, cnn: CnnSpec, budget: ResourceBudget | float) -> str:
    m = design.metrics or design_metrics(design, cnn, budget)
    lines = [f"{'':6}{'Tn':>5}{'Tm':>5}  {'Layer':<10}{'Tr':>5}{'Tc':>5}{'Cycles':>13}"]
    for k, c in enumerate(design.clps):
        for j, (i, t) in enumerate(c.layers):
            head = f"CLP{k:<3}{c.shape.Tn:>5}{c.shape.Tm:>5}" if j == 0 else " " * 16
            lines.append(f"{head}  {cnn[i].name:<10}{t.Tr:>5}{t.Tc:>5}{cycles(cnn[i], c.shape):>13,}")
        lines.append(f"{'':16}  {'total':<20}{m.clp_cycles[k]:>13,}")
    lines.append(f"{'Overall':<36}{m.segment_cycles:>13,}")
    lines.append("")
    lines.append(f"BRAM          {m.total_bram}")
    lines.append(f"DSP           {m.total_dsp}")
    lines.append(f"Bandwidth     {m.bandwidth_gib:.2f} GiB/s")
    lines.append(f"Utilization   {100 * m.utilization:.1f}%")
    lines.append(f"Throughput    {m.throughput_img_s:.2f} img/s")
    lines.append(f"Gflop/s       {m.gflops:.1f}")
    return "\n".join(lines) + "\n"


def design_rows(design: Design, cnn: CnnSpec):
    header = ["clp", "tn", "tm", "layer", "tr", "tc", "cycles"]
    rows = [(k, c.shape.Tn, c.shape.Tm, cnn[i].name, t.Tr, t.Tc, cycles(cnn[i], c.shape))
            for k, c in enumerate(design.clps) for i, t in c.layers]
    return header, rows


def tradeoff_rows(designs):
    header = ["bram", "bw_gib", "segment_cycles", "img_per_s", "n_clps"]
    rows = [(d.metrics.total_bram, d.metrics.bandwidth_gib, d.metrics.segment_cycles,
             d.metrics.throughput_img_s, len(d.clps)) for d in designs]
    return header, rows


@dataclass(frozen=True)
class SweepPoint:
    dsp: int
    mode: str
    design: Design | None

    def row(self):
        if self.design is None:
            return (self.dsp, self.mode, None, None, None, None, None, 1)
        m = self.design.metrics
        return (self.dsp, self.mode, m.segment_cycles, m.throughput_img_s, m.utilization, m.total_bram,
                m.bandwidth_gib, 0)


def sweep(cnn: CnnSpec, dsps, bram_ratio=1.3, bw_gib=4.5, modes=("single", "multi"), freq_hz=100e6,
          step=0.01, progress=None) -> list[SweepPoint]:
    """Optimize at each DSP budget with BRAM = floor(dsp / bram_ratio)."""
    out = []
    for dsp in dsps:
        budget = ResourceBudget(dsp, int(dsp // bram_ratio), bw_gib * GIB, freq_hz)
        for mode in modes:
            try:
                d = run_optimizer(cnn, budget, OptimizerConfig(step=step, mode=mode)).design
            except InfeasibleError:
                d = None
            out.append(SweepPoint(dsp, mode, d))
            if progress:
                progress(out[-1])
    return out
