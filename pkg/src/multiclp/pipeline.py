"""Segment-level simulation of a multi-CLP design running an image stream.

All CLPs start a segment together and the segment ends when the slowest one
is done.  Work is handed out by a small dataflow scheduler: a layer may take
an image only once the previous layer finished that image in an earlier
segment.  Nothing assumes the i + position pattern; it falls out of the rule
and is checked afterwards.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .cnn import CnnSpec
from .cost import Design, check_coverage, cycles

WARMUP, STEADY, DRAIN = "warmup", "steady", "drain"


class ScheduleError(RuntimeError):
    pass


@dataclass(frozen=True)
class SegmentTrace:
    freq_hz: float
    n_images: int
    n_layers: int
    grid: tuple[int, ...]                         # Tn*Tm per CLP
    layer_macs: dict[str, int]
    work: tuple[tuple[tuple[tuple[str, int, int], ...], ...], ...]  # [segment][clp] -> (layer, image, busy)
    segment_length: tuple[int, ...]
    phase: tuple[str, ...]

    @property
    def n_segments(self) -> int:
        return len(self.segment_length)

    def busy(self, s: int, k: int) -> int:
        return sum(b for _, _, b in self.work[s][k])

    def idle(self, s: int, k: int) -> int:
        return self.segment_length[s] - self.busy(s, k)

    def clp_idle(self, k: int, phase: str | None = STEADY) -> int:
        return sum(self.idle(s, k) for s in range(self.n_segments) if phase is None or self.phase[s] == phase)

    def segments(self, phase: str) -> list[int]:
        return [s for s in range(self.n_segments) if self.phase[s] == phase]

    def in_flight(self, s: int) -> int:
        return len({img for clp in self.work[s] for _, img, _ in clp})

    def steady_segment_length(self) -> int | None:
        steady = self.segments(STEADY)
        return max(self.segment_length[s] for s in steady) if steady else None

    def steady_throughput(self) -> float | None:
        seg = self.steady_segment_length()
        return None if seg is None else self.freq_hz / seg

    def utilization(self, phase: str | None = None) -> float:
        """Useful multiply-adds over what the grids could have done in the same cycles."""
        segs = range(self.n_segments) if phase is None else self.segments(phase)
        done = sum(self.layer_macs[name] for s in segs for runs in self.work[s] for name, _, _ in runs)
        avail = sum(self.grid) * sum(self.segment_length[s] for s in segs)
        return done / avail

    def image_span(self, image: int) -> tuple[int, int]:
        segs = [s for s in range(self.n_segments) for clp in self.work[s] for _, img, _ in clp if img == image]
        return min(segs), max(segs)

    def latency_segments(self, image: int = 0) -> int:
        a, b = self.image_span(image)
        return b - a + 1

    def total_cycles(self) -> int:
        return sum(self.segment_length)

    def to_csv(self) -> str:
        """One row per (layer, image) run.  A CLP's idle time for a segment sits on its last row there;
        a CLP with nothing to do gets a row with empty layer and image."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["segment", "clp", "layer", "image", "busy_cycles", "idle_cycles"])
        for s in range(self.n_segments):
            for k, runs in enumerate(self.work[s]):
                idle = self.idle(s, k)
                if not runs:
                    w.writerow([s, k, "", "", 0, idle])
                for j, (name, img, b) in enumerate(runs):
                    w.writerow([s, k, name, img, b, idle if j == len(runs) - 1 else 0])
        return buf.getvalue()


def simulate(design: Design, cnn: CnnSpec, n_images: int, freq_hz: float = 100e6) -> SegmentTrace:
    if n_images < 1:
        raise ValueError("n_images must be at least 1")
    check_coverage(design, cnn)
    L = len(cnn)
    owner = {}
    for k, clp in enumerate(design.clps):
        for i in clp.layer_indices:
            owner[i] = k
    # per CLP, its layers in network order
    order = [sorted(clp.layer_indices) for clp in design.clps]
    next_img = [0] * L              # next image each layer will take
    done_at: dict[tuple[int, int], int] = {}
    work, lengths = [], []
    s = 0
    while next_img[L - 1] < n_images:
        seg = []
        for k, clp in enumerate(design.clps):
            runs = []
            for i in order[k]:
                img = next_img[i]
                if img >= n_images:
                    continue
                if i > 0 and done_at.get((i - 1, img), s) >= s:
                    continue
                runs.append((i, img, cycles(cnn[i], clp.shape)))
            seg.append(runs)
        if not any(seg):
            raise ScheduleError(f"no layer can run in segment {s}")
        for runs in seg:
            for i, img, _ in runs:
                done_at[(i, img)] = s
                next_img[i] += 1
        work.append(tuple(tuple((cnn[i].name, img, b) for i, img, b in runs) for runs in seg))
        lengths.append(max(sum(b for _, _, b in runs) for runs in seg))
        s += 1
    _check(done_at, L, n_images)
    phase = tuple(WARMUP if t < L - 1 else DRAIN if t > n_images - 1 else STEADY for t in range(s))
    return SegmentTrace(freq_hz, n_images, L, tuple(c.shape.macs_per_cycle for c in design.clps),
                        {l.name: l.macs for l in cnn},
                        tuple(work), tuple(lengths), phase)


def _check(done_at, L, n_images):
    if len(done_at) != L * n_images:
        raise ScheduleError("some (layer, image) pair did not run exactly once")
    for (i, img), s in done_at.items():
        if i > 0 and done_at[(i - 1, img)] >= s:
            raise ScheduleError(f"layer {i} of image {img} ran before its input was ready")


def dependency_safe(trace: SegmentTrace, cnn: CnnSpec) -> bool:
    """Re-derive the dependency property from the trace alone."""
    pos = {n: i for i, n in enumerate(cnn.names)}
    when = {}
    for s in range(trace.n_segments):
        for runs in trace.work[s]:
            for name, img, _ in runs:
                if (pos[name], img) in when:
                    return False
                when[(pos[name], img)] = s
    if len(when) != trace.n_layers * trace.n_images:
        return False
    return all(i == 0 or when[(i - 1, img)] < s for (i, img), s in when.items())


def summary(trace: SegmentTrace) -> dict:
    steady = trace.segments(STEADY)
    out = {
        "images": trace.n_images,
        "segments": trace.n_segments,
        "warmup_segments": len(trace.segments(WARMUP)),
        "steady_segments": len(steady),
        "drain_segments": len(trace.segments(DRAIN)),
        "steady_segment_cycles": trace.steady_segment_length(),
        "steady_img_per_s": trace.steady_throughput(),
        "latency_segments": trace.latency_segments(0),
        "in_flight": max((trace.in_flight(s) for s in steady), default=None),
        "utilization": trace.utilization(),
        "steady_utilization": trace.utilization(STEADY) if steady else None,
        "clp_idle_pct": [100 * trace.clp_idle(k) / sum(trace.segment_length[s] for s in steady) if steady else None
                         for k in range(len(trace.grid))],
    }
    return out
