"""Convolutional layer workloads.

A layer is described only by its loop bounds: N input maps, M output maps,
an R x C output map, a K x K filter and stride S.  Weights and activations
never matter to the cost models, so none are stored.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

DIM_FIELDS = ("N", "M", "R", "C", "K", "S")
_INT64_MAX = 2**63 - 1


class CnnSpecError(ValueError):
    """Raised for a malformed or invalid CNN description."""


@dataclass(frozen=True)
class LayerDims:
    name: str
    N: int
    M: int
    R: int
    C: int
    K: int
    S: int = 1

    def __post_init__(self):
        for f in DIM_FIELDS:
            v = getattr(self, f)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise CnnSpecError(f"layer {self.name!r}: field {f.lower()!r} must be a positive integer, got {v!r}")

    @property
    def dims(self) -> tuple[int, int, int, int, int, int]:
        return (self.N, self.M, self.R, self.C, self.K, self.S)

    @property
    def macs(self) -> int:
        return self.N * self.M * self.R * self.C * self.K * self.K

    @property
    def in_rows(self) -> int:
        return (self.R - 1) * self.S + self.K

    @property
    def in_cols(self) -> int:
        return (self.C - 1) * self.S + self.K


@dataclass(frozen=True)
class CnnSpec:
    layers: tuple[LayerDims, ...]

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise CnnSpecError("a CNN needs at least one layer")
        seen = set()
        for i, layer in enumerate(self.layers):
            if layer.name in seen:
                raise CnnSpecError(f"layer {i}: field 'name': duplicate layer name {layer.name!r}")
            seen.add(layer.name)

    def __len__(self):
        return len(self.layers)

    def __iter__(self):
        return iter(self.layers)

    def __getitem__(self, i):
        return self.layers[i]

    @property
    def names(self) -> list[str]:
        return [layer.name for layer in self.layers]

    def index_of(self, name: str) -> int:
        for i, layer in enumerate(self.layers):
            if layer.name == name:
                return i
        raise KeyError(name)


def total_macs(cnn: CnnSpec | Iterable[LayerDims]) -> int:
    total = sum(layer.macs for layer in cnn)
    if total > _INT64_MAX:
        raise OverflowError(f"MAC count {total} exceeds the 64-bit range")
    return total


def parse_cnn_spec(text: str) -> CnnSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise CnnSpecError(f"malformed CNN document: {e}") from None
    if not isinstance(doc, dict) or set(doc) != {"layers"}:
        raise CnnSpecError("CNN document must be an object with exactly one key, 'layers'")
    if not isinstance(doc["layers"], list):
        raise CnnSpecError("'layers' must be a list")

    keys = ("name",) + tuple(f.lower() for f in DIM_FIELDS)
    layers = []
    for i, entry in enumerate(doc["layers"]):
        if not isinstance(entry, dict):
            raise CnnSpecError(f"layer {i}: expected an object")
        for k in entry:
            if k not in keys:
                raise CnnSpecError(f"layer {i}: field {k!r}: unknown field")
        for k in keys:
            if k not in entry:
                raise CnnSpecError(f"layer {i}: field {k!r}: missing")
        if not isinstance(entry["name"], str) or not entry["name"]:
            raise CnnSpecError(f"layer {i}: field 'name': must be a non-empty string")
        for k in keys[1:]:
            v = entry[k]
            if not isinstance(v, int) or isinstance(v, bool):
                raise CnnSpecError(f"layer {i}: field {k!r}: must be an integer, got {v!r}")
            if v < 1:
                raise CnnSpecError(f"layer {i}: field {k!r}: must be positive, got {v}")
        layers.append(LayerDims(entry["name"], *(entry[k] for k in keys[1:])))
    try:
        return CnnSpec(tuple(layers))
    except CnnSpecError as e:
        raise CnnSpecError(str(e)) from None


def cnn_to_dict(cnn: CnnSpec) -> dict:
    return {"layers": [{"name": l.name, **{f.lower(): getattr(l, f) for f in DIM_FIELDS}} for l in cnn]}


def serialize_cnn_spec(cnn: CnnSpec) -> str:
    return json.dumps(cnn_to_dict(cnn), indent=2) + "\n"


def load_cnn(source: str) -> CnnSpec:
    """Resolve a builtin network name or read a JSON file."""
    if source.lower() in BUILTINS:
        return BUILTINS[source.lower()]()
    with open(source, encoding="utf-8") as f:
        return parse_cnn_spec(f.read())


def _pairs(stages: Sequence[tuple[int, ...]]) -> CnnSpec:
    layers = []
    for i, dims in enumerate(stages, start=1):
        for half in "ab":
            layers.append(LayerDims(f"{i}{half}", *dims))
    return CnnSpec(tuple(layers))


def builtin_alexnet() -> CnnSpec:
    # two-GPU AlexNet: each stage is a pair of identical half-layers
    return _pairs([
        (3, 48, 55, 55, 11, 4),
        (48, 128, 27, 27, 5, 1),
        (256, 192, 13, 13, 3, 1),
        (192, 192, 13, 13, 3, 1),
        (192, 128, 13, 13, 3, 1),
    ])


def builtin_vgg_e() -> CnnSpec:
    # VGG-19 ("E") convolutional stack; 3x3 filters, stride 1, same padding
    plan = [
        ("1_1", 3, 64, 224), ("1_2", 64, 64, 224),
        ("2_1", 64, 128, 112), ("2_2", 128, 128, 112),
        ("3_1", 128, 256, 56), ("3_2", 256, 256, 56), ("3_3", 256, 256, 56), ("3_4", 256, 256, 56),
        ("4_1", 256, 512, 28), ("4_2", 512, 512, 28), ("4_3", 512, 512, 28), ("4_4", 512, 512, 28),
        ("5_1", 512, 512, 14), ("5_2", 512, 512, 14), ("5_3", 512, 512, 14), ("5_4", 512, 512, 14),
    ]
    return CnnSpec(tuple(LayerDims(f"conv{n}", N, M, R, R, 3, 1) for n, N, M, R in plan))


BUILTINS = {"alexnet": builtin_alexnet, "vgg-e": builtin_vgg_e, "vgge": builtin_vgg_e}
