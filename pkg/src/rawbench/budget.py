"""Parameter and MAC accounting for network specs against efficiency limits.

Conventions match the usual GMac counters: one MAC per multiply-accumulate
(not two FLOPs), same-padding spatial dims, bias terms add parameters but
no MACs.  Both conventions are switchable (``flops``/``bias_adds``).

The Bayer group convolution (bgc) layer runs an independent convolution on
each of the N^2 CFA-phase sub-tensors and reassembles the original layout,
so it carries N^2 times the parameters of a plain convolution while its
MAC count is exactly equal at stride 1: each of the N^2 sub-tensors has
1/N^2 of the spatial positions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import SpecError

MAX_PARAMS = 15_000_000          # inclusive bound
MAX_MACS = 150 * 10**9           # exclusive bound
REFERENCE_INPUT = (1, 4, 512, 512)

_KINDS = ("conv2d", "bgc", "depthwise", "pointwise", "elementwise")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    in_ch: int = 1
    out_ch: int = 1
    kernel: int = 1
    stride: int = 1
    bias: bool = True
    period_n: int = 2

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise SpecError(f"unknown layer kind {self.kind!r}")
        if min(self.in_ch, self.out_ch, self.kernel, self.stride) < 1:
            raise SpecError(f"channels/kernel/stride must be >= 1 in {self}")
        if self.kind == "depthwise" and self.in_ch != self.out_ch:
            raise SpecError(f"depthwise requires in_ch == out_ch, got {self}")
        if self.kind == "pointwise" and self.kernel != 1:
            raise SpecError(f"pointwise requires kernel == 1, got {self}")
        if self.kind == "bgc" and self.period_n < 1:
            raise SpecError(f"bgc period_n must be >= 1, got {self}")


@dataclass(frozen=True)
class BudgetReport:
    total_params: int
    total_macs: int
    per_layer: tuple[dict, ...] = ()
    ensemble: bool = False
    input_shape: tuple[int, int, int, int] = REFERENCE_INPUT


@dataclass(frozen=True)
class ConstraintResult:
    passed: bool
    reasons: tuple[str, ...] = ()


def _layer_params(layer: LayerSpec) -> int:
    k2 = layer.kernel * layer.kernel
    if layer.kind == "conv2d":
        return layer.in_ch * layer.out_ch * k2 + (layer.out_ch if layer.bias else 0)
    if layer.kind == "depthwise":
        return layer.in_ch * k2 + (layer.in_ch if layer.bias else 0)
    if layer.kind == "pointwise":
        return layer.in_ch * layer.out_ch + (layer.out_ch if layer.bias else 0)
    if layer.kind == "bgc":
        per_group = layer.in_ch * layer.out_ch * k2 + (layer.out_ch if layer.bias else 0)
        return layer.period_n**2 * per_group
    return 0  # elementwise


def count_params(model: list[LayerSpec]) -> int:
    """Total learnable parameters of an ordered layer list."""
    return sum(_layer_params(layer) for layer in model)


def _layer_macs(layer: LayerSpec, h: int, w: int) -> tuple[int, int, int]:
    """(macs, out_h, out_w) for one layer at same-padding."""
    if h % layer.stride or w % layer.stride:
        raise SpecError(f"spatial {h}x{w} not divisible by stride {layer.stride}")
    out_h, out_w = h // layer.stride, w // layer.stride
    k2 = layer.kernel * layer.kernel
    if layer.kind == "conv2d":
        macs = layer.in_ch * layer.out_ch * k2 * out_h * out_w
    elif layer.kind == "depthwise":
        macs = layer.in_ch * k2 * out_h * out_w
    elif layer.kind == "pointwise":
        macs = layer.in_ch * layer.out_ch * out_h * out_w
    elif layer.kind == "bgc":
        n = layer.period_n
        if h % n or w % n:
            raise SpecError(f"spatial {h}x{w} not divisible by bgc period {n}")
        sub_h, sub_w = h // n, w // n
        if sub_h % layer.stride or sub_w % layer.stride:
            raise SpecError(
                f"bgc sub-tensor {sub_h}x{sub_w} not divisible by stride {layer.stride}"
            )
        macs = n * n * layer.in_ch * layer.out_ch * k2 * (sub_h // layer.stride) * (
            sub_w // layer.stride
        )
    else:  # elementwise
        macs = 0
    return macs, out_h, out_w


def count_macs(
    model: list[LayerSpec],
    input_shape: tuple[int, int, int, int] = REFERENCE_INPUT,
    flops: bool = False,
    bias_adds: bool = False,
) -> int:
    """Multiply-accumulates for one forward pass; shapes thread layer to layer.

    ``flops=True`` doubles the count (multiply + add counted separately);
    ``bias_adds=True`` additionally counts one op per biased output element.
    """
    _, c, h, w = input_shape
    total = 0
    for layer in model:
        if layer.kind != "elementwise" and layer.in_ch != c:
            raise SpecError(f"layer {layer} expects {layer.in_ch} channels, input has {c}")
        macs, h, w = _layer_macs(layer, h, w)
        if h < 1 or w < 1:
            raise SpecError(f"spatial shape underflow after {layer}")
        total += macs
        if bias_adds and layer.bias and layer.kind != "elementwise":
            total += layer.out_ch * h * w
        if layer.kind != "elementwise":
            c = layer.out_ch
    return 2 * total if flops else total


def build_report(
    model: list[LayerSpec],
    input_shape: tuple[int, int, int, int] = REFERENCE_INPUT,
    ensemble: bool = False,
) -> BudgetReport:
    """Per-layer breakdown plus totals for a model at the given input shape."""
    per_layer = []
    _, c, h, w = input_shape
    for layer in model:
        if layer.kind != "elementwise" and layer.in_ch != c:
            raise SpecError(f"layer {layer} expects {layer.in_ch} channels, input has {c}")
        macs, h, w = _layer_macs(layer, h, w)
        per_layer.append(
            {
                "kind": layer.kind,
                "params": _layer_params(layer),
                "macs": macs,
                "out_shape": (layer.out_ch if layer.kind != "elementwise" else c, h, w),
            }
        )
        if layer.kind != "elementwise":
            c = layer.out_ch
    return BudgetReport(
        total_params=sum(e["params"] for e in per_layer),
        total_macs=sum(e["macs"] for e in per_layer),
        per_layer=tuple(per_layer),
        ensemble=ensemble,
        input_shape=tuple(input_shape),
    )


def check_constraints(report: BudgetReport) -> ConstraintResult:
    """Challenge gate: params <= 15M, MACs strictly < 150 G, no ensembling."""
    reasons = []
    if report.total_params > MAX_PARAMS:
        reasons.append(
            f"params {report.total_params:,} exceed {MAX_PARAMS:,} "
            f"by {report.total_params - MAX_PARAMS:,}"
        )
    if report.total_macs >= MAX_MACS:
        reasons.append(
            f"MACs {report.total_macs:,} not strictly below {MAX_MACS:,} "
            f"(margin {report.total_macs - MAX_MACS:,})"
        )
    if report.ensemble:
        reasons.append("model is declared as an ensemble, which is not allowed")
    return ConstraintResult(passed=not reasons, reasons=tuple(reasons))


def load_model_spec(path) -> tuple[list[LayerSpec], bool, tuple[int, int, int, int]]:
    """Read a model JSON: either a bare layer list or
    {"layers": [...], "ensemble": bool, "input": [1, C, H, W]}."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except ValueError as exc:
        raise SpecError(f"{path}: unreadable model JSON ({exc})") from exc
    if isinstance(doc, list):
        layers_doc, ensemble, input_shape = doc, False, REFERENCE_INPUT
    elif isinstance(doc, dict) and "layers" in doc:
        layers_doc = doc["layers"]
        ensemble = bool(doc.get("ensemble", False))
        input_shape = tuple(doc.get("input", REFERENCE_INPUT))
    else:
        raise SpecError(f"{path}: expected a layer list or an object with 'layers'")
    allowed = {"kind", "in_ch", "out_ch", "kernel", "stride", "bias", "period_n"}
    layers = []
    for i, entry in enumerate(layers_doc):
        if not isinstance(entry, dict) or "kind" not in entry:
            raise SpecError(f"{path}: layer {i} must be an object with a 'kind'")
        unknown = set(entry) - allowed
        if unknown:
            raise SpecError(f"{path}: layer {i} has unknown fields {sorted(unknown)}")
        layers.append(LayerSpec(**entry))
    if len(input_shape) != 4:
        raise SpecError(f"{path}: input shape must be (N, C, H, W)")
    return layers, ensemble, input_shape
