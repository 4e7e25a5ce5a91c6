"""Exact integer FLOPs accounting for transformer slices, plus calibrated
FLOPs->seconds and token->byte conversions.

Attention work is quadratic in context depth (every query token attends to
all tokens before it), projection/FFN work is linear in token count.  All
FLOPs are exact Python integers so that slicing a sample at any boundary is
exactly additive, which the partitioner and its tests rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class ModelShape:
    """Transformer dimensions needed for FLOPs accounting."""

    hidden_dim: int
    num_layers: int
    num_heads: int
    num_kv_groups: int
    ffn_dim: int
    vocab_size: int = 32000

    def __post_init__(self):
        for name in ("hidden_dim", "num_layers", "num_heads", "num_kv_groups",
                     "ffn_dim", "vocab_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"ModelShape.{name} must be positive")
        if self.num_heads % self.num_kv_groups != 0:
            raise ValueError("num_kv_groups must divide num_heads")
        if self.hidden_dim % self.num_heads != 0:
            raise ValueError("hidden_dim must be divisible by num_heads")

    @property
    def kv_dim(self) -> int:
        # grouped-query attention: K/V projections are num_kv_groups wide
        return self.hidden_dim * self.num_kv_groups // self.num_heads

    @property
    def linear_params_per_layer(self) -> int:
        """MAC count of one layer's GEMMs per token: Q, K, V, output proj
        and a three-matrix gated FFN."""
        h = self.hidden_dim
        return h * h + 2 * h * self.kv_dim + h * h + 3 * h * self.ffn_dim


@dataclass(frozen=True)
class CostMultipliers:
    """Backward-over-forward cost ratios for the two kernel families."""

    r_gemm: float = 2.0
    r_attn: float = 2.5

    def __post_init__(self):
        if self.r_gemm < 1.0 or self.r_attn < 1.0:
            raise ValueError("cost multipliers must be >= 1.0")


@dataclass(frozen=True)
class SliceCost:
    """FLOPs of one token span, split by kernel family."""

    attn_flops: int
    linear_flops: int

    def __post_init__(self):
        if self.attn_flops < 0 or self.linear_flops < 0:
            raise ValueError("FLOPs must be non-negative")

    @property
    def total(self) -> int:
        return self.attn_flops + self.linear_flops

    def __add__(self, other: "SliceCost") -> "SliceCost":
        return SliceCost(self.attn_flops + other.attn_flops,
                         self.linear_flops + other.linear_flops)

ZERO_COST = SliceCost(0, 0)


@dataclass(frozen=True)
class HardwareProfile:
    """Calibration constants turning FLOPs into seconds and tokens into bytes."""

    peak_flops_per_sec: float
    util_gemm: float
    util_attn: float
    activation_bytes_per_token_per_layer: int = 0
    kv_bytes_per_token_per_layer: int = 0
    static_bytes_per_stage: int = 0

    def __post_init__(self):
        if self.peak_flops_per_sec <= 0:
            raise ValueError("peak_flops_per_sec must be positive")
        for name in ("util_gemm", "util_attn"):
            u = getattr(self, name)
            if not 0.0 < u <= 1.0:
                raise ValueError(f"{name} must be in (0, 1]")
        for name in ("activation_bytes_per_token_per_layer",
                     "kv_bytes_per_token_per_layer", "static_bytes_per_stage"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


def attn_prefix_flops(model: ModelShape, depth: int) -> int:
    """Attention FLOPs of the whole prefix [0, depth).

    Query token q attends to q+1 keys; two matmuls at 2 FLOPs/MAC over the
    hidden dim give 4*h FLOPs per (query, key) pair per layer.
    """
    return 4 * model.num_layers * model.hidden_dim * (depth * (depth + 1) // 2)


def linear_prefix_flops(model: ModelShape, depth: int) -> int:
    """GEMM (projection + FFN) FLOPs of the prefix [0, depth)."""
    return 2 * depth * model.num_layers * model.linear_params_per_layer


def slice_forward_flops(model: ModelShape, offset: int, length: int) -> SliceCost:
    """Forward FLOPs of the token span [offset, offset+length) of one sample.

    Computed as a difference of prefix costs, so any contiguous partition of
    a sample sums bit-exactly to the whole-sample cost.
    """
    if offset < 0:
        raise ValueError("offset must be >= 0")
    if length < 1:
        raise ValueError("empty slice is not a cost unit")
    attn = attn_prefix_flops(model, offset + length) - attn_prefix_flops(model, offset)
    linear = linear_prefix_flops(model, offset + length) - linear_prefix_flops(model, offset)
    return SliceCost(attn, linear)


def shared_slice_forward_flops(model: ModelShape, offset: int, length: int,
                               divisor: int) -> SliceCost:
    """Per-rank forward FLOPs of a span whose work is spread evenly over
    `divisor` context-parallel ranks.

    Division is applied to prefix costs so slices still telescope exactly to
    the divided whole-sample cost.
    """
    if divisor < 1:
        raise ValueError("divisor must be >= 1")
    if divisor == 1:
        return slice_forward_flops(model, offset, length)
    if offset < 0:
        raise ValueError("offset must be >= 0")
    if length < 1:
        raise ValueError("empty slice is not a cost unit")
    hi, lo = offset + length, offset
    attn = attn_prefix_flops(model, hi) // divisor - attn_prefix_flops(model, lo) // divisor
    linear = linear_prefix_flops(model, hi) // divisor - linear_prefix_flops(model, lo) // divisor
    return SliceCost(attn, linear)


def sample_forward_flops(model: ModelShape, length: int) -> SliceCost:
    """Forward FLOPs of a whole sample of `length` tokens."""
    return slice_forward_flops(model, 0, length)


def vocab_projection_flops(model: ModelShape, tokens: int) -> int:
    """Optional output-projection GEMM FLOPs (last stage only, off by default)."""
    return 2 * tokens * model.hidden_dim * model.vocab_size


def backward_flops(fwd: SliceCost, multipliers: CostMultipliers) -> SliceCost:
    """Backward FLOPs from forward FLOPs, per kernel-family multiplier.

    Uses exact rational arithmetic before rounding; forward FLOPs routinely
    exceed 2**53 where float multiplication would silently lose integers.
    """
    attn = round(Fraction(multipliers.r_attn) * fwd.attn_flops)
    linear = round(Fraction(multipliers.r_gemm) * fwd.linear_flops)
    return SliceCost(attn, linear)


def flops_to_seconds(cost: SliceCost, hw: HardwareProfile) -> float:
    """Estimated execution seconds of a cost under a calibrated profile."""
    return (cost.attn_flops / (hw.peak_flops_per_sec * hw.util_attn)
            + cost.linear_flops / (hw.peak_flops_per_sec * hw.util_gemm))


def max_slice_len_within_budget(model: ModelShape, offset: int, remaining: int,
                                budget: int, alignment: int = 1) -> int:
    """Largest slice length l <= remaining at `offset` whose forward cost fits
    `budget`, rounded down to the alignment grid.

    Returns `remaining` when the whole remainder fits (the final slice of a
    sample may be unaligned), and 0 when even one aligned grid unit exceeds
    the budget.  Binary search: cost is strictly increasing in l.
    """
    if remaining < 1:
        raise ValueError("remaining must be >= 1")
    if budget < 0:
        raise ValueError("budget must be >= 0")
    if alignment < 1:
        raise ValueError("alignment must be >= 1")

    def cost(l: int) -> int:
        return slice_forward_flops(model, offset, l).total

    if cost(remaining) <= budget:
        return remaining
    lo, hi = 0, remaining // alignment  # in grid units; hi*alignment <= remaining
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if cost(mid * alignment) <= budget:
            lo = mid
        else:
            hi = mid - 1
    return lo * alignment
