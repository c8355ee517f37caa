"""Efficiency and gap metrics over trajectory records."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Mapping

if TYPE_CHECKING:
    from .trajectory import TrajectoryRecord


class MissingPricing(KeyError):
    pass


class ZeroGap(ZeroDivisionError):
    pass


def step_budget(optimal_steps: int) -> int:
    """Episode step budget: twice the annotated optimal step count."""
    if optimal_steps < 1:
        raise ValueError("optimal_steps must be >= 1")
    return math.ceil(2 * optimal_steps)


@dataclass(frozen=True)
class Price:
    input_per_million: float
    output_per_million: float

    def __post_init__(self):
        if self.input_per_million < 0 or self.output_per_million < 0:
            raise ValueError("rates must be non-negative")


PricingTable = Mapping[str, Price]

# USD per million tokens, April 2025 list prices.
DEFAULT_PRICING: dict[str, Price] = {
    "gpt-4o": Price(2.50, 10.00),
    "qwen-vl-plus": Price(0.21, 0.63),
    "qwen2-vl-7b": Price(0.20, 0.20),
}


def pricing_from_dict(d: Mapping[str, Mapping[str, float]]) -> dict[str, Price]:
    return {k: Price(float(v["input"]), float(v["output"])) for k, v in d.items()}


def _exact(x: float) -> Fraction:
    return Fraction(repr(float(x)))


def episode_cost_usd(record: TrajectoryRecord, pricing: PricingTable) -> Fraction:
    total = Fraction(0)
    for ev in record.model_calls:
        backend = ev.payload.get("backend", "")
        if backend not in pricing:
            raise MissingPricing(backend)
        p = pricing[backend]
        total += ev.tokens_in * _exact(p.input_per_million) + ev.tokens_out * _exact(p.output_per_million)
    return total / 1_000_000


def compute_cost(record: TrajectoryRecord, pricing: PricingTable) -> float | None:
    """Inference cost in USD per env step; None when calls were made but no steps taken."""
    total = episode_cost_usd(record, pricing)
    steps = len(record.env_steps)
    if steps == 0:
        return 0.0 if total == 0 else None
    return float(total / steps)


def compute_latency(record: TrajectoryRecord) -> float | None:
    """Mean model inference time in seconds per env step (None for zero steps).

    Only ``infer_ms`` stamps count, so wall-clock pauses never leak in.
    """
    steps = len(record.env_steps)
    if steps == 0:
        return None
    total_ms = sum(_exact(ev.infer_ms) for ev in record.model_calls)
    return float(total_ms / 1000 / steps)


def compute_pgr(weak: float, strong_ceiling: float, bridged: float) -> float:
    """Share (in %) of the weak-to-strong performance gap that ``bridged`` recovers."""
    if strong_ceiling == weak:
        raise ZeroGap("strong ceiling equals weak performance")
    return 100.0 * (bridged - weak) / (strong_ceiling - weak)
