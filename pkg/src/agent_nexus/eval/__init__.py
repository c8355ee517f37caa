"""Trajectory evaluation: termination taxonomy, efficiency metrics, PGR, failure signatures."""

from .metrics import (
    DEFAULT_PRICING, MissingPricing, Price, ZeroGap, compute_cost, compute_latency, compute_pgr,
    pricing_from_dict, step_budget,
)
from .report import MetricsReport, PgrRow, TaskSetMismatch, pgr_from_rates, pgr_table, render_pgr, summarize
from .signatures import FailureSignature, SignatureKind, scan_signatures
from .trajectory import Event, TerminationReason, TrajectoryRecord, classify_termination, synthetic_record

__all__ = [
    "DEFAULT_PRICING", "MissingPricing", "Price", "ZeroGap", "compute_cost", "compute_latency",
    "compute_pgr", "pricing_from_dict", "step_budget", "MetricsReport", "PgrRow", "TaskSetMismatch",
    "pgr_from_rates", "pgr_table", "render_pgr", "summarize", "FailureSignature", "SignatureKind",
    "scan_signatures", "Event", "TerminationReason", "TrajectoryRecord", "classify_termination",
    "synthetic_record",
]
