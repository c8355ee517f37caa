"""Suite-level metrics reports and the performance-gap-recovered table."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from .metrics import PricingTable, ZeroGap, compute_pgr, episode_cost_usd
from .signatures import scan_signatures
from .trajectory import TerminationReason, TrajectoryRecord

REASONS = [r.value for r in TerminationReason]


class TaskSetMismatch(ValueError):
    pass


@dataclass
class EpisodeRow:
    task_id: str
    composition_type: str
    termination: str
    reward: int
    env_steps: int
    infer_ms: float
    cost_usd: float
    signatures: list[str] = field(default_factory=list)


@dataclass
class MetricsReport:
    suite: str
    n_episodes: int
    success_rate: float
    termination: dict[str, float]
    latency_s_per_step: float | None
    cost_usd_per_step: float | None
    by_type: dict[str, dict[str, float]]
    episodes: list[EpisodeRow]
    errors: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> MetricsReport:
        d = json.loads(text)
        d["episodes"] = [EpisodeRow(**e) for e in d["episodes"]]
        return cls(**d)

    @classmethod
    def read(cls, path: str | Path) -> MetricsReport:
        p = Path(path)
        if p.is_dir():
            p = p / "report.json"
        return cls.from_json(p.read_text(encoding="utf-8"))

    def outcomes(self) -> dict[str, str]:
        return {e.task_id: e.termination for e in self.episodes}

    def to_text(self) -> str:
        head = ["group", "n", "success%"] + [f"{r}%" for r in REASONS] + ["latency s/step", "cost $/step"]
        rows = [[f"{self.suite} (all)", str(self.n_episodes), f"{self.success_rate:.1f}"]
                + [f"{self.termination[r]:.1f}" for r in REASONS]
                + [_opt(self.latency_s_per_step, 3), _opt(self.cost_usd_per_step, 6)]]
        for ctype, stats in sorted(self.by_type.items()):
            rows.append([ctype, str(int(stats["n"])), f"{stats['success_rate']:.1f}"]
                        + [f"{stats[r]:.1f}" for r in REASONS] + ["", ""])
        out = _table(head, rows)
        if self.errors:
            out += f"\ninternal errors in {len(self.errors)} episode(s): {', '.join(self.errors)}\n"
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["task_id", "composition_type", "termination", "reward", "env_steps",
                    "infer_ms", "cost_usd", "signatures"])
        for e in self.episodes:
            w.writerow([e.task_id, e.composition_type, e.termination, e.reward, e.env_steps,
                        repr(e.infer_ms), repr(e.cost_usd), ";".join(e.signatures)])
        return buf.getvalue()


def _opt(x: float | None, digits: int) -> str:
    return "n/a" if x is None else f"{x:.{digits}f}"


def _table(head: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
    fmt = lambda r: "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
    lines = [fmt(head), "  ".join("-" * w for w in widths)] + [fmt(r) for r in rows]
    return "\n".join(lines) + "\n"


def _distribution(terms: list[str]) -> dict[str, float]:
    n = len(terms)
    return {r: (100.0 * terms.count(r) / n if n else 0.0) for r in REASONS}


def summarize(records: Iterable[TrajectoryRecord], pricing: PricingTable, suite: str = "suite",
              errors: Iterable[str] = ()) -> MetricsReport:
    """Aggregate episodes. Latency and cost are pooled: totals over all episodes
    divided by the total number of env steps."""
    rows: list[EpisodeRow] = []
    total_cost, total_ms, total_steps = Fraction(0), Fraction(0), 0
    for rec in records:
        cost = episode_cost_usd(rec, pricing)
        ms = sum(Fraction(repr(e.infer_ms)) for e in rec.model_calls)
        steps = len(rec.env_steps)
        total_cost += cost
        total_ms += ms
        total_steps += steps
        rows.append(EpisodeRow(
            task_id=rec.task_id, composition_type=rec.composition_type,
            termination=rec.termination.value if rec.termination else "",
            reward=rec.reward, env_steps=steps, infer_ms=float(ms), cost_usd=float(cost),
            signatures=[s.kind.value for s in scan_signatures(rec)],
        ))
    terms = [r.termination for r in rows]
    by_type: dict[str, dict[str, float]] = {}
    for ctype in sorted({r.composition_type for r in rows}):
        sub = [r.termination for r in rows if r.composition_type == ctype]
        dist = _distribution(sub)
        by_type[ctype] = {"n": float(len(sub)), "success_rate": dist[TerminationReason.SUCCESSFUL.value], **dist}
    dist = _distribution(terms)
    return MetricsReport(
        suite=suite,
        n_episodes=len(rows),
        success_rate=dist[TerminationReason.SUCCESSFUL.value],
        termination=dist,
        latency_s_per_step=float(total_ms / 1000 / total_steps) if total_steps else None,
        cost_usd_per_step=float(total_cost / total_steps) if total_steps else None,
        by_type=by_type,
        episodes=rows,
        errors=sorted(errors),
    )


# --- performance gap recovered --------------------------------------------

@dataclass(frozen=True)
class PgrRow:
    group: str
    weak: float
    strong: float
    bridged: float
    pgr: float | None


def _success(report: MetricsReport, ctype: str | None) -> float:
    eps = [e for e in report.episodes if ctype is None or e.composition_type == ctype]
    if not eps:
        return 0.0
    return 100.0 * sum(e.termination == TerminationReason.SUCCESSFUL.value for e in eps) / len(eps)


def pgr_table(weak: MetricsReport, strong: MetricsReport, bridged: MetricsReport) -> list[PgrRow]:
    """Per composition type and overall PGR; rows with no gap carry ``pgr=None``."""
    ids = [set(r.outcomes()) for r in (weak, strong, bridged)]
    if not ids[0] == ids[1] == ids[2]:
        raise TaskSetMismatch("weak, strong and bridged reports cover different task ids")
    types = sorted({e.composition_type for e in weak.episodes})
    rows = []
    for group in types + [None]:
        w, s, b = (_success(r, group) for r in (weak, strong, bridged))
        try:
            value = compute_pgr(w, s, b)
        except ZeroGap:
            value = None
        rows.append(PgrRow(group or "Overall", w, s, b, value))
    return rows


def pgr_from_rates(rates: Mapping[str, tuple[float, float, float]]) -> list[PgrRow]:
    rows = []
    for group, (w, s, b) in rates.items():
        try:
            value = compute_pgr(w, s, b)
        except ZeroGap:
            value = None
        rows.append(PgrRow(group, w, s, b, value))
    return rows


def render_pgr(rows: list[PgrRow]) -> str:
    head = ["group", "weak (comp)", "strong (atom)", "bridged", "PGR %"]
    body = [[r.group, f"{r.weak:.1f}", f"{r.strong:.1f}", f"{r.bridged:.1f}", _opt(r.pgr, 2)] for r in rows]
    return _table(head, body)
