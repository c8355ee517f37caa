"""Command-line entry point: run suites, join reports into PGR tables, validate
suites, replay trajectories and list snapshots."""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .backends import backend_from_spec
from .builtin import data_path
from .env.apps import builtin_apps
from .env.state import Device, builtin_device, load_snapshot_file
from .eval.metrics import DEFAULT_PRICING, Price, pricing_from_dict
from .eval.report import MetricsReport, TaskSetMismatch, pgr_table, render_pgr, summarize
from .eval.trajectory import TrajectoryRecord
from .scheduler import Backends, SchedulerConfig, replay, run_episode
from .task_model import CompositionalTask, TaskError, TaskSuite, load_suite, validate

ROLES = ("planner", "navigator", "analyst")


class ConfigError(ValueError):
    pass


class SuiteLoadError(ValueError):
    pass


@dataclass
class RunConfig:
    suite: Path
    backends: dict[str, dict[str, Any]]
    default_snapshot: str = "clean"
    per_task_snapshot: dict[str, str] = field(default_factory=dict)
    snapshot_files: list[Path] = field(default_factory=list)
    scheduler: dict[str, Any] = field(default_factory=dict)
    output_dir: Path = Path("runs/out")
    seed: int = 0
    parallelism: int = 1
    pricing: dict[str, Price] = field(default_factory=dict)
    measured_timing: bool = False
    expand_templates: bool = False

    @classmethod
    def from_dict(cls, d: Mapping[str, Any], base: Path = Path(".")) -> RunConfig:
        known = {"suite", "backends", "snapshot", "snapshot_files", "scheduler", "output_dir", "seed",
                 "parallelism", "pricing", "timing", "expand_templates"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("suite", "backends"):
            if key not in d:
                raise ConfigError(f"config is missing {key!r}")
        snap = d.get("snapshot", {})
        if isinstance(snap, str):
            snap = {"default": snap}
        timing = d.get("timing", "virtual")
        if timing not in ("virtual", "measured"):
            raise ConfigError("timing must be 'virtual' or 'measured'")
        try:
            pricing = {**DEFAULT_PRICING, **pricing_from_dict(d.get("pricing", {}))}
            cfg = cls(
                suite=_resolve(base, d["suite"]),
                backends={role: _resolve_spec(base, spec) for role, spec in d["backends"].items()},
                default_snapshot=snap.get("default", "clean"),
                per_task_snapshot=dict(snap.get("per_task", {})),
                snapshot_files=[_resolve(base, p) for p in d.get("snapshot_files", [])],
                scheduler=dict(d.get("scheduler", {})),
                output_dir=Path(d.get("output_dir", "runs/out")),
                seed=int(d.get("seed", 0)),
                parallelism=int(d.get("parallelism", 1)),
                pricing=pricing,
                measured_timing=timing == "measured",
                expand_templates=bool(d.get("expand_templates", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad config value: {exc}") from exc
        cfg.check()
        return cfg

    def check(self) -> None:
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if set(self.backends) != set(ROLES):
            raise ConfigError(f"backends must bind exactly {ROLES}")
        paths = [self.suite, *self.snapshot_files]
        for spec in self.backends.values():
            if "scripted" in spec:
                paths.append(Path(spec["scripted"]))
            elif "remote" not in spec:
                raise ConfigError("each backend needs 'scripted' or 'remote'")
        missing = [str(p) for p in paths if not p.exists()]
        if missing:
            raise ConfigError(f"referenced paths do not exist: {missing}")
        try:
            SchedulerConfig.from_dict(self.scheduler)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def scheduler_config(self) -> SchedulerConfig:
        return SchedulerConfig.from_dict(self.scheduler)

    def build_backends(self) -> Backends:
        try:
            built = {role: backend_from_spec(self.backends[role], role) for role in ROLES}
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot build backends: {exc}") from exc
        unpriced = sorted(b.identity for b in built.values() if b.identity not in self.pricing)
        if unpriced:
            raise ConfigError(f"no pricing for backends: {unpriced}")
        return Backends(**built)

    def snapshot_for(self, task_id: str) -> str:
        return self.per_task_snapshot.get(task_id, self.default_snapshot)


def _resolve(base: Path, p: str | Path) -> Path:
    p = Path(p)
    return p if p.is_absolute() else base / p


def _resolve_spec(base: Path, spec: Mapping[str, Any]) -> dict[str, Any]:
    spec = dict(spec)
    if "scripted" in spec:
        spec["scripted"] = str(_resolve(base, spec["scripted"]))
    return spec


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return RunConfig.from_dict(d, base=path.parent)


def load_checked_suite(path: Path, expand: bool, seed: int) -> TaskSuite:
    try:
        suite = load_suite(path)
        suite = suite.expanded(seed) if expand else suite
    except (OSError, json.JSONDecodeError, KeyError, TypeError, TaskError, ValueError) as exc:
        raise SuiteLoadError(f"cannot load suite {path}: {exc}") from exc
    ids = [t.id for t in suite.tasks]
    if len(ids) != len(set(ids)):
        raise SuiteLoadError("suite has duplicate task ids")
    apps = builtin_apps()
    errors = [f"{t.id}: {e}" for t in suite.tasks for e in validate(t, apps).errors]
    if errors:
        raise SuiteLoadError("invalid tasks:\n  " + "\n  ".join(errors))
    return suite


def _device(config: RunConfig) -> Device:
    device = builtin_device()
    for p in config.snapshot_files:
        sid, d = load_snapshot_file(p)
        device.register_snapshot(sid, d)
    return device


def run(config: RunConfig) -> tuple[int, MetricsReport]:
    """Run every task of the suite and write trajectories and the report under ``output_dir``."""
    seed = int(os.environ.get("NEXUS_SEED", config.seed))
    suite = load_checked_suite(config.suite, config.expand_templates, seed)
    device = _device(config)
    unknown = sorted({config.snapshot_for(t.id) for t in suite.tasks} - set(device.snapshot_ids))
    if unknown:
        raise ConfigError(f"unknown snapshots: {unknown}")
    backends = config.build_backends()
    sched = config.scheduler_config()
    out = config.output_dir
    traj_dir = out / "trajectories"
    traj_dir.mkdir(parents=True, exist_ok=True)
    for stale in traj_dir.glob("*.jsonl"):  # a smaller rerun must not inherit old episodes
        stale.unlink()

    def one(task: CompositionalTask) -> TrajectoryRecord | str:
        try:
            rec = run_episode(task, device, config.snapshot_for(task.id), backends, sched,
                              seed=seed, measured_timing=config.measured_timing)
        except Exception as exc:  # one broken episode must not sink the suite
            return f"{task.id}: {type(exc).__name__}: {exc}"
        rec.write(traj_dir / f"{task.id}.jsonl")
        return rec

    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        results = list(pool.map(one, suite.tasks))
    records = [r for r in results if isinstance(r, TrajectoryRecord)]
    errors = [r for r in results if isinstance(r, str)]
    report = summarize(records, config.pricing, suite=suite.name, errors=errors)
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    (out / "report.txt").write_text(report.to_text(), encoding="utf-8")
    (out / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    return (1 if errors else 0), report


# --- verbs -----------------------------------------------------------------

def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.out:
        config.output_dir = Path(args.out)
    if args.parallelism:
        config.parallelism = args.parallelism
        config.check()
    if args.expand:
        config.expand_templates = True
    status, report = run(config)
    print(report.to_text(), end="")
    for err in report.errors:
        print(f"error: {err}", file=sys.stderr)
    print(f"artifacts written to {config.output_dir}")
    return status


def _cmd_pgr(args) -> int:
    reports = [MetricsReport.read(p) for p in (args.weak, args.strong, args.bridged)]
    print(render_pgr(pgr_table(*reports)), end="")
    return 0


def _cmd_validate(args) -> int:
    suite = load_suite(args.suite)
    if args.expand:
        suite = suite.expanded()
    apps = builtin_apps()
    bad = 0
    for task in suite.tasks:
        rep = validate(task, apps)
        for e in rep.errors:
            print(f"{task.id}: error: {e}")
        for w in rep.warnings:
            print(f"{task.id}: warning: {w}")
        bad += not rep.ok
    print(f"{len(suite.tasks)} tasks, {bad} invalid")
    return 1 if bad else 0


def _cmd_replay(args) -> int:
    device = builtin_device()
    status = 0
    for path in args.trajectory:
        rec = TrajectoryRecord.read(path)
        got, want = replay(rec, device), rec.final_hash
        ok = got == want
        status |= not ok
        print(f"{'ok' if ok else 'MISMATCH'} {path} {got[:16]}" + ("" if ok else f" != {want[:16]}"))
    return status


def _cmd_snapshots(args) -> int:
    device = builtin_device()
    for sid in device.snapshot_ids:
        d = device.snapshot_dict(sid)
        print(f"{sid}: foreground={d.get('foreground', 'home')} apps={','.join(sorted(device.apps))}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nexus", description=__doc__)
    sub = p.add_subparsers(dest="verb", required=True)

    r = sub.add_parser("run", help="run a suite under a config file")
    r.add_argument("config", help=f"run config JSON (shipped ones live in {data_path('configs')})")
    r.add_argument("--out", help="override the output directory")
    r.add_argument("--parallelism", type=int, help="override the worker count")
    r.add_argument("--expand", action="store_true", help="also run every template instantiation")
    r.set_defaults(fn=_cmd_run)

    g = sub.add_parser("pgr", help="join weak/strong/bridged reports into a PGR table")
    g.add_argument("weak")
    g.add_argument("strong")
    g.add_argument("bridged")
    g.set_defaults(fn=_cmd_pgr)

    v = sub.add_parser("validate-suite", help="check a suite file")
    v.add_argument("suite")
    v.add_argument("--expand", action="store_true", help="also validate template instantiations")
    v.set_defaults(fn=_cmd_validate)

    rp = sub.add_parser("replay", help="re-execute logged actions and compare the final state hash")
    rp.add_argument("trajectory", nargs="+")
    rp.set_defaults(fn=_cmd_replay)

    s = sub.add_parser("snapshots", help="list built-in snapshots")
    s.set_defaults(fn=_cmd_snapshots)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, SuiteLoadError, TaskSetMismatch, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
