import pytest

from agent_nexus.backends import ScriptedNavigator, ScriptedPlanner
from agent_nexus.env import Goal, observe
from agent_nexus.eval import TerminationReason
from agent_nexus.memory import ProcessMemory, ThinkResult
from agent_nexus.scheduler import (
    Backends, MalformedPlan, PlannerCollapse, SchedulerConfig, SubtaskKind, Terminal, parse_plan, plan,
    replay, run_episode,
)
from helpers import Canned


# --- plan grammar ---------------------------------------------------------------

def test_parse_two_subtasks():
    p = parse_plan("1. [ACT] open Notes and read note 'groceries'\n2. [THINK] extract the item list")
    assert p.terminal is None
    assert [(s.id, s.kind) for s in p.subtasks] == [(1, SubtaskKind.ACT), (2, SubtaskKind.THINK)]
    assert p.subtasks[0].instruction == "open Notes and read note 'groceries'"


def test_parse_terminals():
    assert parse_plan("DONE").terminal is Terminal.DONE and parse_plan("DONE").subtasks == ()
    assert parse_plan("  infeasible \n").terminal is Terminal.INFEASIBLE


@pytest.mark.parametrize("text", ["step one: do stuff", "", "2. [ACT] x", "1. [ACT] x\n1. [TOOL] HOME",
                                  "1. [RUN] x", "1. [ACT] x\nDONE"])
def test_parse_rejects(text):
    with pytest.raises(MalformedPlan):
        parse_plan(text)


def test_lint_flags_dangling_references():
    p = parse_plan("1. [ACT] send the result above to Bob\n2. [ACT] send 42 to Bob")
    assert p.subtasks[0].lint() and not p.subtasks[1].lint()


# --- plan -------------------------------------------------------------------------

def _goal(suite):
    return Goal.from_task(suite.task("sc-01"))


def test_plan_passes_parsed_text_through(device, suite):
    backend = Canned("1. [TOOL] HOME\n2. [ACT] do it")
    p = plan(backend, observe(device.reset("clean")), _goal(suite), ProcessMemory(), SchedulerConfig())
    assert p == parse_plan("1. [TOOL] HOME\n2. [ACT] do it")


def test_garbage_twice_collapses(device, suite):
    backend = Canned("no idea", "still no idea", "1. [TOOL] HOME")
    with pytest.raises(PlannerCollapse):
        plan(backend, observe(device.reset("clean")), _goal(suite), ProcessMemory(),
             SchedulerConfig(malformed_retry_limit=1))
    assert len(backend.requests) == 2
    assert "error" in backend.requests[1] and "error" not in backend.requests[0]


def test_retry_recovers(device, suite):
    backend = Canned("no idea", "DONE")
    p = plan(backend, observe(device.reset("clean")), _goal(suite), ProcessMemory(), SchedulerConfig())
    assert p.terminal is Terminal.DONE


def test_prompt_carries_think_text(device, suite):
    m = ProcessMemory()
    m.append("check calendar", ThinkResult("conflict at 3pm"))
    backend = Canned("DONE")
    plan(backend, observe(device.reset("clean")), _goal(suite), m, SchedulerConfig())
    req = backend.requests[0]
    assert "conflict at 3pm" in req["memory"]
    assert set(req) == {"goal", "observation", "memory"}


# --- episodes ---------------------------------------------------------------------

def test_oracle_solves_a_ct_task(device, suite, oracle):
    rec = run_episode(suite.task("ct-01"), device, "clean", oracle)
    assert rec.termination is TerminationReason.SUCCESSFUL and rec.reward == 1
    kinds = [e.payload["kind"] for e in rec.of_kind("dispatch")]
    assert kinds == ["tool", "act", "think", "tool", "act"]
    assert len(rec.env_steps) == suite.task("ct-01").optimal_steps
    sent = rec.of_kind("env_step")[-2]
    assert "Project sync moved to 3pm" in sent.payload["action"]


def test_never_stopping_navigator_hits_the_episode_budget(device, suite, oracle):
    task = suite.task("sc-04")
    stuck = ScriptedNavigator([{"match": ".*", "actions": ["Swipe up"], "loop": True}])
    cfg = SchedulerConfig(per_subtask_step_budget=1000)
    rec = run_episode(task, device, "clean", Backends(oracle.planner, stuck, oracle.analyst), cfg)
    budget = 2 * task.optimal_steps
    assert rec.termination is TerminationReason.BUDGET_EXCEEDED
    assert len(rec.env_steps) == budget
    (over,) = rec.of_kind("budget_exceeded")
    assert over.payload == {"attempted": "Swipe(up)", "budget": budget}
    assert rec.end["step_count"] == budget  # the extra attempt was not executed


def test_immediate_done_is_premature(device, suite, oracle):
    rec = run_episode(suite.task("sc-01"), device, "clean",
                      Backends(ScriptedPlanner(default="DONE"), oracle.navigator, oracle.analyst))
    assert rec.termination is TerminationReason.PREMATURE and rec.reward == 0
    assert rec.env_steps == []


def test_infeasible_and_collapse(device, suite, oracle):
    t = suite.task("dd-01")
    rec = run_episode(t, device, "clean", Backends(ScriptedPlanner(), oracle.navigator, oracle.analyst))
    assert rec.termination is TerminationReason.DEEMED_IMPOSSIBLE
    rec = run_episode(t, device, "clean", Backends(Canned("??"), oracle.navigator, oracle.analyst))
    assert rec.termination is TerminationReason.COLLAPSE
    rec = run_episode(t, device, "clean", Backends(Canned(RuntimeError("503")), oracle.navigator, oracle.analyst))
    assert rec.termination is TerminationReason.COLLAPSE and "503" in rec.of_kind("collapse")[0].payload["error"]


def test_global_subtask_cap(device, suite, oracle):
    forever = Canned("1. [TOOL] HOME")
    rec = run_episode(suite.task("sc-01"), device, "clean", Backends(forever, oracle.navigator, oracle.analyst),
                      SchedulerConfig(max_global_subtasks=3, episode_step_budget=100))
    assert rec.termination is TerminationReason.BUDGET_EXCEEDED
    assert rec.end["memory_len"] == 3 and rec.of_kind("subtask_budget_exceeded")


def test_unknown_tool_is_recorded_not_raised(device, suite, oracle):
    planner = Canned("1. [TOOL] SCREENSHOT", "DONE")
    rec = run_episode(suite.task("sc-01"), device, "clean", Backends(planner, oracle.navigator, oracle.analyst))
    entry = rec.of_kind("memory_append")[0].payload
    assert entry["result"] == {"type": "tool", "status": "error: unknown tool 'SCREENSHOT'"}


def test_planner_call_accounting(device, expanded_suite, oracle):
    for task in expanded_suite.tasks[:20]:
        rec = run_episode(task, device, "clean", oracle)
        assert rec.end["planner_calls"] == rec.end["memory_len"] + 1
        assert len(rec.of_kind("planner_call")) == rec.end["planner_calls"]


def test_memory_events_are_contiguous(device, suite, oracle):
    rec = run_episode(suite.task("dd-02"), device, "resumed", oracle)
    assert [e.payload["index"] for e in rec.of_kind("memory_append")] == list(range(rec.end["memory_len"]))


def test_episode_is_deterministic_and_replayable(device, suite, oracle):
    a = run_episode(suite.task("ct-04"), device, "resumed", oracle, seed=5)
    b = run_episode(suite.task("ct-04"), device, "resumed", oracle, seed=5)
    assert a.to_jsonl() == b.to_jsonl()
    assert replay(a, device) == a.final_hash


def test_config_validation():
    with pytest.raises(ValueError):
        SchedulerConfig(max_global_subtasks=0)
    with pytest.raises(ValueError):
        SchedulerConfig.from_dict({"warp": 9})
    assert SchedulerConfig.from_dict({"history_window": 3}).history_window == 3
