import itertools
import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from agent_nexus.task_model import (
    AtomicSubtaskSpec, Checkpoint, CompositionalTask, CompositionType, Conjunctive, Disjunctive,
    Hierarchical, Leaf, MissingBinding, Predicate, Sequential, TaskError, TaskSuite, TaskTemplate,
    UnknownId, ValueOutOfDomain, evaluate_logic, find_cycle, instantiate, logic_depth, logic_from_json,
    logic_leaves, logic_to_json, validate,
)
from oracles import has_cycle_bruteforce, holds_by_prefix, random_logic


def make_task(subtasks=("a",), deps=(), logic=None, ctype=CompositionType.SIMPLE_CONCATENATION,
              checkpoints=None, optimal_steps=3):
    subs = tuple(AtomicSubtaskSpec(s, f"do {s}") for s in subtasks)
    logic = logic or Leaf(subtasks[0])
    if checkpoints is None:
        checkpoints = tuple(Checkpoint("system", Predicate("session.answer", "eq", s), s) for s in subtasks)
    return CompositionalTask("t", "instr", subs, tuple(deps), logic, ctype, tuple(checkpoints), optimal_steps)


SEND = TaskTemplate(
    id="send",
    skeleton={
        "instruction": "send {msg} to {contact}",
        "subtasks": [{"id": "a", "command": "send", "params": {"to": "{contact}"}, "environment": "messaging"}],
        "dependencies": [], "logic": "a", "composition_type": "SimpleConcatenation",
        "checkpoints": [{"app": "messaging", "subtask": "a",
                         "predicate": {"path": "messages[to={contact}].text", "op": "contains", "expected": "{msg}"}}],
        "optimal_steps": 5,
    },
    domains={"msg": ("hi", "bye"), "contact": ("Yuan", "Bob")},
)


# --- templates --------------------------------------------------------------

def test_instantiate_substitutes_everywhere():
    task = instantiate(SEND, {"msg": "hi", "contact": "Yuan"})
    assert task.instruction == "send hi to Yuan"
    cp = task.checkpoints[0]
    assert cp.app == "messaging"
    assert cp.predicate.op == "contains" and cp.predicate.expected == "hi"
    assert cp.predicate.path == "messages[to=Yuan].text"
    assert task.subtasks[0].params == {"to": "Yuan"}


def test_instantiate_missing_binding():
    with pytest.raises(MissingBinding):
        instantiate(SEND, {"msg": "hi"})


def test_instantiate_rejects_out_of_domain_and_extra():
    with pytest.raises(ValueOutOfDomain):
        instantiate(SEND, {"msg": "hi", "contact": "Zed"})
    with pytest.raises(TaskError):
        instantiate(SEND, {"msg": "hi", "contact": "Yuan", "mood": "happy"})


def test_instantiate_is_deterministic_and_ids_distinct():
    a = instantiate(SEND, {"msg": "hi", "contact": "Yuan"}, seed=3)
    b = instantiate(SEND, {"msg": "hi", "contact": "Yuan"}, seed=3)
    assert a == b and a.canonical_json() == b.canonical_json()
    ids = {instantiate(SEND, bnd).id for bnd in SEND.all_bindings()}
    assert len(ids) == 4


def test_template_check_reports_undeclared_placeholders():
    bad = TaskTemplate("x", {**SEND.skeleton, "instruction": "send {msg} to {who}"}, SEND.domains)
    assert any("who" in p for p in bad.check())
    assert SEND.check() == []


def test_shipped_templates_expand_to_valid_tasks(suite, apps):
    assert suite.templates
    total = 0
    for tpl in suite.templates:
        assert tpl.check() == []
        for bnd in tpl.all_bindings():
            task = instantiate(tpl, bnd)
            rep = validate(task, apps)
            assert rep.errors == [] and rep.warnings == [], (task.id, rep)
            total += 1
    assert total + len(suite.tasks) >= 100


def test_template_round_trip(suite):
    for tpl in suite.templates:
        assert TaskTemplate.from_dict(json.loads(json.dumps(tpl.to_dict()))) == tpl


# --- validation -------------------------------------------------------------

def test_single_subtask_no_dependencies_is_valid():
    assert validate(make_task()).ok


def test_two_cycle_is_reported():
    rep = validate(make_task(("a", "b"), deps=[("a", "b"), ("b", "a")], logic=Conjunctive((Leaf("a"), Leaf("b")))))
    assert any("cycle" in e for e in rep.errors)


def test_unknown_dependency_endpoint_and_leaf():
    rep = validate(make_task(("a",), deps=[("a", "z")], logic=Conjunctive((Leaf("a"), Leaf("q")))))
    assert any("'z'" in e for e in rep.errors)
    assert any("'q'" in e for e in rep.errors)


def test_leaf_without_checkpoint_warns():
    rep = validate(make_task(("a", "b"), logic=Conjunctive((Leaf("a"), Leaf("b"))), checkpoints=[
        Checkpoint("system", Predicate("session.answer", "eq", "x"), "a")]))
    assert rep.ok
    assert any("'b'" in w for w in rep.warnings)


def test_degenerate_logic_nodes_rejected():
    rep = validate(make_task(("a",), logic=Disjunctive((Leaf("a"),))))
    assert not rep.ok


def test_checkpoint_paths_checked_against_app_schemas(apps):
    task = make_task(("a",), checkpoints=[Checkpoint("notes", Predicate("notes[title=x].colour", "eq", "red"), "a")])
    assert not validate(task, apps).ok
    task = make_task(("a",), checkpoints=[Checkpoint("nowhere", Predicate("x", "eq", 1), "a")])
    assert not validate(task, apps).ok


def test_shipped_suite_is_valid(suite, apps):
    types = [t.composition_type for t in suite.tasks]
    for ctype in CompositionType:
        assert types.count(ctype) >= 4
    for task in suite.tasks:
        rep = validate(task, apps)
        assert rep.errors == [] and rep.warnings == [], (task.id, rep)


def _random_graph(rng, n, p):
    nodes = [f"n{i}" for i in range(n)]
    edges = [(a, b) for a in nodes for b in nodes if a != b and rng.random() < p]
    return nodes, edges


def test_cycle_detection_matches_bruteforce_on_8_node_graphs():
    rng = random.Random(8)
    seen = {True: 0, False: 0}
    for _ in range(24):
        nodes, edges = _random_graph(rng, 8, rng.choice([0.05, 0.1, 0.15]))
        expected = has_cycle_bruteforce(nodes, edges)
        cycle = find_cycle(nodes, edges)
        assert (cycle is not None) == expected
        seen[expected] += 1
    assert seen[True] and seen[False]


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 6), st.sets(st.tuples(st.integers(0, 5), st.integers(0, 5)), max_size=12))
def test_cycle_detection_matches_bruteforce_small(n, raw):
    nodes = [f"n{i}" for i in range(n)]
    edges = [(f"n{a}", f"n{b}") for a, b in raw if a < n and b < n]
    cycle = find_cycle(nodes, edges)
    assert (cycle is not None) == has_cycle_bruteforce(nodes, edges)
    if cycle:
        # the witness is a real closed walk along declared edges
        assert cycle[0] == cycle[-1]
        assert all((a, b) in set(edges) for a, b in zip(cycle, cycle[1:]))


# --- logic ------------------------------------------------------------------

def test_disjunction_needs_one_branch():
    expr = Disjunctive((Leaf("a"), Leaf("b"), Leaf("c")))
    assert evaluate_logic(expr, {"b"}, ["b"]) is True
    assert evaluate_logic(expr, set(), []) is False


def test_sequential_order_violation():
    expr = Sequential((Leaf("a"), Leaf("b"), Leaf("c")))
    assert evaluate_logic(expr, {"a", "b", "c"}, ["c", "a", "b"]) is False
    assert evaluate_logic(expr, {"a", "b", "c"}, ["a", "b", "c"]) is True


def test_sequential_over_composites():
    # (a or b) then c: satisfied by b before c even though a never happens
    expr = Sequential((Disjunctive((Leaf("a"), Leaf("b"))), Leaf("c")))
    assert evaluate_logic(expr, {"b", "c"}, ["b", "c"])
    assert not evaluate_logic(expr, {"b", "c"}, ["c", "b"])
    # (a and b) then c: the conjunction completes with its last member
    expr = Sequential((Conjunctive((Leaf("a"), Leaf("b"))), Leaf("c")))
    assert not evaluate_logic(expr, {"a", "b", "c"}, ["a", "c", "b"])


def test_hierarchical_is_an_unordered_group():
    expr = Hierarchical("trip", (Leaf("a"), Leaf("b")))
    assert evaluate_logic(expr, {"a", "b"}, ["b", "a"])
    assert not evaluate_logic(expr, {"a"}, ["a"])


def test_evaluate_logic_errors():
    expr = Conjunctive((Leaf("a"), Leaf("b")))
    with pytest.raises(UnknownId):
        evaluate_logic(expr, {"a", "z"}, ["a", "z"])
    with pytest.raises(TaskError):
        evaluate_logic(expr, {"a", "b"}, ["a"])
    with pytest.raises(TaskError):
        evaluate_logic(expr, {"a"}, ["a", "a"])


def test_logic_json_round_trip_and_shape():
    expr = Sequential((Leaf("a"), Hierarchical("g", (Leaf("b"), Disjunctive((Leaf("c"), Leaf("d")))))))
    assert logic_from_json(json.loads(json.dumps(logic_to_json(expr)))) == expr
    assert logic_leaves(expr) == ["a", "b", "c", "d"]
    assert logic_depth(expr) == 4
    with pytest.raises(TaskError):
        logic_from_json({"kind": "xor", "children": ["a", "b"]})


def test_logic_matches_prefix_replay_oracle():
    rng = random.Random(1)
    for _ in range(40):
        n = rng.randint(1, 6)
        ids = [f"s{i}" for i in range(n)]
        expr = random_logic(rng, ids)
        for size in range(min(n, 4) + 1):
            for order in itertools.permutations(ids, size):
                order = list(order)
                assert evaluate_logic(expr, set(order), order, ids) == holds_by_prefix(expr, order)


# --- tasks and suites -------------------------------------------------------

def test_task_round_trip(expanded_suite):
    for task in expanded_suite.tasks:
        again = CompositionalTask.from_dict(json.loads(task.canonical_json()))
        assert again == task


def test_suite_round_trip(tmp_path, suite):
    from agent_nexus.task_model import dump_suite, load_suite
    dump_suite(suite, tmp_path / "s.json")
    assert load_suite(tmp_path / "s.json") == suite
    with pytest.raises(KeyError):
        suite.task("nope")


def test_expanded_suite_size(expanded_suite, suite):
    assert len(expanded_suite.tasks) >= 100
    assert len({t.id for t in expanded_suite.tasks}) == len(expanded_suite.tasks)
    assert isinstance(expanded_suite, TaskSuite) and expanded_suite.tasks[:len(suite.tasks)] == suite.tasks


def test_unknown_checkpoint_operator():
    with pytest.raises(TaskError):
        Predicate("x", "regex", "y")
