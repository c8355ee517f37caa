import json

import pytest
from hypothesis import given, settings, strategies as st

from agent_nexus.env import (
    Back, Goal, Home, ProgressTracker, Stop, Swipe, Tap, Type, UnknownSnapshot, builtin_apps,
    observe, parse_action, reward, step, values_equal,
)
from agent_nexus.env.state import EnvState
from agent_nexus.task_model import Checkpoint, Disjunctive, Leaf, Predicate
from strategies import moves, snapshots, walk


def run(state, *actions):
    for a in actions:
        state, _ = step(state, parse_action(a) if isinstance(a, str) else a)
    return state


def without_counter(state):
    d = state.to_dict()
    d.pop("step_count")
    return d


# --- apps ---------------------------------------------------------------------

def test_builtin_apps_are_well_formed():
    apps = builtin_apps()
    assert sorted(apps) == ["clock", "expenses", "messaging", "notes", "settings"]
    for app in apps.values():
        assert app.problems() == []


# --- reset ----------------------------------------------------------------------

def test_reset_twice_identical(device):
    assert device.reset("clean").state_hash() == device.reset("clean").state_hash()


def test_reset_isolation(device):
    first = device.reset("clean").state_hash()
    s = run(device.reset("clean"), "Tap(icon_settings)", "Tap(setting_0)", "Home", "Tap(icon_notes)", "Back")
    assert s.state_hash() != first
    assert device.reset("clean").state_hash() == first


def test_unknown_snapshot(device):
    with pytest.raises(UnknownSnapshot):
        device.reset("nope")


def test_every_shipped_goal_starts_unsatisfied(device, expanded_suite):
    for sid in device.snapshot_ids:
        state = device.reset(sid)
        for task in expanded_suite.tasks:
            assert reward(state, Goal.from_task(task)) == 0, (sid, task.id)


def test_state_dict_round_trip(device):
    s = run(device.reset("resumed"), "Type(\"30\")", "Tap(icon_notes)")
    again = EnvState.from_dict(json.loads(s.canonical_json()), device.apps)
    assert again.state_hash() == s.state_hash()


# --- step -----------------------------------------------------------------------

def test_toggle_flip_changes_only_that_field(device):
    s = run(device.reset("clean"), "Tap(icon_settings)")
    before = observe(s).element("setting_1")
    assert before.value == "off"
    after = run(s, "Tap(setting_1)")
    assert observe(after).element("setting_1").value == "on"
    a, b = without_counter(s), without_counter(after)
    assert b["stores"]["settings"]["settings"][1]["on"] is True
    b["stores"]["settings"]["settings"][1]["on"] = False
    assert a == b
    assert after.step_count == s.step_count + 1


def test_tap_unknown_element_is_noop(device):
    s = device.reset("clean")
    after, effect = step(s, Tap("does_not_exist"))
    assert effect.noop
    assert without_counter(after) == without_counter(s)
    assert after.step_count == s.step_count + 1
    assert after.state_hash() != s.state_hash()


def test_home_is_idempotent_modulo_counter(device):
    s = run(device.reset("clean"), "Tap(icon_notes)")
    once, twice = run(s, Home()), run(s, Home(), Home())
    assert without_counter(once) == without_counter(twice)


def test_back_at_root_goes_home_and_back_at_home_is_noop(device):
    s = run(device.reset("clean"), "Tap(icon_notes)", "Back")
    assert s.foreground == "home"
    _, effect = step(s, Back())
    assert effect.noop


def test_swipe_costs_a_step_but_changes_nothing(device):
    s = device.reset("clean")
    after, effect = step(s, Swipe("up"))
    assert effect.noop and without_counter(after) == without_counter(s)


def test_type_without_focus_is_noop(device):
    _, effect = step(device.reset("clean"), Type("hello"))
    assert effect.noop


def test_launch_resets_the_app_screen(device):
    s = device.reset("resumed")
    assert s.foreground == "clock" and observe(s).screen == "add"
    s = run(s, "Home", "Tap(icon_clock)")
    assert observe(s).screen == "alarms"
    assert observe(s).element("time_input") is None


def test_create_note_flow(device):
    s = run(device.reset("clean"), "Tap(icon_notes)", "Tap(new_note)", "Tap(title_input)", 'Type("todo")',
            "Tap(body_input)", 'Type("call mum")', "Tap(save)")
    assert s.stores["notes"]["notes"][-1] == {"title": "todo", "body": "call mum"}
    assert observe(s).screen == "list"
    assert observe(s).element("note_3").label == "todo"


def test_messaging_chat_shows_only_that_contact(device):
    s = run(device.reset("clean"), "Tap(icon_messaging)")
    obs = observe(s)
    alice = next(e for e in obs.elements if e.label == "Alice")
    s = run(s, Tap(alice.id))
    texts = [e.label for e in observe(s).elements if e.role == "list-item"]
    assert texts == ["see you soon", "bring the slides"]


def test_stop_answer_is_recorded(device):
    s = run(device.reset("clean"), Stop("42"))
    assert s.stores["system"]["session"]["answer"] == "42"


def test_step_does_not_mutate_input(device):
    s = device.reset("clean")
    h = s.state_hash()
    step(s, Tap("icon_notes"))
    assert s.state_hash() == h


# --- observe --------------------------------------------------------------------

def test_home_lists_exactly_the_app_icons(device):
    obs = observe(device.reset("clean"))
    assert obs.foreground == "home"
    assert sorted(e.id for e in obs.elements) == sorted(f"icon_{a}" for a in device.apps)
    assert all(e.actionable and e.role == "icon" for e in obs.elements)


def test_notes_list_has_one_item_per_note(device):
    obs = observe(run(device.reset("clean"), "Tap(icon_notes)"))
    items = [e for e in obs.elements if e.role == "list-item"]
    assert [e.label for e in items] == ["groceries", "meeting", "wifi password"]


def test_observe_twice_identical(device):
    s = run(device.reset("resumed"), "Tap(save_alarm)")
    assert observe(s).text == observe(s).text


def test_observation_text_format(device):
    text = observe(run(device.reset("clean"), "Tap(icon_settings)")).text
    assert text.splitlines()[0] == "app: settings / screen: main"
    assert 'setting_4 [toggle] "Location" = "on" (tap)' in text


# --- actions --------------------------------------------------------------------

@settings(max_examples=200)
@given(st.one_of(
    st.from_regex(r"[a-z][a-z0-9_]{0,10}", fullmatch=True).map(Tap),
    st.text(max_size=30).map(Type),
    st.sampled_from(["up", "down", "left", "right"]).map(Swipe),
    st.just(Back()), st.just(Home()),
    st.one_of(st.none(), st.text(max_size=20)).map(Stop),
))
def test_action_wire_form_round_trips(action):
    assert parse_action(str(action)) == action


def test_bad_actions_rejected():
    with pytest.raises(ValueError):
        Type("x" * 5000)
    with pytest.raises(ValueError):
        Swipe("sideways")
    with pytest.raises(ValueError):
        parse_action("Jump(3)")


# --- reward ---------------------------------------------------------------------

def test_values_equal_is_numeric_aware_and_strict_on_bools():
    assert values_equal("176", 176) and values_equal(45.0, "45")
    assert not values_equal(True, 1) and not values_equal("1", True)
    assert values_equal(True, True) and not values_equal("abc", "abd")


def test_disjunctive_goal_one_branch(device, suite):
    task = suite.task("sc-04")
    s = run(device.reset("clean"), "Tap(icon_settings)", "Tap(setting_1)", "Home", "Tap(icon_clock)")
    alarm = next(e for e in observe(s).elements if e.label.startswith("standup"))
    s = run(s, Tap(alarm.id))
    assert reward(s, Goal.from_task(task)) == 1


def test_checkpoint_operators(device):
    s = device.reset("clean")

    def holds(app, path, op, expected):
        goal = Goal("g", (Checkpoint(app, Predicate(path, op, expected), "a"),), Leaf("a"), 4)
        return reward(s, goal)

    assert holds("notes", "notes[*]", "count_eq", 3)
    assert holds("notes", "notes[title=meeting].body", "contains", "3pm")
    assert holds("expenses", "expenses[*].amount", "ge", 100)
    assert not holds("expenses", "expenses[*].amount", "ge", 1000)
    assert holds("settings", "settings[name=Location].on", "eq", True)


def test_sequential_goal_uses_completion_order(device, suite):
    task = suite.task("sc-03")  # expense first, then Dark mode
    goal = Goal.from_task(task)
    tracker = ProgressTracker(goal)
    s = device.reset("clean")
    tracker.update(s)
    s = run(s, "Tap(icon_settings)", "Tap(setting_2)")
    assert tracker.update(s) == ["b"]
    s = run(s, "Home", "Tap(icon_expenses)", "Tap(add_expense)", "Tap(item_input)", 'Type("Parking")',
            "Tap(amount_input)", 'Type("6")', "Tap(category_input)", 'Type("transport")', "Tap(save_expense)")
    assert tracker.update(s) == ["a"]
    assert tracker.order == ["b", "a"]
    assert tracker.reward(s) == 0          # wrong order
    assert reward(s, goal) == 1            # order-free reading


def test_goal_with_uncheckable_leaf_never_satisfied(device):
    goal = Goal("g", (Checkpoint("settings", Predicate("settings[name=Location].on", "eq", True), "a"),),
                Disjunctive((Leaf("b"), Leaf("c"))), 4)
    assert reward(device.reset("clean"), goal) == 0


# --- purity properties ----------------------------------------------------------

@settings(max_examples=1000, deadline=None)
@given(snapshots, st.lists(moves, max_size=12))
def test_observe_and_reward_are_pure(snapshot, move_list):
    from agent_nexus.builtin import core_suite
    tasks = core_suite().tasks
    state = walk(snapshot, move_list)[-1]
    h = state.state_hash()
    first = observe(state).text
    goal = Goal.from_task(tasks[len(move_list) % len(tasks)])
    r1 = reward(state, goal)
    assert observe(state).text == first
    assert reward(state, goal) == r1
    assert state.state_hash() == h


@settings(max_examples=300, deadline=None)
@given(snapshots, st.lists(moves, max_size=10))
def test_replaying_actions_is_deterministic(snapshot, move_list):
    a = walk(snapshot, move_list)
    b = walk(snapshot, move_list)
    assert [s.state_hash() for s in a] == [s.state_hash() for s in b]
    assert all(s.step_count == i for i, s in enumerate(a))
