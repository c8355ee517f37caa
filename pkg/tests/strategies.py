"""Hypothesis strategies shared by the property tests."""

from hypothesis import strategies as st

from agent_nexus.env import Back, Home, Swipe, Tap, Type, builtin_device, observe, step

DEVICE = builtin_device()

# a move is either "tap the i-th visible element" or some other action
moves = st.one_of(
    st.integers(0, 30).map(lambda i: ("tap", i)),
    st.text(alphabet="abc 19:.", max_size=6).map(lambda t: ("type", t)),
    st.sampled_from([("swipe", "up"), ("swipe", "down"), ("back", None), ("home", None),
                     ("tap-bogus", None)]),
)


def to_action(state, move):
    kind, arg = move
    if kind == "tap":
        elements = observe(state).elements
        return Tap(elements[arg % len(elements)].id) if elements else Home()
    if kind == "type":
        return Type(arg)
    if kind == "swipe":
        return Swipe(arg)
    if kind == "back":
        return Back()
    if kind == "home":
        return Home()
    return Tap("no_such_element")


def walk(snapshot, move_list):
    """States visited by applying ``move_list`` from a snapshot, including the start."""
    state = DEVICE.reset(snapshot)
    states = [state]
    for mv in move_list:
        state, _ = step(state, to_action(state, mv))
        states.append(state)
    return states


snapshots = st.sampled_from(DEVICE.snapshot_ids)
