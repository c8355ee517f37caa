"""Small test doubles."""

from agent_nexus.backends import BackendReply
from agent_nexus.env import observe, step


class SimEnv:
    """Bare env handle over a state, without budgets or logging."""

    def __init__(self, state):
        self.state = state

    def observe(self):
        return observe(self.state)

    def step(self, action):
        self.state, effect = step(self.state, action)
        return effect


class Canned:
    """Backend that replays fixed replies (the last one repeats) and records requests."""

    def __init__(self, *replies, identity="canned", infer_ms=0.0):
        self.replies = list(replies)
        self.identity = identity
        self.infer_ms = infer_ms
        self.requests = []

    def complete(self, blocks):
        self.requests.append(dict(blocks))
        text = self.replies[min(len(self.requests) - 1, len(self.replies) - 1)]
        if isinstance(text, Exception):
            raise text
        return BackendReply(text, 10, 5, self.infer_ms)
