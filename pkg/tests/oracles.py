"""Reference implementations written independently of the package, used as test oracles."""

from __future__ import annotations

import itertools
import random

from agent_nexus.task_model import Conjunctive, Disjunctive, Hierarchical, Leaf, Sequential


def has_cycle_bruteforce(nodes: list[str], edges: list[tuple[str, str]]) -> bool:
    """A directed graph is acyclic iff some ordering of its nodes puts every edge forward."""
    for perm in itertools.permutations(nodes):
        pos = {n: i for i, n in enumerate(perm)}
        if all(pos[a] < pos[b] for a, b in edges):
            return False
    return True


def holds_by_prefix(expr, order: list[str]) -> bool:
    """Decide an expression by replaying the completion order one prefix at a time.

    A node "first holds" at the shortest prefix under which it holds. Sequential
    asks that those first-hold prefix lengths never decrease across its children.
    """
    done = set(order)
    if isinstance(expr, Leaf):
        return expr.id in done
    if isinstance(expr, Disjunctive):
        return any(holds_by_prefix(c, order) for c in expr.children)
    if isinstance(expr, (Conjunctive, Hierarchical)):
        return all(holds_by_prefix(c, order) for c in expr.children)
    assert isinstance(expr, Sequential)
    firsts = []
    for c in expr.children:
        k = next((k for k in range(len(order) + 1) if holds_by_prefix(c, order[:k])), None)
        if k is None:
            return False
        firsts.append(k)
    return firsts == sorted(firsts)


def random_logic(rng: random.Random, ids: list[str], depth: int = 3):
    """Random expression over (a subset of) ``ids``; composite nodes get 2-3 children."""
    if depth == 0 or len(ids) == 1 or rng.random() < 0.25:
        return Leaf(rng.choice(ids))
    kind = rng.choice([Sequential, Conjunctive, Disjunctive, Hierarchical])
    n = rng.randint(2, 3)
    children = tuple(random_logic(rng, ids, depth - 1) for _ in range(n))
    if kind is Hierarchical:
        return Hierarchical("group", children)
    return kind(children)
