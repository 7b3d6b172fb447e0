"""Shared builders and independent oracles for the test suite.

The oracles deliberately avoid the library's own algorithms: temporal
formulas are checked by walking the lasso position by position, mean cycles
by enumerating simple cycles, machine enumeration by brute force over raw
tables, and best responses by trying every small machine that reads only
the other agents' actions.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product
from random import Random
from typing import Iterable, Iterator, Mapping

import taxgames as tg


# ======================== Bundled example, built in code ====================


def junction_game() -> tg.Game:
    transitions = {}
    costs = {}
    for combo, target, cost in [
        (("a", "c"), "s2", (0, 0)),
        (("a", "d"), "s1", (2, 0)),
        (("b", "c"), "s1", (0, 2)),
        (("b", "d"), "s3", (2, 2)),
    ]:
        transitions[("s0", combo)] = target
        costs[("s0", combo)] = cost
    for s in ["s1", "s2", "s3"]:
        for c1 in "ab":
            for c2 in "cd":
                transitions[(s, (c1, c2))] = "s0"
                costs[(s, (c1, c2))] = (0, 0)
    arena = tg.make_arena(
        states=["s0", "s1", "s2", "s3"],
        vocabulary=["p", "q"],
        agents=["driver1", "driver2"],
        actions={"driver1": ["a", "b"], "driver2": ["c", "d"]},
        labels={"s1": ["p", "q"], "s2": ["p"], "s3": ["q"]},
        transitions=transitions,
        costs=costs,
        initial="s0",
    )
    return tg.make_game(arena, ["G F p", "G F p"])


def junction_tax() -> tg.DynamicTax:
    """Absorbing punishment unless the first joint move heads to s1."""
    zero = tg.zero_tax(2)
    punish = tg.static_tax(
        2, {(s, a): (3, 3) for s in range(4) for a in range(4)}
    )
    return tg.DynamicTax(
        outputs=(zero, zero, punish),
        transitions=((2, 1, 1, 2), (0, 0, 0, 0), (2, 2, 2, 2)),
    )


def constant_machine(action: int, n_letters: int) -> tg.StrategyMachine:
    return tg.StrategyMachine(outputs=(action,), transitions=((0,) * n_letters,))


def constant_profile(arena: tg.Arena, actions: Iterable[int]) -> tg.Profile:
    n = arena.n_letters
    return tg.Profile(tuple(constant_machine(a, n) for a in actions))


# ======================== LTL oracle ========================================


def oracle_eval(formula: tg.Formula, trace: tg.LabelTrace) -> bool:
    """Positionwise lasso evaluation by direct walking, no fixpoints."""
    letters = list(trace.prefix) + list(trace.cycle)
    total = len(letters)
    wrap = len(trace.prefix)

    def succ(k: int) -> int:
        return k + 1 if k + 1 < total else wrap

    memo: dict[tuple[int, int], bool] = {}

    def holds(f: tg.Formula, k: int) -> bool:
        key = (id(f), k)
        if key in memo:
            return memo[key]
        if isinstance(f, tg.TrueConst):
            value = True
        elif isinstance(f, tg.Var):
            value = f.name in letters[k]
        elif isinstance(f, tg.Not):
            value = not holds(f.operand, k)
        elif isinstance(f, tg.Or):
            value = holds(f.left, k) or holds(f.right, k)
        elif isinstance(f, tg.Next):
            value = holds(f.operand, succ(k))
        elif isinstance(f, tg.Until):
            value = False
            j = k
            for _ in range(total + 1):
                if holds(f.right, j):
                    value = True
                    break
                if not holds(f.left, j):
                    break
                j = succ(j)
        else:
            raise TypeError(f"unknown node {f!r}")
        memo[key] = value
        return value

    return holds(formula, 0)


# ======================== Machine enumeration oracle ========================


def raw_machines(
    n_actions: int, n_letters: int, max_states: int
) -> Iterator[tg.StrategyMachine]:
    """Every machine table with up to max_states states, no dedup."""
    for m in range(1, max_states + 1):
        rows = list(product(range(m), repeat=n_letters))
        for outputs in product(range(n_actions), repeat=m):
            for table in product(rows, repeat=m):
                yield tg.StrategyMachine(outputs=outputs, transitions=table)


def reference_canonical(machine: tg.StrategyMachine) -> tg.StrategyMachine:
    """Drop unreachable states and renumber by first reference."""
    order = [0]
    seen = {0}
    cursor = 0
    while cursor < len(order):
        q = order[cursor]
        cursor += 1
        for target in machine.transitions[q]:
            if target not in seen:
                seen.add(target)
                order.append(target)
    rename = {old: new for new, old in enumerate(order)}
    return tg.StrategyMachine(
        outputs=tuple(machine.outputs[q] for q in order),
        transitions=tuple(
            tuple(rename[t] for t in machine.transitions[q]) for q in order
        ),
    )


# ======================== Mean cycle oracle =================================


def simple_cycle_min_mean(
    graph: Mapping[object, Iterable[tuple[object, Fraction]]]
) -> Fraction | None:
    """Minimum mean over all simple cycles, by explicit path enumeration."""
    nodes = list(graph)
    best: Fraction | None = None
    allowed: set = set()

    def extend(start, node, weight: Fraction, depth: int, on_path: set) -> None:
        nonlocal best
        for target, w in graph.get(node, ()):
            if target == start:
                mean = Fraction(weight + w, depth)
                if best is None or mean < best:
                    best = mean
            elif target not in on_path and target in allowed:
                on_path.add(target)
                extend(start, target, weight + w, depth + 1, on_path)
                on_path.discard(target)

    for i, start in enumerate(nodes):
        # enumerate each cycle once, rooted at its first node in list order
        allowed = set(nodes[i:])
        extend(start, start, Fraction(0), 1, {start})
    return best


# ======================== Random instances ==================================


def random_game(
    rng: Random,
    n_states: int = 3,
    n_actions: tuple[int, int] = (2, 2),
    max_cost: int = 10,
    goals: tuple[str, str] = ("G F p", "G F p"),
) -> tg.Game:
    states = [f"s{i}" for i in range(n_states)]
    vocabulary = ["p", "q"]
    labels = {
        name: [v for v in vocabulary if rng.random() < 0.5] for name in states
    }
    actions = {
        "agent1": [f"x{i}" for i in range(n_actions[0])],
        "agent2": [f"y{i}" for i in range(n_actions[1])],
    }
    transitions = {}
    costs = {}
    for state in states:
        for combo in product(actions["agent1"], actions["agent2"]):
            transitions[(state, combo)] = rng.choice(states)
            costs[(state, combo)] = (
                rng.randint(0, max_cost),
                rng.randint(0, max_cost),
            )
    arena = tg.make_arena(
        states=states,
        vocabulary=vocabulary,
        agents=["agent1", "agent2"],
        actions=actions,
        labels=labels,
        transitions=transitions,
        costs=costs,
        initial="s0",
    )
    return tg.make_game(arena, list(goals))


def random_static_tax(
    rng: Random, game: tg.Game, max_component: int = 10, density: float = 0.5
) -> tg.StaticTax:
    arena = game.arena
    rates = {}
    for state in range(arena.n_states):
        for letter in arena.letters():
            if rng.random() < density:
                rates[(state, letter)] = tuple(
                    rng.randint(0, max_component)
                    for _ in range(arena.n_agents)
                )
    return tg.static_tax(arena.n_agents, rates)


# ======================== Bounded best-response oracle ======================


def lift_reduced(
    machine: tg.StrategyMachine, arena: tg.Arena, agent: int
) -> tg.StrategyMachine:
    """Expand a machine reading only the other agents' actions to one
    reading full joint profiles."""
    sizes = [len(acts) for acts in arena.actions]

    def reduced_index(letter: int) -> int:
        profile = arena.letter_profile(letter)
        index = 0
        for k, count in enumerate(sizes):
            if k == agent:
                continue
            index = index * count + profile[k]
        return index

    return tg.StrategyMachine(
        outputs=machine.outputs,
        transitions=tuple(
            tuple(row[reduced_index(letter)] for letter in arena.letters())
            for row in machine.transitions
        ),
    )


def oracle_response_values(
    game: tg.Game,
    profile: tg.Profile,
    agent: int,
    bound: int,
    tax: tg.DynamicTax | None = None,
) -> list[tg.LexValue]:
    """LexValues of every deviation to a machine with at most `bound`
    states that reads only the other agents' actions.  Against fixed
    deterministic opponents such machines induce the same runs as
    full-alphabet machines of the same size, because the full transition
    function only ever sees the machine's own output next to the others'
    actions."""
    arena = game.arena
    n_obs = 1
    for k, acts in enumerate(arena.actions):
        if k != agent:
            n_obs *= len(acts)
    values = []
    for small in raw_machines(len(arena.actions[agent]), n_obs, bound):
        lifted = lift_reduced(small, arena, agent)
        outcome = tg.evaluate(game, profile.replace(agent, lifted), tax)
        values.append(outcome.value(agent))
    return values
