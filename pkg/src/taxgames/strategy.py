"""Finite-state strategies, lasso runs, and bounded strategy enumeration.

A strategy machine is a deterministic Moore machine whose input letters are
the arena's joint action profiles (indexed as in Arena) and whose outputs
are the owning agent's action indices.  The machine's initial state is
always 0.  A profile of machines enacted in an arena yields exactly one
ultimately periodic run, represented as a lasso and compared via a canonical
normal form.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterator, NamedTuple

from .arena import Arena
from .errors import AlphabetMismatchError, ResourceLimitError
from .ltl import LabelTrace


@dataclass(frozen=True)
class StrategyMachine:
    """outputs[q] is the action index played in machine state q;
    transitions[q][letter] is the next machine state.  Initial state is 0."""

    outputs: tuple[int, ...]
    transitions: tuple[tuple[int, ...], ...]

    @property
    def n_states(self) -> int:
        return len(self.outputs)


@dataclass(frozen=True)
class Profile:
    machines: tuple[StrategyMachine, ...]

    def __len__(self) -> int:
        return len(self.machines)

    def replace(self, agent: int, machine: StrategyMachine) -> "Profile":
        machines = list(self.machines)
        machines[agent] = machine
        return Profile(tuple(machines))


class RunStep(NamedTuple):
    state: int
    letter: int
    costs: tuple[Fraction, ...]


@dataclass(frozen=True)
class LassoRun:
    """prefix then infinitely repeated nonempty cycle of run steps."""

    prefix: tuple[RunStep, ...]
    cycle: tuple[RunStep, ...]

    def __len__(self) -> int:
        return len(self.prefix) + len(self.cycle)


def check_profile(arena: Arena, profile: Profile) -> None:
    if len(profile.machines) != arena.n_agents:
        raise AlphabetMismatchError(
            f"profile has {len(profile.machines)} machines for "
            f"{arena.n_agents} agents"
        )
    n_letters = arena.n_letters
    for i, machine in enumerate(profile.machines):
        limit = len(arena.actions[i])
        if any(o >= limit or o < 0 for o in machine.outputs):
            raise AlphabetMismatchError(
                f"machine of agent {arena.agents[i]} outputs an action "
                f"outside its {limit} actions"
            )
        if any(len(row) != n_letters for row in machine.transitions):
            raise AlphabetMismatchError(
                f"machine of agent {arena.agents[i]} reads "
                f"{len(machine.transitions[0]) if machine.transitions else 0} "
                f"letters, arena has {n_letters}"
            )


def generate_run(arena: Arena, profile: Profile) -> LassoRun:
    """Simulate the joint configuration until it repeats; split the step
    sequence at the first repeated configuration into prefix and cycle."""
    check_profile(arena, profile)
    machines = profile.machines
    config = (arena.initial, tuple(0 for _ in machines))
    seen: dict[tuple[int, tuple[int, ...]], int] = {}
    steps: list[RunStep] = []
    while config not in seen:
        seen[config] = len(steps)
        state, memory = config
        letter = arena.letter_of(
            tuple(m.outputs[q] for m, q in zip(machines, memory))
        )
        target = arena.transition[state][letter]
        costs = arena.cost[state][letter]
        if target is None or costs is None:
            raise ValueError(
                f"arena is not total at ({arena.states[state]}, "
                f"{'/'.join(arena.letter_names(letter))})"
            )
        steps.append(RunStep(state, letter, costs))
        config = (target, tuple(m.transitions[q][letter] for m, q in zip(machines, memory)))
    split = seen[config]
    return LassoRun(prefix=tuple(steps[:split]), cycle=tuple(steps[split:]))


def lasso_canonical(run: LassoRun) -> LassoRun:
    """Unique normal form of the infinite step sequence.

    First absorb the prefix tail into the cycle (rotating the cycle right
    whenever the last prefix step equals the last cycle step), which yields
    the shortest possible prefix; then cut the cycle to its minimal period.
    Minimal-period reduction keeps the last element, so the two stages
    cannot re-enable each other.
    """
    prefix = list(run.prefix)
    cycle = list(run.cycle)
    if not cycle:
        raise ValueError("lasso cycle must be nonempty")
    while prefix and prefix[-1] == cycle[-1]:
        prefix.pop()
        cycle = [cycle[-1]] + cycle[:-1]
    length = len(cycle)
    for period in range(1, length + 1):
        if length % period:
            continue
        if cycle == cycle[:period] * (length // period):
            cycle = cycle[:period]
            break
    return LassoRun(prefix=tuple(prefix), cycle=tuple(cycle))


def run_at(run: LassoRun, k: int) -> RunStep:
    if k < len(run.prefix):
        return run.prefix[k]
    return run.cycle[(k - len(run.prefix)) % len(run.cycle)]


def label_trace(arena: Arena, run: LassoRun) -> LabelTrace:
    return LabelTrace(
        prefix=tuple(arena.labels[step.state] for step in run.prefix),
        cycle=tuple(arena.labels[step.state] for step in run.cycle),
    )


def distinguishable(arena: Arena, first: Profile, second: Profile) -> bool:
    """Whether the two profiles generate different infinite runs."""
    run1 = lasso_canonical(generate_run(arena, first))
    run2 = lasso_canonical(generate_run(arena, second))
    return run1 != run2


# ---------------------------------------------------------------------------
# Canonical enumeration of bounded-memory machines


def canonicalize_machine(machine: StrategyMachine) -> StrategyMachine:
    """Drop unreachable states and renumber the rest in first-reference
    order (scanning rows by state, then by letter).  Two machines are
    isomorphic (same outputs and transitions up to renaming, initial fixed)
    iff their canonical forms are equal."""
    order = [0]
    numbering = {0: 0}
    cursor = 0
    while cursor < len(order):
        q = order[cursor]
        cursor += 1
        for target in machine.transitions[q]:
            if target not in numbering:
                numbering[target] = len(order)
                order.append(target)
    outputs = tuple(machine.outputs[q] for q in order)
    transitions = tuple(
        tuple(numbering[t] for t in machine.transitions[q]) for q in order
    )
    return StrategyMachine(outputs=outputs, transitions=transitions)


def _transition_structures(
    m: int, n_letters: int
) -> Iterator[tuple[tuple[int, ...], ...]]:
    """All canonical transition tables with exactly m reachable states.

    Cells are filled in row-major order; a cell may reference one state
    beyond the highest seen so far (which creates it), so every table comes
    out already in first-reference numbering, each exactly once.
    """
    total = m * n_letters
    cells = [0] * total

    def fill(f: int, top: int) -> Iterator[tuple[tuple[int, ...], ...]]:
        if f == total:
            if top == m - 1:
                yield tuple(
                    tuple(cells[i * n_letters:(i + 1) * n_letters])
                    for i in range(m)
                )
            return
        if f % n_letters == 0 and top < f // n_letters:
            return
        if (m - 1) - top > total - f:
            return
        for value in range(min(top + 1, m - 1) + 1):
            cells[f] = value
            yield from fill(f + 1, max(top, value))

    yield from fill(0, 0)


def enumerate_machines(
    n_actions: int, n_letters: int, memory_bound: int
) -> Iterator[StrategyMachine]:
    """All canonical machines with at most memory_bound states, every state
    reachable, in deterministic order (by state count, then structure, then
    outputs in action order)."""
    if memory_bound < 1:
        raise ValueError("memory bound must be at least 1")
    for m in range(1, memory_bound + 1):
        for structure in _transition_structures(m, n_letters):
            for outputs in product(range(n_actions), repeat=m):
                yield StrategyMachine(outputs=outputs, transitions=structure)


def enumerate_profiles(
    arena: Arena, memory_bound: int, cap: int = 10**7
) -> Iterator[Profile]:
    """Cartesian product of the per-agent canonical machine universes,
    yielded lazily in deterministic order.  Raises when the profile count
    would exceed the cap."""
    n_letters = arena.n_letters
    universes: list[list[StrategyMachine]] = []
    for i in range(arena.n_agents):
        machines: list[StrategyMachine] = []
        for machine in enumerate_machines(
            len(arena.actions[i]), n_letters, memory_bound
        ):
            machines.append(machine)
            if len(machines) > cap:
                raise ResourceLimitError(
                    f"agent {arena.agents[i]} alone has more than {cap} "
                    f"machines at memory bound {memory_bound}"
                )
        universes.append(machines)
    size = 1
    for machines in universes:
        size *= len(machines)
    if size > cap:
        raise ResourceLimitError(
            f"{size} profiles at memory bound {memory_bound} exceeds cap {cap}"
        )
    for combo in product(*universes):
        yield Profile(machines=combo)
