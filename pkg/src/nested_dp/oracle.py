"""Desk-scale ground truth: full joints, strategy enumeration, conditioning.

Everything here works directly on primitive-variable assignments and raw
history tables; none of it touches beliefs, prescriptions, or value
functions.  That separation is the point: the dynamic-programming stack is
certified by comparing its outputs against this module with exact rational
equality.

A "strategy-like" is any object with

    fresh_state() -> state
    act(state, t, values) -> (u1, u2)

where `values` maps VarRef -> realized value for every observation produced
so far and every action already taken.  Implementations must only read the
entries their agent can see; the table-based ExplicitStrategy defined here
does, and the solver's closed-loop policies follow the same contract.

Enumeration semantics: agent-2 stage tables are enumerated first, on the
memories reachable given agent 2's own earlier assignments with agent 1's
actions left free (agent 2's memory holds no agent-1 variables, so those
free actions never appear inside a table key); agent-1 tables are then
enumerated per agent-2 choice, on the jointly reachable memories.  Any
behavior of any feasible strategy pair is realized by some enumerated pair,
so minimizing over the enumeration is minimizing over all strategies.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from .errors import MissingKey, ResourceLimitExceeded, ZeroProbabilityEvent
from .info import InfoStructure, VarRef
from .limits import resolve_budget
from .model import TeamModel

__all__ = [
    "Omega",
    "JointTable",
    "ExplicitStrategy",
    "build_joint",
    "trajectory",
    "evaluate_strategy",
    "enumerate_agent2_strategies",
    "enumerate_agent1_strategies",
    "enumerate_strategies",
    "strategy_count_formula",
    "exhaustive_min",
    "min_over_agent1",
    "condition",
    "condition_on_memory1",
]

Omega = tuple[int, tuple[int, ...], tuple[int, ...], tuple[int, ...]]


@dataclass(frozen=True)
class JointTable:
    """Product measure over all primitive assignments with positive mass."""

    entries: tuple[tuple[Omega, Fraction], ...]

    def __len__(self):
        return len(self.entries)


def build_joint(model: TeamModel, budget: int | None = None) -> JointTable:
    T = model.horizon
    count = len(model.x0_dist.support())
    for t in range(T):
        count *= len(model.w_dist(t).support())
    for t in range(T + 1):
        count *= len(model.v_dist(1, t).support())
        count *= len(model.v_dist(2, t).support())
    cap = resolve_budget(budget)
    if count > cap:
        raise ResourceLimitExceeded(
            f"joint table would hold {count} assignments, over the cap of {cap}",
            estimate=count,
        )
    w_supports = [list(model.w_dist(t).items()) for t in range(T)]
    v1_supports = [list(model.v_dist(1, t).items()) for t in range(T + 1)]
    v2_supports = [list(model.v_dist(2, t).items()) for t in range(T + 1)]
    entries = []
    for x0, px in model.x0_dist.items():
        for ws in itertools.product(*w_supports):
            for v1s in itertools.product(*v1_supports):
                for v2s in itertools.product(*v2_supports):
                    p = px
                    for _, q in ws:
                        p *= q
                    for _, q in v1s:
                        p *= q
                    for _, q in v2s:
                        p *= q
                    omega = (
                        x0,
                        tuple(w for w, _ in ws),
                        tuple(v for v, _ in v1s),
                        tuple(v for v, _ in v2s),
                    )
                    entries.append((omega, p))
    return JointTable(tuple(entries))


@dataclass(frozen=True)
class Trajectory:
    xs: tuple[int, ...]
    y1s: tuple[int, ...]
    y2s: tuple[int, ...]
    u1s: tuple[int, ...]
    u2s: tuple[int, ...]
    stage_costs: tuple[Fraction, ...]

    @property
    def total_cost(self) -> Fraction:
        return sum(self.stage_costs, Fraction(0))

    def value_of(self, atom) -> object:
        kind, t = atom[0], atom[1]
        if kind == "X":
            return self.xs[t]
        if kind == "Y1":
            return self.y1s[t]
        if kind == "Y2":
            return self.y2s[t]
        if kind == "U1":
            return self.u1s[t]
        if kind == "U2":
            return self.u2s[t]
        raise ValueError(f"unknown atom {atom!r}")


def trajectory(model: TeamModel, info: InfoStructure, strategy, omega: Omega) -> Trajectory:
    """Run one episode: the primitive draw plus a strategy force everything."""
    x0, ws, v1s, v2s = omega
    T = model.horizon
    values: dict[VarRef, int] = {}
    x = x0
    xs, y1s, y2s, u1s, u2s, costs = [x], [], [], [], [], []
    values[VarRef(0, "Y1")] = y1 = model.h(1, 0, x, v1s[0])
    values[VarRef(0, "Y2")] = y2 = model.h(2, 0, x, v2s[0])
    y1s.append(y1)
    y2s.append(y2)
    state = strategy.fresh_state()
    for t in range(T + 1):
        u1, u2 = strategy.act(state, t, values)
        u1s.append(u1)
        u2s.append(u2)
        costs.append(model.cost(t, x, u1, u2))
        values[VarRef(t, "U1")] = u1
        values[VarRef(t, "U2")] = u2
        if t < T:
            x = model.f(t, x, u1, u2, ws[t])
            xs.append(x)
            values[VarRef(t + 1, "Y1")] = y1 = model.h(1, t + 1, x, v1s[t + 1])
            values[VarRef(t + 1, "Y2")] = y2 = model.h(2, t + 1, x, v2s[t + 1])
            y1s.append(y1)
            y2s.append(y2)
    return Trajectory(tuple(xs), tuple(y1s), tuple(y2s), tuple(u1s), tuple(u2s), tuple(costs))


def evaluate_strategy(joint: JointTable, model: TeamModel, info: InfoStructure, strategy) -> Fraction:
    """Exact expected total cost of a strategy-like object."""
    total = Fraction(0)
    for omega, p in joint.entries:
        total += p * trajectory(model, info, strategy, omega).total_cost
    return total


# ---------------------------------------------------------------------------
# Explicit (table) strategies and their enumeration.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExplicitStrategy:
    """Per-agent, per-time lookup tables from memory realizations to actions.

    Keys are value tuples aligned with the canonical memory compositions of
    the information structure.
    """

    info: InfoStructure
    g1: tuple[tuple[tuple[tuple[int, ...], int], ...], ...]
    g2: tuple[tuple[tuple[tuple[int, ...], int], ...], ...]

    @staticmethod
    def from_tables(info: InfoStructure, g1: list[dict], g2: list[dict]) -> "ExplicitStrategy":
        freeze = lambda tables: tuple(tuple(sorted(tbl.items())) for tbl in tables)
        return ExplicitStrategy(info, freeze(g1), freeze(g2))

    @cached_property
    def _g1_maps(self):
        return tuple(dict(tbl) for tbl in self.g1)

    @cached_property
    def _g2_maps(self):
        return tuple(dict(tbl) for tbl in self.g2)

    def fresh_state(self):
        return None

    def act(self, state, t, values):
        m1 = tuple(values[v] for v in self.info.m1[t])
        m2 = tuple(values[v] for v in self.info.m2[t])
        try:
            u1 = self._g1_maps[t][m1]
        except KeyError:
            raise MissingKey(f"agent 1 has no action for memory {m1} at t={t}") from None
        try:
            u2 = self._g2_maps[t][m2]
        except KeyError:
            raise MissingKey(f"agent 2 has no action for memory {m2} at t={t}") from None
        return u1, u2

    def to_json(self) -> dict:
        dump = lambda tables: [[[list(k), a] for k, a in tbl] for tbl in tables]
        return {"g1": dump(self.g1), "g2": dump(self.g2)}

    @staticmethod
    def from_json(info: InfoStructure, doc: dict) -> "ExplicitStrategy":
        load = lambda node: [
            {tuple(k): a for k, a in tbl} for tbl in node
        ]
        return ExplicitStrategy.from_tables(info, load(doc["g1"]), load(doc["g2"]))


def _initial_contexts(model, joint):
    contexts = []
    for omega, _ in joint.entries:
        x0 = omega[0]
        values = {
            VarRef(0, "Y1"): model.h(1, 0, x0, omega[2][0]),
            VarRef(0, "Y2"): model.h(2, 0, x0, omega[3][0]),
        }
        contexts.append((omega, values, x0))
    return contexts


def _step_context(model, ctx, t, u1, u2):
    omega, values, x = ctx
    x_next = model.f(t, x, u1, u2, omega[1][t])
    nv = dict(values)
    nv[VarRef(t, "U1")] = u1
    nv[VarRef(t, "U2")] = u2
    nv[VarRef(t + 1, "Y1")] = model.h(1, t + 1, x_next, omega[2][t + 1])
    nv[VarRef(t + 1, "Y2")] = model.h(2, t + 1, x_next, omega[3][t + 1])
    return (omega, nv, x_next)


def enumerate_agent2_strategies(model: TeamModel, info: InfoStructure, joint: JointTable):
    """Yield every self-consistent agent-2 stage-table stack, lexicographic.

    Reachability lets agent 1's actions range free; since agent 2's memory
    holds no agent-1 variables, that only widens the set of reachable own
    histories and never adds free entries inside the keys.
    """
    T = model.horizon
    n_actions = [model.action_space(2, t).size for t in range(T + 1)]

    def rec(t, tables, contexts):
        if t > T:
            yield tuple(tuple(sorted(tbl.items())) for tbl in tables)
            return
        infosets = sorted({tuple(values[v] for v in info.m2[t]) for _, values, _ in contexts})
        for assignment in itertools.product(range(n_actions[t]), repeat=len(infosets)):
            table_t = dict(zip(infosets, assignment))
            if t == T:
                next_contexts = []
            else:
                next_contexts = [
                    _step_context(model, ctx, t, u1, table_t[tuple(ctx[1][v] for v in info.m2[t])])
                    for ctx in contexts
                    for u1 in range(model.action_space(1, t).size)
                ]
            yield from rec(t + 1, tables + [table_t], next_contexts)

    yield from rec(0, [], _initial_contexts(model, joint))


def enumerate_agent1_strategies(
    model: TeamModel, info: InfoStructure, joint: JointTable, agent2_strategy
):
    """Yield every self-consistent agent-1 stage-table stack against a fixed
    (stateless) agent-2 strategy-like, lexicographic.  Reachability is joint:
    agent 2's entries inside agent 1's memory are pinned by the fixed
    strategy, so the table domains stay small."""
    T = model.horizon
    n_actions = [model.action_space(1, t).size for t in range(T + 1)]

    def rec(t, tables, contexts):
        if t > T:
            yield tuple(tuple(sorted(tbl.items())) for tbl in tables)
            return
        infosets = sorted({tuple(values[v] for v in info.m1[t]) for _, values, _ in contexts})
        for assignment in itertools.product(range(n_actions[t]), repeat=len(infosets)):
            table_t = dict(zip(infosets, assignment))
            if t == T:
                next_contexts = []
            else:
                next_contexts = []
                for ctx in contexts:
                    u1 = table_t[tuple(ctx[1][v] for v in info.m1[t])]
                    _, u2 = agent2_strategy.act(None, t, ctx[1])
                    next_contexts.append(_step_context(model, ctx, t, u1, u2))
            yield from rec(t + 1, tables + [table_t], next_contexts)

    yield from rec(0, [], _initial_contexts(model, joint))


class _Agent2TableOnly:
    """Strategy-like exposing agent-2 stage tables; the agent-1 half is never
    consulted by callers that use this."""

    def __init__(self, info, tables):
        self.info = info
        self.tables = tuple(dict(tbl) for tbl in tables)

    def fresh_state(self):
        return None

    def act(self, state, t, values):
        m2 = tuple(values[v] for v in self.info.m2[t])
        return 0, self.tables[t][m2]


def enumerate_strategies(model: TeamModel, info: InfoStructure, joint: JointTable):
    """Yield every team strategy pair: agent-2 tables outermost, then every
    agent-1 stack self-consistent against that agent-2 choice.  Any behavior
    of any feasible strategy pair is realized by exactly the pairs yielded
    here, so minimizing over them is exhaustive."""
    for g2 in enumerate_agent2_strategies(model, info, joint):
        fixed = _Agent2TableOnly(info, g2)
        for g1 in enumerate_agent1_strategies(model, info, joint, fixed):
            yield ExplicitStrategy(info, g1, g2)


def strategy_count_formula(model: TeamModel, info: InfoStructure, joint: JointTable) -> int:
    """Product over agents and times of |actions| ** |reachable memories|,
    counting reachable memories by their observation parts under fully free
    actions.  Action entries inside a memory are functions of the
    observation part once both strategies are fixed, so this is an upper
    bound on the enumeration length, exact whenever observation
    reachability does not depend on the actions taken."""
    T = model.horizon
    contexts = _initial_contexts(model, joint)
    count = 1
    for t in range(T + 1):
        for agent, comp in ((1, info.m1[t]), (2, info.m2[t])):
            obs_part = {
                tuple(values[v] for v in comp if v.kind in ("Y1", "Y2"))
                for _, values, _ in contexts
            }
            count *= model.action_space(agent, t).size ** len(obs_part)
        if t < T:
            contexts = [
                _step_context(model, ctx, t, u1, u2)
                for ctx in contexts
                for u1 in range(model.action_space(1, t).size)
                for u2 in range(model.action_space(2, t).size)
            ]
    return count


@dataclass(frozen=True)
class ExhaustiveResult:
    value: Fraction
    strategy: ExplicitStrategy
    strategies_tested: int


def exhaustive_min(
    model: TeamModel, info: InfoStructure, joint: JointTable, budget: int | None = None
) -> ExhaustiveResult:
    """Exact minimum of the expected total cost over every team strategy.

    No structural restriction: the search covers the same self-consistent
    history tables `enumerate_strategies` yields, but walks them as a
    depth-first tree over joint stage assignments so shared prefixes are
    simulated once.  Ties resolve to the first minimizer in the stage-major
    enumeration order, i.e. the lexicographically smallest assignment
    sequence (reachable memories sorted, agent 1 before agent 2, actions
    ascending)."""
    cap = resolve_budget(budget)
    estimate = strategy_count_formula(model, info, joint)
    if estimate > cap:
        raise ResourceLimitExceeded(
            f"about {estimate} strategies to enumerate, over the cap of {cap}",
            estimate=estimate,
        )
    T = model.horizon
    best: list = [None, None]  # (value, stage tables)
    tested = [0]

    # contexts: (omega, p, values, x, accumulated cost)
    contexts = []
    for omega, p in joint.entries:
        values = {
            VarRef(0, "Y1"): model.h(1, 0, omega[0], omega[2][0]),
            VarRef(0, "Y2"): model.h(2, 0, omega[0], omega[3][0]),
        }
        contexts.append((omega, p, values, omega[0], Fraction(0)))

    def stage_assignments(t, contexts):
        infosets1 = sorted({tuple(c[2][v] for v in info.m1[t]) for c in contexts})
        infosets2 = sorted({tuple(c[2][v] for v in info.m2[t]) for c in contexts})
        n1 = model.action_space(1, t).size
        n2 = model.action_space(2, t).size
        for acts1 in itertools.product(range(n1), repeat=len(infosets1)):
            for acts2 in itertools.product(range(n2), repeat=len(infosets2)):
                yield dict(zip(infosets1, acts1)), dict(zip(infosets2, acts2))

    def rec(t, contexts, tables):
        for table1, table2 in stage_assignments(t, contexts):
            stage_cost = Fraction(0)
            advanced = []
            for omega, p, values, x, acc in contexts:
                u1 = table1[tuple(values[v] for v in info.m1[t])]
                u2 = table2[tuple(values[v] for v in info.m2[t])]
                acc = acc + model.cost(t, x, u1, u2)
                if t == T:
                    stage_cost += p * acc
                else:
                    omega2, nv, x2 = _step_context(model, (omega, values, x), t, u1, u2)
                    advanced.append((omega2, p, nv, x2, acc))
            tables.append((table1, table2))
            if t == T:
                tested[0] += 1
                if best[0] is None or stage_cost < best[0]:
                    best[0] = stage_cost
                    best[1] = [(dict(a), dict(b)) for a, b in tables]
            else:
                rec(t + 1, advanced, tables)
            tables.pop()

    rec(0, contexts, [])
    if best[1] is None:
        raise ZeroProbabilityEvent("model admits no strategy (empty joint?)")
    g1 = [stage[0] for stage in best[1]]
    g2 = [stage[1] for stage in best[1]]
    return ExhaustiveResult(best[0], ExplicitStrategy.from_tables(info, g1, g2), tested[0])


class _FixedPairStrategy:
    """Glue a fixed agent-1 stage-table stack to an arbitrary agent-2
    strategy-like object."""

    def __init__(self, info, g1_tables, agent2):
        self.info = info
        self.g1 = tuple(tbl if isinstance(tbl, dict) else dict(tbl) for tbl in g1_tables)
        self.agent2 = agent2

    def fresh_state(self):
        return self.agent2.fresh_state()

    def act(self, state, t, values):
        m1 = tuple(values[v] for v in self.info.m1[t])
        if m1 not in self.g1[t]:
            raise MissingKey(f"agent 1 has no action for memory {m1} at t={t}")
        _, u2 = self.agent2.act(state, t, values)
        return self.g1[t][m1], u2


def min_over_agent1(
    model: TeamModel,
    info: InfoStructure,
    joint: JointTable,
    agent2_strategy,
    budget: int | None = None,
) -> tuple[Fraction, tuple]:
    """Exact minimum over all agent-1 strategies with agent 2's behavior
    fixed (any stateless strategy-like)."""
    cap = resolve_budget(budget)
    best = None
    best_tables = None
    tested = 0
    for g1 in enumerate_agent1_strategies(model, info, joint, agent2_strategy):
        tested += 1
        if tested > cap:
            raise ResourceLimitExceeded(f"more than {cap} agent-1 strategies", estimate=tested)
        value = evaluate_strategy(joint, model, info, _FixedPairStrategy(info, g1, agent2_strategy))
        if best is None or value < best:
            best = value
            best_tables = g1
    return best, best_tables


# ---------------------------------------------------------------------------
# Conditioning.  Atoms name trajectory variables; composites expand through
# the information structure.
# ---------------------------------------------------------------------------

_COMPOSITES = {"M1": "m1", "M2": "m2", "A2": "a2", "L2": "l2", "Z1": "z1", "Z2": "z2"}


def _atom_value(info: InfoStructure, traj: Trajectory, atom):
    kind, t = atom
    if kind in _COMPOSITES:
        comp = getattr(info, _COMPOSITES[kind])[t]
        return tuple(traj.value_of((v.kind, v.s)) for v in comp)
    return traj.value_of(atom)


def condition(
    joint: JointTable,
    model: TeamModel,
    info: InfoStructure,
    strategy,
    given: list[tuple[tuple, object]],
    query: list[tuple],
) -> dict[tuple, Fraction]:
    """Exact Bayes conditioning of the strategy-closed joint.

    `given` is a list of (atom, value) pairs; `query` a list of atoms; atoms
    are ("X", t), ("Y1", t), ..., or composites ("M1", t), ("L2", t), etc.
    Returns the conditional distribution over query value tuples.
    """
    weights: dict[tuple, Fraction] = {}
    total = Fraction(0)
    for omega, p in joint.entries:
        traj = trajectory(model, info, strategy, omega)
        if all(_atom_value(info, traj, atom) == val for atom, val in given):
            key = tuple(_atom_value(info, traj, atom) for atom in query)
            weights[key] = weights.get(key, Fraction(0)) + p
            total += p
    if total == 0:
        raise ZeroProbabilityEvent(f"conditioning event {given} has probability 0")
    return {key: w / total for key, w in weights.items()}


class _MemoryPinnedAgent1:
    """Agent 1 replays the action entries of a fixed memory realization
    (open loop); used to condition on agent-1 histories without fixing an
    agent-1 strategy, since the history itself pins the actions."""

    def __init__(self, info, agent2, t, m1real):
        self.info = info
        self.agent2 = agent2
        self.u1_by_time = {
            v.s: m1real[i] for i, v in enumerate(info.m1[t]) if v.kind == "U1"
        }

    def fresh_state(self):
        return self.agent2.fresh_state()

    def act(self, state, t, values):
        _, u2 = self.agent2.act(state, t, values)
        return self.u1_by_time.get(t, 0), u2


def condition_on_memory1(
    joint: JointTable,
    model: TeamModel,
    info: InfoStructure,
    agent2_strategy,
    t: int,
    m1real: tuple[int, ...],
    query: list[tuple] | None = None,
) -> dict[tuple, Fraction]:
    """P(query | agent 1's memory at t equals m1real), with agent 2 played by
    the given strategy-like and agent 1's past actions read off the memory
    realization itself.  Default query: (state, private values) at t."""
    if query is None:
        query = [("X", t), ("L2", t)]
    runner = _MemoryPinnedAgent1(info, agent2_strategy, t, m1real)
    return condition(joint, model, info, runner, [(("M1", t), m1real)], query)
