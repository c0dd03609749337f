"""Per-agent dynamics: product embedding, marginal filters, factorization.

When each agent's state evolves and is observed through its own tables, the
joint machinery still applies to the product model, but the beliefs factor:
agent 1's information state splits into a filter over its own state given
its own history and a filter over agent 2's (state, private values) given
the shared data.  This module provides the embedding, the two marginal
filters, executable checks of the factorization identities, and a
person-by-person solver that works directly on the factored keys (with a
further reduction when agent 1 observes its own state perfectly).

The factorization checks deliberately accept any product-shaped TeamModel
plus a state split, not just genuinely decoupled ones: the test suite ships
a coupled counterexample to demonstrate the checks can fail.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .beliefs import MarginalBelief, Prescription
from .errors import (
    MissingKey,
    PerfectObsViolation,
    ResourceLimitExceeded,
    ZeroProbabilityObservation,
)
from .info import InfoStructure, InitialContext, StepContext, merge_realization
from .limits import resolve_budget
from .model import Dist, FiniteSpace, TeamModel, format_ratio, parse_ratio
from .oracle import JointTable, condition, trajectory
from .solver import extend_a2

__all__ = [
    "DecoupledModel",
    "embed",
    "split_state",
    "update_theta",
    "theta1_step",
    "theta2_step",
    "initial_theta1_roots",
    "initial_theta2_roots",
    "FactorizationCheck",
    "check_factorization_pi1",
    "check_factorization_pi2",
    "DecoupledPbpSolution",
    "solve_decoupled_pbp",
    "decoupled_from_json",
    "decoupled_to_json",
]


@dataclass(frozen=True)
class DecoupledModel:
    """A team model whose state, disturbance, and observation tables are
    per-agent; only the cost couples the agents.  Cross-agent arguments
    cannot be expressed, so decoupling holds by construction."""

    horizon: int
    states1: tuple[FiniteSpace, ...]
    states2: tuple[FiniteSpace, ...]
    actions1: tuple[FiniteSpace, ...]
    actions2: tuple[FiniteSpace, ...]
    disturbances1: tuple[FiniteSpace, ...]
    disturbances2: tuple[FiniteSpace, ...]
    noises1: tuple[FiniteSpace, ...]
    noises2: tuple[FiniteSpace, ...]
    observations1: tuple[FiniteSpace, ...]
    observations2: tuple[FiniteSpace, ...]
    f1: tuple
    f2: tuple
    obs1: tuple
    obs2: tuple
    cost_table: tuple  # [t][x1][x2][u1][u2]
    x1_dist: Dist
    x2_dist: Dist
    w1_dists: tuple[Dist, ...]
    w2_dists: tuple[Dist, ...]
    v1_dists: tuple[Dist, ...]
    v2_dists: tuple[Dist, ...]

    def cost(self, t, x1, x2, u1, u2) -> Fraction:
        return self.cost_table[t][x1][x2][u1][u2]


def split_state(n2: int, x: int) -> tuple[int, int]:
    """Decompose a product-state index into (agent-1 part, agent-2 part)."""
    return divmod(x, n2)


def embed(dec: DecoupledModel) -> TeamModel:
    """Product construction: joint state (x1, x2), joint disturbance
    (w1, w2), observations reading only their own component, cost copied.
    All generic machinery applies to the result."""
    T = dec.horizon
    states = tuple(
        FiniteSpace("X", dec.states1[t].size * dec.states2[t].size) for t in range(T + 1)
    )
    disturbances = tuple(
        FiniteSpace("W", dec.disturbances1[t].size * dec.disturbances2[t].size)
        for t in range(T)
    )

    transition = []
    for t in range(T):
        n2 = dec.states2[t].size
        nw2 = dec.disturbances2[t].size
        n2_next = dec.states2[t + 1].size
        stage = []
        for x in range(states[t].size):
            x1, x2 = divmod(x, n2)
            row_u1 = []
            for u1 in range(dec.actions1[t].size):
                row_u2 = []
                for u2 in range(dec.actions2[t].size):
                    row_w = []
                    for w in range(disturbances[t].size):
                        w1, w2 = divmod(w, nw2)
                        x1n = dec.f1[t][x1][u1][w1]
                        x2n = dec.f2[t][x2][u2][w2]
                        row_w.append(x1n * n2_next + x2n)
                    row_u2.append(tuple(row_w))
                row_u1.append(tuple(row_u2))
            stage.append(tuple(row_u1))
        transition.append(tuple(stage))

    def lift_obs(obs_table, agent):
        lifted = []
        for t in range(T + 1):
            n2 = dec.states2[t].size
            nv = (dec.noises1 if agent == 1 else dec.noises2)[t].size
            stage = []
            for x in range(states[t].size):
                x1, x2 = divmod(x, n2)
                own = x1 if agent == 1 else x2
                stage.append(tuple(obs_table[t][own][v] for v in range(nv)))
            lifted.append(tuple(stage))
        return tuple(lifted)

    cost = []
    for t in range(T + 1):
        n2 = dec.states2[t].size
        stage = []
        for x in range(states[t].size):
            x1, x2 = divmod(x, n2)
            stage.append(
                tuple(
                    tuple(
                        dec.cost(t, x1, x2, u1, u2) for u2 in range(dec.actions2[t].size)
                    )
                    for u1 in range(dec.actions1[t].size)
                )
            )
        cost.append(tuple(stage))

    def product_dist(d1: Dist, d2: Dist) -> Dist:
        return Dist(tuple(p1 * p2 for p1 in d1.weights for p2 in d2.weights))

    return TeamModel(
        horizon=T,
        states=states,
        actions1=dec.actions1,
        actions2=dec.actions2,
        disturbances=disturbances,
        noises1=dec.noises1,
        noises2=dec.noises2,
        observations1=dec.observations1,
        observations2=dec.observations2,
        transition=tuple(transition),
        obs1=lift_obs(dec.obs1, 1),
        obs2=lift_obs(dec.obs2, 2),
        cost_table=tuple(cost),
        x0_dist=product_dist(dec.x1_dist, dec.x2_dist),
        w_dists=tuple(product_dist(dec.w1_dists[t], dec.w2_dists[t]) for t in range(T)),
        v1_dists=dec.v1_dists,
        v2_dists=dec.v2_dists,
    )


# ---------------------------------------------------------------------------
# Marginal filters.
# ---------------------------------------------------------------------------


def initial_theta1_roots(dec: DecoupledModel) -> dict[int, tuple[Fraction, MarginalBelief]]:
    """Agent 1's time-0 observation values -> (probability, own-state filter)."""
    acc: dict[int, dict[int, Fraction]] = {}
    for x1, px in dec.x1_dist.items():
        for v1, pv in dec.v1_dists[0].items():
            y1 = dec.obs1[0][x1][v1]
            bucket = acc.setdefault(y1, {})
            bucket[x1] = bucket.get(x1, Fraction(0)) + px * pv
    out = {}
    for y1 in sorted(acc):
        total = sum(acc[y1].values())
        out[y1] = (
            total,
            MarginalBelief.from_weights(1, 0, {k: w / total for k, w in acc[y1].items()}),
        )
    return out


def initial_theta2_roots(
    dec: DecoupledModel, info: InfoStructure
) -> dict[tuple[int, ...], tuple[Fraction, MarginalBelief]]:
    """Time-0 accessible realizations -> (probability, filter over agent 2's
    (state, private values))."""
    acc: dict[tuple[int, ...], dict] = {}
    for x2, px in dec.x2_dist.items():
        for v2, pv in dec.v2_dists[0].items():
            y2 = dec.obs2[0][x2][v2]
            # agent-2 compositions never reference agent-1 data, so the
            # sentinel first argument is never read
            ctx = InitialContext(-1, y2)
            a2 = ctx.tuple_for(info.a2[0])
            ell = ctx.tuple_for(info.l2[0])
            bucket = acc.setdefault(a2, {})
            key = (x2, ell)
            bucket[key] = bucket.get(key, Fraction(0)) + px * pv
    out = {}
    for a2 in sorted(acc):
        total = sum(acc[a2].values())
        out[a2] = (
            total,
            MarginalBelief.from_weights(2, 0, {k: w / total for k, w in acc[a2].items()}),
        )
    return out


def theta1_step(
    dec: DecoupledModel, theta: MarginalBelief, u1: int
) -> dict[int, tuple[Fraction, MarginalBelief]]:
    """Predict through agent 1's own chain, then condition on each possible
    next observation: y1' -> (branch probability, posterior)."""
    t = theta.t
    acc: dict[int, dict[int, Fraction]] = {}
    for x1, p in theta.items():
        for w1, pw in dec.w1_dists[t].items():
            x1n = dec.f1[t][x1][u1][w1]
            for v1, pv in dec.v1_dists[t + 1].items():
                y1 = dec.obs1[t + 1][x1n][v1]
                bucket = acc.setdefault(y1, {})
                bucket[x1n] = bucket.get(x1n, Fraction(0)) + p * pw * pv
    out = {}
    for y1 in sorted(acc):
        total = sum(acc[y1].values())
        out[y1] = (
            total,
            MarginalBelief.from_weights(1, t + 1, {k: w / total for k, w in acc[y1].items()}),
        )
    return out


def theta2_step(
    dec: DecoupledModel, info: InfoStructure, theta: MarginalBelief, gamma2: Prescription
) -> dict[tuple[int, ...], tuple[Fraction, MarginalBelief]]:
    """Advance the shared filter on agent 2's chain one step under a
    prescription, branching on the newly shared values."""
    t = theta.t
    acc: dict[tuple[int, ...], dict] = {}
    for (x2, ell), p in theta.items():
        u2 = gamma2(ell)
        for w2, pw in dec.w2_dists[t].items():
            x2n = dec.f2[t][x2][u2][w2]
            for v2, pv in dec.v2_dists[t + 1].items():
                y2n = dec.obs2[t + 1][x2n][v2]
                ctx = StepContext(info, t, ell, -1, y2n, -1, u2)
                z2 = ctx.tuple_for(info.z2[t + 1])
                ell_next = ctx.tuple_for(info.l2[t + 1])
                bucket = acc.setdefault(z2, {})
                key = (x2n, ell_next)
                bucket[key] = bucket.get(key, Fraction(0)) + p * pw * pv
    out = {}
    for z2 in sorted(acc):
        total = sum(acc[z2].values())
        out[z2] = (
            total,
            MarginalBelief.from_weights(2, t + 1, {k: w / total for k, w in acc[z2].items()}),
        )
    return out


def update_theta(
    dec: DecoupledModel, info: InfoStructure, agent: int, theta: MarginalBelief, driver
) -> MarginalBelief:
    """One filter step.

    Agent 1's driver is (own action, next own observation), the classic
    predict-then-condition pair.  Agent 2's filter conditions on the shared
    data, so its driver is (the prescription in force, the newly shared
    values): the literal pair (own action, own next observation) is not
    measurable with respect to the shared information and cannot drive a
    filter defined on it.
    """
    if agent == 1:
        u1, y1_next = driver
        branches = theta1_step(dec, theta, u1)
        if y1_next not in branches:
            raise ZeroProbabilityObservation(
                f"observation {y1_next} impossible at t={theta.t} under the filter"
            )
        return branches[y1_next][1]
    gamma2, z2real = driver
    branches = theta2_step(dec, info, theta, gamma2)
    if z2real not in branches:
        raise ZeroProbabilityObservation(
            f"shared increment {z2real} impossible at t={theta.t} under the filter"
        )
    return branches[z2real][1]


# ---------------------------------------------------------------------------
# Factorization checks, via direct conditioning on the embedded model.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FactorizationCheck:
    joint: tuple
    product: tuple
    equal: bool


def _as_check(joint: dict, product: dict) -> FactorizationCheck:
    keys = sorted(set(joint) | set(product))
    jt = tuple((k, joint.get(k, Fraction(0))) for k in keys)
    pt = tuple((k, product.get(k, Fraction(0))) for k in keys)
    return FactorizationCheck(jt, pt, jt == pt)


def check_factorization_pi1(
    model: TeamModel,
    split: tuple[int, int],
    info: InfoStructure,
    joint: JointTable,
    strategy,
    t: int,
    m1real: tuple[int, ...],
) -> FactorizationCheck:
    """Does the conditional over (both states, private values) given agent
    1's memory factor into (own state | own memory) times (other state,
    private values | shared data)?  Exact equality on every support element;
    product-shaped but coupled models are expected to fail."""
    _, n2 = split
    cond = condition(joint, model, info, strategy, [(("M1", t), m1real)], [("X", t), ("L2", t)])
    lhs: dict = {}
    own_marg: dict = {}
    for (x, ell), p in cond.items():
        x1, x2 = divmod(x, n2)
        lhs[(x1, x2, ell)] = lhs.get((x1, x2, ell), Fraction(0)) + p
        own_marg[x1] = own_marg.get(x1, Fraction(0)) + p
    a2real = merge_realization(info.a2[t], {info.m1[t]: m1real})
    other = condition(joint, model, info, strategy, [(("A2", t), a2real)], [("X", t), ("L2", t)])
    other_marg: dict = {}
    for (x, ell), p in other.items():
        _, x2 = divmod(x, n2)
        other_marg[(x2, ell)] = other_marg.get((x2, ell), Fraction(0)) + p
    product = {
        (x1, x2, ell): p1 * p2
        for x1, p1 in own_marg.items()
        for (x2, ell), p2 in other_marg.items()
    }
    return _as_check(lhs, product)


def check_factorization_pi2(
    model: TeamModel,
    split: tuple[int, int],
    info: InfoStructure,
    joint: JointTable,
    strategy,
    t: int,
    a2real: tuple[int, ...],
) -> FactorizationCheck:
    """Given the shared data, is (own state, own filter) independent of
    (other state, private values)?  The filter realization per draw is the
    direct conditional of the own state on the realized memory."""
    _, n2 = split
    theta_cache: dict[tuple[int, ...], MarginalBelief] = {}

    lhs: dict = {}
    total = Fraction(0)
    for omega, p in joint.entries:
        traj = trajectory(model, info, strategy, omega)
        a2 = tuple(traj.value_of((v.kind, v.s)) for v in info.a2[t])
        if a2 != a2real:
            continue
        m1 = tuple(traj.value_of((v.kind, v.s)) for v in info.m1[t])
        theta1 = theta_cache.get(m1)
        if theta1 is None:
            cond = condition(joint, model, info, strategy, [(("M1", t), m1)], [("X", t)])
            weights: dict[int, Fraction] = {}
            for (x,), q in cond.items():
                x1, _ = divmod(x, n2)
                weights[x1] = weights.get(x1, Fraction(0)) + q
            theta1 = MarginalBelief.from_weights(1, t, weights)
            theta_cache[m1] = theta1
        x1, x2 = divmod(traj.xs[t], n2)
        ell = tuple(traj.value_of((v.kind, v.s)) for v in info.l2[t])
        key = (x1, x2, ell, theta1)
        lhs[key] = lhs.get(key, Fraction(0)) + p
        total += p
    if total == 0:
        raise ZeroProbabilityObservation(f"accessible realization {a2real} unreachable")
    lhs = {k: w / total for k, w in lhs.items()}

    own: dict = {}
    other: dict = {}
    for (x1, x2, ell, theta1), p in lhs.items():
        own[(x1, theta1)] = own.get((x1, theta1), Fraction(0)) + p
        other[(x2, ell)] = other.get((x2, ell), Fraction(0)) + p
    product = {
        (x1, x2, ell, theta1): p1 * p2
        for (x1, theta1), p1 in own.items()
        for (x2, ell), p2 in other.items()
    }

    def keyfun(k):
        x1, x2, ell, theta1 = k
        return (x1, x2, ell, theta1.sort_key())

    keys = sorted(set(lhs) | set(product), key=keyfun)
    jt = tuple((k, lhs.get(k, Fraction(0))) for k in keys)
    pt = tuple((k, product.get(k, Fraction(0))) for k in keys)
    return FactorizationCheck(jt, pt, jt == pt)


# ---------------------------------------------------------------------------
# Person-by-person solve on the factored keys.
# ---------------------------------------------------------------------------


@dataclass
class DecoupledPbpSolution:
    value: Fraction
    memo: dict
    perfect_obs_1: bool


def _require_identity_obs1(dec: DecoupledModel):
    for t in range(dec.horizon + 1):
        n1 = dec.states1[t].size
        if dec.observations1[t].size != n1:
            raise PerfectObsViolation(
                f"agent-1 observation space at t={t} has size "
                f"{dec.observations1[t].size}, state space {n1}"
            )
        for x1 in range(n1):
            for v1 in range(dec.noises1[t].size):
                if dec.obs1[t][x1][v1] != x1:
                    raise PerfectObsViolation(
                        f"agent-1 observation table at t={t} is not the identity"
                    )


def solve_decoupled_pbp(
    dec: DecoupledModel,
    info: InfoStructure,
    psi2,
    perfect_obs_1: bool = False,
    budget: int | None = None,
) -> DecoupledPbpSolution:
    """Agent 1's best response on the factored keys (own filter, shared
    filter, accessible realization).

    Branch probabilities multiply across the two filters: the next own
    observation depends only on agent 1's chain and the newly shared values
    only on agent 2's chain.  Matching the product-model solve exactly is
    the executable content of the reduction; the test suite asserts it.

    With perfect own observations the own filter is a point mass and the
    memo key drops to (own state, shared filter, accessible realization).
    """
    if perfect_obs_1:
        _require_identity_obs1(dec)
    cap = resolve_budget(budget)
    T = dec.horizon
    memo: dict = {}
    nodes = 0

    def key_of(theta1: MarginalBelief, theta2: MarginalBelief, a2real):
        if perfect_obs_1:
            (x1, _), = ((k, v) for k, v in theta1.items())
            return (theta1.t, x1, theta2, a2real)
        return (theta1, theta2, a2real)

    def value_of(theta1: MarginalBelief, theta2: MarginalBelief, a2real) -> Fraction:
        nonlocal nodes
        key = key_of(theta1, theta2, a2real)
        hit = memo.get(key)
        if hit is not None:
            return hit[0]
        nodes += 1
        if nodes > cap:
            raise ResourceLimitExceeded(f"more than {cap} value nodes", estimate=nodes)
        t = theta1.t
        g2 = psi2.prescription(t, a2real)
        best = None
        for u1 in range(dec.actions1[t].size):
            v = Fraction(0)
            for x1, p1 in theta1.items():
                for (x2, ell), p2 in theta2.items():
                    v += p1 * p2 * dec.cost(t, x1, x2, u1, g2(ell))
            if t < T:
                b1 = theta1_step(dec, theta1, u1)
                b2 = theta2_step(dec, info, theta2, g2)
                for _, (p1, th1n) in sorted(b1.items()):
                    for z2real, (p2, th2n) in sorted(b2.items()):
                        v += p1 * p2 * value_of(th1n, th2n, extend_a2(info, t, a2real, z2real))
            if best is None or v < best[0]:
                best = (v, u1)
        memo[key] = best
        return best[0]

    total = Fraction(0)
    roots1 = initial_theta1_roots(dec)
    roots2 = initial_theta2_roots(dec, info)
    for y1 in sorted(roots1):
        p1, th1 = roots1[y1]
        for a2real in sorted(roots2):
            p2, th2 = roots2[a2real]
            total += p1 * p2 * value_of(th1, th2, a2real)
    return DecoupledPbpSolution(total, memo, perfect_obs_1)


# ---------------------------------------------------------------------------
# JSON form.
# ---------------------------------------------------------------------------

_D_SPACE_KEYS = ("X1", "X2", "U1", "U2", "W1", "W2", "V1", "V2", "Y1", "Y2")


def decoupled_to_json(dec: DecoupledModel) -> dict:
    def dump_spaces(spaces):
        first = spaces[0]
        doc = {"label": first.label, "size": first.size}
        if first.element_labels is not None:
            doc["labels"] = list(first.element_labels)
        return doc

    def deep(node):
        if isinstance(node, tuple):
            return [deep(x) for x in node]
        return node

    return {
        "kind": "decoupled",
        "horizon": dec.horizon,
        "spaces": {
            "X1": dump_spaces(dec.states1),
            "X2": dump_spaces(dec.states2),
            "U1": dump_spaces(dec.actions1),
            "U2": dump_spaces(dec.actions2),
            "W1": dump_spaces(dec.disturbances1),
            "W2": dump_spaces(dec.disturbances2),
            "V1": dump_spaces(dec.noises1),
            "V2": dump_spaces(dec.noises2),
            "Y1": dump_spaces(dec.observations1),
            "Y2": dump_spaces(dec.observations2),
        },
        "f1": deep(dec.f1),
        "f2": deep(dec.f2),
        "obs1": deep(dec.obs1),
        "obs2": deep(dec.obs2),
        "cost": [
            [
                [
                    [[format_ratio(c) for c in u1row] for u1row in x2row]
                    for x2row in x1row
                ]
                for x1row in stage
            ]
            for stage in dec.cost_table
        ],
        "dists": {
            "X1_0": [format_ratio(w) for w in dec.x1_dist.weights],
            "X2_0": [format_ratio(w) for w in dec.x2_dist.weights],
            "W1": [[format_ratio(w) for w in d.weights] for d in dec.w1_dists],
            "W2": [[format_ratio(w) for w in d.weights] for d in dec.w2_dists],
            "V1": [[format_ratio(w) for w in d.weights] for d in dec.v1_dists],
            "V2": [[format_ratio(w) for w in d.weights] for d in dec.v2_dists],
        },
    }


def decoupled_from_json(doc: dict) -> DecoupledModel:
    T = doc["horizon"]

    def spaces(key, count):
        node = doc["spaces"][key]
        labels = tuple(node["labels"]) if "labels" in node else None
        return tuple(FiniteSpace(node.get("label", key), node["size"], labels) for _ in range(count))

    def deep(node):
        if isinstance(node, list):
            return tuple(deep(x) for x in node)
        return node

    dist = lambda node: Dist(tuple(parse_ratio(w) for w in node))
    return DecoupledModel(
        horizon=T,
        states1=spaces("X1", T + 1),
        states2=spaces("X2", T + 1),
        actions1=spaces("U1", T + 1),
        actions2=spaces("U2", T + 1),
        disturbances1=spaces("W1", T),
        disturbances2=spaces("W2", T),
        noises1=spaces("V1", T + 1),
        noises2=spaces("V2", T + 1),
        observations1=spaces("Y1", T + 1),
        observations2=spaces("Y2", T + 1),
        f1=deep(doc["f1"]),
        f2=deep(doc["f2"]),
        obs1=deep(doc["obs1"]),
        obs2=deep(doc["obs2"]),
        cost_table=tuple(
            tuple(
                tuple(
                    tuple(tuple(parse_ratio(c) for c in u1row) for u1row in x2row)
                    for x2row in x1row
                )
                for x1row in stage
            )
            for stage in doc["cost"]
        ),
        x1_dist=dist(doc["dists"]["X1_0"]),
        x2_dist=dist(doc["dists"]["X2_0"]),
        w1_dists=tuple(dist(d) for d in doc["dists"]["W1"]),
        w2_dists=tuple(dist(d) for d in doc["dists"]["W2"]),
        v1_dists=tuple(dist(d) for d in doc["dists"]["V1"]),
        v2_dists=tuple(dist(d) for d in doc["dists"]["V2"]),
    )
