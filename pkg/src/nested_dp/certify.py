"""Certification sweeps: dynamic programming vs brute force, recursive
beliefs vs direct conditioning, belief-weighted costs vs conditional
expectations, lattice solves vs exact solves.

Each function returns a plain report dict with a boolean "ok" plus enough
counters to show the sweep actually covered something.  The test suite
asserts on these reports; the functions themselves never assert, so scripts
can run them on new instances and inspect failures.

Coverage notes for the history sweeps:

  * The agent-1 belief sweep ranges over every enumerable agent-2 strategy
    table and, for each, every memory realization of agent 1 that has
    positive probability for some agent-1 behavior (the realization itself
    pins agent 1's past actions).  Any (team strategy, reachable history)
    pair from the joint enumeration projects into this set, so certifying
    it certifies "every strategy, every positive-probability history".

  * The shared-belief sweep walks the full prescription-decorated tree:
    every prescription pair at every node, every positive-probability
    shared increment.  A (prescription strategy, history) pair is exactly a
    path with decorations, so the tree covers all of them.
"""

from __future__ import annotations

from fractions import Fraction

from . import oracle as orc
from .beliefs import (
    Belief1,
    Belief2,
    Prescription,
    belief1_step,
    belief2_step,
    expected_cost1,
    expected_cost2,
    initial_belief1_roots,
    initial_belief2_roots,
    update_belief1,
)
from .info import InfoStructure, VarRef, enumerate_private, merge_realization
from .model import TeamModel
from .solver import (
    alpha_bound,
    all_agent1_prescriptions,
    all_agent2_prescriptions,
    extend_a2,
    extract_pbp_strategy,
    make_alpha_inputs,
    solve_exact,
    solve_pbp_approx,
    solve_pbp_exact,
)

__all__ = [
    "certify_dp_optimality",
    "certify_belief_and_cost_identities",
    "certify_pbp_against_enumeration",
    "convergence_report",
]


def certify_dp_optimality(model: TeamModel, info: InfoStructure, budget: int | None = None) -> dict:
    """Solve by prescription DP and by exhaustive strategy search; exact
    value equality is the pass condition."""
    solution = solve_exact(model, info, budget)
    joint = orc.build_joint(model, budget)
    brute = orc.exhaustive_min(model, info, joint, budget)
    return {
        "ok": solution.value == brute.value,
        "dp_value": solution.value,
        "brute_value": brute.value,
        "strategies_tested": brute.strategies_tested,
        "dp_nodes": len(solution.memo),
    }


# ---------------------------------------------------------------------------
# Belief and cost identities.
# ---------------------------------------------------------------------------


class _Agent2Tables:
    """Strategy-like whose agent-2 side follows explicit stage tables and
    whose agent-1 side is irrelevant (used only where agent 1's actions are
    pinned elsewhere or filtered out)."""

    def __init__(self, info: InfoStructure, tables):
        self.info = info
        self.tables = tuple(dict(tbl) for tbl in tables)

    def fresh_state(self):
        return None

    def act(self, state, t, values):
        m2 = tuple(values[v] for v in self.info.m2[t])
        return 0, self.tables[t][m2]


def _extract(info: InfoStructure, m1real, t, vars):
    return merge_realization(vars, {info.m1[t]: m1real})


def _gamma2_from_tables(
    model: TeamModel, info: InfoStructure, tables, s: int, a2real
) -> Prescription:
    """The prescription the table strategy induces at (s, a2real): private
    realization -> action, on the realizations the tables cover."""
    mapping = {}
    table = dict(tables[s]) if not isinstance(tables[s], dict) else tables[s]
    for ell in enumerate_private(info, model, s):
        m2real = merge_realization(info.m2[s], {info.l2[s]: ell, info.a2[s]: a2real})
        if m2real in table:
            mapping[ell] = table[m2real]
    return Prescription(2, s, "private", tuple(sorted(mapping.items())))


def _m1_histories(model: TeamModel, info: InfoStructure, joint, tables):
    """Per time t, every agent-1 memory realization with positive
    probability when agent 1's actions range free and agent 2 follows the
    tables."""
    T = model.horizon
    contexts = []
    for omega, _ in joint.entries:
        values = {
            VarRef(0, "Y1"): model.h(1, 0, omega[0], omega[2][0]),
            VarRef(0, "Y2"): model.h(2, 0, omega[0], omega[3][0]),
        }
        contexts.append((omega, values, omega[0]))
    table_maps = tuple(dict(tbl) for tbl in tables)
    per_t = []
    for t in range(T + 1):
        per_t.append(sorted({tuple(values[v] for v in info.m1[t]) for _, values, _ in contexts}))
        if t == T:
            break
        new_contexts = []
        for omega, values, x in contexts:
            m2 = tuple(values[v] for v in info.m2[t])
            u2 = table_maps[t][m2]
            for u1 in range(model.action_space(1, t).size):
                x_next = model.f(t, x, u1, u2, omega[1][t])
                nv = dict(values)
                nv[VarRef(t, "U1")] = u1
                nv[VarRef(t, "U2")] = u2
                nv[VarRef(t + 1, "Y1")] = model.h(1, t + 1, x_next, omega[2][t + 1])
                nv[VarRef(t + 1, "Y2")] = model.h(2, t + 1, x_next, omega[3][t + 1])
                new_contexts.append((omega, nv, x_next))
        contexts = new_contexts
    return per_t


def _chain_belief1(model, info, tables, t, m1real) -> tuple[Belief1, list[Prescription]]:
    """Recompute agent 1's belief at (t, m1real) by chaining the update from
    time 0, reading actions and new information off the realization."""
    z1_0 = _extract(info, m1real, t, info.z1[0])
    roots = initial_belief1_roots(model, info)
    belief = roots[z1_0][1]
    gammas = []
    for s in range(t):
        a2real_s = _extract(info, m1real, t, info.a2[s])
        gamma = _gamma2_from_tables(model, info, tables, s, a2real_s)
        gammas.append(gamma)
        (u1_s,) = _extract(info, m1real, t, (VarRef(s, "U1"),))
        z1_next = _extract(info, m1real, t, info.z1[s + 1])
        belief = update_belief1(model, info, belief, u1_s, gamma, z1_next)
    a2real_t = _extract(info, m1real, t, info.a2[t])
    gammas.append(_gamma2_from_tables(model, info, tables, t, a2real_t))
    return belief, gammas


def certify_belief_and_cost_identities(
    model: TeamModel, info: InfoStructure, budget: int | None = None
) -> dict:
    """Certify, with exact rational equality:

      agent-1 beliefs: recursive chain == direct conditioning, for every
        enumerable agent-2 table and every positive-probability memory;
      agent-1 costs: belief-weighted stage cost == conditional expectation;
      shared beliefs: recursive chain == direct conditioning over the full
        prescription-decorated tree, including the layer-consistency
        (marginal and mixture) identities;
      shared costs: prescription-pair stage cost == conditional expectation.
    """
    joint = orc.build_joint(model, budget)
    T = model.horizon
    report = {
        "ok": True,
        "belief1_checks": 0,
        "cost1_checks": 0,
        "belief2_checks": 0,
        "cost2_checks": 0,
        "marginal_checks": 0,
        "failures": [],
    }

    def fail(kind, detail):
        report["ok"] = False
        if len(report["failures"]) < 20:
            report["failures"].append((kind, detail))

    # -- agent-1 side -----------------------------------------------------
    seen: set = set()
    for tables in orc.enumerate_agent2_strategies(model, info, joint):
        strategy2 = _Agent2Tables(info, tables)
        histories = _m1_histories(model, info, joint, tables)
        for t in range(T + 1):
            for m1real in histories[t]:
                chain, gammas = _chain_belief1(model, info, tables, t, m1real)
                key = (t, m1real, tuple(g.table for g in gammas))
                if key in seen:
                    continue
                seen.add(key)
                cond = orc.condition_on_memory1(joint, model, info, strategy2, t, m1real)
                report["belief1_checks"] += 1
                if cond != {k: w for k, w in chain.items()}:
                    fail("belief1", (t, m1real))
                gamma_t = gammas[t]
                for u1 in range(model.action_space(1, t).size):
                    lhs = expected_cost1(model, chain, u1, gamma_t)
                    rhs = sum(
                        (p * model.cost(t, x, u1, gamma_t(ell)) for (x, ell), p in cond.items()),
                        Fraction(0),
                    )
                    report["cost1_checks"] += 1
                    if lhs != rhs:
                        fail("cost1", (t, m1real, u1))

    # -- shared side ------------------------------------------------------
    b2_roots = initial_belief2_roots(model, info)

    def certify_node(b2: Belief2, a2real, presc: dict):
        """Check the node's shared belief against direct conditioning and
        return the consistent draws annotated with their oracle-side inner
        beliefs, so the cost checks can reuse them."""
        t = b2.t
        runner = _PrescriptionPathRunner(model, info, presc)
        records = _consistent_draws(model, info, joint, runner, t, a2real)
        strategy2 = _RunnerAgent2(runner)
        annotated = []
        oracle_triples: dict = {}
        total = Fraction(0)
        cond_cache: dict = {}
        for omega, p, traj in records:
            m1real = tuple(traj.value_of((v.kind, v.s)) for v in info.m1[t])
            b1 = cond_cache.get(m1real)
            if b1 is None:
                cond = orc.condition_on_memory1(joint, model, info, strategy2, t, m1real)
                b1 = Belief1.from_weights(t, dict(cond))
                cond_cache[m1real] = b1
            ell = tuple(traj.value_of((v.kind, v.s)) for v in info.l2[t])
            annotated.append((p, traj.xs[t], ell, b1))
            key = (traj.xs[t], ell, b1)
            oracle_triples[key] = oracle_triples.get(key, Fraction(0)) + p
            total += p
        oracle_triples = {k: w / total for k, w in oracle_triples.items()}
        report["belief2_checks"] += 1
        if oracle_triples != {k: w for k, w in b2.items()}:
            fail("belief2", (t, a2real))
        marg = {}
        for (x, ell, _), p in oracle_triples.items():
            marg[(x, ell)] = marg.get((x, ell), Fraction(0)) + p
        report["marginal_checks"] += 1
        if b2.marginal_state_private() != marg or b2.mixture_state_private() != marg:
            fail("belief2-marginal", (t, a2real))
        return annotated, total

    def walk(b2: Belief2, a2real, presc: dict):
        t = b2.t
        annotated, total = certify_node(b2, a2real, presc)
        points = b2.belief1_support()
        l2_reals = enumerate_private(info, model, t)
        n_u1 = model.action_space(1, t).size
        n_u2 = model.action_space(2, t).size
        for g1 in all_agent1_prescriptions(t, points, n_u1):
            for g2 in all_agent2_prescriptions(t, l2_reals, n_u2):
                lhs = expected_cost2(model, b2, g1, g2)
                rhs = Fraction(0)
                for p, x_t, ell, b1 in annotated:
                    rhs += p * model.cost(t, x_t, g1(b1), g2(ell))
                report["cost2_checks"] += 1
                if lhs != rhs / total:
                    fail("cost2", (t, a2real))
                if t < T:
                    decorated = dict(presc)
                    decorated[(t, a2real)] = (g1, g2)
                    for z2real, (_, nxt) in sorted(belief2_step(model, info, b2, g1, g2).items()):
                        walk(nxt, extend_a2(info, t, a2real, z2real), decorated)

    for a2real in sorted(b2_roots):
        _, b2 = b2_roots[a2real]
        walk(b2, a2real, {})
    return report


def _consistent_draws(model, info, joint, runner, t, a2real):
    out = []
    for omega, p in joint.entries:
        traj = orc.trajectory(model, info, runner, omega)
        if tuple(traj.value_of((v.kind, v.s)) for v in info.a2[t]) == a2real:
            out.append((omega, p, traj))
    return out


class _PrescriptionPathRunner:
    """Execute a partial prescription decoration: at decorated (t,
    accessible) nodes both agents follow the recorded pair; elsewhere both
    default to action 0 (those draws are filtered out by the conditioning
    that uses this runner)."""

    def __init__(self, model, info, presc: dict):
        self.model = model
        self.info = info
        self.presc = presc
        self._b1_roots = initial_belief1_roots(model, info)
        self._cache: dict = {}

    def fresh_state(self):
        return {}

    def act(self, st, t, values):
        info = self.info
        if t == 0:
            z1 = tuple(values[v] for v in info.z1[0])
            st["b1"] = self._b1_roots[z1][1]
            st["a2"] = merge_realization(info.a2[0], {info.z1[0]: z1})
        else:
            z1 = tuple(values[v] for v in info.z1[t])
            u1 = values[VarRef(t - 1, "U1")]
            prev = st.get("g2")
            if prev is None:
                return 0, 0
            key = (st["b1"], u1, prev, z1)
            nxt = self._cache.get(key)
            if nxt is None:
                nxt = update_belief1(self.model, info, st["b1"], u1, prev, z1)
                self._cache[key] = nxt
            st["b1"] = nxt
            st["a2"] = extend_a2(info, t - 1, st["a2"], tuple(values[v] for v in info.z2[t]))
        pair = self.presc.get((t, st["a2"]))
        if pair is None:
            st["g2"] = None
            return 0, 0
        g1, g2 = pair
        st["g2"] = g2
        ell = tuple(values[v] for v in info.l2[t])
        return g1(st["b1"]), g2(ell)


class _RunnerAgent2:
    """Expose only the agent-2 half of a runner (agent 1 pinned elsewhere)."""

    def __init__(self, runner):
        self.runner = runner

    def fresh_state(self):
        return self.runner.fresh_state()

    def act(self, state, t, values):
        return self.runner.act(state, t, values)


def certify_pbp_against_enumeration(
    model: TeamModel, info: InfoStructure, psi2, budget: int | None = None
) -> dict:
    """solve_pbp_exact against literal enumeration of every agent-1 strategy
    with agent 2 fixed to the prescription family."""
    pbp = solve_pbp_exact(model, info, psi2, budget)
    joint = orc.build_joint(model, budget)
    agent2 = _Psi2Strategy(model, info, psi2)
    brute_value, _ = orc.min_over_agent1(model, info, joint, agent2, budget)
    extracted = extract_pbp_strategy(pbp)
    replay = orc.evaluate_strategy(joint, model, info, extracted)
    return {
        "ok": pbp.value == brute_value and replay == pbp.value,
        "pbp_value": pbp.value,
        "brute_value": brute_value,
        "replay_value": replay,
    }


class _Psi2Strategy:
    """Agent 2 follows a prescription family; agent 1 side unused."""

    def __init__(self, model, info, psi2):
        self.model = model
        self.info = info
        self.psi2 = psi2

    def fresh_state(self):
        return None

    def act(self, state, t, values):
        a2real = tuple(values[v] for v in self.info.a2[t])
        ell = tuple(values[v] for v in self.info.l2[t])
        return 0, self.psi2.prescription(t, a2real)(ell)


def convergence_report(
    model: TeamModel,
    info: InfoStructure,
    psi2,
    resolutions: tuple[int, ...] = (1, 2, 4, 8, 16),
    budget: int | None = None,
) -> dict:
    """Sweep lattice resolutions for a fixed agent-2 family: true performance
    of each extracted lattice policy versus the exact best response, the
    first resolution whose lattice holds every reachable exact belief, and
    the loss-bound sequence at each resolution."""
    exact = solve_pbp_exact(model, info, psi2, budget)
    joint = orc.build_joint(model, budget)
    exact_replay = orc.evaluate_strategy(joint, model, info, extract_pbp_strategy(exact))
    reachable = exact.reachable_beliefs()

    def on_lattice(n: int) -> bool:
        return all((coord * n).denominator == 1 for _, vec in reachable for coord in vec)

    coverage_n = next((n for n in resolutions if on_lattice(n)), None)
    gaps, dp_values, alpha0s = {}, {}, {}
    for n in resolutions:
        approx = solve_pbp_approx(model, info, psi2, n, budget)
        performance = orc.evaluate_strategy(joint, model, info, extract_pbp_strategy(approx))
        gaps[n] = performance - exact.value
        dp_values[n] = approx.value
        alpha0s[n] = alpha_bound(make_alpha_inputs(approx), model.horizon)[0]
    ordered = [gaps[n] for n in resolutions]
    ok = (
        exact_replay == exact.value
        and all(g >= 0 for g in ordered)
        and all(a >= b for a, b in zip(ordered, ordered[1:]))
        and coverage_n is not None
        and gaps[coverage_n] == 0
        and all(gaps[n] <= alpha0s[n] for n in resolutions)
    )
    return {
        "ok": ok,
        "exact_value": exact.value,
        "gaps": gaps,
        "dp_values": dp_values,
        "alpha0": alpha0s,
        "coverage_n": coverage_n,
        "reachable_beliefs": len(reachable),
    }
