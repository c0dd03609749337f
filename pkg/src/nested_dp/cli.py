"""Command-line interface.

Every subcommand prints one machine-readable JSON document on stdout;
diagnostics go to stderr.  Exit codes: 0 success, 1 domain errors (missing
or invalid files, impossible conditioning, blown budgets), 2 usage errors.

    validate FILE                  report model invariant violations
    solve FILE                     joint prescription optimum
    pbp FILE --psi2 PSI2           agent-1 best response, exact beliefs
    pbp-approx FILE --psi2 --n N   same on the resolution-N lattice
    alpha FILE --psi2 --n N        loss-bound sequence for the lattice solve
    oracle FILE                    brute-force strategy minimum
    simulate FILE --seed --episodes   Monte Carlo rollout
    lattice --m M --n N            emit the lattice point list
    quantize --vector V --n N      nearest lattice point, distance, bound
    check-factorization FILE       belief factorization report (decoupled)

The NESTED_DP_BUDGET environment variable overrides default resource caps;
explicit --budget flags override both.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import decoupled as dec_mod
from . import lattice as lat
from . import oracle as oracle_mod
from . import sim as sim_mod
from . import solver as solver_mod
from .errors import NestedDPError
from .info import build_delayed_structure, info_from_json
from .model import (
    format_ratio,
    load_model_file,
    parse_ratio,
    validate_model,
)

__all__ = ["main", "cli_main"]


def _emit(doc: dict) -> None:
    sys.stdout.write(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")


def _load(path: str, delay_override: int | None):
    model, doc = load_model_file(path)
    if delay_override is not None:
        return model, doc, build_delayed_structure(model, delay_override)
    if "info" not in doc:
        raise NestedDPError(f"model file {path} has no 'info' field; pass --delay")
    return model, doc, info_from_json(model, doc["info"])


def _load_psi2(path: str, model, info):
    with open(path) as fh:
        return solver_mod.psi2_from_json(json.load(fh), model, info)


def _cmd_validate(args) -> int:
    model, _ = load_model_file(args.model)  # no info structure needed to validate
    violations = validate_model(model)
    _emit({"violations": [{"path": v.path, "message": v.message} for v in violations]})
    return 0


def _cmd_solve(args) -> int:
    if args.decoupled:
        return _solve_decoupled(args)
    model, _, info = _load(args.model, args.delay)
    solution = solver_mod.solve_exact(model, info, args.budget)
    doc = {
        "value": format_ratio(solution.value),
        "roots": [
            {"accessible": list(a2), "probability": format_ratio(p), "value": format_ratio(solution.value_at(b2))}
            for a2, (p, b2) in sorted(solution.roots.items())
        ],
        "nodes": len(solution.memo),
        "pairs_enumerated": solution.pairs_enumerated,
    }
    if args.policy_out:
        policy_doc = {
            "value": format_ratio(solution.value),
            "stages": [
                {
                    "belief": b2.to_json(),
                    "value": format_ratio(v),
                    "gamma1": g1.to_json(),
                    "gamma2": g2.to_json(),
                }
                for b2, (v, g1, g2) in solution.memo.items()
            ],
        }
        with open(args.policy_out, "w") as fh:
            json.dump(policy_doc, fh, sort_keys=True)
    _emit(doc)
    return 0


def _solve_decoupled(args) -> int:
    """Team optimum on the product embedding, then the same value recovered
    through the reduced-key solver with the extracted optimal prescription
    family: the executable content of the decoupled reduction."""
    with open(args.model) as fh:
        doc = json.load(fh)
    if doc.get("kind") != "decoupled":
        raise NestedDPError("--decoupled expects a decoupled model file")
    dec = dec_mod.decoupled_from_json(doc)
    model = dec_mod.embed(dec)
    if args.delay is not None:
        info = build_delayed_structure(model, args.delay)
    else:
        info = info_from_json(model, doc["info"])
    solution = solver_mod.solve_exact(model, info, args.budget)
    psi2 = solver_mod.optimal_psi2(model, info, solution)
    reduced = dec_mod.solve_decoupled_pbp(
        dec, info, psi2, perfect_obs_1=args.perfect_obs_1, budget=args.budget
    )
    _emit(
        {
            "value": format_ratio(solution.value),
            "reduced_value": format_ratio(reduced.value),
            "match": solution.value == reduced.value,
            "perfect_obs_1": args.perfect_obs_1,
            "reduced_nodes": len(reduced.memo),
        }
    )
    return 0


def _write_pbp_policy(pbp, path: str) -> None:
    doc = {
        "value": format_ratio(pbp.value),
        "resolution": pbp.resolution,
        "entries": [
            {
                "belief": b1.to_json(),
                "accessible": list(a2),
                "value": format_ratio(v),
                "action": u1,
            }
            for (b1, a2), (v, u1) in pbp.memo.items()
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)


def _cmd_pbp(args) -> int:
    model, _, info = _load(args.model, args.delay)
    psi2 = _load_psi2(args.psi2, model, info)
    pbp = solver_mod.solve_pbp_exact(model, info, psi2, args.budget)
    if args.policy_out:
        _write_pbp_policy(pbp, args.policy_out)
    _emit(
        {
            "value": format_ratio(pbp.value),
            "nodes": len(pbp.memo),
            "roots": [
                {"new_info": list(z1), "probability": format_ratio(p)}
                for z1, (p, _, _) in sorted(pbp.roots.items())
            ],
        }
    )
    return 0


def _cmd_pbp_approx(args) -> int:
    model, _, info = _load(args.model, args.delay)
    psi2 = _load_psi2(args.psi2, model, info)
    pbp = solver_mod.solve_pbp_approx(model, info, psi2, args.n, args.budget)
    if args.policy_out:
        _write_pbp_policy(pbp, args.policy_out)
    _emit(
        {
            "value": format_ratio(pbp.value),
            "n": args.n,
            "nodes": len(pbp.memo),
            "lattice_sizes": {str(t): len(l.points) for t, l in sorted(pbp.lattices.items())},
        }
    )
    return 0


def _cmd_alpha(args) -> int:
    model, _, info = _load(args.model, args.delay)
    psi2 = _load_psi2(args.psi2, model, info)
    pbp = solver_mod.solve_pbp_approx(model, info, psi2, args.n, args.budget)
    jl = parse_ratio(args.jl) if args.jl else None
    inputs = solver_mod.make_alpha_inputs(pbp, jl)
    alphas = solver_mod.alpha_bound(inputs, model.horizon)
    _emit(
        {
            "n": args.n,
            "epsilon": format_ratio(inputs.epsilon),
            "cost_sup": format_ratio(inputs.cost_sup),
            "lipschitz": format_ratio(inputs.lipschitz),
            "alphas": [format_ratio(a) for a in alphas],
        }
    )
    return 0


def _cmd_oracle(args) -> int:
    model, _, info = _load(args.model, args.delay)
    joint = oracle_mod.build_joint(model, args.budget)
    result = oracle_mod.exhaustive_min(model, info, joint, args.max_strategies)
    doc = {
        "value": format_ratio(result.value),
        "strategies_tested": result.strategies_tested,
        "strategy": result.strategy.to_json(),
    }
    if args.with_solve:
        solution = solver_mod.solve_exact(model, info, args.budget)
        doc["solve_value"] = format_ratio(solution.value)
        doc["gap"] = format_ratio(solution.value - result.value)
    _emit(doc)
    return 0


def _cmd_simulate(args) -> int:
    model, _, info = _load(args.model, args.delay)
    exact = None
    if args.strategy:
        with open(args.strategy) as fh:
            strategy = oracle_mod.ExplicitStrategy.from_json(info, json.load(fh))
    else:
        solution = solver_mod.solve_exact(model, info, args.budget)
        strategy = solver_mod.extract_control_strategy(solution)
        exact = solution.value
    report = sim_mod.rollout(
        model, info, strategy, sim_mod.RolloutConfig(args.seed, args.episodes), exact
    )
    _emit(report.to_json())
    return 0


def _cmd_lattice(args) -> int:
    built = lat.build_lattice(args.m, args.n, args.budget)
    _emit(
        {
            "m": args.m,
            "n": args.n,
            "count": len(built.points),
            "points": [[format_ratio(c) for c in p] for p in built.points],
        }
    )
    return 0


def _cmd_quantize(args) -> int:
    vector = tuple(parse_ratio(part) for part in args.vector.split(","))
    built = lat.build_lattice(len(vector), args.n, args.budget)
    q = lat.quantize(built, vector)
    _emit(
        {
            "point": [format_ratio(c) for c in q.point()],
            "index": q.index,
            "distance": format_ratio(lat.tv_distance(vector, q.point())),
            "bound": format_ratio(lat.error_bound(len(vector), args.n)),
        }
    )
    return 0


def _cmd_check_factorization(args) -> int:
    with open(args.model) as fh:
        doc = json.load(fh)
    if doc.get("kind") != "decoupled":
        raise NestedDPError("check-factorization expects a decoupled model file")
    dec = dec_mod.decoupled_from_json(doc)
    model = dec_mod.embed(dec)
    if args.delay is not None:
        info = build_delayed_structure(model, args.delay)
    else:
        info = info_from_json(model, doc["info"])
    split = (dec.states1[0].size, dec.states2[0].size)
    joint = oracle_mod.build_joint(model, args.budget)
    from .generators import HashedTeamStrategy

    strategy = HashedTeamStrategy(model, info, args.strategy_seed)
    checks = []
    for t in range(model.horizon + 1):
        m1_seen, a2_seen = set(), set()
        for omega, _ in joint.entries:
            traj = oracle_mod.trajectory(model, info, strategy, omega)
            m1_seen.add(tuple(traj.value_of((v.kind, v.s)) for v in info.m1[t]))
            a2_seen.add(tuple(traj.value_of((v.kind, v.s)) for v in info.a2[t]))
        for m1real in sorted(m1_seen):
            res = dec_mod.check_factorization_pi1(model, split, info, joint, strategy, t, m1real)
            checks.append({"kind": "state-and-private", "t": t, "history": list(m1real), "equal": res.equal})
        for a2real in sorted(a2_seen):
            res = dec_mod.check_factorization_pi2(model, split, info, joint, strategy, t, a2real)
            checks.append({"kind": "with-filter", "t": t, "history": list(a2real), "equal": res.equal})
    _emit({"checks": checks, "all_equal": all(c["equal"] for c in checks)})
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nested-dp",
        description="Exact solvers for two-agent teams with one-directional delayed sharing",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model_cmd(name, fn, **extra):
        p = sub.add_parser(name)
        p.add_argument("model", help="model JSON file")
        p.add_argument("--delay", type=int, default=None, help="override the sharing delay")
        p.add_argument("--budget", type=int, default=None, help="resource cap override")
        p.set_defaults(fn=fn)
        return p

    add_model_cmd("validate", _cmd_validate)
    p = add_model_cmd("solve", _cmd_solve)
    p.add_argument("--policy-out", default=None, help="write the solved policy as JSON")
    p.add_argument("--decoupled", action="store_true", help="route a decoupled file through the reduced solver")
    p.add_argument("--perfect-obs-1", action="store_true", help="use the perfect-own-observation reduction")
    p = add_model_cmd("pbp", _cmd_pbp)
    p.add_argument("--psi2", required=True, help="agent-2 prescription family JSON")
    p.add_argument("--policy-out", default=None)
    p = add_model_cmd("pbp-approx", _cmd_pbp_approx)
    p.add_argument("--psi2", required=True)
    p.add_argument("--n", type=int, required=True, help="lattice resolution")
    p.add_argument("--policy-out", default=None)
    p = add_model_cmd("alpha", _cmd_alpha)
    p.add_argument("--psi2", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--jl", default=None, help="override the Lipschitz bound (p/q)")
    p = add_model_cmd("oracle", _cmd_oracle)
    p.add_argument("--max-strategies", type=int, default=None)
    p.add_argument("--with-solve", action="store_true")
    p = add_model_cmd("simulate", _cmd_simulate)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--strategy", default=None, help="explicit strategy JSON file")
    p = sub.add_parser("lattice")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--budget", type=int, default=None)
    p.set_defaults(fn=_cmd_lattice)
    p = sub.add_parser("quantize")
    p.add_argument("--vector", required=True, help="comma-separated p/q coordinates")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--budget", type=int, default=None)
    p.set_defaults(fn=_cmd_quantize)
    p = add_model_cmd("check-factorization", _cmd_check_factorization)
    p.add_argument("--strategy-seed", type=int, default=0)
    return parser


def cli_main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (NestedDPError, OSError, ValueError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
