"""Command-line front end: ``deladas check|solve|verify|run|diff``.

Exit codes: 0 success / SAT / valid, 1 UNSAT or constraint violation,
2 usage or parse error, 3 internal error or exhausted search budget.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from deladas.adme import Phase, dumps_status, run
from deladas.ddd import DddError, diff, dumps_ddd, dumps_plan, parse_ddd_document, validate_configuration
from deladas.fabric import ScenarioError, load_scenario
from deladas.model import Goal, Severity
from deladas.parser import ParseError, load_goal, validate_goal
from deladas.solver import SolveOptions, SolveStatus, check_configuration, solve

EXIT_OK = 0
EXIT_UNSAT = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3


class _Usage(Exception):
    """Bad input the user can fix; reported on stderr with exit code 2."""


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load_valid_goal(path: str) -> Goal:
    try:
        goal = load_goal(path)
    except FileNotFoundError:
        raise _Usage(f"{path}: file not found") from None
    except ParseError as exc:
        raise _Usage("\n".join(f"{path}:{d}" for d in exc.diagnostics)) from None
    diags = validate_goal(goal)
    errors = [d for d in diags if d.severity is Severity.ERROR]
    for d in diags:
        if d.severity is Severity.WARNING:
            _err(f"{path}:{d}")
    if errors:
        raise _Usage("\n".join(f"{path}:{d}" for d in errors))
    return goal


def _opts(args) -> SolveOptions:
    return SolveOptions(
        max_solutions=getattr(args, "max_solutions", 1),
        max_instances_per_type=args.max_instances,
        seed=args.seed,
        node_budget=args.node_budget,
    )


def cmd_check(args) -> int:
    goal = _load_valid_goal(args.goal)
    print(f"goal {goal.name}: {len(goal.constraints)} clauses, {len(goal.hosts)} hosts")
    for ctype in goal.component_types:
        ports = ", ".join(f"{p.name}:{p.direction.value}" for p in ctype.ports)
        print(f"  {ctype.name} {{{ports}}}")
    return EXIT_OK


def cmd_solve(args) -> int:
    goal = _load_valid_goal(args.goal)
    result = solve(goal, _opts(args))
    print(f"{result.status.value} solutions={len(result.solutions)} nodes={result.nodes_explored}")
    if result.solutions:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for k, config in enumerate(result.solutions, start=1):
            path = out / f"solution-{k}.ddd.json"
            path.write_text(dumps_ddd(config, goal), encoding="utf-8")
            print(f"wrote {path}")
    if result.status is SolveStatus.SAT:
        return EXIT_OK
    if result.status is SolveStatus.UNSAT:
        return EXIT_UNSAT
    return EXIT_INTERNAL


def _load_ddd(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise _Usage(f"{path}: file not found") from None
    try:
        return parse_ddd_document(text)[1]
    except DddError as exc:
        raise _Usage(f"{path}: {exc.diagnostic}") from None


def cmd_verify(args) -> int:
    goal = _load_valid_goal(args.goal)
    config = _load_ddd(args.ddd)
    problems = validate_configuration(config, goal)
    errors = [d for d in problems if d.severity is Severity.ERROR]
    for d in problems:
        _err(f"{args.ddd}: {d}")
    if errors:
        return EXIT_USAGE
    violations = check_configuration(config, goal)
    if not violations:
        print("valid")
        return EXIT_OK
    for v in violations:
        where = f" (line {v.line})" if v.line else ""
        print(f"violated clause {v.index}{where}")
    return EXIT_UNSAT


def cmd_run(args) -> int:
    goal = _load_valid_goal(args.goal)
    scenario = []
    if args.scenario:
        try:
            scenario = load_scenario(args.scenario)
        except FileNotFoundError:
            raise _Usage(f"{args.scenario}: file not found") from None
        except ScenarioError as exc:
            raise _Usage(f"{args.scenario}: {exc}") from None
    reloads = {}
    for spec in args.reload or ():
        tick, sep, path = spec.partition(":")
        if not sep or not tick.isdigit():
            raise _Usage(f"--reload expects TICK:FILE, got {spec!r}")
        reloads[int(tick)] = _load_valid_goal(path)

    result = run(goal, scenario, args.ticks, _opts(args), reloads=reloads)
    text = "\n".join(result.log) + "\n"
    if args.log:
        Path(args.log).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "final.ddd.json").write_text(dumps_ddd(result.final_configuration(), result.goal), encoding="utf-8")
    if args.status:
        Path(args.status).write_text(dumps_status(result.status), encoding="utf-8")
    phase = result.status.phase
    print(f"final phase {phase.value} after {len(result.phases) - 1} ticks, "
          f"{result.status.recoveries} recoveries, {result.status.solver_calls} solver calls")
    if phase in (Phase.STEADY, Phase.STOPPED):
        return EXIT_OK
    if phase is Phase.STALLED_UNSAT:
        return EXIT_UNSAT
    return EXIT_INTERNAL


def cmd_diff(args) -> int:
    source = _load_ddd(args.source)
    target = _load_ddd(args.target)
    plan = diff(source, target)
    text = dumps_plan(plan)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="seed for host ordering (0 = lexicographic)")
    p.add_argument("--max-instances", type=int, default=None, help="instances per component type (default: host count)")
    p.add_argument("--node-budget", type=int, default=10**7)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deladas", description="Constraint-based deployment and autonomic management.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and validate a goal, print inferred ports")
    p.add_argument("goal")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("solve", help="find configurations satisfying a goal")
    p.add_argument("goal")
    p.add_argument("--max-solutions", type=int, default=1)
    p.add_argument("--out", default=".", help="directory for solution-<k>.ddd.json")
    _solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check a DDD against a goal")
    p.add_argument("goal")
    p.add_argument("ddd")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("run", help="deploy a goal and replay a failure scenario")
    p.add_argument("goal")
    p.add_argument("--scenario")
    p.add_argument("--ticks", type=int, default=10)
    p.add_argument("--log", help="write the run log here instead of stdout")
    p.add_argument("--out", default=".", help="directory for final.ddd.json")
    p.add_argument("--status", help="write a JSON status dump here")
    p.add_argument("--reload", action="append", metavar="TICK:FILE", help="replace the goal at a tick")
    _solver_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("diff", help="reconfiguration plan between two DDDs")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--out", help="write the .plan.json here instead of stdout")
    p.set_defaults(func=cmd_diff)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _Usage as exc:
        _err(str(exc))
        return EXIT_USAGE
    except ValueError as exc:
        _err(f"error: {exc}")
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        _err(f"internal error: {exc!r}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
