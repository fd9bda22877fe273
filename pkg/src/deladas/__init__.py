"""Deladas: declarative deployment goals, a constraint solver that places and
wires components on hosts, and an autonomic loop that keeps the deployment
valid as hosts and components fail."""

from __future__ import annotations

from deladas.adme import Engine, Phase, run
from deladas.ddd import apply_plan, diff, dumps_ddd, load_ddd, parse_ddd
from deladas.fabric import Fabric, ScenarioAction, ScenarioEvent
from deladas.model import Channel, ComponentInstance, Configuration, Direction, Goal
from deladas.parser import ParseError, format_goal, load_goal, parse_goal, tokenize, validate_goal
from deladas.solver import SolveOptions, SolveResult, SolveStatus, check_configuration, evaluate, solve, solve_incremental

__all__ = [
    "Channel",
    "ComponentInstance",
    "Configuration",
    "Direction",
    "Engine",
    "Fabric",
    "Goal",
    "ParseError",
    "Phase",
    "ScenarioAction",
    "ScenarioEvent",
    "SolveOptions",
    "SolveResult",
    "SolveStatus",
    "apply_plan",
    "check_configuration",
    "diff",
    "dumps_ddd",
    "evaluate",
    "format_goal",
    "load_ddd",
    "load_goal",
    "parse_ddd",
    "parse_goal",
    "run",
    "solve",
    "solve_incremental",
    "tokenize",
    "validate_goal",
]
