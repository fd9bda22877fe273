"""The autonomic deployment and management engine.

Each tick the engine drains probe events, folds them into the goal's
resources, re-checks the observed deployment against the goal and, when it
no longer holds, re-solves from the surviving deployment and enacts the
difference. A goal that cannot be met parks the engine in STALLED_UNSAT
until the resources change again.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum

from deladas.ddd import diff
from deladas.fabric import EnactmentError, Fabric, InjectionError, ScenarioAction, ScenarioEvent
from deladas.model import Configuration, Goal, HostDescriptor, HostStatus, ProbeEvent, ProbeKind, ReconfigurationPlan
from deladas.solver import SolveOptions, Violation, check_configuration, solve, solve_incremental

log = logging.getLogger(__name__)


class Phase(str, Enum):
    STEADY = "STEADY"
    RESOLVING = "RESOLVING"
    ENACTING = "ENACTING"
    STALLED_UNSAT = "STALLED_UNSAT"
    STOPPED = "STOPPED"


@dataclass(frozen=True, slots=True)
class Transition:
    tick: int
    source: Phase | None
    target: Phase
    cause: str

    def __str__(self) -> str:
        src = self.source.value if self.source else "START"
        return f"tick={self.tick} {src}->{self.target.value} {self.cause}"


@dataclass
class AdmeStatus:
    phase: Phase | None = None
    goal_revision: int = 0
    last_verdict: list[Violation] = field(default_factory=list)
    history: list[Transition] = field(default_factory=list)
    solver_calls: int = 0
    recoveries: int = 0

    def to_json(self) -> dict:
        return {
            "phase": self.phase.value if self.phase else None,
            "goalRevision": self.goal_revision,
            "lastVerdict": [v.index for v in self.last_verdict],
            "solverCalls": self.solver_calls,
            "recoveries": self.recoveries,
            "history": [
                {"tick": t.tick, "from": t.source.value if t.source else None, "to": t.target.value, "cause": t.cause}
                for t in self.history
            ],
        }


def evolve_goal(goal: Goal, events: list[ProbeEvent]) -> Goal:
    """Fold host failures and arrivals into the goal's resources.

    Failed hosts stay listed with status FAILED; component failures leave the
    resources alone. The revision moves only when something changed, and the
    constraints are never touched.
    """
    hosts = list(goal.hosts)
    changed = False
    for ev in events:
        idx = next((k for k, h in enumerate(hosts) if h.id == ev.subject), None)
        if ev.kind is ProbeKind.HOST_FAILED:
            if idx is not None and hosts[idx].status is HostStatus.AVAILABLE:
                hosts[idx] = HostDescriptor(ev.subject, HostStatus.FAILED)
                changed = True
        elif ev.kind is ProbeKind.HOST_ADDED:
            if idx is None:
                hosts.append(HostDescriptor(ev.subject))
                changed = True
            elif hosts[idx].status is HostStatus.FAILED:
                hosts[idx] = HostDescriptor(ev.subject)
                changed = True
    if not changed:
        return goal
    return replace(goal, hosts=tuple(hosts), revision=goal.revision + 1)


def assess(goal: Goal, observed: Configuration) -> list[Violation]:
    """Violated clauses of ``goal`` on the observed deployment (empty: satisfied)."""
    return check_configuration(observed, goal)


def _clauses(verdict: list[Violation]) -> str:
    return ",".join(str(v.index) for v in verdict)


class Engine:
    """One ADME instance: owns the current goal, its status and the fabric."""

    def __init__(self, goal: Goal, fabric: Fabric | None = None, opts: SolveOptions | None = None):
        self.goal = goal
        self.fabric = fabric if fabric is not None else Fabric(goal.available_hosts)
        self.opts = opts or SolveOptions()
        self.status = AdmeStatus(goal_revision=goal.revision)
        self.plans: list[tuple[int, ReconfigurationPlan]] = []
        self._stall_key: tuple | None = None
        self._retry = False

    @property
    def phase(self) -> Phase | None:
        return self.status.phase

    def _move(self, tick: int, target: Phase, cause: str) -> None:
        t = Transition(tick, self.status.phase, target, cause)
        self.status.history.append(t)
        self.status.phase = target
        log.info("%s", t)

    def start(self, tick: int = 0) -> None:
        """Cold start: solve the goal from scratch and deploy it."""
        self._move(tick, Phase.RESOLVING, "cold start")
        result = solve(self.goal, self.opts)
        self.status.solver_calls += 1
        if not result.sat:
            self._stall(tick, result, self.fabric.observe())
            return
        self._enact(tick, self.fabric.observe(), result.solutions[0], result.nodes_explored)

    def stop(self, tick: int) -> None:
        self._move(tick, Phase.STOPPED, "stopped")

    def replace_goal(self, goal: Goal, tick: int) -> None:
        """Manual goal revision: swap in a new goal, bumping the revision."""
        self.goal = replace(goal, revision=max(goal.revision, self.goal.revision + 1))
        for host in self.goal.available_hosts:
            if host not in self.fabric.hosts:
                self.fabric.inject(ScenarioEvent(tick, ScenarioAction.ADD_HOST, host))
        self._retry = True
        self.status.goal_revision = self.goal.revision

    def _stall(self, tick: int, result, observed: Configuration) -> None:
        self._stall_key = (self.goal.revision, observed.instances, observed.channels)
        self._move(tick, Phase.STALLED_UNSAT, f"re-solve {result.status.value} nodes={result.nodes_explored}")

    def _enact(self, tick: int, observed: Configuration, target: Configuration, nodes: int) -> None:
        plan = diff(observed, target)
        self.plans.append((tick, plan))
        self._move(tick, Phase.ENACTING, f"solution found nodes={nodes} plan={len(plan)} actions")
        try:
            self.fabric.enact(plan)
        except EnactmentError as exc:
            self._retry = True
            self._move(tick, Phase.RESOLVING, f"enactment failed: {exc}")
            return
        after = assess(self.goal, self.fabric.observe())
        self.status.last_verdict = after
        if after:
            self._retry = True
            self._move(tick, Phase.RESOLVING, f"enacted deployment violates clauses {_clauses(after)}")
            return
        self._stall_key = None
        self._move(tick, Phase.STEADY, f"enacted {len(plan)} actions at revision {self.goal.revision}")

    def step(self, tick: int) -> None:
        """One poll -> evolve -> assess -> recover iteration."""
        if self.status.phase is Phase.STOPPED:
            return
        events = self.fabric.poll_events()
        if events:
            evolved = evolve_goal(self.goal, events)
            if evolved.revision != self.goal.revision:
                self.goal = evolved
                self.status.goal_revision = evolved.revision
        observed = self.fabric.observe()
        verdict = assess(self.goal, observed)
        self.status.last_verdict = verdict
        probe = " ".join(f"{e.kind.value}:{e.subject}" for e in events)

        if not verdict:
            if events:
                self.status.recoveries += 1
                self._move(tick, Phase.RESOLVING, f"probe {probe}")
                self._move(tick, Phase.STEADY, f"deployment still satisfies revision {self.goal.revision}; empty plan")
                self.plans.append((tick, diff(observed, observed)))
            elif self.status.phase is not Phase.STEADY:
                self._move(tick, Phase.STEADY, f"deployment satisfies revision {self.goal.revision}")
            self._stall_key = None
            self._retry = False
            return

        if self.status.phase is Phase.STALLED_UNSAT and not self._retry:
            if self._stall_key == (self.goal.revision, observed.instances, observed.channels):
                return
        self._retry = False
        self.status.recoveries += 1
        cause = f"clauses {_clauses(verdict)} violated"
        if probe:
            cause = f"probe {probe}; {cause}"
        self._move(tick, Phase.RESOLVING, cause)
        result = solve_incremental(self.goal, observed, self.opts)
        self.status.solver_calls += 1
        if not result.sat:
            self._stall(tick, result, observed)
            return
        self._enact(tick, observed, result.solutions[0], result.nodes_explored)


@dataclass
class RunResult:
    status: AdmeStatus
    fabric: Fabric
    goal: Goal
    phases: list[tuple[int, Phase]]  # phase at the end of every tick
    log: list[str]
    plans: list[tuple[int, ReconfigurationPlan]] = field(default_factory=list)

    def final_configuration(self) -> Configuration:
        return self.fabric.observe()


def run(
    goal: Goal,
    scenario: list[ScenarioEvent] | tuple[ScenarioEvent, ...] = (),
    max_ticks: int = 10,
    opts: SolveOptions | None = None,
    reloads: dict[int, Goal] | None = None,
    on_tick=None,
) -> RunResult:
    """Cold-start ``goal`` at tick 0, then replay ``scenario`` one step per tick.

    ``on_tick(tick, engine)`` is called after every step. Runs through
    ``max_ticks`` inclusive, or until the engine is stopped.
    """
    engine = Engine(goal, Fabric(goal.available_hosts), opts)
    lines: list[str] = []
    phases: list[tuple[int, Phase]] = []
    pending = sorted(scenario, key=lambda e: e.tick)
    cursor = 0
    seen = 0

    def flush() -> None:
        nonlocal seen
        for t in engine.status.history[seen:]:
            lines.append(str(t))
        seen = len(engine.status.history)

    for tick in range(max_ticks + 1):
        engine.fabric.clock = tick
        if tick == 0:
            engine.start(0)
            flush()
        if reloads and tick in reloads:
            engine.replace_goal(reloads[tick], tick)
            lines.append(f"tick={tick} goal reloaded revision={engine.goal.revision}")
        while cursor < len(pending) and pending[cursor].tick <= tick:
            ev = pending[cursor]
            cursor += 1
            try:
                engine.fabric.inject(ev)
                lines.append(f"tick={tick} inject {ev.action.value} {ev.subject}")
            except InjectionError as exc:
                lines.append(f"tick={tick} rejected {ev.action.value} {ev.subject}: {exc}")
        engine.step(tick)
        flush()
        phases.append((tick, engine.phase))
        if on_tick is not None:
            on_tick(tick, engine)
        if engine.phase is Phase.STOPPED:
            break
    return RunResult(engine.status, engine.fabric, engine.goal, phases, lines, engine.plans)


def dumps_status(status: AdmeStatus) -> str:
    return json.dumps(status.to_json(), sort_keys=True, indent=2) + "\n"
