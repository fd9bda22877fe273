"""Simulated host fabric: the target that plans are enacted on.

Enactment writes one script line per action instead of running anything.
Fault injection takes hosts and instances away and queues the probe event
the engine will later poll.
"""

from __future__ import annotations

import copy
import json
import queue
from dataclasses import dataclass, field
from enum import Enum

from deladas.model import (
    Channel,
    ComponentInstance,
    Configuration,
    Install,
    Instantiate,
    ProbeEvent,
    ProbeKind,
    ReconfigurationPlan,
    Remove,
    Unwire,
    Wire,
    id_sort_key,
)


class HostState(str, Enum):
    UP = "up"
    DOWN = "down"


class ScenarioAction(str, Enum):
    FAIL_HOST = "FAIL_HOST"
    ADD_HOST = "ADD_HOST"
    FAIL_COMPONENT = "FAIL_COMPONENT"


@dataclass(frozen=True, slots=True)
class ScenarioEvent:
    tick: int
    action: ScenarioAction
    subject: str


class EnactmentError(Exception):
    def __init__(self, action_index: int, reason: str):
        self.action_index = action_index
        self.reason = reason
        super().__init__(f"action {action_index}: {reason}")


class InjectionError(Exception):
    """A scenario event names a subject the fabric does not know (or already has)."""


class ScenarioError(Exception):
    pass


@dataclass
class SimulatedHost:
    id: str
    status: HostState = HostState.UP
    installed_types: set[str] = field(default_factory=set)
    running: dict[str, str] = field(default_factory=dict)  # instance id -> type


class Fabric:
    """Live deployment state. Owned by one control thread; events cross via a queue."""

    def __init__(self, hosts=()):
        self.hosts: dict[str, SimulatedHost] = {h: SimulatedHost(h) for h in hosts}
        self.channels: set[Channel] = set()
        self.clock = 0
        self.revision = 0
        self.log: list[str] = []
        self._events: queue.SimpleQueue[ProbeEvent] = queue.SimpleQueue()

    # -- queries -------------------------------------------------------------

    def host_of(self, instance_id: str) -> str | None:
        for host in self.hosts.values():
            if instance_id in host.running:
                return host.id
        return None

    def up_hosts(self) -> list[str]:
        return sorted((h.id for h in self.hosts.values() if h.status is HostState.UP), key=id_sort_key)

    def observe(self) -> Configuration:
        """The topology the simple probes see: running instances and live channels on UP hosts."""
        instances = [
            ComponentInstance(iid, tname, host.id)
            for host in self.hosts.values()
            if host.status is HostState.UP
            for iid, tname in host.running.items()
        ]
        ids = {i.id for i in instances}
        chans = [c for c in self.channels if c.from_instance in ids and c.to_instance in ids]
        return Configuration(tuple(instances), tuple(chans), self.revision)

    def host_log(self, host_id: str) -> list[str]:
        prefix = f"{host_id}: "
        return [line for line in self.log if line.startswith(prefix)]

    # -- enactment -----------------------------------------------------------

    def _snapshot(self):
        return copy.deepcopy(self.hosts), set(self.channels), list(self.log), self.revision

    def _restore(self, snap) -> None:
        self.hosts, self.channels, self.log, self.revision = snap

    def enact(self, plan: ReconfigurationPlan) -> None:
        """Execute ``plan`` in order, all or nothing.

        On failure the fabric is rolled back to its pre-plan state and
        EnactmentError names the offending action.
        """
        snap = self._snapshot()
        try:
            for k, action in enumerate(plan.actions):
                self._apply(k, action)
        except EnactmentError:
            self._restore(snap)
            raise
        self.revision = plan.goal_revision

    def _up(self, k: int, host_id: str) -> SimulatedHost:
        host = self.hosts.get(host_id)
        if host is None:
            raise EnactmentError(k, f"unknown host {host_id}")
        if host.status is not HostState.UP:
            raise EnactmentError(k, f"host {host_id} is down")
        return host

    def _running_host(self, k: int, instance_id: str) -> SimulatedHost:
        hid = self.host_of(instance_id)
        if hid is None:
            raise EnactmentError(k, f"unknown instance {instance_id}")
        return self._up(k, hid)

    def _apply(self, k: int, action) -> None:
        if isinstance(action, Install):
            host = self._up(k, action.host)
            host.installed_types.add(action.type_name)
            self.log.append(f"{host.id}: install {action.type_name}")
        elif isinstance(action, Instantiate):
            host = self._up(k, action.host)
            if self.host_of(action.instance_id) is not None:
                raise EnactmentError(k, f"instance {action.instance_id} is already running")
            if action.type_name not in host.installed_types:
                raise EnactmentError(k, f"{action.type_name} is not installed on {host.id}")
            host.running[action.instance_id] = action.type_name
            self.log.append(f"{host.id}: instantiate {action.instance_id}")
        elif isinstance(action, Wire):
            ch = action.channel
            self._running_host(k, ch.from_instance)
            self._running_host(k, ch.to_instance)
            if ch in self.channels:
                raise EnactmentError(k, f"channel {ch} is already wired")
            self.channels.add(ch)
            self.log.append(f"wire {ch}")
        elif isinstance(action, Unwire):
            if action.channel not in self.channels:
                raise EnactmentError(k, f"channel {action.channel} is not wired")
            self.channels.discard(action.channel)
            self.log.append(f"unwire {action.channel}")
        elif isinstance(action, Remove):
            host = self._running_host(k, action.instance_id)
            if any(c.touches(action.instance_id) for c in self.channels):
                raise EnactmentError(k, f"instance {action.instance_id} still has channels")
            del host.running[action.instance_id]
            self.log.append(f"{host.id}: remove {action.instance_id}")
        else:
            raise EnactmentError(k, f"unknown action {action!r}")

    # -- fault injection and probes ------------------------------------------

    def inject(self, event: ScenarioEvent) -> ProbeEvent:
        """Apply a perturbation and queue the matching probe event."""
        subject = event.subject
        if event.action is ScenarioAction.FAIL_HOST:
            host = self.hosts.get(subject)
            if host is None or host.status is not HostState.UP:
                raise InjectionError(f"FAIL_HOST: no running host {subject!r}")
            host.status = HostState.DOWN
            dead = set(host.running)
            host.running.clear()
            self.channels = {c for c in self.channels if c.from_instance not in dead and c.to_instance not in dead}
            probe = ProbeEvent(ProbeKind.HOST_FAILED, subject, event.tick)
        elif event.action is ScenarioAction.ADD_HOST:
            if subject in self.hosts:
                raise InjectionError(f"ADD_HOST: host {subject!r} already exists")
            self.hosts[subject] = SimulatedHost(subject)
            probe = ProbeEvent(ProbeKind.HOST_ADDED, subject, event.tick)
        elif event.action is ScenarioAction.FAIL_COMPONENT:
            hid = self.host_of(subject)
            if hid is None or self.hosts[hid].status is not HostState.UP:
                raise InjectionError(f"FAIL_COMPONENT: no running instance {subject!r}")
            del self.hosts[hid].running[subject]
            self.channels = {c for c in self.channels if not c.touches(subject)}
            probe = ProbeEvent(ProbeKind.COMPONENT_FAILED, subject, event.tick)
        else:
            raise InjectionError(f"unknown scenario action {event.action!r}")
        self.clock = max(self.clock, event.tick)
        self._events.put(probe)
        return probe

    def poll_events(self) -> list[ProbeEvent]:
        """Drain queued probe events, oldest first."""
        out = []
        while True:
            try:
                out.append(self._events.get_nowait())
            except queue.Empty:
                return out


def parse_scenario(text: str) -> list[ScenarioEvent]:
    """Scenario JSON: an array of ``{"tick", "action", "subject"}`` with nondecreasing ticks."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"not valid JSON: {exc.msg} at line {exc.lineno}") from None
    if not isinstance(data, list):
        raise ScenarioError("a scenario is a JSON array of events")
    events = []
    last = 0
    for k, rec in enumerate(data):
        if not isinstance(rec, dict):
            raise ScenarioError(f"event {k} must be an object")
        tick, action, subject = rec.get("tick"), rec.get("action"), rec.get("subject")
        if not isinstance(tick, int) or isinstance(tick, bool) or tick < 0:
            raise ScenarioError(f"event {k}: tick must be a non-negative integer")
        if tick < last:
            raise ScenarioError(f"event {k}: ticks must be nondecreasing")
        try:
            kind = ScenarioAction(action)
        except ValueError:
            raise ScenarioError(f"event {k}: unknown action {action!r}") from None
        if not isinstance(subject, str) or not subject:
            raise ScenarioError(f"event {k}: subject must be a non-empty string")
        last = tick
        events.append(ScenarioEvent(tick, kind, subject))
    return events


def load_scenario(path) -> list[ScenarioEvent]:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def dumps_scenario(events: list[ScenarioEvent]) -> str:
    return json.dumps(
        [{"tick": e.tick, "action": e.action.value, "subject": e.subject} for e in events], indent=2
    ) + "\n"
