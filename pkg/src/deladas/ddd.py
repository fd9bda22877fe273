"""Deployment Description Documents and reconfiguration plans.

A DDD is the canonical JSON image of a Configuration: sorted keys, two-space
indentation, instances ordered by id and channels by (from, to). Plans are
the action lists that move a running deployment from one configuration to
another.
"""

from __future__ import annotations

import json
from typing import Any

from deladas.model import (
    Action,
    Channel,
    ComponentInstance,
    Configuration,
    Diagnostic,
    Direction,
    Goal,
    Install,
    Instantiate,
    ReconfigurationPlan,
    Remove,
    Severity,
    Unwire,
    Wire,
    id_sort_key,
)

FORMAT_VERSION = 1


class DddError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        self.diagnostic = diagnostic
        super().__init__(str(diagnostic))


class PlanError(Exception):
    """A plan cannot be applied to the configuration it was given."""


def _fail(code: str, message: str) -> DddError:
    return DddError(Diagnostic(Severity.ERROR, code, message))


def emit_ddd(config: Configuration, goal: Goal | None = None, *, goal_name: str | None = None) -> dict[str, Any]:
    name = goal_name if goal_name is not None else (goal.name if goal is not None else "")
    return {
        "formatVersion": FORMAT_VERSION,
        "goalName": name,
        "goalRevision": config.goal_revision,
        "instances": [{"id": i.id, "type": i.type_name, "host": i.host} for i in config.instances],
        "channels": [{"from": c.source, "to": c.target} for c in config.channels],
    }


def dumps_ddd(config: Configuration, goal: Goal | None = None, *, goal_name: str | None = None) -> str:
    return json.dumps(emit_ddd(config, goal, goal_name=goal_name), sort_keys=True, indent=2) + "\n"


def _endpoint(text: Any, where: str) -> tuple[str, str]:
    if not isinstance(text, str) or text.count(".") != 1:
        raise _fail("MalformedDocument", f"{where} must look like 'instance.port', got {text!r}")
    inst, port = text.split(".")
    if not inst or not port:
        raise _fail("MalformedDocument", f"{where} must look like 'instance.port', got {text!r}")
    return inst, port


def parse_ddd_document(document: str | dict[str, Any]) -> tuple[str, Configuration]:
    """Parse DDD text (or an already-decoded dict) into (goal name, configuration)."""
    if isinstance(document, str):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as exc:
            raise _fail("MalformedDocument", f"not valid JSON: {exc.msg} at line {exc.lineno}") from None
    else:
        data = document
    if not isinstance(data, dict):
        raise _fail("MalformedDocument", "document must be a JSON object")
    version = data.get("formatVersion")
    if version != FORMAT_VERSION:
        raise _fail("UnsupportedVersion", f"formatVersion {version!r} is not supported (expected {FORMAT_VERSION})")
    name = data.get("goalName", "")
    revision = data.get("goalRevision", 0)
    if not isinstance(name, str) or not isinstance(revision, int) or isinstance(revision, bool):
        raise _fail("MalformedDocument", "goalName must be a string and goalRevision an integer")
    raw_instances = data.get("instances")
    raw_channels = data.get("channels")
    if not isinstance(raw_instances, list) or not isinstance(raw_channels, list):
        raise _fail("MalformedDocument", "instances and channels must be arrays")

    instances = []
    seen: set[str] = set()
    for k, rec in enumerate(raw_instances):
        if not isinstance(rec, dict) or not all(isinstance(rec.get(f), str) for f in ("id", "type", "host")):
            raise _fail("MalformedDocument", f"instances[{k}] needs string fields id, type and host")
        if rec["id"] in seen:
            raise _fail("DuplicateId", f"instance id {rec['id']!r} appears twice")
        seen.add(rec["id"])
        instances.append(ComponentInstance(rec["id"], rec["type"], rec["host"]))

    channels = []
    seen_ch: set[Channel] = set()
    for k, rec in enumerate(raw_channels):
        if not isinstance(rec, dict):
            raise _fail("MalformedDocument", f"channels[{k}] must be an object")
        fi, fp = _endpoint(rec.get("from"), f"channels[{k}].from")
        ti, tp = _endpoint(rec.get("to"), f"channels[{k}].to")
        for inst in (fi, ti):
            if inst not in seen:
                raise _fail("DanglingEndpoint", f"channels[{k}] references unknown instance {inst!r}")
        ch = Channel(fi, fp, ti, tp)
        if ch in seen_ch:
            raise _fail("DuplicateChannel", f"channel {ch} appears twice")
        seen_ch.add(ch)
        channels.append(ch)
    return name, Configuration(tuple(instances), tuple(channels), revision)


def parse_ddd(document: str | dict[str, Any]) -> Configuration:
    return parse_ddd_document(document)[1]


def load_ddd(path) -> Configuration:
    with open(path, encoding="utf-8") as fh:
        return parse_ddd(fh.read())


def validate_configuration(config: Configuration, goal: Goal) -> list[Diagnostic]:
    """Referential checks of a configuration against a goal's resources."""
    out: list[Diagnostic] = []

    def err(code: str, msg: str) -> None:
        out.append(Diagnostic(Severity.ERROR, code, msg))

    types = {t.name: t for t in goal.component_types}
    for inst in config.instances:
        host = goal.host(inst.host)
        if host is None:
            err("UnknownHost", f"instance {inst.id} is placed on unknown host {inst.host!r}")
        elif not host.available:
            out.append(Diagnostic(Severity.WARNING, "FailedHost", f"instance {inst.id} is placed on failed host {inst.host}"))
        if inst.type_name not in types:
            err("UnknownComponentType", f"instance {inst.id} has unknown type {inst.type_name!r}")
    type_of = {i.id: i.type_name for i in config.instances}
    for ch in config.channels:
        if ch.from_instance == ch.to_instance:
            err("SelfChannel", f"channel {ch} joins an instance to itself")
        for inst, port, want in ((ch.from_instance, ch.from_port, Direction.OUT), (ch.to_instance, ch.to_port, Direction.IN)):
            ctype = types.get(type_of[inst])
            if ctype is None:
                continue
            spec = ctype.port(port)
            if spec is None:
                err("UnknownPort", f"{ctype.name} has no port {port!r} (channel {ch})")
            elif spec.direction is not want:
                err("DirectionMismatch", f"channel {ch} uses {ctype.name}.{port} as {want.value} but it is {spec.direction.value}")
    return out


# --------------------------------------------------------------------------
# Plans


def diff(source: Configuration, target: Configuration) -> ReconfigurationPlan:
    """Smallest action list taking ``source`` to ``target``.

    Instances equal in id, type and host are kept, as are channels between
    kept instances. Order: Unwire, Remove, Install, Instantiate, Wire.
    """
    src = {i.id: i for i in source.instances}
    dst = {i.id: i for i in target.instances}
    kept = {iid for iid, inst in src.items() if dst.get(iid) == inst}

    def stays(ch: Channel) -> bool:
        return ch.from_instance in kept and ch.to_instance in kept

    src_ch = set(source.channels)
    dst_ch = set(target.channels)
    unwire = [c for c in source.channels if not (c in dst_ch and stays(c))]
    wire = [c for c in target.channels if not (c in src_ch and stays(c))]
    removed = [i for i in source.instances if i.id not in kept]
    added = [i for i in target.instances if i.id not in kept]

    present = {(src[i].type_name, src[i].host) for i in kept}
    installs: list[Install] = []
    for inst in added:
        pair = (inst.type_name, inst.host)
        if pair not in present:
            present.add(pair)
            installs.append(Install(*pair))
    installs.sort(key=lambda a: (id_sort_key(a.host), a.type_name))

    actions: list[Action] = []
    actions += [Unwire(c) for c in unwire]
    actions += [Remove(i.id) for i in removed]
    actions += installs
    actions += [Instantiate(i.id, i.type_name, i.host) for i in added]
    actions += [Wire(c) for c in wire]
    return ReconfigurationPlan(tuple(actions), target.goal_revision)


def apply_plan(config: Configuration, plan: ReconfigurationPlan) -> Configuration:
    """Replay ``plan`` on a configuration value; raises PlanError on an invalid step."""
    instances = {i.id: i for i in config.instances}
    channels = set(config.channels)
    for k, action in enumerate(plan.actions):
        if isinstance(action, Unwire):
            if action.channel not in channels:
                raise PlanError(f"action {k}: channel {action.channel} is not wired")
            channels.discard(action.channel)
        elif isinstance(action, Remove):
            if action.instance_id not in instances:
                raise PlanError(f"action {k}: no instance {action.instance_id}")
            if any(c.touches(action.instance_id) for c in channels):
                raise PlanError(f"action {k}: {action.instance_id} still has channels")
            del instances[action.instance_id]
        elif isinstance(action, Install):
            pass
        elif isinstance(action, Instantiate):
            if action.instance_id in instances:
                raise PlanError(f"action {k}: {action.instance_id} already exists")
            instances[action.instance_id] = ComponentInstance(action.instance_id, action.type_name, action.host)
        elif isinstance(action, Wire):
            ch = action.channel
            if ch.from_instance not in instances or ch.to_instance not in instances:
                raise PlanError(f"action {k}: channel {ch} has a missing endpoint")
            if ch in channels:
                raise PlanError(f"action {k}: channel {ch} already wired")
            channels.add(ch)
        else:
            raise PlanError(f"action {k}: unknown action {action!r}")
    return Configuration(tuple(instances.values()), tuple(channels), plan.goal_revision)


def action_to_json(action: Action) -> dict[str, str]:
    if isinstance(action, Install):
        return {"action": "install", "type": action.type_name, "host": action.host}
    if isinstance(action, Instantiate):
        return {"action": "instantiate", "id": action.instance_id, "type": action.type_name, "host": action.host}
    if isinstance(action, (Wire, Unwire)):
        tag = "wire" if isinstance(action, Wire) else "unwire"
        return {"action": tag, "from": action.channel.source, "to": action.channel.target}
    if isinstance(action, Remove):
        return {"action": "remove", "id": action.instance_id}
    raise TypeError(f"not an action: {action!r}")


def action_from_json(rec: dict[str, Any]) -> Action:
    try:
        tag = rec["action"]
        if tag == "install":
            return Install(rec["type"], rec["host"])
        if tag == "instantiate":
            return Instantiate(rec["id"], rec["type"], rec["host"])
        if tag in ("wire", "unwire"):
            fi, fp = _endpoint(rec["from"], "from")
            ti, tp = _endpoint(rec["to"], "to")
            ch = Channel(fi, fp, ti, tp)
            return Wire(ch) if tag == "wire" else Unwire(ch)
        if tag == "remove":
            return Remove(rec["id"])
    except (KeyError, TypeError):
        raise _fail("MalformedDocument", f"bad plan record {rec!r}") from None
    raise _fail("MalformedDocument", f"unknown plan action {rec.get('action')!r}")


def dumps_plan(plan: ReconfigurationPlan) -> str:
    return json.dumps([action_to_json(a) for a in plan.actions], sort_keys=True, indent=2) + "\n"


def parse_plan(text: str, goal_revision: int = 0) -> ReconfigurationPlan:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise _fail("MalformedDocument", f"not valid JSON: {exc.msg}") from None
    if not isinstance(data, list):
        raise _fail("MalformedDocument", "a plan is a JSON array of action records")
    return ReconfigurationPlan(tuple(action_from_json(r) for r in data), goal_revision)
