"""Domain types shared by the parser, solver, DDD, fabric and engine layers.

Every type here is an immutable value. Collections are stored as tuples and
configurations canonicalise their ordering on construction so that two
configurations describing the same deployment compare equal.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Union

_ID_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")
_NUMBERED_ID_RE = re.compile(r"^(.*?)(\d+)$")


class Direction(str, Enum):
    IN = "in"
    OUT = "out"

    def opposite(self) -> Direction:
        return Direction.OUT if self is Direction.IN else Direction.IN


class HostStatus(str, Enum):
    AVAILABLE = "available"
    FAILED = "failed"


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


class ProbeKind(str, Enum):
    HOST_FAILED = "host_failed"
    COMPONENT_FAILED = "component_failed"
    HOST_ADDED = "host_added"


def is_identifier(text: str) -> bool:
    return bool(_ID_RE.match(text))


def id_sort_key(ident: str) -> tuple[str, int, str]:
    """Natural ordering for generated ids, so ``Router-2`` sorts before ``Router-10``."""
    match = _NUMBERED_ID_RE.match(ident)
    if match is None:
        return (ident, -1, ident)
    return (match.group(1), int(match.group(2)), ident)


@dataclass(frozen=True, slots=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    line: int = 0
    column: int = 0

    def __str__(self) -> str:
        where = f"{self.line}:{self.column}: " if self.line else ""
        return f"{where}{self.severity.value}: {self.code}: {self.message}"


# --------------------------------------------------------------------------
# Resources


@dataclass(frozen=True, slots=True)
class PortSpec:
    name: str
    direction: Direction


@dataclass(frozen=True, slots=True)
class ComponentType:
    name: str
    ports: tuple[PortSpec, ...] = ()

    def port(self, name: str) -> PortSpec | None:
        for spec in self.ports:
            if spec.name == name:
                return spec
        return None

    def ports_with(self, direction: Direction) -> tuple[PortSpec, ...]:
        return tuple(p for p in self.ports if p.direction is direction)


@dataclass(frozen=True, slots=True)
class HostDescriptor:
    id: str
    status: HostStatus = HostStatus.AVAILABLE

    @property
    def available(self) -> bool:
        return self.status is HostStatus.AVAILABLE


# --------------------------------------------------------------------------
# Constraint AST
#
# Source positions are carried for diagnostics but excluded from equality,
# so a pretty-printed and re-parsed goal compares equal to the original.


@dataclass(frozen=True, slots=True)
class Domain:
    """Quantifier domain: hosts, or instances of a component type.

    ``type_name`` is None for host domains. ``within`` optionally restricts an
    instance domain to a host variable (``forall Router r in h``).
    """

    type_name: str | None
    within: str | None = None

    @property
    def is_host(self) -> bool:
        return self.type_name is None


@dataclass(frozen=True, slots=True)
class PortRef:
    var: str
    port: str
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True, slots=True)
class IntLiteral:
    value: int


@dataclass(frozen=True, slots=True)
class CardInstances:
    """``card(instancesof T in h)``; ``host_var`` None means the whole deployment."""

    type_name: str
    host_var: str | None
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True, slots=True)
class CardConnected:
    """``card(T v connectsto target)``: instances of T attached to ``target``."""

    type_name: str
    var: str
    target: str
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


IntExpr = Union[IntLiteral, CardInstances, CardConnected]


@dataclass(frozen=True, slots=True)
class Forall:
    vars: tuple[str, ...]
    domain: Domain
    body: ConstraintExpr
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True, slots=True)
class Exists:
    vars: tuple[str, ...]
    domain: Domain
    body: ConstraintExpr
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True, slots=True)
class And:
    items: tuple[ConstraintExpr, ...]


@dataclass(frozen=True, slots=True)
class Or:
    items: tuple[ConstraintExpr, ...]


@dataclass(frozen=True, slots=True)
class Not:
    item: ConstraintExpr


@dataclass(frozen=True, slots=True)
class Compare:
    lhs: IntExpr
    op: str
    rhs: IntExpr
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True, slots=True)
class ConnectsTo:
    """``a.p connectsto b.q``; direction follows the ports, not the operand order."""

    left: PortRef
    right: PortRef
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True, slots=True)
class Reachable:
    source: str
    target: str
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True, slots=True)
class VarCompare:
    """``a != b`` or ``a = b`` between two bound variables."""

    left: str
    op: str
    right: str
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


ConstraintExpr = Union[Forall, Exists, And, Or, Not, Compare, ConnectsTo, Reachable, VarCompare]

COMPARE_OPS = ("=", "!=", "<=", "<", ">=", ">")


def clause_location(expr: ConstraintExpr) -> tuple[int, int]:
    """Best-effort source position of a clause (0, 0 when unknown)."""
    line = getattr(expr, "line", 0)
    if line:
        return line, getattr(expr, "column", 0)
    children: tuple = ()
    if isinstance(expr, (And, Or)):
        children = expr.items
    elif isinstance(expr, Not):
        children = (expr.item,)
    for child in children:
        loc = clause_location(child)
        if loc[0]:
            return loc
    return 0, 0


@dataclass(frozen=True, slots=True)
class Goal:
    name: str
    component_types: tuple[ComponentType, ...] = ()
    hosts: tuple[HostDescriptor, ...] = ()
    constraints: tuple[ConstraintExpr, ...] = ()
    revision: int = 0

    def component_type(self, name: str) -> ComponentType | None:
        for ctype in self.component_types:
            if ctype.name == name:
                return ctype
        return None

    def host(self, host_id: str) -> HostDescriptor | None:
        for host in self.hosts:
            if host.id == host_id:
                return host
        return None

    @property
    def available_hosts(self) -> tuple[str, ...]:
        return tuple(h.id for h in self.hosts if h.available)

    @property
    def type_names(self) -> tuple[str, ...]:
        return tuple(sorted(t.name for t in self.component_types))

    def with_hosts(self, hosts: tuple[HostDescriptor, ...], *, bump: bool = True) -> Goal:
        return replace(self, hosts=hosts, revision=self.revision + 1 if bump else self.revision)


# --------------------------------------------------------------------------
# Configurations


@dataclass(frozen=True, slots=True)
class ComponentInstance:
    id: str
    type_name: str
    host: str


@dataclass(frozen=True, slots=True, order=True)
class Channel:
    from_instance: str
    from_port: str
    to_instance: str
    to_port: str

    @property
    def source(self) -> str:
        return f"{self.from_instance}.{self.from_port}"

    @property
    def target(self) -> str:
        return f"{self.to_instance}.{self.to_port}"

    def touches(self, instance_id: str) -> bool:
        return instance_id in (self.from_instance, self.to_instance)

    def __str__(self) -> str:
        return f"{self.source} -> {self.target}"


def _channel_key(ch: Channel) -> tuple:
    return (id_sort_key(ch.from_instance), ch.from_port, id_sort_key(ch.to_instance), ch.to_port)


@dataclass(frozen=True, slots=True)
class Configuration:
    """Instances placed on hosts plus directed OUT->IN channels.

    Instances are kept sorted by id and channels by (source, target);
    duplicates raise ``ValueError``.
    """

    instances: tuple[ComponentInstance, ...] = ()
    channels: tuple[Channel, ...] = ()
    goal_revision: int = 0

    def __post_init__(self) -> None:
        instances = tuple(sorted(self.instances, key=lambda i: id_sort_key(i.id)))
        ids = [i.id for i in instances]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate instance id in configuration")
        channels = tuple(sorted(set(self.channels), key=_channel_key))
        if len(channels) != len(self.channels):
            raise ValueError("duplicate channel in configuration")
        known = set(ids)
        for ch in channels:
            if ch.from_instance not in known or ch.to_instance not in known:
                raise ValueError(f"channel {ch} references an unknown instance")
        object.__setattr__(self, "instances", instances)
        object.__setattr__(self, "channels", channels)

    def instance(self, instance_id: str) -> ComponentInstance | None:
        for inst in self.instances:
            if inst.id == instance_id:
                return inst
        return None

    def instances_of(self, type_name: str) -> tuple[ComponentInstance, ...]:
        return tuple(i for i in self.instances if i.type_name == type_name)

    def on_host(self, host: str) -> tuple[ComponentInstance, ...]:
        return tuple(i for i in self.instances if i.host == host)

    def restricted_to(self, hosts: set[str] | frozenset[str]) -> Configuration:
        """Drop instances outside ``hosts`` together with their channels."""
        kept = tuple(i for i in self.instances if i.host in hosts)
        ids = {i.id for i in kept}
        chans = tuple(c for c in self.channels if c.from_instance in ids and c.to_instance in ids)
        return Configuration(kept, chans, self.goal_revision)


# --------------------------------------------------------------------------
# Plans


@dataclass(frozen=True, slots=True)
class Install:
    type_name: str
    host: str


@dataclass(frozen=True, slots=True)
class Instantiate:
    instance_id: str
    type_name: str
    host: str


@dataclass(frozen=True, slots=True)
class Wire:
    channel: Channel


@dataclass(frozen=True, slots=True)
class Unwire:
    channel: Channel


@dataclass(frozen=True, slots=True)
class Remove:
    instance_id: str


Action = Union[Install, Instantiate, Wire, Unwire, Remove]


@dataclass(frozen=True, slots=True)
class ReconfigurationPlan:
    actions: tuple[Action, ...] = ()
    goal_revision: int = 0

    def __len__(self) -> int:
        return len(self.actions)

    def __iter__(self):
        return iter(self.actions)


# --------------------------------------------------------------------------
# Probes


@dataclass(frozen=True, slots=True)
class ProbeEvent:
    kind: ProbeKind
    subject: str
    timestamp: int = 0
