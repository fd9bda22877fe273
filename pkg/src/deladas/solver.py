"""Constraint evaluation and configuration search.

One evaluator serves both the exact checker and the search: it works over a
*view* that answers cardinality, wiring and reachability questions either
exactly (a finished configuration) or as bounds (a partial assignment), and
combines them with Kleene three-valued logic. A clause that is known true or
false under a partial assignment stays so under every extension, which is
what makes forward checking sound.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import product
from typing import Optional

from deladas.graph import reachability
from deladas.model import (
    And,
    CardConnected,
    CardInstances,
    Channel,
    Compare,
    ComponentInstance,
    Configuration,
    ConnectsTo,
    ConstraintExpr,
    Direction,
    Exists,
    Forall,
    Goal,
    IntExpr,
    IntLiteral,
    Not,
    Or,
    Reachable,
    VarCompare,
    clause_location,
    id_sort_key,
)

log = logging.getLogger(__name__)

Tri = Optional[bool]
Binding = dict[str, str]


class SolveStatus(str, Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    BUDGET_EXHAUSTED = "BUDGET_EXHAUSTED"


@dataclass(frozen=True, slots=True)
class SolveOptions:
    max_solutions: int = 1
    max_instances_per_type: int | None = None  # None: number of available hosts
    seed: int = 0
    node_budget: int = 10**7

    def __post_init__(self) -> None:
        if self.max_solutions < 1:
            raise ValueError("max_solutions must be positive")
        if self.max_instances_per_type is not None and self.max_instances_per_type < 1:
            raise ValueError("max_instances_per_type must be positive")
        if self.node_budget < 1:
            raise ValueError("node_budget must be positive")


@dataclass(frozen=True, slots=True)
class SolveResult:
    status: SolveStatus
    solutions: tuple[Configuration, ...] = ()
    nodes_explored: int = 0

    @property
    def sat(self) -> bool:
        return self.status is SolveStatus.SAT


@dataclass(frozen=True, slots=True)
class Violation:
    """A violated top-level clause; ``index`` is 1-based in source order."""

    index: int
    line: int = 0
    column: int = 0


# --------------------------------------------------------------------------
# Three-valued helpers


def _and(values) -> Tri:
    unknown = False
    for v in values:
        if v is False:
            return False
        if v is None:
            unknown = True
    return None if unknown else True


def _or(values) -> Tri:
    unknown = False
    for v in values:
        if v is True:
            return True
        if v is None:
            unknown = True
    return None if unknown else False


def _compare(op: str, lhs: tuple[int, int], rhs: tuple[int, int]) -> Tri:
    a, b = lhs
    c, d = rhs
    if op == "=":
        if a == b == c == d:
            return True
        return False if b < c or d < a else None
    if op == "!=":
        eq = _compare("=", lhs, rhs)
        return None if eq is None else not eq
    if op == "<=":
        return True if b <= c else (False if a > d else None)
    if op == "<":
        return True if b < c else (False if a >= d else None)
    if op == ">=":
        return _compare("<=", rhs, lhs)
    if op == ">":
        return _compare("<", rhs, lhs)
    raise ValueError(f"unknown comparison operator {op!r}")


# --------------------------------------------------------------------------
# Views


class _View:
    """What the evaluator may ask about a (possibly partial) configuration."""

    goal: Goal
    hosts: tuple[str, ...]
    directions: dict[tuple[str, str], Direction]

    def type_of(self, inst: str) -> str: ...
    def instances(self, type_name: str) -> tuple[str, ...]: ...
    def on_host(self, inst: str, host: str) -> Tri: ...
    def card(self, type_name: str, host: str | None) -> tuple[int, int]: ...
    def channel(self, ch: Channel) -> Tri: ...
    def attached(self, type_name: str, target: str) -> tuple[int, int]: ...
    def reachable(self, a: str, b: str) -> Tri: ...


def _directions(goal: Goal) -> dict[tuple[str, str], Direction]:
    return {(t.name, p.name): p.direction for t in goal.component_types for p in t.ports}


class _ConfigView(_View):
    """Exact answers over a finished configuration."""

    def __init__(self, config: Configuration, goal: Goal):
        self.goal = goal
        self.hosts = goal.available_hosts
        self.directions = _directions(goal)
        self.types = {i.id: i.type_name for i in config.instances}
        self.host_of = {i.id: i.host for i in config.instances}
        self.by_type: dict[str, tuple[str, ...]] = {}
        for inst in config.instances:
            self.by_type.setdefault(inst.type_name, ())
            self.by_type[inst.type_name] += (inst.id,)
        self.channels = set(config.channels)
        self.neighbours: dict[str, set[str]] = {i: set() for i in self.types}
        for ch in config.channels:
            self.neighbours[ch.from_instance].add(ch.to_instance)
            self.neighbours[ch.to_instance].add(ch.from_instance)
        self._reach: dict[str, dict] = {}

    def type_of(self, inst):
        return self.types[inst]

    def instances(self, type_name):
        return self.by_type.get(type_name, ())

    def on_host(self, inst, host):
        return self.host_of[inst] == host

    def card(self, type_name, host):
        insts = self.instances(type_name)
        if host is None:
            n = len(insts)
        else:
            n = sum(1 for i in insts if self.host_of[i] == host)
        return n, n

    def channel(self, ch):
        return ch in self.channels

    def attached(self, type_name, target):
        n = sum(1 for v in self.instances(type_name) if v != target and v in self.neighbours.get(target, ()))
        return n, n

    def reachable(self, a, b):
        if a == b:
            return True
        tname = self.types[a]
        if tname not in self._reach:
            self._reach[tname] = strongly_connected_reachability_raw(
                self.instances(tname),
                [c for c in self.channels if self.types[c.from_instance] == tname and self.types[c.to_instance] == tname],
            )
        return b in self._reach[tname].get(a, ())


def strongly_connected_reachability_raw(nodes, channels) -> dict[str, frozenset]:
    edges: dict[str, list[str]] = {n: [] for n in nodes}
    for ch in sorted(channels):
        edges[ch.from_instance].append(ch.to_instance)
    return reachability(list(nodes), edges)


def strongly_connected_reachability(config: Configuration, type_name: str) -> dict[tuple[str, str], bool]:
    """For every ordered pair of ``type_name`` instances, whether a channel path joins them.

    Only channels between instances of ``type_name`` count as edges; every
    instance reaches itself.
    """
    nodes = tuple(i.id for i in config.instances_of(type_name))
    members = set(nodes)
    reach = strongly_connected_reachability_raw(
        nodes, [c for c in config.channels if c.from_instance in members and c.to_instance in members]
    )
    return {(a, b): b in reach[a] for a in nodes for b in nodes}


# --------------------------------------------------------------------------
# Evaluator


def _domain(expr: Forall | Exists, view: _View, env: Binding) -> list[tuple[str, Tri]]:
    dom = expr.domain
    if dom.is_host:
        return [(h, True) for h in view.hosts]
    insts = view.instances(dom.type_name)
    if dom.within is None:
        return [(i, True) for i in insts]
    host = env[dom.within]
    out = []
    for i in insts:
        member = view.on_host(i, host)
        if member is not False:
            out.append((i, member))
    return out


def _int(expr: IntExpr, view: _View, env: Binding) -> tuple[int, int]:
    if isinstance(expr, IntLiteral):
        return expr.value, expr.value
    if isinstance(expr, CardInstances):
        host = env[expr.host_var] if expr.host_var is not None else None
        return view.card(expr.type_name, host)
    if isinstance(expr, CardConnected):
        return view.attached(expr.type_name, env[expr.target])
    raise TypeError(f"not an integer expression: {expr!r}")


def _oriented(expr: ConnectsTo, view: _View, env: Binding) -> Channel | None:
    a, b = env[expr.left.var], env[expr.right.var]
    da = view.directions.get((view.type_of(a), expr.left.port))
    db = view.directions.get((view.type_of(b), expr.right.port))
    if da is None or db is None or da is db:
        return None
    if da is Direction.OUT:
        return Channel(a, expr.left.port, b, expr.right.port)
    return Channel(b, expr.right.port, a, expr.left.port)


def _quantify(expr: Forall | Exists, view: _View, env: Binding) -> Tri:
    universal = isinstance(expr, Forall)
    domain = _domain(expr, view, env)
    values = []
    for combo in product(domain, repeat=len(expr.vars)):
        inner = dict(env)
        member: Tri = True
        for var, (entity, known) in zip(expr.vars, combo):
            inner[var] = entity
            if known is None:
                member = None
        v = _eval(expr.body, view, inner)
        if member is None:
            # membership undecided: the item only counts once it is known
            if universal:
                v = True if v is True else None
            else:
                v = False if v is False else None
        values.append(v)
        if universal and v is False:
            return False
        if not universal and v is True:
            return True
    return _and(values) if universal else _or(values)


def _eval(expr: ConstraintExpr, view: _View, env: Binding) -> Tri:
    if isinstance(expr, (Forall, Exists)):
        return _quantify(expr, view, env)
    if isinstance(expr, And):
        return _and(_eval(i, view, env) for i in expr.items)
    if isinstance(expr, Or):
        return _or(_eval(i, view, env) for i in expr.items)
    if isinstance(expr, Not):
        v = _eval(expr.item, view, env)
        return None if v is None else not v
    if isinstance(expr, Compare):
        return _compare(expr.op, _int(expr.lhs, view, env), _int(expr.rhs, view, env))
    if isinstance(expr, ConnectsTo):
        ch = _oriented(expr, view, env)
        return False if ch is None else view.channel(ch)
    if isinstance(expr, Reachable):
        return view.reachable(env[expr.source], env[expr.target])
    if isinstance(expr, VarCompare):
        same = env[expr.left] == env[expr.right]
        return same if expr.op == "=" else not same
    raise TypeError(f"not a constraint: {expr!r}")


def evaluate(expr: ConstraintExpr, config: Configuration, goal: Goal, binding: Binding | None = None) -> bool:
    """Truth of ``expr`` on ``config``; free variables must be bound in ``binding``.

    Host quantifiers range over the goal's available hosts, instance
    quantifiers over the configuration's instances of the named type.
    """
    return bool(_eval(expr, _ConfigView(config, goal), dict(binding or {})))


def check_configuration(config: Configuration, goal: Goal) -> list[Violation]:
    """Violated top-level clauses of ``goal`` on ``config``; empty means valid."""
    view = _ConfigView(config, goal)
    out = []
    for idx, clause in enumerate(goal.constraints, start=1):
        if not _eval(clause, view, {}):
            out.append(Violation(idx, *clause_location(clause)))
    return out


# --------------------------------------------------------------------------
# Search


def wirable_pairs(goal: Goal) -> list[tuple[str, str, str, str]]:
    """Type-level (out type, out port, in type, in port) pairs named by ``connectsto``.

    The search only creates channels of these shapes: wiring intent is stated
    through ``connectsto`` alone.
    """
    directions = _directions(goal)
    pairs: set[tuple[str, str, str, str]] = set()

    def walk(expr, env):
        if isinstance(expr, (Forall, Exists)):
            inner = dict(env)
            for v in expr.vars:
                inner[v] = expr.domain.type_name
            walk(expr.body, inner)
        elif isinstance(expr, (And, Or)):
            for item in expr.items:
                walk(item, env)
        elif isinstance(expr, Not):
            walk(expr.item, env)
        elif isinstance(expr, ConnectsTo):
            lt, rt = env.get(expr.left.var), env.get(expr.right.var)
            if lt is None or rt is None:
                return
            dl = directions.get((lt, expr.left.port))
            dr = directions.get((rt, expr.right.port))
            if dl is None or dr is None or dl is dr:
                return
            if dl is Direction.OUT:
                pairs.add((lt, expr.left.port, rt, expr.right.port))
            else:
                pairs.add((rt, expr.right.port, lt, expr.left.port))

    for clause in goal.constraints:
        walk(clause, {})
    return sorted(pairs)


def _host_order(goal: Goal, seed: int) -> list[str]:
    hosts = sorted(goal.available_hosts, key=id_sort_key)
    if seed:
        random.Random(seed).shuffle(hosts)
    return hosts


class _Budget(Exception):
    pass


class _SearchView(_View):
    """Bounds over a partial assignment: counts fixed, hosts and channels filling in."""

    def __init__(self, goal: Goal, hosts: list[str], slots: list[tuple[str, str, str]], candidates: list[Channel]):
        self.goal = goal
        self.hosts = tuple(hosts)
        self.rank = {h: i for i, h in enumerate(hosts)}
        self.directions = _directions(goal)
        self.slots = slots
        self.types = {sid: t for sid, t, _ in slots}
        self.group = {sid: (t, g) for sid, t, g in slots}
        self.by_type: dict[str, tuple[str, ...]] = {}
        for sid, t, _ in slots:
            self.by_type[t] = self.by_type.get(t, ()) + (sid,)
        self.placement: dict[str, str] = {}
        # slots of one group take hosts in nondecreasing rank order
        self.last_rank: dict[tuple[str, str], int] = {}
        self.candidates = candidates
        self.var_of = {ch: i for i, ch in enumerate(candidates)}
        self.values: list[Tri] = [None] * len(candidates)
        self.incident: dict[str, list[int]] = {sid: [] for sid, _, _ in slots}
        for i, ch in enumerate(candidates):
            self.incident[ch.from_instance].append(i)
            self.incident[ch.to_instance].append(i)
        self._reach_cache: dict[str, tuple[dict, dict]] = {}

    # placement -----------------------------------------------------------

    def _can_receive(self, sid: str, host: str) -> bool:
        return self.rank[host] >= self.last_rank.get(self.group[sid], 0)

    def type_of(self, inst):
        return self.types[inst]

    def instances(self, type_name):
        return self.by_type.get(type_name, ())

    def on_host(self, inst, host):
        placed = self.placement.get(inst)
        if placed is not None:
            return placed == host
        return None if self._can_receive(inst, host) else False

    def card(self, type_name, host):
        insts = self.by_type.get(type_name, ())
        if host is None:
            return len(insts), len(insts)
        lo = hi = 0
        for i in insts:
            placed = self.placement.get(i)
            if placed is None:
                if self._can_receive(i, host):
                    hi += 1
            elif placed == host:
                lo += 1
                hi += 1
        return lo, hi

    # wiring --------------------------------------------------------------

    def channel(self, ch):
        idx = self.var_of.get(ch)
        return False if idx is None else self.values[idx]

    def attached(self, type_name, target):
        lo = hi = 0
        for v in self.by_type.get(type_name, ()):
            if v == target:
                continue
            present = maybe = False
            for idx in self.incident[v]:
                ch = self.candidates[idx]
                if not ch.touches(target):
                    continue
                val = self.values[idx]
                if val is True:
                    present = True
                    break
                if val is None:
                    maybe = True
            if present:
                lo += 1
                hi += 1
            elif maybe:
                hi += 1
        return lo, hi

    def invalidate(self) -> None:
        self._reach_cache.clear()

    def reachable(self, a, b):
        if a == b:
            return True
        tname = self.types[a]
        if tname not in self._reach_cache:
            nodes = self.by_type[tname]
            sure, maybe = [], []
            for idx, ch in enumerate(self.candidates):
                if self.types[ch.from_instance] != tname or self.types[ch.to_instance] != tname:
                    continue
                val = self.values[idx]
                if val is True:
                    sure.append(ch)
                    maybe.append(ch)
                elif val is None:
                    maybe.append(ch)
            self._reach_cache[tname] = (
                strongly_connected_reachability_raw(nodes, sure),
                strongly_connected_reachability_raw(nodes, maybe),
            )
        sure, maybe = self._reach_cache[tname]
        if b in sure[a]:
            return True
        if b not in maybe[a]:
            return False
        return None


@dataclass
class _Preference:
    """Survivors of a previous configuration that the search should try to keep."""

    counts: dict[str, int] = field(default_factory=dict)
    hosts: dict[str, list[str]] = field(default_factory=dict)  # type -> hosts of survivors, ranked
    survivors: dict[tuple[str, str], list[str]] = field(default_factory=dict)  # (type, host) -> ids
    channels: set[Channel] = field(default_factory=set)


def _host_lower_bound(goal: Goal) -> int:
    """Hosts that cannot stay empty, judged per host-quantified top-level clause."""
    empty = _ConfigView(Configuration(), goal)
    need = 0
    for clause in goal.constraints:
        if isinstance(clause, Forall) and clause.domain.is_host and clause.domain.within is None and len(clause.vars) == 1:
            var = clause.vars[0]
            try:
                n = sum(1 for h in empty.hosts if _eval(clause.body, empty, {var: h}) is False)
            except KeyError:
                continue
            need = max(need, n)
    return need


class _Search:
    def __init__(self, goal: Goal, opts: SolveOptions, pref: _Preference | None = None):
        self.goal = goal
        self.opts = opts
        self.pref = pref or _Preference()
        # declaration order decides which type claims the low-ranked hosts first
        self.types = [t.name for t in goal.component_types]
        self.hosts = _host_order(goal, opts.seed)
        self.max_count = opts.max_instances_per_type or len(self.hosts)
        self.pairs = wirable_pairs(goal)
        self.nodes = 0
        self.solutions: list[Configuration] = []
        self.seen: set[Configuration] = set()

    def tick(self) -> None:
        self.nodes += 1
        if self.nodes > self.opts.node_budget:
            raise _Budget

    def count_vectors(self) -> list[tuple[int, ...]]:
        lb = _host_lower_bound(self.goal)
        vectors = list(product(range(self.max_count + 1), repeat=len(self.types)))
        keep = [self.pref.counts.get(t, 0) for t in self.types]

        def key(vec):
            dropped = sum(max(0, k - c) for k, c in zip(keep, vec))
            total = sum(vec)
            return (dropped, abs(total - lb), vec)

        return sorted(vectors, key=key)

    def run(self) -> SolveResult:
        exhausted = True
        try:
            for vec in self.count_vectors():
                self.tick()
                self.try_counts(vec)
                if len(self.solutions) >= self.opts.max_solutions:
                    exhausted = False
                    break
        except _Budget:
            exhausted = False
            log.debug("node budget of %d exhausted", self.opts.node_budget)
        if self.solutions:
            status = SolveStatus.SAT
        elif exhausted:
            status = SolveStatus.UNSAT
        else:
            status = SolveStatus.BUDGET_EXHAUSTED
        return SolveResult(status, tuple(self.solutions), self.nodes)

    def try_counts(self, vec: tuple[int, ...]) -> None:
        # survivors of a previous configuration get their own slot group so
        # they can be pinned first without fighting the symmetry breaking
        keep_slots, new_slots = [], []
        for t, n in zip(self.types, vec):
            kept = min(n, self.pref.counts.get(t, 0))
            for k in range(1, n + 1):
                (keep_slots if k <= kept else new_slots).append((f"{t}-{k}", t, "keep" if k <= kept else "new"))
        slots = keep_slots + new_slots
        by_type: dict[str, list[str]] = {}
        for sid, t, _ in slots:
            by_type.setdefault(t, []).append(sid)
        candidates = []
        for ft, fp, tt, tp in self.pairs:
            for a in by_type.get(ft, ()):
                for b in by_type.get(tt, ()):
                    if a != b:
                        candidates.append(Channel(a, fp, b, tp))
        # keep each instance pair's channels adjacent so clauses decide early
        candidates.sort(
            key=lambda c: (
                min(id_sort_key(c.from_instance), id_sort_key(c.to_instance)),
                max(id_sort_key(c.from_instance), id_sort_key(c.to_instance)),
                id_sort_key(c.from_instance),
                c.from_port,
                c.to_port,
            )
        )
        view = _SearchView(self.goal, self.hosts, slots, candidates)
        open_clauses = self.filter(view, list(range(len(self.goal.constraints))))
        if open_clauses is None:
            return
        self.place(view, 0, open_clauses)

    def filter(self, view: _SearchView, open_clauses: list[int]) -> list[int] | None:
        """Drop clauses now known true; None if any is known false."""
        view.invalidate()
        still = []
        for idx in open_clauses:
            v = _eval(self.goal.constraints[idx], view, {})
            if v is False:
                return None
            if v is None:
                still.append(idx)
        return still

    # layer 2: placement -----------------------------------------------------

    def host_candidates(self, view: _SearchView, sid: str) -> list[str]:
        tname, group = view.group[sid]
        allowed = self.hosts[view.last_rank.get((tname, group), 0):]
        if group != "keep":
            return allowed
        position = sum(1 for other, t, g in view.slots if t == tname and g == "keep" and other in view.placement)
        wanted = self.pref.hosts[tname][position]
        if wanted not in allowed:
            return allowed
        return [wanted] + [h for h in allowed if h != wanted]

    def place(self, view: _SearchView, i: int, open_clauses: list[int]) -> None:
        if i == len(view.slots):
            self.wire(view, 0, open_clauses, self.channel_preferences(view))
            return
        sid = view.slots[i][0]
        group = view.group[sid]
        prev_rank = view.last_rank.get(group)
        for host in self.host_candidates(view, sid):
            self.tick()
            view.placement[sid] = host
            view.last_rank[group] = view.rank[host]
            still = self.filter(view, open_clauses)
            if still is not None:
                self.place(view, i + 1, still)
            del view.placement[sid]
            if prev_rank is None:
                view.last_rank.pop(group, None)
            else:
                view.last_rank[group] = prev_rank
            if len(self.solutions) >= self.opts.max_solutions:
                return

    # layer 3: wiring --------------------------------------------------------

    def slot_names(self, view: _SearchView) -> dict[str, str]:
        """Final instance ids: slots sitting where a survivor was keep its id."""
        names: dict[str, str] = {}
        used: set[str] = set()
        for sid, tname, _ in view.slots:
            pool = self.pref.survivors.get((tname, view.placement[sid]), [])
            for cand in pool:
                if cand not in used:
                    names[sid] = cand
                    used.add(cand)
                    break
        taken: dict[str, int] = {}
        for ids in self.pref.survivors.values():
            for ident in ids:
                prefix, num, _ = id_sort_key(ident)
                taken[prefix] = max(taken.get(prefix, 0), num)
        for sid, tname, _ in view.slots:
            if sid not in names:
                prefix = f"{tname}-"
                taken[prefix] = taken.get(prefix, 0) + 1
                names[sid] = f"{prefix}{taken[prefix]}"
        return names

    def channel_preferences(self, view: _SearchView) -> list[bool]:
        if not self.pref.channels:
            return [False] * len(view.candidates)
        names = self.slot_names(view)
        return [
            Channel(names[c.from_instance], c.from_port, names[c.to_instance], c.to_port) in self.pref.channels
            for c in view.candidates
        ]

    def wire(self, view: _SearchView, i: int, open_clauses: list[int], prefer: list[bool]) -> None:
        if i == len(view.candidates):
            if not open_clauses:
                self.record(view)
            return
        for value in (prefer[i], not prefer[i]):
            self.tick()
            view.values[i] = value
            still = self.filter(view, open_clauses) if open_clauses else open_clauses
            if still is not None:
                self.wire(view, i + 1, still, prefer)
            view.values[i] = None
            if len(self.solutions) >= self.opts.max_solutions:
                return
        view.invalidate()

    def record(self, view: _SearchView) -> None:
        names = self.slot_names(view)
        instances = tuple(ComponentInstance(names[sid], t, view.placement[sid]) for sid, t, _ in view.slots)
        channels = tuple(
            Channel(names[c.from_instance], c.from_port, names[c.to_instance], c.to_port)
            for c, v in zip(view.candidates, view.values)
            if v
        )
        config = Configuration(instances, channels, self.goal.revision)
        if config not in self.seen:
            self.seen.add(config)
            self.solutions.append(config)


def solve(goal: Goal, opts: SolveOptions | None = None) -> SolveResult:
    """Search for configurations of ``goal`` over its available hosts.

    Instance counts per type run from 0 to ``max_instances_per_type``; the
    verdict is UNSAT only when that whole space has been searched.
    """
    return _Search(goal, opts or SolveOptions()).run()


def surviving(previous: Configuration, goal: Goal) -> Configuration:
    """``previous`` minus instances on unavailable hosts or of unknown types."""
    alive = set(goal.available_hosts)
    known = set(goal.type_names)
    kept = tuple(i for i in previous.instances if i.host in alive and i.type_name in known)
    ids = {i.id for i in kept}
    chans = tuple(c for c in previous.channels if c.from_instance in ids and c.to_instance in ids)
    return Configuration(kept, chans, goal.revision)


def solve_incremental(goal: Goal, previous: Configuration, opts: SolveOptions | None = None) -> SolveResult:
    """Like ``solve``, but prefers solutions that keep ``previous``'s surviving parts.

    Surviving instances keep their ids and hosts where possible and their
    channels are tried first. If the survivors already satisfy the goal they
    are returned unchanged.
    """
    opts = opts or SolveOptions()
    keep = surviving(previous, goal)
    limit = opts.max_instances_per_type or len(goal.available_hosts)
    found: list[Configuration] = []
    within = all(len(keep.instances_of(t)) <= limit for t in goal.type_names)
    if within and not check_configuration(keep, goal):
        found.append(keep)
        if opts.max_solutions == 1:
            return SolveResult(SolveStatus.SAT, (keep,), 1)

    pref = _Preference()
    rank = {h: i for i, h in enumerate(_host_order(goal, opts.seed))}
    for inst in keep.instances:
        pref.counts[inst.type_name] = pref.counts.get(inst.type_name, 0) + 1
        pref.hosts.setdefault(inst.type_name, []).append(inst.host)
        pref.survivors.setdefault((inst.type_name, inst.host), []).append(inst.id)
    for hosts in pref.hosts.values():
        hosts.sort(key=rank.__getitem__)
    pref.channels = set(keep.channels)

    search = _Search(goal, replace(opts, max_solutions=opts.max_solutions - len(found)) if found else opts, pref)
    search.seen.update(found)
    result = search.run()
    solutions = tuple(found) + result.solutions
    status = SolveStatus.SAT if solutions else result.status
    return SolveResult(status, solutions, result.nodes_explored + 1)
