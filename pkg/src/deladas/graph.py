"""Strongly connected components and reachability over small directed graphs."""

from __future__ import annotations

from collections.abc import Hashable, Iterable, Mapping, Sequence


def tarjan_scc(nodes: Sequence[Hashable], edges: Mapping[Hashable, Iterable[Hashable]]) -> list[list[Hashable]]:
    """Tarjan's algorithm, iterative. Components come out in reverse topological order."""
    index: dict[Hashable, int] = {}
    low: dict[Hashable, int] = {}
    on_stack: set[Hashable] = set()
    stack: list[Hashable] = []
    out: list[list[Hashable]] = []
    counter = 0

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(edges.get(root, ())))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(edges.get(w, ()))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def reachability(nodes: Sequence[Hashable], edges: Mapping[Hashable, Iterable[Hashable]]) -> dict[Hashable, frozenset]:
    """Map each node to the set of nodes reachable from it (itself included).

    Collapses strongly connected components, then propagates reachable sets
    over the condensation DAG in reverse topological order.
    """
    comps = tarjan_scc(nodes, edges)
    comp_of = {v: i for i, comp in enumerate(comps) for v in comp}
    reach: list[frozenset] = []
    # Tarjan emits sinks first, so successors of comp i are already done.
    for i, comp in enumerate(comps):
        acc = set(comp)
        for v in comp:
            for w in edges.get(v, ()):
                j = comp_of[w]
                if j != i:
                    acc |= reach[j]
        reach.append(frozenset(acc))
    return {v: reach[comp_of[v]] for v in nodes}
