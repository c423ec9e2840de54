"""Brute-force reference answers for type-graph reachability, shared by tests."""

from __future__ import annotations

import random

from ispgen.api_model import ApiModel, ConstructorDescriptor, ParameterDescriptor, TypeDescriptor


def random_model(rng: random.Random, max_nodes: int = 20) -> tuple[ApiModel, list[str]]:
    """A random library of up to ``max_nodes`` types, cycles allowed."""
    n = rng.randint(1, max_nodes)
    names = [f"g.T{i:02d}" for i in range(n)]
    types = {}
    for i, fqn in enumerate(names):
        supers = tuple(sorted(set(rng.sample(names[:i], k=min(i, rng.choice([0, 0, 1, 2]))))))
        ctors = []
        for j in range(rng.randint(0, 2)):
            params = tuple(
                ParameterDescriptor(f"p{k}", rng.choice(names + ["int", "str"]))
                for k in range(rng.randint(0, 3))
            )
            ctors.append(ConstructorDescriptor(fqn, params, f"T{i}#{j}"))
        kind = rng.choice(["reference", "reference", "abstract"])
        types[fqn] = TypeDescriptor(fqn, kind, supers, tuple(ctors))
    roots = rng.sample(names, k=rng.randint(0, min(3, n))) + rng.choice([[], ["int"]])
    return ApiModel("g", types=types), roots


def successor_map(model: ApiModel) -> dict[str, set[str]]:
    """Usage targets plus direct subtypes, read straight off the model."""
    succ = {fqn: set() for fqn in model.types}
    for t in model.types.values():
        for c in t.constructors:
            for p in c.params:
                if p.type_fqn in model.types:
                    succ[t.fqn].add(p.type_fqn)
        for sup in t.supertypes:
            succ[sup].add(t.fqn)
    return succ


def distances(succ: dict[str, set[str]], roots: list[str]) -> dict[str, int]:
    """Shortest hop count from any root (roots are 1) by repeated relaxation."""
    inf = len(succ) + 10
    dist = {v: inf for v in succ}
    for r in roots:
        if r in dist:
            dist[r] = 1
    changed = True
    while changed:
        changed = False
        for u, vs in succ.items():
            for v in vs:
                if dist[u] + 1 < dist[v]:
                    dist[v] = dist[u] + 1
                    changed = True
    return {v: d for v, d in dist.items() if d < inf}


def closure(nodes: set[str], succ: dict[str, set[str]]) -> dict[str, set[str]]:
    """Reflexive-transitive reachability inside ``nodes`` (Warshall)."""
    reach = {u: {u} | (succ[u] & nodes) for u in nodes}
    for k in nodes:
        for i in nodes:
            if k in reach[i]:
                reach[i] |= reach[k]
    return reach


def check_order(order: list[str], succ: dict[str, set[str]]) -> None:
    """Every usage between different strongly connected parts points forward."""
    nodes = set(order)
    reach = closure(nodes, succ)
    pos = {v: i for i, v in enumerate(order)}
    for u in nodes:
        for v in succ[u] & nodes:
            if u in reach[v]:
                continue  # same cycle, any order is fine
            assert pos[u] < pos[v], f"{u} must precede {v}"
