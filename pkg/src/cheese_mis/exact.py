"""Exact maximum independent set of objects, used as ground truth.

Disjointness is computed here from vertex bitmasks, independently of the
set-based predicate the solver uses.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BudgetError

DEFAULT_LIMIT = 24
DEFAULT_BUDGET = 2_000_000


@dataclass(frozen=True)
class ExactResult:
    value: int
    solution: tuple
    nodes: int

    def to_json(self):
        return {"value": self.value, "solution": list(self.solution), "nodes": self.nodes}


def vertex_masks(instance, ids=None):
    ids = instance.ids if ids is None else tuple(ids)
    out = {}
    for oid in ids:
        m = 0
        for v in instance.obj(oid).vertices:
            m |= 1 << v
        out[oid] = m
    return out


def pairwise_disjoint(instance, ids):
    seen = 0
    for m in vertex_masks(instance, ids).values():
        if seen & m:
            return False
        seen |= m
    return True


def _conflict_masks(masks, order):
    n = len(order)
    adj = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if masks[order[i]] & masks[order[j]]:
                adj[i] |= 1 << j
                adj[j] |= 1 << i
    return adj


def _bits(mask):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _clique_cover(cand, adj):
    """Greedy clique cover size of the conflict graph on ``cand``."""
    count = 0
    rest = cand
    while rest:
        v = (rest & -rest).bit_length() - 1
        clique = adj[v] & rest
        rest &= ~(1 << v)
        while clique:
            u = (clique & -clique).bit_length() - 1
            rest &= ~(1 << u)
            clique &= adj[u]
        count += 1
    return count


def _greedy(cand, adj):
    chosen = 0
    while cand:
        v = min(_bits(cand), key=lambda x: (bin(adj[x] & cand).count("1"), x))
        chosen |= 1 << v
        cand &= ~(adj[v] | (1 << v))
    return chosen


def exact_mis(instance, budget=None, limit=DEFAULT_LIMIT, ids=None) -> ExactResult:
    """Branch and bound: greedy lower bound, clique-cover upper bound."""
    order = sorted(instance.ids if ids is None else set(ids))
    if len(order) > limit and budget is None:
        raise BudgetError(f"{len(order)} objects exceed the exact-search limit of {limit}")
    budget = DEFAULT_BUDGET if budget is None else budget
    masks = vertex_masks(instance, order)
    adj = _conflict_masks(masks, order)
    full = (1 << len(order)) - 1
    best = [_greedy(full, adj)]
    best_size = [bin(best[0]).count("1")]
    nodes = [0]

    def search(cand, chosen, size):
        nodes[0] += 1
        if nodes[0] > budget:
            raise BudgetError(f"exact search exceeded {budget} nodes")
        if not cand:
            if size > best_size[0]:
                best_size[0] = size
                best[0] = chosen
            return
        if size + _clique_cover(cand, adj) <= best_size[0]:
            return
        # isolated candidates are always taken
        free = 0
        for v in _bits(cand):
            if not adj[v] & cand:
                free |= 1 << v
        if free:
            search(cand & ~free, chosen | free, size + bin(free).count("1"))
            return
        v = max(_bits(cand), key=lambda x: (bin(adj[x] & cand).count("1"), -x))
        search(cand & ~(adj[v] | (1 << v)), chosen | (1 << v), size + 1)
        search(cand & ~(1 << v), chosen, size)

    search(full, 0, 0)
    sol = tuple(order[i] for i in _bits(best[0]))
    if not pairwise_disjoint(instance, sol):
        raise AssertionError("exact search produced overlapping objects")
    return ExactResult(best_size[0], sol, nodes[0])
