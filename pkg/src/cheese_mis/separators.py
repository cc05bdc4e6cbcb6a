"""Radial and Swiss-cheese separators, persistence, support reduction, Allowed."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from .errors import ConsistencyError, InvalidCycleError, NotIndependentError, PreconditionError
from .singular import classify_branching_point
from .voronoi import RadialCycle, Workspace, bp_node


@dataclass(frozen=True)
class RadialSeparator:
    support: tuple
    cycle: RadialCycle

    @property
    def length(self):
        return self.cycle.length

    def to_json(self):
        return {"support": list(self.support), "cycle": self.cycle.to_json()}


@dataclass(frozen=True)
class SwissCheeseSeparator:
    support: tuple                  # sorted object ids
    cycles: tuple                   # canonical RadialCycles, sorted by key
    region: frozenset = field(hash=False, compare=False)

    @staticmethod
    def make(support, cycles, region):
        cyc = sorted((c.canonical() for c in cycles), key=lambda c: c.key)
        return SwissCheeseSeparator(tuple(sorted(set(support))), tuple(cyc), frozenset(region))

    @property
    def complexity(self):
        return sum(c.length for c in self.cycles)

    @property
    def is_ripe(self):
        return 2 * len(self.support) <= 5 * self.complexity

    @cached_property
    def key(self):
        return (self.support, tuple(c.key for c in self.cycles), tuple(sorted(self.region)))

    def __eq__(self, other):
        return isinstance(other, SwissCheeseSeparator) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def to_json(self):
        return {
            "support": list(self.support),
            "cycles": [c.to_json() for c in self.cycles],
            "region": sorted(self.region),
            "complexity": self.complexity,
        }


def trivial_separator(instance) -> SwissCheeseSeparator:
    return SwissCheeseSeparator.make((), (), range(instance.graph.num_faces))


def canonical_encoding(scs: SwissCheeseSeparator):
    return scs.key


def _workspace(ctx):
    return ctx if isinstance(ctx, Workspace) else Workspace(ctx)


def bp_spokes(bundle, f):
    """The three spokes at branching point ``f`` as ``(owner, vertex tuple)``."""
    out = []
    for k in bundle.radial_rotation[bp_node(f)]:
        e = bundle.radial_edges[k]
        out.append((e.obj, e.spoke))
    return out


def cycle_spokes(bundle, cycle):
    seen = []
    for f in cycle.bps:
        seen.extend(bp_spokes(bundle, f))
    return seen


def conflicts(instance, q, spokes):
    """True iff object ``q`` is in conflict with one of ``spokes``."""
    metric = instance.metric
    dq = metric.field(instance.obj(q).vertex_set).dist
    for p, path in spokes:
        if p == q:
            continue
        dp = metric.field(instance.obj(p).vertex_set).dist
        for v in path:
            if dq[v] < dp[v]:
                return True
    return False


def is_compatible(ctx, sep: RadialSeparator, family) -> bool:
    ws = _workspace(ctx)
    inst = ws.instance
    fam = set(family)
    if not set(sep.support) <= fam:
        return False
    bundle = ws.bundle(sep.support)
    spokes = [path for _, path in cycle_spokes(bundle, sep.cycle)]
    return not any(
        bundle.in_conflict(q, path) for q in sorted(fam - set(sep.support)) for path in spokes
    )


def lift_cycle(ctx, sep: RadialSeparator, family) -> RadialCycle:
    ws = _workspace(ctx)
    if not ws.instance.is_independent(family):
        raise NotIndependentError("family is not independent")
    if not is_compatible(ws, sep, family):
        raise PreconditionError("separator is not compatible with the family")
    small = ws.bundle(sep.support)
    big = ws.bundle(family)
    if not big.is_cycle(sep.cycle):
        raise ConsistencyError("compatible cycle does not persist in the larger radial graph")
    for f in sep.cycle.bps:
        if sorted(bp_spokes(small, f)) != sorted(bp_spokes(big, f)):
            raise ConsistencyError(f"spokes at branching point {f} changed after lifting")
    return sep.cycle


def reduce_support(ctx, support, cycle: RadialCycle, check=True):
    """Small support keeping ``cycle`` radial: its objects plus bp witnesses."""
    ws = _workspace(ctx)
    bundle = ws.bundle(support)
    bundle.check_cycle(cycle)
    out = set(cycle.objects)
    for f in cycle.bps:
        out.update(classify_branching_point(bundle, f).objects)
    out = tuple(sorted(out))
    if 2 * len(out) > 5 * cycle.length:
        raise ConsistencyError("reduced support exceeds 5/2 of the cycle length")
    if check:
        lift_cycle(ws, RadialSeparator(out, cycle), support)
        if not ws.bundle(out).is_cycle(cycle):
            raise ConsistencyError("cycle is not radial for the reduced support")
    return out


def check_separator(ctx, scs: SwissCheeseSeparator):
    """Raise if ``scs`` is malformed.

    Cycles must be radial and edge-disjoint, the region must be one face of
    the union of their walks, and every cycle must border it.  Two walks may
    share a segment (a spoke or tree path through a common object); the
    region then touches that segment only at its vertices.
    """
    ws = _workspace(ctx)
    inst = ws.instance
    g = inst.graph
    if not inst.is_independent(scs.support):
        raise NotIndependentError("support is not independent")
    if not scs.cycles:
        return
    bundle = ws.bundle(scs.support)
    used = set()
    walls = set()
    walks = []
    for c in scs.cycles:
        bundle.check_cycle(c)
        keys = set(c.radial_keys())
        if used & keys:
            raise InvalidCycleError("cycles share a radial edge")
        used |= keys
        walk = bundle.gamma_walk(c)
        walks.append(walk)
        walls.update(walk.edges)
    labels, comps = g.flood_faces(walls)
    if not scs.region or sorted(scs.region) not in comps:
        raise InvalidCycleError("region is not a face of the union of the cycles")
    for walk in walks:
        if not any(
            (g.edge_faces[e][0] in scs.region) != (g.edge_faces[e][1] in scs.region) for e in walk.edges
        ):
            raise InvalidCycleError("cycle is not on the boundary of the region")


def walk_vertices(ctx, scs: SwissCheeseSeparator):
    ws = _workspace(ctx)
    if not scs.cycles:
        return frozenset()
    bundle = ws.bundle(scs.support)
    out = set()
    for c in scs.cycles:
        out.update(bundle.walk_vertices(c))
    return frozenset(out)


def object_inside(instance, q, region, blocked_vertices):
    g = instance.graph
    for v in instance.obj(q).vertices:
        if v in blocked_vertices:
            return False
        if not g.vertex_faces[v] <= region:
            return False
    return True


def allowed(ctx, scs: SwissCheeseSeparator, candidates=None):
    """Objects inside the region, disjoint from the support, not banned by the cycles."""
    ws = _workspace(ctx)
    inst = ws.instance
    cands = inst.ids if candidates is None else candidates
    taken = set()
    for p in scs.support:
        taken |= inst.obj(p).vertex_set
    walls = walk_vertices(ws, scs)
    spoke_vertices = set()
    bundle = ws.bundle(scs.support) if scs.cycles else None
    if bundle is not None:
        for c in scs.cycles:
            for _, path in cycle_spokes(bundle, c):
                spoke_vertices.update(path)
    region = scs.region
    out = []
    for q in cands:
        if not taken.isdisjoint(inst.obj(q).vertex_set):
            continue
        if not object_inside(inst, q, region, walls):
            continue
        if bundle is not None and not bundle.closer_set(q).isdisjoint(spoke_vertices):
            continue
        out.append(q)
    return tuple(out)
