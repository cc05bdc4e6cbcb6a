"""Voronoi partition, diagram, radial graph, spokes, closed walks and diamonds.

Everything for one independent family lives in a :class:`VoronoiBundle`,
built lazily stage by stage.  Radial-graph nodes are tagged tuples:
``("o", object_id)`` and ``("b", face_index)``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property

from .errors import ConsistencyError, InvalidCycleError, NotIndependentError


def obj_node(p):
    return ("o", p)


def bp_node(f):
    return ("b", f)


@dataclass
class DiagramEdge:
    id: int
    ends: tuple          # (f, g) branching points, f == g for a loop
    nodes: tuple         # dual nodes f, interior..., g
    arcs: tuple          # primal edge ids of the dual arcs along the chain

    @property
    def interior(self):
        return self.nodes[1:-1]


@dataclass
class Diagram:
    degenerate: bool
    branching_points: tuple = ()
    edges: list = field(default_factory=list)
    arc_edge: dict = field(default_factory=dict)     # core arc -> diagram edge id
    bp_arcs: dict = field(default_factory=dict)      # bp -> its three core arcs
    face_of_object: dict = field(default_factory=dict)
    num_faces: int = 0
    face_owner: dict = field(default_factory=dict)   # G-face -> diagram edge id or ("b", f)

    def degree(self, f):
        return sum((e.ends[0] == f) + (e.ends[1] == f) for e in self.edges)

    def is_connected(self):
        if not self.branching_points:
            return False
        adj = {f: set() for f in self.branching_points}
        for e in self.edges:
            a, b = e.ends
            adj[a].add(b)
            adj[b].add(a)
        start = self.branching_points[0]
        seen = {start}
        stack = [start]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == len(self.branching_points)


@dataclass(frozen=True)
class RadialEdge:
    id: int
    obj: int
    bp: int
    label: int
    spoke: tuple       # label ... nearest vertex of obj


@dataclass(frozen=True)
class RadialCycle:
    """Cycle ``p1 f1 p2 f2 ... pr fr p1``; step i is ``(p_i, f_i, u_i, v_i)``.

    ``u_i`` labels edge ``p_i f_i`` and ``v_i`` labels edge ``f_i p_{i+1}``.
    """

    steps: tuple

    @property
    def length(self):
        return 2 * len(self.steps)

    @property
    def objects(self):
        return tuple(s[0] for s in self.steps)

    @property
    def bps(self):
        return tuple(s[1] for s in self.steps)

    def radial_keys(self):
        out = []
        for p, f, u, v in self.steps:
            out.append((f, u))
            out.append((f, v))
        return out

    def reversed(self):
        r = len(self.steps)
        out = []
        for i in range(r - 1, -1, -1):
            p, f, u, v = self.steps[i]
            nxt = self.steps[(i + 1) % r][0]
            out.append((nxt, f, v, u))
        return RadialCycle(tuple(out))

    @cached_property
    def key(self):
        """Minimal rotation over both orientations."""
        best = None
        for cyc in (self.steps, self.reversed().steps):
            for i in range(len(cyc)):
                cand = cyc[i:] + cyc[:i]
                if best is None or cand < best:
                    best = cand
        return best

    def canonical(self):
        return RadialCycle(self.key)

    def to_json(self):
        return [list(s) for s in self.steps]


@dataclass
class ClosedWalk:
    vertices: tuple            # cyclic; vertices[-1] is adjacent to vertices[0]
    edges: tuple               # edge ids, edges[i] joins vertices[i], vertices[i+1]
    regions: tuple             # two sorted face lists (second may be empty)

    @cached_property
    def edge_set(self):
        return frozenset(self.edges)

    @cached_property
    def vertex_set(self):
        return frozenset(self.vertices)

    def simple_edges(self):
        """Edges traversed an odd number of times (the actual curve)."""
        counts = Counter(self.edges)
        return frozenset(e for e, c in counts.items() if c % 2 == 1)


@dataclass
class Diamond:
    edge: int                  # diagram edge id
    cycle: RadialCycle         # the 4-cycle p f q g
    rad_face: int
    region: tuple              # sorted G-faces strictly inside
    closure: frozenset         # vertices of the closed region

    @property
    def objects(self):
        return self.cycle.objects


class VoronoiBundle:
    """Voronoi machinery for one independent family of object ids."""

    def __init__(self, instance, family):
        self.instance = instance
        self.graph = instance.graph
        self.metric = instance.metric
        self.family = tuple(sorted(set(family)))
        if not self.family:
            raise NotIndependentError("family must be nonempty")
        if not instance.is_independent(self.family):
            raise NotIndependentError(f"family {self.family} is not pairwise disjoint")
        self.fields = {p: self.metric.field(instance.obj(p).vertex_set) for p in self.family}

    # -- partition ----------------------------------------------------------

    @cached_property
    def owner(self):
        n = self.graph.n
        out = [-1] * n
        best = [None] * n
        for p in self.family:
            d = self.fields[p].dist
            for u in range(n):
                if best[u] is None or d[u] < best[u]:
                    best[u] = d[u]
                    out[u] = p
                elif d[u] == best[u]:
                    raise ConsistencyError(f"tie at vertex {u} between objects")
        return out

    @cached_property
    def cells(self):
        out = {p: [] for p in self.family}
        for u, p in enumerate(self.owner):
            out[p].append(u)
        return out

    def dist_to(self, u, p):
        return self.fields[p].dist[u]

    def closer_set(self, q):
        """Vertices strictly closer to object ``q`` than to their owner.

        ``q`` conflicts with a spoke iff the spoke meets this set.
        """
        cache = self.__dict__.setdefault("_closer", {})
        out = cache.get(q)
        if out is None:
            if q in self.fields:
                out = frozenset()
            else:
                dq = self.metric.field(self.instance.obj(q).vertex_set).dist
                owner = self.owner
                fields = self.fields
                out = frozenset(v for v in range(self.graph.n) if dq[v] < fields[owner[v]].dist[v])
            cache[q] = out
        return out

    def in_conflict(self, q, spoke):
        return not self.closer_set(q).isdisjoint(spoke)

    # -- trees ----------------------------------------------------------------

    @cached_property
    def trees(self):
        """``p -> (T(p) edge ids, T^(p) edge ids)``."""
        g = self.graph
        out = {}
        for p in self.family:
            obj = self.instance.obj(p)
            small = {g.edge_between(u, v) for u, v in obj.tree_edges}
            big = set(small)
            nxt = self.fields[p].next_hop
            for u in self.cells[p]:
                if nxt[u] >= 0:
                    if self.owner[nxt[u]] != p:
                        raise ConsistencyError("shortest path leaves its Voronoi cell")
                    big.add(g.edge_between(u, nxt[u]))
            out[p] = (frozenset(small), frozenset(big))
        return out

    @cached_property
    def tree_edge_set(self):
        out = set()
        for _, big in self.trees.values():
            out |= big
        return frozenset(out)

    def spoke(self, u):
        return tuple(self.fields[self.owner[u]].path(u))

    def big_tree_path(self, p, a, b):
        """Path between two cell vertices inside T^(p)."""
        g = self.graph
        big = self.trees[p][1]
        prev = {a: None}
        stack = [a]
        while stack:
            x = stack.pop()
            if x == b:
                break
            for e in g.rotation[x]:
                if e in big:
                    y = g.other(e, x)
                    if y not in prev:
                        prev[y] = x
                        stack.append(y)
        out = [b]
        while out[-1] != a:
            out.append(prev[out[-1]])
        out.reverse()
        return out

    # -- diagram --------------------------------------------------------------

    @cached_property
    def diagram(self) -> Diagram:
        if len(self.family) < 3:
            return Diagram(degenerate=True, num_faces=len(self.family))
        g = self.graph
        nf = g.num_faces
        tree = self.tree_edge_set
        kept = [e for e in range(len(g.edges)) if e not in tree]
        inc = [set() for _ in range(nf)]
        for e in kept:
            a, b = g.edge_faces[e]
            inc[a].add(e)
            inc[b].add(e)
        alive = [True] * nf
        pruned_parent = {}
        queue = [x for x in range(nf) if len(inc[x]) <= 1]
        while queue:
            x = queue.pop()
            if not alive[x] or len(inc[x]) > 1:
                continue
            alive[x] = False
            if inc[x]:
                (e,) = inc[x]
                y = g.face_neighbor(x, e)
                pruned_parent[x] = y
                inc[y].discard(e)
                inc[x].clear()
                if len(inc[y]) <= 1:
                    queue.append(y)
        bps = tuple(x for x in range(nf) if alive[x] and len(inc[x]) == 3)
        if not bps:
            return Diagram(degenerate=True, num_faces=len(self.family))
        extra = [x for x in range(nf) if alive[x] and len(inc[x]) not in (2, 3)]
        if extra:
            raise ConsistencyError("core contains a node of degree other than 2 or 3")
        bpset = set(bps)
        edges = []
        arc_edge = {}
        bp_arcs = {f: tuple(sorted(inc[f])) for f in bps}
        for f in bps:
            for a0 in bp_arcs[f]:
                if a0 in arc_edge:
                    continue
                nodes = [f]
                arcs = [a0]
                cur = g.face_neighbor(f, a0)
                prev_arc = a0
                while cur not in bpset:
                    nodes.append(cur)
                    (nxt_arc,) = inc[cur] - {prev_arc}
                    arcs.append(nxt_arc)
                    prev_arc = nxt_arc
                    cur = g.face_neighbor(cur, nxt_arc)
                nodes.append(cur)
                eid = len(edges)
                edges.append(DiagramEdge(eid, (f, cur), tuple(nodes), tuple(arcs)))
                for a in arcs:
                    arc_edge[a] = eid
        face_owner = {}
        for e in edges:
            for x in e.interior:
                face_owner[x] = e.id
        for f in bps:
            face_owner[f] = ("b", f)

        def resolve(x):
            trail = []
            while x not in face_owner:
                trail.append(x)
                x = pruned_parent[x]
            val = face_owner[x]
            for t in trail:
                face_owner[t] = val
            return val

        for x in range(nf):
            resolve(x)
        # diagram faces: vertex components through edges not crossed by the core
        core = set(arc_edge)
        comp = [-1] * g.n
        ncomp = 0
        for s in range(g.n):
            if comp[s] >= 0:
                continue
            comp[s] = ncomp
            stack = [s]
            while stack:
                x = stack.pop()
                for e in g.rotation[x]:
                    if e in core:
                        continue
                    y = g.other(e, x)
                    if comp[y] < 0:
                        comp[y] = ncomp
                        stack.append(y)
            ncomp += 1
        face_of_object = {}
        for p in self.family:
            ids = {comp[v] for v in self.instance.obj(p).vertices}
            if len(ids) != 1:
                raise ConsistencyError(f"object {p} straddles diagram faces")
            face_of_object[p] = ids.pop()
        return Diagram(
            degenerate=False,
            branching_points=bps,
            edges=edges,
            arc_edge=arc_edge,
            bp_arcs=bp_arcs,
            face_of_object=face_of_object,
            num_faces=ncomp,
            face_owner=face_owner,
        )

    # -- radial graph ---------------------------------------------------------

    @cached_property
    def radial_edges(self):
        out = []
        self.radial_index = {}
        if self.diagram.degenerate:
            return out
        g = self.graph
        for f in self.diagram.branching_points:
            for u in g.faces[f]:
                k = len(out)
                out.append(RadialEdge(k, self.owner[u], f, u, self.spoke(u)))
                self.radial_index[(f, u)] = k
        return out

    def radial_edge(self, f, u):
        self.radial_edges
        return self.radial_edges[self.radial_index[(f, u)]]

    def has_radial_edge(self, f, u, p=None):
        self.radial_edges
        k = self.radial_index.get((f, u))
        return k is not None and (p is None or self.radial_edges[k].obj == p)

    @cached_property
    def radial_rotation(self):
        """ccw list of radial edge ids per radial node."""
        edges = self.radial_edges
        rot = {}
        if not edges:
            return rot
        g = self.graph
        bpset = set(self.diagram.branching_points)
        for f in self.diagram.branching_points:
            rot[bp_node(f)] = [self.radial_index[(f, u)] for u in g.faces[f]]
        for p in self.family:
            corners = self._tree_tour_corners(p)
            ids = []
            for v, j in reversed(corners):
                face = g.corner_face[v][j]
                if face in bpset:
                    ids.append(self.radial_index[(face, v)])
            expected = sum(1 for e in edges if e.obj == p)
            if len(ids) != expected or len(set(ids)) != expected:
                raise ConsistencyError(f"radial rotation at object {p} is inconsistent")
            if ids:
                rot[obj_node(p)] = ids
        return rot

    def _tree_tour_corners(self, p):
        """Corners met walking around T^(p) in clockwise order."""
        g = self.graph
        big = self.trees[p][1]
        cell = self.cells[p]
        start_v = cell[0]
        tree_darts = [g.dart(u, v) for e in big for (u, v) in [g.edges[e]]]
        if not tree_darts:
            d = len(g.rotation[start_v])
            return [(start_v, j) for j in range(d - 1, -1, -1)]
        d0 = min(tree_darts)
        out = []
        d = d0
        while True:
            y = g.head(d)
            rot = g.rotation[y]
            i = g.pos[y][d >> 1]
            k = i
            while True:
                k = (k - 1) % len(rot)
                out.append((y, k))
                if rot[k] in big:
                    break
            e2 = rot[k]
            d = 2 * e2 + (0 if g.edges[e2][0] == y else 1)
            if d == d0:
                break
        return out

    def radial_node_of_dart(self, dart):
        e = self.radial_edges[dart >> 1]
        return obj_node(e.obj) if dart & 1 == 0 else bp_node(e.bp)

    def radial_head(self, dart):
        e = self.radial_edges[dart >> 1]
        return bp_node(e.bp) if dart & 1 == 0 else obj_node(e.obj)

    def radial_next(self, dart):
        h = self.radial_head(dart)
        rot = self.radial_rotation[h]
        k = rot[(rot.index(dart >> 1) - 1) % len(rot)]
        return 2 * k + (0 if h[0] == "o" else 1)

    @cached_property
    def radial_faces(self):
        edges = self.radial_edges
        self.radial_dart_face = [-1] * (2 * len(edges))
        faces = []
        for d0 in range(2 * len(edges)):
            if self.radial_dart_face[d0] >= 0:
                continue
            fid = len(faces)
            cyc = []
            d = d0
            while self.radial_dart_face[d] < 0:
                self.radial_dart_face[d] = fid
                cyc.append(d)
                d = self.radial_next(d)
            faces.append(tuple(cyc))
        return faces

    def radial_edge_faces(self, k):
        self.radial_faces
        return self.radial_dart_face[2 * k], self.radial_dart_face[2 * k + 1]

    def bp_corner_faces(self, f):
        """Radial faces at the three corners of bp ``f``, keyed by label pair."""
        self.radial_faces
        rot = self.radial_rotation[bp_node(f)]
        out = {}
        for i in range(3):
            k_in = rot[i]
            # arriving at f along k_in, the face continues with rot[i-1]
            fid = self.radial_dart_face[2 * k_in]
            pair = frozenset((self.radial_edges[k_in].label, self.radial_edges[rot[i - 1]].label))
            out[pair] = fid
        return out

    # -- diamonds ---------------------------------------------------------------

    @cached_property
    def diamonds(self):
        if self.diagram.degenerate:
            return []
        g = self.graph
        dg = self.diagram
        by_edge = {}
        for fid, darts in enumerate(self.radial_faces):
            if len(darts) != 4:
                raise ConsistencyError(f"radial face {fid} has length {len(darts)}")
            seen_edges = set()
            for i, d in enumerate(darts):
                if d & 1 == 0:
                    k_in, k_out = d >> 1, darts[(i + 1) % 4] >> 1
                    a = self.radial_edges[k_in].label
                    b = self.radial_edges[k_out].label
                    seen_edges.add(dg.arc_edge[g.edge_between(a, b)])
            if len(seen_edges) != 1:
                raise ConsistencyError(f"radial face {fid} spans several diagram edges")
            eid = seen_edges.pop()
            if eid in by_edge:
                raise ConsistencyError(f"diagram edge {eid} has two diamonds")
            start = next(i for i, d in enumerate(darts) if d & 1 == 0)
            ordered = darts[start:] + darts[:start]
            steps = []
            for i in (0, 2):
                ka = self.radial_edges[ordered[i] >> 1]
                kb = self.radial_edges[ordered[i + 1] >> 1]
                steps.append((ka.obj, ka.bp, ka.label, kb.label))
            by_edge[eid] = (fid, RadialCycle(tuple(steps)))
        if len(by_edge) != len(dg.edges):
            raise ConsistencyError("diamond count differs from diagram edge count")
        regions = {e.id: [] for e in dg.edges}
        for x, val in dg.face_owner.items():
            if not isinstance(val, tuple):
                regions[val].append(x)
        out = []
        for e in dg.edges:
            fid, cyc = by_edge[e.id]
            region = tuple(sorted(regions[e.id]))
            closure = set(self.walk_vertices(cyc))
            for x in region:
                closure.update(g.faces[x])
            out.append(Diamond(e.id, cyc, fid, region, frozenset(closure)))
        return out

    def diamond_of_rad_face(self, fid):
        for d in self.diamonds:
            if d.rad_face == fid:
                return d
        raise KeyError(fid)

    @cached_property
    def rad_face_diamond(self):
        return {d.rad_face: d for d in self.diamonds}

    # -- cycles and walks -----------------------------------------------------

    def check_cycle(self, cycle: RadialCycle):
        steps = cycle.steps
        if not steps:
            raise InvalidCycleError("empty cycle")
        objs = cycle.objects
        fs = cycle.bps
        if len(set(objs)) != len(objs) or len(set(fs)) != len(fs):
            raise InvalidCycleError("cycle repeats a node")
        r = len(steps)
        for i, (p, f, u, v) in enumerate(steps):
            nxt = steps[(i + 1) % r][0]
            if u == v:
                raise InvalidCycleError("cycle reuses a radial edge")
            if not self.has_radial_edge(f, u, p) or not self.has_radial_edge(f, v, nxt):
                raise InvalidCycleError(f"step {i} is not a pair of radial edges")

    def is_cycle(self, cycle):
        try:
            self.check_cycle(cycle)
        except InvalidCycleError:
            return False
        return True

    def walk_vertices(self, cycle: RadialCycle):
        r = len(cycle.steps)
        seq = []
        x = self.spoke(cycle.steps[-1][3])[-1]
        for i in range(r):
            p, f, u, v = cycle.steps[i]
            su = self.spoke(u)
            sv = self.spoke(v)
            seq.extend(self.instance.obj(p).tree_path(x, su[-1]))
            seq.extend(reversed(su[:-1]))
            seq.extend(sv)
            x = sv[-1]
        clean = []
        for y in seq:
            if not clean or clean[-1] != y:
                clean.append(y)
        if len(clean) > 1 and clean[-1] == clean[0]:
            clean.pop()
        return clean

    def gamma_walk(self, cycle: RadialCycle) -> ClosedWalk:
        cache = self.__dict__.setdefault("_walks", {})
        hit = cache.get(cycle.steps)
        if hit is None:
            hit = cache[cycle.steps] = self._gamma_walk(cycle)
        return hit

    def _gamma_walk(self, cycle: RadialCycle) -> ClosedWalk:
        self.check_cycle(cycle)
        g = self.graph
        verts = self.walk_vertices(cycle)
        m = len(verts)
        edges = tuple(g.edge_between(verts[i], verts[(i + 1) % m]) for i in range(m)) if m > 1 else ()
        _, comps = g.flood_faces(set(edges))
        if len(comps) > 2:
            raise ConsistencyError("closed walk splits the sphere into more than two regions")
        if len(comps) == 1:
            regions = (tuple(comps[0]), ())
        else:
            # first region: the one left of the first once-traversed edge
            simple = Counter(edges)
            i = next((i for i, e in enumerate(edges) if simple[e] % 2 == 1), 0)
            left = g.dart_face[g.dart(verts[i], verts[(i + 1) % m])]
            a, b = comps
            regions = (tuple(a), tuple(b)) if left in a else (tuple(b), tuple(a))
        return ClosedWalk(tuple(verts), edges, regions)

    def cycle_sides(self, cycle: RadialCycle):
        """Branching points strictly on each side of a radial cycle, via radial faces."""
        edges_in = {self.radial_index[k] for k in cycle.radial_keys()}
        faces = self.radial_faces
        nfaces = len(faces)
        label = [-1] * nfaces
        comp = 0
        for s in range(nfaces):
            if label[s] >= 0:
                continue
            label[s] = comp
            stack = [s]
            while stack:
                x = stack.pop()
                for d in faces[x]:
                    k = d >> 1
                    if k in edges_in:
                        continue
                    for y in self.radial_edge_faces(k):
                        if label[y] < 0:
                            label[y] = comp
                            stack.append(y)
            comp += 1
        on = set(cycle.bps)
        sides = [set() for _ in range(comp)]
        for f in self.diagram.branching_points:
            if f in on:
                continue
            fid = self.radial_dart_face[2 * self.radial_rotation[bp_node(f)][0]]
            sides[label[fid]].add(f)
        while len(sides) < 2:
            sides.append(set())
        return [frozenset(s) for s in sides]

    # -- reporting ----------------------------------------------------------------

    def to_json(self):
        dg = self.diagram
        return {
            "family": list(self.family),
            "degenerate": dg.degenerate,
            "branching_points": list(dg.branching_points),
            "diagram_edges": [
                {"id": e.id, "ends": list(e.ends), "arcs": list(e.arcs)} for e in dg.edges
            ],
            "radial_edges": [
                {"id": e.id, "object": e.obj, "bp": e.bp, "label": e.label, "spoke": list(e.spoke)}
                for e in self.radial_edges
            ],
        }


class Workspace:
    """Per-instance cache of Voronoi bundles keyed by family."""

    def __init__(self, instance):
        self.instance = instance
        self._bundles = {}

    def bundle(self, family) -> VoronoiBundle:
        key = tuple(sorted(set(family)))
        b = self._bundles.get(key)
        if b is None:
            b = VoronoiBundle(self.instance, key)
            self._bundles[key] = b
        return b


# -- module-level operations -------------------------------------------------------


def partition(instance, family):
    return VoronoiBundle(instance, family).owner


def build_diagram(bundle: VoronoiBundle):
    return bundle.trees, bundle.diagram


def build_radial(bundle: VoronoiBundle):
    return bundle.radial_edges, bundle.radial_rotation


def in_conflict(metric, q_vertices, owner_vertices, spoke):
    """True iff some spoke vertex is strictly closer to ``q`` than to the spoke's owner."""
    dq = metric.field(q_vertices).dist
    dp = metric.field(owner_vertices).dist
    return any(dq[v] < dp[v] for v in spoke)


def gamma_walk(bundle: VoronoiBundle, cycle: RadialCycle) -> ClosedWalk:
    return bundle.gamma_walk(cycle)


def diamonds(bundle: VoronoiBundle):
    return bundle.diamonds


def diamond_weight(instance, diamond: Diamond, family):
    skip = set(diamond.objects)
    return sum(
        1
        for q in family
        if q not in skip and not instance.obj(q).vertex_set.isdisjoint(diamond.closure)
    )
