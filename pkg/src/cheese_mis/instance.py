"""Object families over planar graphs: data model, validation, generators."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import networkx as nx

from .errors import EmbeddingError, GenerationError, InvalidObjectError
from .planar_core import PlanarGraph, perturb, triangulate
from .seeding import rng


@dataclass(frozen=True)
class GraphObject:
    id: int
    vertices: tuple
    edges: tuple = ()

    @classmethod
    def make(cls, oid, vertices, edges=()):
        verts = tuple(sorted(set(int(v) for v in vertices)))
        es = tuple(sorted({(min(int(u), int(v)), max(int(u), int(v))) for u, v in edges}))
        return cls(int(oid), verts, es)

    @cached_property
    def vertex_set(self):
        return frozenset(self.vertices)

    def is_connected(self):
        if not self.vertices:
            return False
        adj = {v: [] for v in self.vertices}
        for u, v in self.edges:
            if u in adj and v in adj:
                adj[u].append(v)
                adj[v].append(u)
        seen = {self.vertices[0]}
        stack = [self.vertices[0]]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == len(self.vertices)

    @cached_property
    def tree_edges(self):
        """Canonical spanning tree: BFS from the smallest vertex, neighbours in index order."""
        adj = {v: [] for v in self.vertices}
        for u, v in self.edges:
            if u in adj and v in adj:
                adj[u].append(v)
                adj[v].append(u)
        for v in adj:
            adj[v].sort()
        root = self.vertices[0]
        seen = {root}
        queue = deque([root])
        out = []
        while queue:
            x = queue.popleft()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    out.append((min(x, y), max(x, y)))
                    queue.append(y)
        if len(seen) != len(self.vertices):
            raise InvalidObjectError(f"object {self.id} is disconnected")
        return tuple(out)

    def tree_path(self, a, b):
        """Path between two members inside the canonical spanning tree."""
        if a == b:
            return [a]
        adj = {v: [] for v in self.vertices}
        for u, v in self.tree_edges:
            adj[u].append(v)
            adj[v].append(u)
        prev = {a: None}
        queue = deque([a])
        while queue:
            x = queue.popleft()
            if x == b:
                break
            for y in adj[x]:
                if y not in prev:
                    prev[y] = x
                    queue.append(y)
        out = [b]
        while out[-1] != a:
            out.append(prev[out[-1]])
        out.reverse()
        return out

    def to_json(self):
        return {"id": self.id, "vertices": list(self.vertices), "edges": [list(e) for e in self.edges]}


class Instance:
    """A planar graph plus the object family (N = len(objects))."""

    def __init__(self, graph: PlanarGraph, objects, metric_seed: int = 0):
        self.graph = graph
        self.objects = list(objects)
        self.metric_seed = int(metric_seed)
        self.by_id = {o.id: o for o in self.objects}

    @property
    def N(self):
        return len(self.objects)

    @cached_property
    def metric(self):
        return perturb(self.graph, self.metric_seed)

    @cached_property
    def ids(self):
        return tuple(sorted(self.by_id))

    def obj(self, oid) -> GraphObject:
        return self.by_id[oid]

    def disjoint(self, a, b):
        return self.by_id[a].vertex_set.isdisjoint(self.by_id[b].vertex_set)

    def is_independent(self, ids):
        seen = set()
        for oid in ids:
            vs = self.by_id[oid].vertex_set
            if not seen.isdisjoint(vs):
                return False
            seen |= vs
        return True

    def to_json(self):
        data = self.graph.to_json()
        data["objects"] = [o.to_json() for o in self.objects]
        data["metric_seed"] = self.metric_seed
        return data

    @classmethod
    def from_json(cls, data):
        graph = PlanarGraph.from_json(data)
        try:
            objects = [
                GraphObject.make(o["id"], o["vertices"], o.get("edges", ()))
                for o in data["objects"]
            ]
            seed = int(data.get("metric_seed", 0))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidObjectError(f"malformed object list: {exc}") from exc
        return cls(graph, objects, seed)

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    def __eq__(self, other):
        return (
            isinstance(other, Instance)
            and self.graph == other.graph
            and self.objects == other.objects
            and self.metric_seed == other.metric_seed
        )

    __hash__ = None


def save(instance: Instance, path):
    with open(path, "w") as fh:
        fh.write(instance.dumps())
        fh.write("\n")


def load(path) -> Instance:
    with open(path) as fh:
        return Instance.from_json(json.load(fh))


def validate(instance: Instance):
    """List of violations; empty iff the instance is usable by the solver."""
    report = []
    g = instance.graph
    if not g.is_triangulation():
        report.append({"kind": "invalid-embedding", "detail": "graph is not a triangulation"})
    if not instance.objects:
        report.append({"kind": "no-objects", "detail": "family is empty"})
    seen_ids = set()
    for o in instance.objects:
        if o.id in seen_ids:
            report.append({"kind": "duplicate-id", "object": o.id})
        seen_ids.add(o.id)
        if not o.vertices:
            report.append({"kind": "empty-object", "object": o.id})
            continue
        bad = [v for v in o.vertices if not 0 <= v < g.n]
        if bad:
            report.append({"kind": "out-of-range", "object": o.id, "detail": bad})
            continue
        missing = [list(e) for e in o.edges if not g.has_edge(*e)]
        if missing:
            report.append({"kind": "edge-not-in-graph", "object": o.id, "detail": missing})
        if not o.is_connected():
            report.append({"kind": "disconnected-object", "object": o.id})
    return report


def validate_json(data):
    try:
        inst = Instance.from_json(data)
    except EmbeddingError as exc:
        return [{"kind": "invalid-embedding", "detail": str(exc)}]
    except InvalidObjectError as exc:
        return [{"kind": "malformed-objects", "detail": str(exc)}]
    return validate(inst)


def intersection_graph(instance: Instance) -> nx.Graph:
    """Objects adjacent iff their vertex sets intersect."""
    graph = nx.Graph()
    graph.add_nodes_from(instance.ids)
    owners = {}
    for o in instance.objects:
        for v in o.vertices:
            owners.setdefault(v, []).append(o.id)
    for ids in owners.values():
        for i, a in enumerate(ids):
            for b in ids[i + 1 :]:
                graph.add_edge(a, b)
    return graph


# -- generators -------------------------------------------------------------

DIAGONAL_LENGTH = Fraction(7, 5)


def grid_graph(rows, cols) -> PlanarGraph:
    """Triangulated grid: unit axis edges, one diagonal per cell, outer face fanned."""
    if rows < 2 or cols < 2:
        raise GenerationError("grid needs rows, cols >= 2")
    vid = lambda r, c: r * cols + c
    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((vid(r, c), vid(r, c + 1), Fraction(1)))
            if r + 1 < rows:
                edges.append((vid(r, c), vid(r + 1, c), Fraction(1)))
            if r + 1 < rows and c + 1 < cols:
                edges.append((vid(r, c), vid(r + 1, c + 1), DIAGONAL_LENGTH))
    n = rows * cols
    pos = [(v % cols, v // cols) for v in range(n)]
    incident = [[] for _ in range(n)]
    for e, (u, v, _) in enumerate(edges):
        incident[u].append(e)
        incident[v].append(e)
    rotation = []
    for v in range(n):
        x0, y0 = pos[v]

        def angle(e, v=v, x0=x0, y0=y0):
            u, w, _ = edges[e]
            x, y = pos[w if u == v else u]
            return math.atan2(y - y0, x - x0)

        rotation.append(sorted(incident[v], key=angle))
    return triangulate(PlanarGraph(n, edges, rotation))


def _induced_object(oid, vertices, graph: PlanarGraph):
    vs = sorted(set(vertices))
    vset = set(vs)
    es = [(u, v) for (u, v) in graph.edges if u in vset and v in vset]
    return GraphObject.make(oid, vs, es)


def parse_object_spec(spec):
    """``kind:count:size[:disjoint]`` items, comma separated.

    kinds: ``rect`` (size ``HxW``), ``ball`` (size = hop radius), ``cell``
    (single vertices, size omitted).
    """
    if isinstance(spec, list):
        return spec
    items = []
    for chunk in str(spec).split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        kind = parts[0]
        try:
            count = int(parts[1])
        except (IndexError, ValueError) as exc:
            raise GenerationError(f"bad object spec item {chunk!r}") from exc
        flags = set(parts[3:]) if len(parts) > 3 else set()
        size = parts[2] if len(parts) > 2 else ""
        if kind == "cell":
            if size == "disjoint":
                flags.add("disjoint")
            size = "1x1"
            kind = "rect"
        if kind == "rect":
            try:
                h, w = (int(x) for x in size.lower().split("x"))
            except ValueError as exc:
                raise GenerationError(f"rect size must be HxW, got {size!r}") from exc
            items.append({"kind": "rect", "count": count, "size": [h, w], "disjoint": "disjoint" in flags})
        elif kind == "ball":
            items.append({"kind": "ball", "count": count, "radius": int(size), "disjoint": "disjoint" in flags})
        else:
            raise GenerationError(f"unknown object kind {kind!r}")
    return items


def generate_grid(rows, cols, object_spec, seed, metric_seed=None) -> Instance:
    graph = grid_graph(rows, cols)
    items = parse_object_spec(object_spec)
    rand = rng(seed, "generate_grid", rows, cols)
    neighbours = [set() for _ in range(rows * cols)]
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            for dr, dc in ((0, 1), (1, 0), (1, 1), (0, -1), (-1, 0), (-1, -1)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < rows and 0 <= cc < cols:
                    neighbours[v].add(rr * cols + cc)
    objects = []
    used = set()
    for item in items:
        for _ in range(item["count"]):
            placed = False
            for _attempt in range(500):
                if item["kind"] == "rect":
                    h, w = item["size"]
                    if h > rows or w > cols or h < 1 or w < 1:
                        raise GenerationError(f"rect {h}x{w} does not fit a {rows}x{cols} grid")
                    r0 = rand.randrange(rows - h + 1)
                    c0 = rand.randrange(cols - w + 1)
                    verts = [(r0 + i) * cols + c0 + j for i in range(h) for j in range(w)]
                else:
                    radius = item["radius"]
                    if 2 * radius + 1 > min(rows, cols) or radius < 0:
                        raise GenerationError(f"ball radius {radius} does not fit a {rows}x{cols} grid")
                    centre = rand.randrange(rows * cols)
                    verts = {centre}
                    frontier = {centre}
                    for _ in range(radius):
                        frontier = {y for x in frontier for y in neighbours[x]} - verts
                        verts |= frontier
                    verts = sorted(verts)
                if item["disjoint"] and used.intersection(verts):
                    continue
                objects.append(_induced_object(len(objects), verts, graph))
                used.update(verts)
                placed = True
                break
            if not placed:
                raise GenerationError("could not place a disjoint object; grid too crowded")
    if metric_seed is None:
        metric_seed = seed
    return Instance(graph, objects, metric_seed)
