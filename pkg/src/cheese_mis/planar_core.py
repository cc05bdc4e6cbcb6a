"""Sphere-embedded planar graphs, triangulation, and the perturbed metric.

The embedding is purely combinatorial: ``rotation[v]`` lists the edges at
``v`` in counter-clockwise order.  A dart is ``2 * e + d`` where ``d = 0``
runs ``u -> v`` for ``edges[e] == (u, v)`` and ``d = 1`` runs back.  Faces
are traced keeping the face on the left: arriving at ``v`` along ``e``, the
walk continues along the edge clockwise-before ``e`` in ``rotation[v]``.
"""

from __future__ import annotations

import heapq
import math
import threading
from fractions import Fraction

from .errors import DegenerateMetricError, EmbeddingError, InvalidObjectError
from .seeding import unit_hash


def parse_length(text) -> Fraction:
    value = Fraction(text)
    if value <= 0:
        raise EmbeddingError(f"edge length must be positive, got {text!r}")
    return value


def format_length(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


class PlanarGraph:
    """Simple connected graph with a rotation system on the sphere."""

    def __init__(self, n, edges, rotation):
        self.n = int(n)
        self.edges = []
        self.lengths = []
        for u, v, length in edges:
            self.edges.append((int(u), int(v)))
            self.lengths.append(Fraction(length))
        self.rotation = [tuple(int(e) for e in r) for r in rotation]
        self._validate()
        self._trace_faces()

    # -- construction ---------------------------------------------------

    def _validate(self):
        n = self.n
        if n < 1:
            raise EmbeddingError("graph needs at least one vertex")
        if len(self.rotation) != n:
            raise EmbeddingError("rotation must list every vertex")
        self.edge_index = {}
        for e, (u, v) in enumerate(self.edges):
            if not (0 <= u < n and 0 <= v < n):
                raise EmbeddingError(f"edge {e} has an endpoint out of range")
            if u == v:
                raise EmbeddingError(f"edge {e} is a loop")
            key = (min(u, v), max(u, v))
            if key in self.edge_index:
                raise EmbeddingError(f"edge {e} duplicates edge {self.edge_index[key]}")
            if self.lengths[e] <= 0:
                raise EmbeddingError(f"edge {e} has non-positive length")
            self.edge_index[key] = e
        self.pos = [dict() for _ in range(n)]
        for v, rot in enumerate(self.rotation):
            for i, e in enumerate(rot):
                if not 0 <= e < len(self.edges) or v not in self.edges[e]:
                    raise EmbeddingError(f"rotation of {v} lists edge {e} not incident to it")
                if e in self.pos[v]:
                    raise EmbeddingError(f"rotation of {v} repeats edge {e}")
                self.pos[v][e] = i
        for e, (u, v) in enumerate(self.edges):
            if e not in self.pos[u] or e not in self.pos[v]:
                raise EmbeddingError(f"edge {e} missing from a rotation")
        self.adjacency = [[] for _ in range(n)]
        for v, rot in enumerate(self.rotation):
            self.adjacency[v] = [self.other(e, v) for e in rot]
        seen = {0}
        stack = [0]
        while stack:
            x = stack.pop()
            for y in self.adjacency[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        if len(seen) != n:
            raise EmbeddingError("graph is not connected")

    def other(self, e, v):
        a, b = self.edges[e]
        return b if v == a else a

    def tail(self, dart):
        u, v = self.edges[dart >> 1]
        return u if dart & 1 == 0 else v

    def head(self, dart):
        u, v = self.edges[dart >> 1]
        return v if dart & 1 == 0 else u

    def dart(self, u, v):
        e = self.edge_index[(min(u, v), max(u, v))]
        return 2 * e + (0 if self.edges[e][0] == u else 1)

    def next_dart(self, dart):
        h = self.head(dart)
        e = dart >> 1
        rot = self.rotation[h]
        e2 = rot[(self.pos[h][e] - 1) % len(rot)]
        return 2 * e2 + (0 if self.edges[e2][0] == h else 1)

    def _trace_faces(self):
        m = len(self.edges)
        self.dart_face = [-1] * (2 * m)
        self.face_darts = []
        for d0 in range(2 * m):
            if self.dart_face[d0] >= 0:
                continue
            fid = len(self.face_darts)
            cycle = []
            d = d0
            while self.dart_face[d] < 0:
                self.dart_face[d] = fid
                cycle.append(d)
                d = self.next_dart(d)
            if d != d0:
                raise EmbeddingError("face traversal does not close")
            self.face_darts.append(cycle)
        self.faces = [tuple(self.tail(d) for d in cyc) for cyc in self.face_darts]
        if self.n - m + len(self.faces) != 2 and self.n > 1:
            raise EmbeddingError(
                f"rotation system is not a sphere embedding "
                f"(n={self.n}, |E|={m}, |F|={len(self.faces)})"
            )
        self.edge_faces = [
            (self.dart_face[2 * e], self.dart_face[2 * e + 1]) for e in range(m)
        ]
        # corner (v, j) sits between rotation[v][j] and rotation[v][j+1]
        self.corner_face = []
        for v, rot in enumerate(self.rotation):
            row = []
            for j in range(len(rot)):
                e_next = rot[(j + 1) % len(rot)]
                row.append(self.dart_face[self.dart(self.other(e_next, v), v)])
            self.corner_face.append(row)
        self.vertex_faces = [frozenset(row) for row in self.corner_face]
        self.face_edges = [tuple(d >> 1 for d in cyc) for cyc in self.face_darts]

    # -- queries --------------------------------------------------------

    @property
    def num_faces(self):
        return len(self.faces)

    def is_triangulation(self):
        return all(len(f) == 3 and len(set(f)) == 3 for f in self.faces)

    def face_neighbor(self, face, e):
        a, b = self.edge_faces[e]
        return b if a == face else a

    def has_edge(self, u, v):
        return (min(u, v), max(u, v)) in self.edge_index

    def edge_between(self, u, v):
        return self.edge_index[(min(u, v), max(u, v))]

    def flood_faces(self, blocked_edges):
        """Label faces by connected component of the dual minus ``blocked_edges``.

        Returns ``(labels, components)``; components are sorted face lists,
        numbered by their smallest face.
        """
        labels = [-1] * self.num_faces
        components = []
        for start in range(self.num_faces):
            if labels[start] >= 0:
                continue
            cid = len(components)
            labels[start] = cid
            comp = [start]
            stack = [start]
            while stack:
                f = stack.pop()
                for e in self.face_edges[f]:
                    if e in blocked_edges:
                        continue
                    g = self.face_neighbor(f, e)
                    if labels[g] < 0:
                        labels[g] = cid
                        comp.append(g)
                        stack.append(g)
            components.append(sorted(comp))
        return labels, components

    def base_distances_from(self, source):
        """Exact single-source distances under the (unperturbed) lengths."""
        dist = [None] * self.n
        dist[source] = Fraction(0)
        heap = [(Fraction(0), source)]
        while heap:
            d, x = heapq.heappop(heap)
            if d > dist[x]:
                continue
            for e in self.rotation[x]:
                y = self.other(e, x)
                nd = d + self.lengths[e]
                if dist[y] is None or nd < dist[y]:
                    dist[y] = nd
                    heapq.heappush(heap, (nd, y))
        return dist

    def to_json(self):
        return {
            "n": self.n,
            "edges": [[u, v, format_length(l)] for (u, v), l in zip(self.edges, self.lengths)],
            "rotation": [list(r) for r in self.rotation],
        }

    @classmethod
    def from_json(cls, data):
        try:
            edges = [(u, v, parse_length(l)) for u, v, l in data["edges"]]
            return cls(data["n"], edges, data["rotation"])
        except (KeyError, TypeError, ValueError) as exc:
            raise EmbeddingError(f"malformed graph JSON: {exc}") from exc

    def __eq__(self, other):
        return (
            isinstance(other, PlanarGraph)
            and self.n == other.n
            and self.edges == other.edges
            and self.lengths == other.lengths
            and self.rotation == other.rotation
        )

    def __hash__(self):
        return hash((self.n, tuple(self.edges), tuple(self.rotation)))


class DualGraph:
    """One node per face, one arc per edge of the primal graph."""

    def __init__(self, graph: PlanarGraph):
        self.graph = graph
        self.num_nodes = graph.num_faces
        self.arcs = list(graph.edge_faces)
        self.incident = [[] for _ in range(self.num_nodes)]
        for e, (a, b) in enumerate(self.arcs):
            self.incident[a].append(e)
            self.incident[b].append(e)

    def degree(self, node):
        return len(self.incident[node])

    def is_connected(self):
        seen = {0}
        stack = [0]
        while stack:
            x = stack.pop()
            for e in self.incident[x]:
                a, b = self.arcs[e]
                y = b if a == x else a
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == self.num_nodes


def triangulate(graph: PlanarGraph) -> PlanarGraph:
    """Add chords until every face is a triangle.

    New edges get the input graph's shortest-path distance between their
    endpoints as base length, so the original metric is untouched.
    """
    if graph.n < 3:
        raise EmbeddingError("triangulation needs at least 3 vertices")
    edges = [(u, v, l) for (u, v), l in zip(graph.edges, graph.lengths)]
    rotation = [list(r) for r in graph.rotation]
    base_dist = {}
    current = graph
    while True:
        target = None
        for fid, face in enumerate(current.faces):
            if len(face) > 3:
                target = fid
                break
        if target is None:
            return current
        darts = current.face_darts[target]
        k = len(darts)
        chord = None
        for i in range(k):
            a = current.tail(darts[i])
            b = current.tail(darts[(i + 2) % k])
            if a != b and not current.has_edge(a, b):
                chord = (i, a, b)
                break
        if chord is None:
            raise EmbeddingError("face cannot be triangulated without a multi-edge")
        i, a, b = chord
        if a not in base_dist:
            base_dist[a] = graph.base_distances_from(a)
        new_e = len(edges)
        edges.append((a, b, base_dist[a][b]))
        # corner at a: between outgoing darts[i] and incoming darts[i-1]
        e_in_a = darts[(i - 1) % k] >> 1
        rotation[a].insert(current.pos[a][e_in_a], new_e)
        e_in_b = darts[(i + 1) % k] >> 1
        rotation[b].insert(current.pos[b][e_in_b], new_e)
        current = PlanarGraph(graph.n, edges, rotation)


class ObjectField:
    """Shortest-path data towards one vertex set."""

    __slots__ = ("vertices", "dist", "next_hop", "root")

    def __init__(self, vertices, dist, next_hop, root):
        self.vertices = vertices
        self.dist = dist
        self.next_hop = next_hop
        self.root = root

    def path(self, u):
        """Vertices from ``u`` down to its nearest member of the set."""
        out = [u]
        while self.next_hop[out[-1]] >= 0:
            out.append(self.next_hop[out[-1]])
        return out


class PerturbedMetric:
    """Exact shortest-path metric with pairwise-distinct distances.

    Lengths are kept as Fractions for the public surface; internally all
    arithmetic runs on integers scaled by a common denominator.
    """

    def __init__(self, graph: PlanarGraph, seed: int, lengths, retry: int):
        self.graph = graph
        self.seed = seed
        self.retry = retry
        self.lengths = list(lengths)
        scale = 1
        for l in self.lengths:
            scale = scale * l.denominator // math.gcd(scale, l.denominator)
        self.scale = scale
        self.int_lengths = [int(l * scale) for l in self.lengths]
        self.adj = [
            [(graph.other(e, v), self.int_lengths[e]) for e in graph.rotation[v]]
            for v in range(graph.n)
        ]
        self._fields = {}
        self._lock = threading.Lock()
        self._all_pairs()

    def _all_pairs(self):
        n = self.graph.n
        self.apsp = []
        self.parent = []
        for s in range(n):
            dist = [-1] * n
            par = [-1] * n
            done = [False] * n
            dist[s] = 0
            heap = [(0, s)]
            while heap:
                d, x = heapq.heappop(heap)
                if done[x]:
                    continue
                done[x] = True
                for y, w in self.adj[x]:
                    nd = d + w
                    if dist[y] < 0 or nd < dist[y]:
                        dist[y] = nd
                        par[y] = x
                        heapq.heappush(heap, (nd, y))
            self.apsp.append(dist)
            self.parent.append(par)

    def has_path_ties(self):
        for s in range(self.graph.n):
            dist = self.apsp[s]
            for v in range(self.graph.n):
                if v == s:
                    continue
                tight = sum(1 for y, w in self.adj[v] if dist[y] + w == dist[v])
                if tight != 1:
                    return True
        return False

    def has_distance_collisions(self):
        n = self.graph.n
        values = [self.apsp[u][v] for u in range(n) for v in range(u + 1, n)]
        return len(set(values)) != len(values)

    def dist(self, u, v) -> Fraction:
        return Fraction(self.apsp[u][v], self.scale)

    def shortest_path(self, u, v):
        """The unique shortest ``u``-``v`` path as a vertex list (``[u]`` if equal)."""
        par = self.parent[u]
        out = [v]
        while out[-1] != u:
            out.append(par[out[-1]])
        out.reverse()
        return out

    def path_length(self, path) -> Fraction:
        total = Fraction(0)
        for a, b in zip(path, path[1:]):
            total += self.lengths[self.graph.edge_between(a, b)]
        return total

    def field(self, vertices) -> ObjectField:
        key = frozenset(vertices)
        cached = self._fields.get(key)
        if cached is not None:
            return cached
        if not key:
            raise InvalidObjectError("object must be nonempty")
        n = self.graph.n
        dist = [-1] * n
        nxt = [-1] * n
        root = [-1] * n
        heap = []
        for v in sorted(key):
            dist[v] = 0
            root[v] = v
            heap.append((0, v))
        heapq.heapify(heap)
        done = [False] * n
        while heap:
            d, x = heapq.heappop(heap)
            if done[x]:
                continue
            done[x] = True
            for y, w in self.adj[x]:
                nd = d + w
                if dist[y] < 0 or nd < dist[y]:
                    dist[y] = nd
                    nxt[y] = x
                    root[y] = root[x]
                    heapq.heappush(heap, (nd, y))
        result = ObjectField(key, dist, nxt, root)
        with self._lock:
            self._fields.setdefault(key, result)
        return self._fields[key]

    def dist_to_object(self, u, vertices):
        """``(distance, nearest member)`` from ``u`` to a vertex set."""
        if not vertices:
            raise InvalidObjectError("object must be nonempty")
        fld = self.field(vertices)
        return Fraction(fld.dist[u], self.scale), fld.root[u]


def _perturbation_unit(lengths):
    positive = sorted(set(lengths))
    gap = positive[0]
    for a, b in zip(positive, positive[1:]):
        gap = min(gap, b - a)
    return gap


def perturb(graph: PlanarGraph, seed: int, max_retries: int = 32) -> PerturbedMetric:
    """Perturb edge lengths until all vertex-pair distances are distinct.

    Edge ``i`` gets ``base + h(seed, r, i) / 2**32 * tau`` with
    ``tau = gap / 2**(20 + r)`` at retry ``r``; ``gap`` is the smallest base
    length or positive difference of base lengths, so strict base order is
    kept.  Shortest paths are also checked for uniqueness.
    """
    if any(l <= 0 for l in graph.lengths):
        raise DegenerateMetricError("all base lengths must be positive")
    gap = _perturbation_unit(graph.lengths)
    for r in range(max_retries):
        tau = gap / (1 << (20 + r))
        lengths = [
            base + Fraction(unit_hash(seed, "perturb", r, i), 1 << 32) * tau
            for i, base in enumerate(graph.lengths)
        ]
        metric = PerturbedMetric(graph, seed, lengths, r)
        if not metric.has_distance_collisions() and not metric.has_path_ties():
            return metric
    raise DegenerateMetricError(f"no tie-free perturbation within {max_retries} retries")
