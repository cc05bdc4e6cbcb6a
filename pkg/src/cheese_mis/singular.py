"""Singular faces: the candidate positions of branching points.

All three types are decided combinatorially.  A face set is split by a
blocked edge set (flood fill over faces of G) and objects are compared by
the component their faces fall into.

The separating curves only use shortest paths towards the centre object and
its canonical spanning tree, so they do not depend on which other objects
share the tuple.  The tuple only decides vertex ownership.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations

from .errors import ConsistencyError, NotIndependentError


@dataclass(frozen=True)
class SingularWitness:
    face: int
    type: int
    objects: tuple       # ordered roles: (p1,p2,p3) or (p0,p1,p2,p3)

    def to_json(self):
        return {"face": self.face, "type": self.type, "objects": list(self.objects)}


def _owners(instance, family):
    metric = instance.metric
    fields = {p: metric.field(instance.obj(p).vertex_set) for p in family}
    n = instance.graph.n
    owner = []
    for u in range(n):
        best = min(family, key=lambda p: fields[p].dist[u])
        owner.append(best)
    return owner, fields


def _reduce_tree_walk(walk):
    out = []
    for v in walk:
        if out and out[-1] == v:
            continue
        if len(out) >= 2 and out[-2] == v:
            out.pop()
        else:
            out.append(v)
    return out


def tree_path(instance, p, a, b):
    """Path between ``a`` and ``b`` in the extended tree of ``p``.

    Both vertices must be owned by ``p``; the tree path is the spoke of ``a``,
    a path in the canonical tree of ``p``, then the reversed spoke of ``b``.
    """
    f = instance.metric.field(instance.obj(p).vertex_set)
    pa = f.path(a)
    pb = f.path(b)
    mid = instance.obj(p).tree_path(pa[-1], pb[-1])
    return _reduce_tree_walk(pa + mid[1:] + list(reversed(pb))[1:])


def _path_edges(graph, path):
    return {graph.edge_between(path[i], path[i + 1]) for i in range(len(path) - 1)}


def _side(instance, labels, p):
    g = instance.graph
    v = instance.obj(p).vertices[0]
    return labels[g.corner_face[v][0]]


def type2_curve(instance, p1, u1, u2):
    g = instance.graph
    blocked = _path_edges(g, tree_path(instance, p1, u1, u2))
    blocked.add(g.edge_between(u1, u2))
    return blocked


def type3_curve(instance, p0, face):
    g = instance.graph
    a, b, c = g.faces[face]
    blocked = _path_edges(g, tree_path(instance, p0, a, b))
    blocked |= _path_edges(g, tree_path(instance, p0, b, c))
    blocked |= set(g.face_edges[face])
    return blocked


def _is_type2(instance, owner, face, p1, p2, p3):
    g = instance.graph
    verts = g.faces[face]
    mine = [u for u in verts if owner[u] == p1]
    rest = [u for u in verts if owner[u] != p1]
    if len(mine) != 2 or len(rest) != 1 or owner[rest[0]] != p2:
        return False
    labels, _ = g.flood_faces(type2_curve(instance, p1, *mine))
    return _side(instance, labels, p2) != _side(instance, labels, p3)


def _type3_sides(instance, p0, face, others):
    labels, _ = instance.graph.flood_faces(type3_curve(instance, p0, face))
    return {q: _side(instance, labels, q) for q in others}


def _check_tuple(instance, objs):
    if len(set(objs)) != len(objs) or not instance.is_independent(objs):
        raise NotIndependentError(f"tuple {tuple(objs)} is not pairwise disjoint")


def singular_faces(instance, objs):
    """All singular faces of a triple (types 1 and 2) or quadruple (type 3)."""
    objs = tuple(objs)
    _check_tuple(instance, objs)
    g = instance.graph
    owner, _ = _owners(instance, objs)
    out = []
    if len(objs) == 3:
        key = tuple(sorted(objs))
        t1 = [f for f in range(g.num_faces) if len({owner[u] for u in g.faces[f]}) == 3]
        if len(t1) > 2:
            raise ConsistencyError(f"{len(t1)} type-1 faces for triple {key}")
        out.extend(SingularWitness(f, 1, key) for f in t1)
        for roles in permutations(objs):
            hits = [f for f in range(g.num_faces) if _is_type2(instance, owner, f, *roles)]
            if len(hits) > 1:
                raise ConsistencyError(f"{len(hits)} type-2 faces for ordered triple {roles}")
            out.extend(SingularWitness(f, 2, roles) for f in hits)
    elif len(objs) == 4:
        for p0 in objs:
            others = tuple(sorted(q for q in objs if q != p0))
            hits = []
            for f in range(g.num_faces):
                if any(owner[u] != p0 for u in g.faces[f]):
                    continue
                sides = _type3_sides(instance, p0, f, others)
                if len(set(sides.values())) == 3:
                    hits.append(f)
            if len(hits) > 1:
                raise ConsistencyError(f"{len(hits)} type-3 faces for quadruple centred at {p0}")
            out.extend(SingularWitness(f, 3, (p0,) + others) for f in hits)
    else:
        raise ValueError("singular faces are defined for triples and quadruples")
    return sorted(out, key=lambda w: (w.type, w.face, w.objects))


def classify_branching_point(bundle, face) -> SingularWitness:
    """Witness tuple from the bundle's family under which ``face`` is singular.

    The witness always contains the owners of the face vertices, so the three
    spokes at ``face`` are the same under the witness tuple.
    """
    inst = bundle.instance
    g = inst.graph
    owner = bundle.owner
    verts = g.faces[face]
    owners = sorted({owner[u] for u in verts})
    if len(owners) == 3:
        return SingularWitness(face, 1, tuple(owners))
    if len(owners) == 2:
        counts = {p: sum(owner[u] == p for u in verts) for p in owners}
        p1 = next(p for p in owners if counts[p] == 2)
        p2 = next(p for p in owners if counts[p] == 1)
        mine = [u for u in verts if owner[u] == p1]
        labels, _ = g.flood_faces(type2_curve(inst, p1, *mine))
        s2 = _side(inst, labels, p2)
        for p3 in bundle.family:
            if p3 in (p1, p2):
                continue
            if _side(inst, labels, p3) != s2:
                return SingularWitness(face, 2, (p1, p2, p3))
        raise ConsistencyError(f"branching point {face} has no type-2 witness")
    p0 = owners[0]
    others = [q for q in bundle.family if q != p0]
    sides = _type3_sides(inst, p0, face, others)
    groups = {}
    for q in others:
        groups.setdefault(sides[q], q)
    if len(groups) >= 3:
        # smallest representative of three distinct sides
        picks = tuple(sorted(groups.values())[:3])
        return SingularWitness(face, 3, (p0,) + picks)
    raise ConsistencyError(f"branching point {face} has no type-3 witness")


def witness_objects(bundle, faces):
    out = set()
    for f in faces:
        out.update(classify_branching_point(bundle, f).objects)
    return out


def all_tuples(family, k):
    return combinations(sorted(family), k)
