"""Invariant checks shared by the ``verify`` command.

Each function returns a list of human-readable failure strings; an empty
list means the invariant held.
"""

from __future__ import annotations

from .errors import CheeseError
from .sampling import cycles_of_steps
from .separators import RadialSeparator, lift_cycle, reduce_support
from .seeding import rng
from .singular import classify_branching_point, singular_faces
from .voronoi import Workspace


def random_independent_family(instance, r, size):
    ids = list(instance.ids)
    r.shuffle(ids)
    fam = []
    taken = set()
    for q in ids:
        vs = instance.obj(q).vertex_set
        if taken.isdisjoint(vs):
            fam.append(q)
            taken |= vs
        if len(fam) == size:
            break
    return tuple(sorted(fam))


def check_diagram(bundle):
    fails = []
    dg = bundle.diagram
    k = len(bundle.family)
    if k < 3:
        return fails if dg.degenerate else ["small family should be degenerate"]
    if dg.degenerate:
        return [f"family of {k} objects gave a degenerate diagram"]
    if any(dg.degree(f) != 3 for f in dg.branching_points):
        fails.append("diagram is not 3-regular")
    if not dg.is_connected():
        fails.append("diagram is disconnected")
    if dg.num_faces != k:
        fails.append(f"diagram has {dg.num_faces} faces for {k} objects")
    if len(dg.branching_points) != 2 * k - 4:
        fails.append(f"{len(dg.branching_points)} branching points, expected {2 * k - 4}")
    if len(set(dg.face_of_object.values())) != k:
        fails.append("two objects share a diagram face")
    if any(len(f) != 4 for f in bundle.radial_faces):
        fails.append("radial graph has a face that is not a diamond")
    for e in bundle.radial_edges:
        if any(bundle.owner[v] != e.obj for v in e.spoke):
            fails.append(f"spoke of radial edge {e.id} leaves its cell")
            break
    return fails


def check_singular(bundle):
    fails = []
    for f in bundle.diagram.branching_points:
        try:
            w = classify_branching_point(bundle, f)
            hits = singular_faces(bundle.instance, w.objects)
            if not any(h.face == f and h.type == w.type for h in hits):
                fails.append(f"witness for branching point {f} does not recheck")
        except CheeseError as exc:
            fails.append(f"branching point {f}: {exc}")
    return fails


def check_separator_lemmas(ws, family, max_steps=3, limit=20):
    bundle = ws.bundle(family)
    fails = []
    if bundle.diagram.degenerate:
        return fails
    count = 0
    for r in range(1, max_steps + 1):
        for c in cycles_of_steps(bundle, r):
            if count >= limit:
                return fails
            count += 1
            try:
                small = reduce_support(ws, family, c)
                lift_cycle(ws, RadialSeparator(small, c), family)
            except CheeseError as exc:
                fails.append(f"cycle {c.key}: {exc}")
    return fails


def verify_instance(instance, seed=0, families=5):
    """Run the structural suites on a handful of random families."""
    from .instance import validate

    ws = Workspace(instance)
    suites = {"validate": [], "voronoi": [], "singular": [], "separators": []}
    suites["validate"] = [v["kind"] for v in validate(instance)]
    if suites["validate"]:
        return suites
    r = rng(seed, "verify")
    for i in range(families):
        fam = random_independent_family(instance, r, 3 + i % 6)
        if len(fam) < 3:
            continue
        bundle = ws.bundle(fam)
        try:
            suites["voronoi"] += check_diagram(bundle)
            suites["singular"] += check_singular(bundle)
            suites["separators"] += check_separator_lemmas(ws, fam)
        except CheeseError as exc:
            suites["voronoi"].append(f"family {fam}: {exc}")
    return suites
