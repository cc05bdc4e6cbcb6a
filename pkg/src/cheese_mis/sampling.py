"""Randomized split of a Swiss-cheese separator.

One split draws a sample, checks it for heavy spokes and heavy diamonds,
finds two balanced radial cycles and cuts the region along them into child
separators.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BudgetError, ConsistencyError, NotIndependentError, ParameterError, SamplingFailure
from .seeding import rng
from .separators import SwissCheeseSeparator, allowed, object_inside, reduce_support, walk_vertices
from .voronoi import RadialCycle, Workspace, bp_node, obj_node

SIZE_CONSTANT = 10**10
ETA_CONSTANT = 100
RETRY_BUDGET = 64


def size_parameter(eps):
    """s(eps) = 1e10 * ln(1/eps)^2 / eps^2, as a float."""
    eps = float(eps)
    if not 0 < eps < 1:
        raise ParameterError("epsilon must lie in (0, 1)")
    return SIZE_CONSTANT * math.log(1 / eps) ** 2 / eps**2


def eps_for_size(s):
    """Inverse of :func:`size_parameter` on (0, 1) by bisection."""
    if s <= 0:
        raise ParameterError("size parameter must be positive")
    lo, hi = 1e-300, 1 - 1e-15
    if size_parameter(hi) >= s:
        return hi
    for _ in range(200):
        mid = math.sqrt(lo * hi) if hi / lo > 4 else (lo + hi) / 2
        if size_parameter(mid) > s:
            lo = mid
        else:
            hi = mid
    return hi


def eta_value(eps, s, family_size):
    return ETA_CONSTANT * math.log(1 / eps) / s * family_size


def eps_for_eta(eta, s, family_size):
    """The eps for which ``eta_value(eps, s, |F|) == eta``."""
    return math.exp(-eta * s / (ETA_CONSTANT * family_size))


@dataclass(frozen=True)
class SamplingParams:
    s: int
    family_size: int
    eta: float
    eps: float
    seed: int = 0
    retries: int = RETRY_BUDGET

    @classmethod
    def make(cls, family_size, s=None, eps=None, eta=None, eta_factor=None, seed=0, retries=RETRY_BUDGET):
        if s is None:
            if eps is None:
                raise ParameterError("need s or epsilon")
            s = math.ceil(size_parameter(eps))
        s = int(s)
        if s < 1:
            raise ParameterError("size parameter must be at least 1")
        if eta_factor is not None:
            eta = eta_factor * family_size
        if eta is None:
            if eps is None:
                raise ParameterError("need eta or epsilon")
            eta = eta_value(eps, s, family_size)
        if eps is None:
            eps = eps_for_eta(eta, s, family_size)
        if eta <= 0:
            raise ParameterError("eta must be positive")
        return cls(s, int(family_size), float(eta), float(eps), int(seed), int(retries))

    @property
    def lam(self):
        return Fraction(self.s, self.family_size)

    def check(self):
        if self.lam > 1:
            raise ParameterError(f"inclusion probability {self.s}/{self.family_size} exceeds 1")

    def to_json(self):
        return {"s": self.s, "family_size": self.family_size, "eta": self.eta, "eps": self.eps, "seed": self.seed}


def sample(support, family, params: SamplingParams, *names):
    params.check()
    r = rng(params.seed, "sample", *names)
    lam = float(params.lam)
    drawn = [p for p in sorted(family) if r.random() < lam]
    return tuple(sorted(set(support) | set(drawn)))


# -- heaviness -----------------------------------------------------------------


def spoke_conflicts(bundle, family):
    """Radial edge id -> number of ``family`` objects in conflict with its spoke."""
    out = {}
    closers = [bundle.closer_set(q) for q in sorted(family) if q not in bundle.fields]
    for e in bundle.radial_edges:
        out[e.id] = sum(1 for c in closers if not c.isdisjoint(e.spoke))
    return out


def heavy_spokes(bundle, family, eta):
    counts = spoke_conflicts(bundle, family)
    return [k for k in sorted(counts) if counts[k] >= eta]


def _vertex_diamonds(bundle):
    hit = {}
    for i, d in enumerate(bundle.diamonds):
        for v in d.closure:
            hit.setdefault(v, []).append(i)
    return hit


def diamond_hits(bundle, family):
    """Object -> sorted indices of diamonds whose closed region it meets."""
    hit = _vertex_diamonds(bundle)
    inst = bundle.instance
    out = {}
    for q in sorted(family):
        idx = set()
        for v in inst.obj(q).vertices:
            idx.update(hit.get(v, ()))
        out[q] = sorted(idx)
    return out


def diamond_weights(bundle, family):
    hits = diamond_hits(bundle, family)
    w = [0] * len(bundle.diamonds)
    for q, idx in hits.items():
        for i in idx:
            if q not in bundle.diamonds[i].objects:
                w[i] += 1
    return w


def heavy_diamonds(bundle, family, eta):
    return [i for i, x in enumerate(diamond_weights(bundle, family)) if x > eta]


# -- weights ---------------------------------------------------------------------


def mu_bal(bundle, family):
    fam = sorted(family)
    if not fam:
        raise ParameterError("balance weights need a nonempty family")
    hits = diamond_hits(bundle, fam)
    diamonds = bundle.diamonds
    edges = bundle.diagram.edges
    w = {f: Fraction(0) for f in bundle.diagram.branching_points}
    unit = Fraction(1, len(fam))
    for q in fam:
        if not hits[q]:
            raise ConsistencyError(f"object {q} meets no diamond")
        d = diamonds[hits[q][0]]
        w[min(edges[d.edge].ends)] += unit
    return w


def mu_len(bundle, cycles):
    total = sum(c.length for c in cycles)
    if total == 0:
        raise ParameterError("length weights are undefined without cycles")
    w = {f: Fraction(0) for f in bundle.diagram.branching_points}
    for c in cycles:
        for f in c.bps:
            w[f] = Fraction(2, total)
    return w


# -- balanced cycles ----------------------------------------------------------------


def length_cap(num_bps):
    return math.isqrt(18 * num_bps)


def cycles_of_steps(bundle, steps, budget=None):
    """All radial cycles with exactly ``steps`` branching points, sorted by key."""
    if bundle.diagram.degenerate:
        return []
    rot = bundle.radial_rotation
    edges = bundle.radial_edges
    found = {}
    work = [0]

    def extend(p0, p, path, seen_o, seen_b):
        work[0] += 1
        if budget is not None and work[0] > budget:
            raise BudgetError("radial cycle search exceeded its budget")
        for k1 in rot[obj_node(p)]:
            f = edges[k1].bp
            if f in seen_b:
                continue
            for k2 in rot[bp_node(f)]:
                if k2 == k1:
                    continue
                q = edges[k2].obj
                step = (p, f, edges[k1].label, edges[k2].label)
                if q == p0:
                    if len(path) + 1 == steps:
                        c = RadialCycle(tuple(path + [step]))
                        found.setdefault(c.key, c.canonical())
                    continue
                if q in seen_o or q < p0 or len(path) + 1 >= steps:
                    continue
                seen_o.add(q)
                seen_b.add(f)
                path.append(step)
                extend(p0, q, path, seen_o, seen_b)
                path.pop()
                seen_b.discard(f)
                seen_o.discard(q)

    for p0 in bundle.family:
        if obj_node(p0) in rot:
            extend(p0, p0, [], {p0}, set())
    return [found[k] for k in sorted(found)]


def side_weights(bundle, cycle, weights):
    sides = bundle.cycle_sides(cycle)
    if len(sides) != 2:
        raise ConsistencyError("radial cycle does not split the sphere in two")
    return tuple(sum((weights.get(f, 0) for f in side), Fraction(0)) for side in sides)


def is_balanced(bundle, cycle, weights):
    return all(x <= Fraction(2, 3) for x in side_weights(bundle, cycle, weights))


def balanced_cycles(bundle, weights, cap=None, budget=None):
    """Balanced cycles by increasing length, each length sorted by key."""
    cap = length_cap(len(bundle.diagram.branching_points)) if cap is None else cap
    for r in range(1, cap // 2 + 1):
        for c in cycles_of_steps(bundle, r, budget):
            if is_balanced(bundle, c, weights):
                yield c


def find_balanced_cycle(bundle, weights, cap=None, budget=None) -> RadialCycle:
    total = sum(weights.values(), Fraction(0))
    if total != 1:
        raise ParameterError(f"weights sum to {total}, not 1")
    for c in balanced_cycles(bundle, weights, cap, budget):
        return c
    raise ConsistencyError("no balanced radial cycle within the length cap")


# -- splitting --------------------------------------------------------------------


@dataclass
class SplitResult:
    sample: tuple
    c1: RadialCycle
    c2: RadialCycle | None
    r_cycles: tuple
    children: list
    conflicted: tuple            # F-objects in conflict with C1 or C2
    lost: tuple                  # F-objects allowed in no child
    attempts: int
    diagnostics: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "sample": list(self.sample),
            "c1": self.c1.to_json(),
            "c2": self.c2.to_json() if self.c2 else None,
            "children": [c.to_json() for c in self.children],
            "conflicted": list(self.conflicted),
            "lost": list(self.lost),
            "attempts": self.attempts,
            "diagnostics": self.diagnostics,
        }


def _r_faces(bundle, r_edges):
    """Union-find labels of radial faces glued across radial edges outside R."""
    faces = bundle.radial_faces
    parent = list(range(len(faces)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for k in range(len(bundle.radial_edges)):
        if k in r_edges:
            continue
        a, b = bundle.radial_edge_faces(k)
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    return [find(x) for x in range(len(faces))]


def _r_next(bundle, dart, r_edges):
    h = bundle.radial_head(dart)
    rot = bundle.radial_rotation[h]
    i = rot.index(dart >> 1)
    while True:
        i = (i - 1) % len(rot)
        if rot[i] in r_edges:
            k = rot[i]
            return 2 * k + (0 if h[0] == "o" else 1)


def boundary_cycles(bundle, r_edges, label, target):
    """Split the boundary of R-face ``target`` into radial cycles."""
    darts = [
        d
        for k in sorted(r_edges)
        for d in (2 * k, 2 * k + 1)
        if label[bundle.radial_dart_face[d]] == target
    ]
    used = set()
    out = []
    for d0 in darts:
        if d0 in used or d0 & 1:
            continue
        walk = []
        d = d0
        while d not in used:
            used.add(d)
            walk.append(d)
            d = _r_next(bundle, d, r_edges)
        if d != d0:
            raise ConsistencyError("boundary walk of an R-face does not close")
        steps = []
        for i in range(0, len(walk), 2):
            a = bundle.radial_edges[walk[i] >> 1]
            b = bundle.radial_edges[walk[i + 1] >> 1]
            steps.append((a.obj, a.bp, a.label, b.label))
        out.extend(_split_at_repeats(steps))
    missing = [d for d in darts if d not in used]
    if missing:
        raise ConsistencyError("boundary walk started on a branching-point side")
    return [c.canonical() for c in out]


def _split_at_repeats(steps):
    """Cut a closed alternating walk into cycles at repeated object nodes."""
    out = []
    stack = []
    where = {}
    for st in steps:
        p = st[0]
        if p in where:
            j = where[p]
            piece = stack[j:]
            del stack[j:]
            for s2 in piece:
                where.pop(s2[0], None)
            out.append(RadialCycle(tuple(piece)))
        where[p] = len(stack)
        stack.append(st)
    if stack:
        out.append(RadialCycle(tuple(stack)))
    return out


def _faces_of_rface(bundle, label, target):
    """G-faces carried by one R-face: diamond interiors and off-R branching points."""
    out = set()
    for fid, lab in enumerate(label):
        if lab == target:
            out.update(bundle.rad_face_diamond[fid].region)
    for f in bundle.diagram.branching_points:
        rset = {label[bundle.radial_dart_face[2 * k]] for k in bundle.radial_rotation[bp_node(f)]}
        if rset == {target}:
            out.add(f)
    return out


def conflicted_objects(bundle, family, cycles):
    verts = set()
    for c in cycles:
        for f in c.bps:
            for k in bundle.radial_rotation[bp_node(f)]:
                verts.update(bundle.radial_edges[k].spoke)
    return tuple(q for q in sorted(family) if not bundle.closer_set(q).isdisjoint(verts))


def _inside_count(ws, family, region, walls):
    return sum(1 for q in family if object_inside(ws.instance, q, region, walls))


def build_children(ws: Workspace, scs: SwissCheeseSeparator, bundle, cycles, max_complexity=None):
    """Child separators for the R-faces inside ``scs.region``, or ``(None, reason)``."""
    inst = ws.instance
    g = inst.graph
    r_edges = set()
    for c in cycles:
        r_edges.update(bundle.radial_index[k] for k in c.radial_keys())
    blocked = set()
    for c in cycles:
        blocked.update(bundle.gamma_walk(c).edges)
    glabels, _ = g.flood_faces(blocked)
    label = _r_faces(bundle, r_edges)
    parent_region = scs.region
    pending = []
    for target in sorted(set(label)):
        faces = _faces_of_rface(bundle, label, target)
        if not faces:
            continue
        comps = {glabels[x] for x in faces}
        region = frozenset(x for x in range(g.num_faces) if glabels[x] in comps)
        if not region <= parent_region:
            continue
        kg = boundary_cycles(bundle, r_edges, label, target)
        if max_complexity is not None and sum(c.length for c in kg) > max_complexity:
            return None, "child-complexity"
        pending.append((region, kg))
    children = []
    used = set()
    for region, kg in pending:
        walls = set()
        for c in kg:
            walls.update(bundle.gamma_walk(c).edges)
        clabels, _ = g.flood_faces(walls)
        seed = clabels[min(region)]
        child_region = frozenset(x for x in range(g.num_faces) if clabels[x] == seed)
        if not child_region <= parent_region:
            return None, "child-outside-parent"
        if child_region == parent_region:
            return None, "no-split"
        if used & child_region:
            return None, "children-overlap"
        used |= child_region
        support = set()
        for c in kg:
            support.update(reduce_support(ws, bundle.family, c))
        children.append(SwissCheeseSeparator.make(support, kg, child_region))
    if not children:
        return None, "no-children"
    return children, None


def _check_sample(bundle, family, params):
    if bundle.diagram.degenerate:
        return "degenerate"
    if heavy_spokes(bundle, family, params.eta):
        return "heavy-spoke"
    if heavy_diamonds(bundle, family, params.eta):
        return "heavy-diamond"
    return None


def split(ctx, scs: SwissCheeseSeparator, family, params: SamplingParams, max_candidates=64, budget=200000):
    """Resample until a sample yields cycles whose children pass the split checks."""
    ws = ctx if isinstance(ctx, Workspace) else Workspace(ctx)
    inst = ws.instance
    fam = tuple(sorted(family))
    if not inst.is_independent(fam):
        raise NotIndependentError("split family is not independent")
    if len(fam) < params.s:
        raise ParameterError(f"family of {len(fam)} objects is smaller than s = {params.s}")
    if not scs.is_ripe or scs.complexity > params.s:
        raise ParameterError("split needs a ripe separator of complexity at most s")
    ok_allowed = set(allowed(ws, scs, fam))
    if ok_allowed != set(fam):
        raise ParameterError("split family must lie inside the allowed set")
    eps_loss = params.eps * len(fam)
    reasons = Counter()
    support = set(scs.support)
    for attempt in range(params.retries):
        s_set = sample(support, fam, params, "split", attempt)
        extra = len(s_set) - len(support)
        if not params.s <= 2 * extra <= 4 * params.s:
            reasons["size-window"] += 1
            continue
        bundle = ws.bundle(s_set)
        bad = _check_sample(bundle, fam, params)
        if bad:
            reasons[bad] += 1
            continue
        k_cycles = list(scs.cycles)
        if any(not bundle.is_cycle(c) for c in k_cycles):
            reasons["cycle-lost"] += 1
            continue
        cap = length_cap(len(bundle.diagram.branching_points))
        c2 = None
        try:
            if k_cycles:
                c2 = find_balanced_cycle(bundle, mu_len(bundle, k_cycles), cap, budget)
            bal = mu_bal(bundle, fam)
            tried = 0
            for c1 in balanced_cycles(bundle, bal, min(cap, params.s), budget):
                tried += 1
                if tried > max_candidates:
                    reasons["candidates-exhausted"] += 1
                    break
                cyc = [c1] + ([c2] if c2 is not None else [])
                conflicted = conflicted_objects(bundle, fam, cyc)
                if len(conflicted) > eps_loss:
                    reasons["conflict-loss"] += 1
                    continue
                children, why = build_children(ws, scs, bundle, _dedupe(k_cycles + cyc), params.s)
                if children is None:
                    reasons[why] += 1
                    continue
                fail = _child_failure(ws, scs, children, fam, params)
                if fail:
                    reasons[fail] += 1
                    continue
                kept = set()
                for ch in children:
                    kept.update(allowed(ws, ch, fam))
                lost = tuple(q for q in fam if q not in kept)
                return SplitResult(
                    s_set, c1, c2, tuple(_dedupe(k_cycles + cyc)), children, conflicted, lost,
                    attempt + 1, dict(reasons),
                )
            else:
                reasons["no-balanced-cycle"] += 1
        except BudgetError:
            reasons["search-budget"] += 1
    raise SamplingFailure(f"split failed after {params.retries} samples", dict(reasons))


def _dedupe(cycles):
    seen = {}
    for c in cycles:
        seen.setdefault(c.key, c)
    return [seen[k] for k in sorted(seen)]


def _child_failure(ws, scs, children, fam, params):
    limit = Fraction(3, 4) * len(fam)
    parent_ok = None
    for ch in children:
        if ch.complexity > params.s:
            return "child-complexity"
        if not ch.is_ripe:
            return "child-unripe"
        walls = walk_vertices(ws, ch)
        if _inside_count(ws, fam, ch.region, walls) > limit:
            return "child-too-heavy"
    for ch in children:
        if parent_ok is None:
            parent_ok = set(allowed(ws, scs))
        if not set(allowed(ws, ch)) <= parent_ok:
            return "allowed-leak"
    return None


# -- empirical success rates -----------------------------------------------------------


def _interval(k, n, z=3.0):
    p = k / n
    sigma = math.sqrt(p * (1 - p) / n) if n else 0.0
    return {"frequency": p, "sigma": sigma, "low": max(0.0, p - z * sigma), "high": min(1.0, p + z * sigma)}


def estimate_success(ws_or_instance, support, family, params: SamplingParams, trials):
    """Frequencies of the three sampling conditions and of their conjunction."""
    if trials < 50:
        raise ParameterError("need at least 50 trials")
    ws = ws_or_instance if isinstance(ws_or_instance, Workspace) else Workspace(ws_or_instance)
    counts = Counter()
    per_trial = []
    support = set(support)
    for t in range(trials):
        s_set = sample(support, family, params, "estimate", t)
        extra = len(s_set) - len(support)
        size_ok = params.s <= 2 * extra <= 4 * params.s
        bundle = ws.bundle(s_set)
        if bundle.diagram.degenerate:
            spoke_ok = diamond_ok = False
        else:
            spoke_ok = not heavy_spokes(bundle, family, params.eta)
            diamond_ok = not heavy_diamonds(bundle, family, params.eta)
        joint = size_ok and spoke_ok and diamond_ok
        counts["size"] += size_ok
        counts["spoke"] += spoke_ok
        counts["diamond"] += diamond_ok
        counts["joint"] += joint
        per_trial.append({"extra": extra, "size": size_ok, "spoke": spoke_ok, "diamond": diamond_ok})
    return {
        "trials": trials,
        "params": params.to_json(),
        "size_window": _interval(counts["size"], trials),
        "no_heavy_spoke": _interval(counts["spoke"], trials),
        "no_heavy_diamond": _interval(counts["diamond"], trials),
        "joint": _interval(counts["joint"], trials),
        "per_trial": per_trial,
    }
