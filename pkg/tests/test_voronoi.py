import pytest

from corpus import corpus, families
from cheese_mis.checks import check_diagram
from cheese_mis.sampling import diamond_weights, heavy_diamonds, heavy_spokes, spoke_conflicts
from cheese_mis.voronoi import Workspace, diamond_weight, in_conflict

CASES = [(inst, fam) for inst in corpus(8) for fam in families(inst, 4)]


def brute_owner(inst, fam, u):
    m = inst.metric
    return min(fam, key=lambda p: min(m.dist(u, v) for v in inst.obj(p).vertices))


@pytest.mark.parametrize("k", range(0, len(CASES), 3))
def test_owner_is_nearest_object(k):
    inst, fam = CASES[k]
    b = Workspace(inst).bundle(fam)
    for u in range(inst.graph.n):
        assert b.owner[u] == brute_owner(inst, fam, u)


@pytest.mark.parametrize("k", range(len(CASES)))
def test_diagram_invariants(k):
    inst, fam = CASES[k]
    assert check_diagram(Workspace(inst).bundle(fam)) == []


@pytest.mark.parametrize("k", range(0, len(CASES), 2))
def test_cells_partition_and_trees(k):
    inst, fam = CASES[k]
    b = Workspace(inst).bundle(fam)
    cells = b.cells
    assert sorted(v for c in cells.values() for v in c) == list(range(inst.graph.n))
    for p in fam:
        small, big = b.trees[p]
        assert len(big) == len(cells[p]) - 1
        assert set(inst.obj(p).vertices) <= set(cells[p])


@pytest.mark.parametrize("k", range(0, len(CASES), 2))
def test_radial_structure(k):
    inst, fam = CASES[k]
    b = Workspace(inst).bundle(fam)
    dg = b.diagram
    assert len(b.radial_edges) == 3 * len(dg.branching_points)
    for f in dg.branching_points:
        labels = sorted(e.label for e in b.radial_edges if e.bp == f)
        assert labels == sorted(inst.graph.faces[f])
    for e in b.radial_edges:
        assert e.spoke[0] == e.label and e.spoke[-1] in inst.obj(e.obj).vertex_set
    # Euler on the radial graph: V - E + F = 2 with all faces of length 4
    v = len(fam) + len(dg.branching_points)
    assert v - len(b.radial_edges) + len(b.radial_faces) == 2


@pytest.mark.parametrize("k", range(0, len(CASES), 2))
def test_diamonds_partition_faces(k):
    inst, fam = CASES[k]
    b = Workspace(inst).bundle(fam)
    ds = b.diamonds
    assert len(ds) == len(b.diagram.edges) == 3 * len(fam) - 6
    seen = {}
    for d in ds:
        for x in d.region:
            assert x not in seen
            seen[x] = d.edge
    bps = set(b.diagram.branching_points)
    assert set(seen) | bps == set(range(inst.graph.num_faces))
    # the primal edges crossed by a diagram edge join the diamond's two cells
    g = inst.graph
    for d in ds:
        for a in b.diagram.edges[d.edge].arcs:
            u, v = g.edges[a]
            assert {b.owner[u], b.owner[v]} == set(d.objects)


@pytest.mark.parametrize("k", range(0, len(CASES), 3))
def test_conflicts_against_brute_force(k):
    inst, fam = CASES[k]
    b = Workspace(inst).bundle(fam)
    m = inst.metric
    others = [q for q in inst.ids if q not in fam]
    counts = spoke_conflicts(b, others)
    for e in b.radial_edges:
        dp = {v: min(m.dist(v, x) for x in inst.obj(e.obj).vertices) for v in e.spoke}
        expect = 0
        for q in others:
            hit = any(min(m.dist(v, x) for x in inst.obj(q).vertices) < dp[v] for v in e.spoke)
            assert b.in_conflict(q, e.spoke) == hit
            assert in_conflict(m, inst.obj(q).vertex_set, inst.obj(e.obj).vertex_set, e.spoke) == hit
            expect += hit
        assert counts[e.id] == expect


@pytest.mark.parametrize("k", range(0, len(CASES), 3))
def test_diamond_weights_against_brute_force(k):
    inst, fam = CASES[k]
    b = Workspace(inst).bundle(fam)
    g = inst.graph
    ids = list(inst.ids)
    w = diamond_weights(b, ids)
    for i, d in enumerate(b.diamonds):
        closed = set(b.walk_vertices(d.cycle))
        for x in d.region:
            closed |= set(g.faces[x])
        expect = sum(
            1 for q in ids if q not in d.objects and set(inst.obj(q).vertices) & closed
        )
        assert w[i] == expect == diamond_weight(inst, d, ids)


def test_heaviness_trivial_cases():
    inst, fam = CASES[0]
    b = Workspace(inst).bundle(fam)
    ids = list(inst.ids)
    assert heavy_spokes(b, ids, len(ids) + 1) == []
    assert heavy_diamonds(b, ids, len(ids) + 1) == []
    assert heavy_spokes(b, fam, 1) == []


def test_small_family_is_degenerate():
    inst = corpus(1)[0]
    fam = families(inst, 1)[0][:2]
    b = Workspace(inst).bundle(fam)
    assert b.diagram.degenerate and b.diamonds == []


def test_walks_split_sphere():
    inst, fam = CASES[1]
    b = Workspace(inst).bundle(fam)
    for d in b.diamonds:
        w = b.gamma_walk(d.cycle)
        a, c = w.regions
        assert set(a).isdisjoint(c)
        assert len(a) + len(c) == inst.graph.num_faces


@pytest.mark.parametrize("k", range(0, len(CASES), 2))
def test_diamond_weight_zero_for_own_family(k):
    inst, fam = CASES[k]
    b = Workspace(inst).bundle(fam)
    assert all(x == 0 for x in diamond_weights(b, fam))
