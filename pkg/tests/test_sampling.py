import math
from fractions import Fraction

import pytest

from corpus import corpus, families, instance
from cheese_mis.dp import greedy_independent
from cheese_mis.errors import ConsistencyError, ParameterError
from cheese_mis.sampling import (
    SamplingParams,
    cycles_of_steps,
    eps_for_size,
    estimate_success,
    find_balanced_cycle,
    heavy_diamonds,
    length_cap,
    mu_bal,
    mu_len,
    sample,
    side_weights,
    size_parameter,
)
from cheese_mis.seeding import rng
from cheese_mis.voronoi import Workspace

CASES = [(inst, fam) for inst in corpus(8) for fam in families(inst, 3, sizes=(4, 8))]


def test_size_parameter_values():
    assert size_parameter(0.01) == pytest.approx(1e14 * math.log(100) ** 2)
    assert size_parameter(0.01) == pytest.approx(2.12e15, rel=1e-2)
    e = 1 / math.e
    assert size_parameter(e) == pytest.approx(1e10 * math.e**2)
    assert size_parameter(0.1) > size_parameter(0.2)
    with pytest.raises(ParameterError):
        size_parameter(1.0)


@pytest.mark.parametrize("s", [4, 100, 1e12, 1e20])
def test_eps_for_size_inverts(s):
    eps = eps_for_size(s)
    assert size_parameter(eps) == pytest.approx(s, rel=1e-6)


def test_sample_basics():
    fam = tuple(range(20))
    p = SamplingParams.make(20, s=20, eta=5)
    assert sample((100,), fam, p, "x") == tuple(fam) + (100,)
    q = SamplingParams.make(20, s=10, eta=5, seed=3)
    assert sample((), fam, q, "a") == sample((), fam, q, "a")
    with pytest.raises(ParameterError):
        sample((), fam[:5], SamplingParams.make(5, s=10, eta=5))


def test_sample_mean_within_three_sigma():
    fam = tuple(range(20))
    p = SamplingParams.make(20, s=10, eta=5, seed=11)
    sizes = [len(sample((), fam, p, t)) for t in range(2000)]
    mean = sum(sizes) / len(sizes)
    sigma = math.sqrt(20 * 0.25 / 2000)
    assert abs(mean - 10) <= 3 * sigma


@pytest.mark.parametrize("s", [8, 16, 32])
def test_chernoff_shape(s):
    family_size = 4 * s
    fam = tuple(range(family_size))
    p = SamplingParams.make(family_size, s=s, eta=1, seed=s)
    trials = 2000
    bad = sum(not s <= 2 * len(sample((), fam, p, t)) <= 4 * s for t in range(trials))
    bound = math.exp(-s / 8) + math.exp(-s / 3)
    freq = bad / trials
    assert freq <= bound + 3 * math.sqrt(bound * (1 - bound) / trials) + 1e-9


def test_estimate_success_trivial_cases():
    inst = instance(10, 10, "rect:20:1x2:disjoint", 8)
    ws = Workspace(inst)
    fam = inst.ids
    full = SamplingParams.make(len(fam), s=len(fam), eta=len(fam) + 1)
    out = estimate_success(ws, (), fam, full, 50)
    assert out["size_window"]["frequency"] == 1.0
    assert out["no_heavy_spoke"]["frequency"] == 1.0
    assert out["no_heavy_diamond"]["frequency"] == 1.0
    with pytest.raises(ParameterError):
        estimate_success(ws, (), fam, full, 10)


@pytest.mark.parametrize("k", range(len(CASES)))
def test_mu_bal(k):
    inst, fam = CASES[k]
    b = Workspace(inst).bundle(fam)
    ids = greedy_independent(inst, inst.ids, fam)
    w = mu_bal(b, ids)
    assert sum(w.values()) == 1
    eta = 3
    if not heavy_diamonds(b, ids, eta):
        assert max(w.values()) <= Fraction(3 * eta + 3, len(ids))


def test_mu_len():
    inst, fam = CASES[0]
    b = Workspace(inst).bundle(fam)
    c = cycles_of_steps(b, 2)[0] if cycles_of_steps(b, 2) else cycles_of_steps(b, 1)[0]
    w = mu_len(b, [c])
    assert sum(w.values()) == 1
    for f, x in w.items():
        assert x == (Fraction(2, c.length) if f in c.bps else 0)
    with pytest.raises(ParameterError):
        mu_len(b, [])


@pytest.mark.parametrize("k", range(len(CASES)))
def test_cycle_sides_match_walk_regions(k):
    inst, fam = CASES[k]
    b = Workspace(inst).bundle(fam)
    for r in (1, 2):
        for c in cycles_of_steps(b, r)[:5]:
            regions = b.gamma_walk(c).regions
            off = [f for f in b.diagram.branching_points if f not in c.bps]
            expect = sorted(
                [frozenset(f for f in off if f in set(reg)) for reg in regions], key=sorted
            )
            assert sorted(b.cycle_sides(c), key=sorted) == expect


@pytest.mark.parametrize("k", range(len(CASES)))
def test_balanced_cycle_random_weights(k):
    inst, fam = CASES[k]
    b = Workspace(inst).bundle(fam)
    bps = list(b.diagram.branching_points)
    r = rng(k, "weights")
    for _ in range(5):
        raw = [r.randint(0, 9) for _ in bps]
        raw[0] += 1
        w = {f: Fraction(x, sum(raw)) for f, x in zip(bps, raw)}
        c = find_balanced_cycle(b, w)
        assert c.length <= length_cap(len(bps))
        assert all(x <= Fraction(2, 3) for x in side_weights(b, c, w))


def test_theta_and_point_mass():
    inst, fam = CASES[0]
    b = Workspace(inst).bundle(fam[:3])
    bps = b.diagram.branching_points
    assert len(bps) == 2
    c = find_balanced_cycle(b, {f: Fraction(1, 2) for f in bps})
    assert set(c.bps) == set(bps) and c.length == 4
    big = Workspace(inst).bundle(fam)
    f0 = big.diagram.branching_points[0]
    w = {f: Fraction(int(f == f0)) for f in big.diagram.branching_points}
    c = find_balanced_cycle(big, w)
    assert f0 in c.bps or max(side_weights(big, c, w)) == 0


def test_weights_must_sum_to_one():
    inst, fam = CASES[0]
    b = Workspace(inst).bundle(fam)
    with pytest.raises(ParameterError):
        find_balanced_cycle(b, {f: Fraction(1) for f in b.diagram.branching_points})


def test_impossible_cap_is_reported():
    inst, fam = CASES[0]
    b = Workspace(inst).bundle(fam)
    bps = b.diagram.branching_points
    w = {f: Fraction(1, len(bps)) for f in bps}
    with pytest.raises(ConsistencyError):
        find_balanced_cycle(b, w, cap=1)
