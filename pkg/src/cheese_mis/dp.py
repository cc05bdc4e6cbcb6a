"""Dynamic programming over Swiss-cheese separators.

Two tables are kept per separator key: ``small`` (the optimum capped at s,
found by exhaustive search) and ``value`` (the best of ``small`` and every
candidate split's sum of child values).  Entries are computed lazily by a
memoised recursion.  Children always have strictly smaller regions, so
every entry is written before anything reads it.
"""

from __future__ import annotations

import itertools
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    BudgetError,
    ConsistencyError,
    InvalidCycleError,
    ParameterError,
    PreconditionError,
    SamplingFailure,
)
from .sampling import SamplingParams, build_children, cycles_of_steps, eps_for_size, size_parameter, split
from .seeding import derive_seed
from .separators import SwissCheeseSeparator, allowed, check_separator, trivial_separator
from .voronoi import Workspace

MODES = ("sampled", "exhaustive")
DEFAULT_ETA_FACTOR = 0.4


# -- catalog and order ----------------------------------------------------------------


@dataclass
class SepCatalog:
    entries: dict = field(default_factory=dict)     # key -> SwissCheeseSeparator

    def add(self, scs):
        self.entries.setdefault(scs.key, scs)
        return self.entries[scs.key]

    def __len__(self):
        return len(self.entries)

    def __contains__(self, key):
        return key in self.entries

    def layer(self, key):
        return len(self.entries[key].region)

    def in_order(self):
        """Separators sorted so that contained regions come first."""
        return sorted(self.entries.values(), key=lambda c: (len(c.region), c.key))


def precedes(a: SwissCheeseSeparator, b: SwissCheeseSeparator) -> bool:
    return a.region <= b.region


def _cycle_sets(bundle, s):
    """Edge-disjoint sets of radial cycles of total length at most ``s``."""
    pool = []
    for r in range(1, s // 2 + 1):
        pool.extend(cycles_of_steps(bundle, r))
    out = []

    def grow(start, chosen, used, total):
        if chosen:
            out.append(tuple(chosen))
        for i in range(start, len(pool)):
            c = pool[i]
            keys = set(c.radial_keys())
            if total + c.length > s or keys & used:
                continue
            chosen.append(c)
            grow(i + 1, chosen, used | keys, total + c.length)
            chosen.pop()

    grow(0, [], set(), 0)
    return out


def enumerate_sep(instance, s, mode="exhaustive", seed=0, budget=200_000, ws=None):
    """Catalog of ripe separators of complexity at most ``s``."""
    ws = ws or Workspace(instance)
    cat = SepCatalog()
    cat.add(trivial_separator(instance))
    if mode == "sampled":
        solver = Solver(instance, s=s, mode="sampled", seed=seed, ws=ws)
        solver.solve()
        for scs in solver.catalog.entries.values():
            cat.add(scs)
        return cat
    if mode != "exhaustive":
        raise ParameterError(f"unknown mode {mode!r}")
    if s < 2:
        return cat
    g = instance.graph
    ids = instance.ids
    max_support = (5 * s) // 2
    work = 0
    for size in range(3, min(max_support, len(ids)) + 1):
        for support in itertools.combinations(ids, size):
            work += 1
            if work > budget:
                raise BudgetError("separator enumeration too large; use sampled mode")
            if not instance.is_independent(support):
                continue
            bundle = ws.bundle(support)
            if bundle.diagram.degenerate:
                continue
            for cyc in _cycle_sets(bundle, s):
                complexity = sum(c.length for c in cyc)
                if 2 * len(support) > 5 * complexity:
                    continue
                walls = set()
                for c in cyc:
                    walls.update(bundle.gamma_walk(c).edges)
                _, comps = g.flood_faces(walls)
                for comp in comps:
                    scs = SwissCheeseSeparator.make(support, cyc, comp)
                    try:
                        check_separator(ws, scs)
                    except InvalidCycleError:
                        continue
                    cat.add(scs)
    return cat


# -- SmallSol ---------------------------------------------------------------------------


class _Full(Exception):
    pass


def capped_mis(instance, candidates, cap):
    """Largest independent subset of ``candidates``, stopping once it reaches ``cap``."""
    cands = sorted(candidates)
    sets = {q: instance.obj(q).vertex_set for q in cands}
    nbr = {q: {r for r in cands if r != q and not sets[q].isdisjoint(sets[r])} for q in cands}
    best = [()]
    if cap <= 0 or not cands:
        return 0, ()

    def search(pool, chosen):
        if len(chosen) > len(best[0]):
            best[0] = tuple(chosen)
            if len(chosen) >= cap:
                raise _Full
        if not pool or len(chosen) + len(pool) <= len(best[0]):
            return
        free = [q for q in pool if not (nbr[q] & pool)]
        if free:
            search(pool - set(free), chosen + free)
            return
        v = max(sorted(pool), key=lambda q: len(nbr[q] & pool))
        search(pool - nbr[v] - {v}, chosen + [v])
        search(pool - {v}, chosen)

    try:
        search(set(cands), [])
    except _Full:
        pass
    sol = tuple(sorted(best[0][:cap]))
    return len(sol), sol


def small_sol(ctx, scs, s):
    ws = ctx if isinstance(ctx, Workspace) else Workspace(ctx)
    return capped_mis(ws.instance, allowed(ws, scs), s)


def greedy_independent(instance, candidates, start=()):
    chosen = list(start)
    taken = set()
    for q in chosen:
        taken |= instance.obj(q).vertex_set
    pool = [q for q in sorted(candidates) if q not in set(chosen)]
    sets = {q: instance.obj(q).vertex_set for q in pool}
    deg = {q: sum(1 for r in pool if r != q and not sets[q].isdisjoint(sets[r])) for q in pool}
    for q in sorted(pool, key=lambda x: (deg[x], x)):
        if taken.isdisjoint(sets[q]):
            chosen.append(q)
            taken |= sets[q]
    return tuple(sorted(chosen))


# -- candidates ---------------------------------------------------------------------------


def _family_ok(ws, scs, children, s, parent_allowed):
    seen = set()
    for ch in children:
        if ch.complexity > s or not ch.is_ripe:
            return False
        if not ch.region < scs.region:
            return False
        if seen & ch.region:
            return False
        seen |= ch.region
        if not set(allowed(ws, ch)) <= parent_allowed:
            return False
    return True


def enumerate_cand(ctx, scs, s, mode="sampled", seed=0, tries=3, eta_factor=DEFAULT_ETA_FACTOR,
                   budget=50_000, stats=None):
    """Candidate child families for ``scs``; each is a list of separators."""
    ws = ctx if isinstance(ctx, Workspace) else Workspace(ctx)
    inst = ws.instance
    stats = stats if stats is not None else Counter()
    pool = allowed(ws, scs)
    out = []
    seen = set()
    if mode == "sampled":
        _, wit = capped_mis(inst, pool, s)
        fam = max(greedy_independent(inst, pool, wit), greedy_independent(inst, pool), key=len)
        if len(fam) < s:
            return out
        for t in range(tries):
            params = SamplingParams.make(
                len(fam), s=s, eta_factor=eta_factor,
                seed=derive_seed(seed, "cand", repr(scs.key), t),
            )
            stats["splits"] += 1
            try:
                res = split(ws, scs, fam, params)
            except SamplingFailure as exc:
                stats["split_failures"] += 1
                for k, v in exc.diagnostics.items():
                    stats["reject:" + k] += v
                continue
            key = tuple(sorted(c.key for c in res.children))
            if key in seen:
                continue
            seen.add(key)
            if _family_ok(ws, scs, res.children, s, set(pool)):
                out.append(res.children)
            else:
                stats["family_rejected"] += 1
        return out
    if mode != "exhaustive":
        raise ParameterError(f"unknown mode {mode!r}")
    parent_allowed = set(pool)
    k_cycles = list(scs.cycles)
    work = 0
    for size in range(0, min(2 * s, len(pool)) + 1):
        for extra in itertools.combinations(pool, size):
            if not inst.is_independent(extra):
                continue
            sample_set = tuple(sorted(set(scs.support) | set(extra)))
            if len(sample_set) < 3:
                continue
            bundle = ws.bundle(sample_set)
            if bundle.diagram.degenerate or any(not bundle.is_cycle(c) for c in k_cycles):
                continue
            cycles = []
            for r in range(1, s // 2 + 1):
                cycles.extend(cycles_of_steps(bundle, r, budget))
            for i, c1 in enumerate(cycles):
                for c2 in cycles[i:]:
                    work += 1
                    if work > budget:
                        raise BudgetError("candidate enumeration too large; use sampled mode")
                    combo = {c.key: c for c in k_cycles + [c1, c2]}
                    children, _ = build_children(ws, scs, bundle, [combo[k] for k in sorted(combo)], s)
                    if not children:
                        continue
                    key = tuple(sorted(c.key for c in children))
                    if key in seen:
                        continue
                    seen.add(key)
                    if _family_ok(ws, scs, children, s, parent_allowed):
                        out.append(children)
    return out


# -- solver -----------------------------------------------------------------------------------


@dataclass
class Entry:
    scs: SwissCheeseSeparator
    small: int
    small_witness: tuple
    value: int = 0
    choice: tuple | None = None       # child keys of the winning candidate
    candidates: int = 0


@dataclass
class DpResult:
    value: int
    solution: tuple
    s: int
    eps: float
    mode: str
    seed: int
    guarantee_exponent: Fraction
    stats: dict

    def to_json(self):
        g = self.guarantee_exponent
        return {
            "value": self.value,
            "solution": list(self.solution),
            "s": self.s,
            "epsilon": self.eps,
            "mode": self.mode,
            "seed": self.seed,
            "guarantee_exponent": f"{g.numerator}/{g.denominator}",
            "high_probability_only": self.mode == "sampled",
            "stats": self.stats,
        }


class Solver:
    def __init__(self, instance, s, mode="sampled", seed=0, tries=3, eta_factor=DEFAULT_ETA_FACTOR,
                 budget=50_000, ws=None):
        if s < 1:
            raise ParameterError("size parameter must be at least 1")
        if mode not in MODES:
            raise ParameterError(f"unknown mode {mode!r}")
        self.instance = instance
        self.s = int(s)
        self.mode = mode
        self.seed = int(seed)
        self.tries = tries
        self.eta_factor = eta_factor
        self.budget = budget
        self.ws = ws or Workspace(instance)
        self.catalog = SepCatalog()
        self.table = {}
        self.stats = Counter()
        self.fill_order = []

    def entry(self, scs) -> Entry:
        scs = self.catalog.add(scs)
        hit = self.table.get(scs.key)
        if hit is not None:
            if hit.choice == "pending":
                raise ConsistencyError("separator read before it was written")
            return hit
        small, wit = small_sol(self.ws, scs, self.s)
        e = Entry(scs, small, wit, small, None)
        self.table[scs.key] = Entry(scs, small, wit, small, "pending")
        if small >= self.s:
            fams = enumerate_cand(
                self.ws, scs, self.s, self.mode, self.seed, self.tries, self.eta_factor,
                self.budget, self.stats,
            )
            e.candidates = len(fams)
            best_val, best_key = small, ()
            for fam in fams:
                for ch in fam:
                    if not ch.region < scs.region:
                        raise ConsistencyError("candidate child does not shrink the region")
                total = sum(self.entry(ch).value for ch in fam)
                ck = tuple(sorted(ch.key for ch in fam))
                if total > best_val or (total == best_val and best_key != () and ck < best_key):
                    best_val, best_key = total, ck
            if best_key:
                e.value, e.choice = best_val, best_key
        self.table[scs.key] = e
        self.fill_order.append(scs.key)
        self.stats["separators"] += 1
        return e

    def witness(self, key):
        e = self.table[key]
        if e.choice is None:
            sol = e.small_witness
        else:
            sol = []
            for ck in e.choice:
                sol.extend(self.witness(ck))
            sol = tuple(sorted(sol))
        if not self.instance.is_independent(sol):
            raise ConsistencyError("reconstructed solution is not independent")
        if len(sol) != e.value:
            raise ConsistencyError("reconstructed solution has the wrong size")
        if not set(sol) <= set(allowed(self.ws, e.scs)):
            raise ConsistencyError("reconstructed solution leaves the allowed set")
        return sol

    def solve(self):
        root = trivial_separator(self.instance)
        e = self.entry(root)
        return e.value, self.witness(root.key)


def resolve_parameters(eps=None, s_override=None):
    """``(s, eps)``: the override decouples s from the formula value."""
    if s_override is not None:
        s = int(s_override)
        if s < 1:
            raise ParameterError("s override must be at least 1")
        return s, (float(eps) if eps is not None else eps_for_size(s))
    if eps is None:
        raise ParameterError("need epsilon or an s override")
    return math.ceil(size_parameter(eps)), float(eps)


def approx_is(instance, eps=None, s_override=None, mode="sampled", seed=0, tries=3,
              eta_factor=DEFAULT_ETA_FACTOR, budget=50_000) -> DpResult:
    s, eps = resolve_parameters(eps, s_override)
    t0 = time.perf_counter()
    solver = Solver(instance, s, mode, seed, tries, eta_factor, budget)
    value, sol = solver.solve()
    stats = dict(sorted(solver.stats.items()))
    stats["catalog_size"] = len(solver.catalog)
    stats["elapsed_seconds"] = time.perf_counter() - t0
    expo = Fraction(4 * eps).limit_denominator(10**9)
    return DpResult(value, sol, s, eps, mode, seed, expo, stats)


# -- inequalities used by the approximation argument -------------------------------------------


def check_inequality(delta, c, A, a_list, tol=1e-9):
    """sum a_i^(1-delta) >= A^(1-delta) under the stated preconditions."""
    if not (0 < delta < 1 and 0 < c < 1):
        raise PreconditionError("delta and c must lie in (0, 1)")
    if A <= 0 or not a_list or any(a <= 0 for a in a_list):
        raise PreconditionError("A and every a_i must be positive")
    if any(a > c * A for a in a_list):
        raise PreconditionError("some a_i exceeds c*A")
    if sum(a_list) < c**delta * A * (1 - tol):
        raise PreconditionError("sum of a_i is below c^delta * A")
    lhs = sum(a ** (1 - delta) for a in a_list)
    return lhs >= A ** (1 - delta) * (1 - tol)


def bernoulli_check(r, x, tol=1e-12):
    """(1 - x)^r <= 1 - r*x for r, x in [0, 1]."""
    if not (0 <= r <= 1 and 0 <= x <= 1):
        raise PreconditionError("r and x must lie in [0, 1]")
    return (1 - x) ** r <= 1 - r * x + tol
