import pytest

from corpus import instance
from splits import recheck, run_splits
from cheese_mis.errors import ParameterError
from cheese_mis.sampling import SamplingParams, split
from cheese_mis.separators import allowed, trivial_separator
from cheese_mis.voronoi import Workspace

DONE, FAILED = run_splits(12)


def test_some_splits_succeed():
    assert len(DONE) >= 10


@pytest.mark.parametrize("k", range(len(DONE)))
def test_split_postconditions(k):
    ws, parent, fam, params, res = DONE[k]
    assert recheck(ws, parent, fam, params, res) == []


@pytest.mark.parametrize("k", range(len(DONE)))
def test_children_allowed_sets_disjoint_and_inherited(k):
    ws, parent, fam, params, res = DONE[k]
    seen = set()
    parent_ok = set(allowed(ws, parent))
    for ch in res.children:
        got = set(allowed(ws, ch, fam))
        assert not got & seen
        seen |= got
        assert set(allowed(ws, ch)) <= parent_ok
    assert set(res.lost) == set(fam) - seen
    assert set(res.conflicted) <= set(res.lost) | set(res.sample)


def test_split_is_deterministic():
    ws, parent, fam, params, res = DONE[0]
    again = split(Workspace(ws.instance), parent, fam, params)
    assert again.to_json() == res.to_json()


def test_split_preconditions():
    inst = instance(12, 12, "rect:40:1x2:disjoint", 1)
    root = trivial_separator(inst)
    with pytest.raises(ParameterError):
        split(inst, root, inst.ids[:5], SamplingParams.make(5, s=8, eta_factor=0.4))
