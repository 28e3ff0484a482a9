from fractions import Fraction
from itertools import combinations

import pytest

from oracles import brute_depth
from pnewcong.congruence import (
    PrecisionMismatch,
    changepoint_table,
    check_refinement,
    depth,
    depth_matrix,
    depth_value,
    sturm_bound,
)
from pnewcong.eigensolve import Eigensystem
from pnewcong.padic import AtLeast
from pnewcong.verify import ingest_linv, linv_fixture_path


def _es(index, aell, p=3, M=6, eps=1):
    return Eigensystem(p, 6, 1, index, eps, -eps * 9 if p == 3 else -eps * p**2, aell, M)


def test_sturm_examples():
    s = sturm_bound(1, 3, 44)
    assert (s.Nprime, s.index, s.bound) == (81, 324, 1186)
    assert s.exact == Fraction(44 * 324, 12) - Fraction(323, 243)
    assert sturm_bound(1, 5, 32).bound == 9998
    assert sturm_bound(1, 7, 20).bound == 32012
    primes = sturm_bound(2, 3, 36).primes()
    assert 2 not in primes and 3 not in primes and primes[0] == 5


def test_sturm_requires_coprime():
    with pytest.raises(ValueError):
        sturm_bound(3, 3, 10)


def test_depth_basics():
    a = _es(0, {2: 5, 5: 10})
    b = _es(1, {2: 5 + 27, 5: 10 + 9 * 2})
    assert depth(a, a, [2, 5]) == AtLeast(6)
    assert depth(a, b, [2, 5]) == 2
    assert depth(b, a, [2, 5]) == 2
    assert depth(a, b, [2]) == 3
    with pytest.raises(PrecisionMismatch):
        depth(a, _es(2, {2: 5, 5: 10}, M=5), [2])


def _labels(N, p, k):
    return {r.index: r.vL for r in ingest_linv(linv_fixture_path(N, p, k).read_text())}


def test_depth_of_labelled_forms(case):
    res = case(1, 3, 44, 16)
    lab = _labels(1, 3, 44)
    zero = next(i for i, v in lab.items() if v == 0)
    eights = [i for i, v in lab.items() if v == -8]
    for j in eights:
        e0 = res.systems[zero]
        assert depth(e0, res.systems[j], res.primes) in (2, 3)


def test_minus_eleven_pair_depth(case):
    res = case(1, 5, 32, 15)
    lab = _labels(1, 5, 32)
    a, b = [i for i, v in lab.items() if v == -11]
    assert depth_value(depth(res.systems[a], res.systems[b], res.primes)) >= 12


def test_depth_agrees_with_brute_force(case):
    res = case(1, 7, 20, 9)
    for a, b in combinations(res.systems, 2):
        assert depth_value(depth(a, b, res.primes)) == brute_depth(a.aell, b.aell, res.primes, 7, 9)


def test_depth_ultrametric_and_cutoff_monotone(case):
    res = case(1, 11, 18, 9)
    d = depth_matrix(res.systems, res.primes)
    short = depth_matrix(res.systems, res.primes[:10])

    def get(i, j):
        return depth_value(d[(min(i, j), max(i, j))])

    idx = [e.index for e in res.systems]
    for a, b, c in combinations(idx, 3):
        assert get(a, c) >= min(get(a, b), get(b, c))
    for key in d:
        assert depth_value(d[key]) <= depth_value(short[key])


def test_p3_k44_layout(case):
    res = case(1, 3, 44, 16)
    table = res.table(_labels(1, 3, 44))
    assert table.changepoints == [1, 2, 4, 9, 11, 15]
    assert table.canonical()[1][1] == [[0, -8, -8], [-6, -6, -11, -11]]
    assert check_refinement(table)
    assert table.all_distinct_at(15)
    md = table.to_markdown()
    assert md.splitlines()[0] == "| Depth $p^*$ | $v_p(\\mathcal{L})$ |"
    assert "| 15 | all distinct |" in md


@pytest.mark.parametrize(
    "N,p,k,M,cps",
    [(1, 5, 32, 15, [1, 2, 4, 7, 8, 12, 14]), (2, 3, 36, 17, [1, 2, 5, 8, 13, 16])],
)
def test_changepoints(case, N, p, k, M, cps):
    assert case(N, p, k, M).table().changepoints == cps


def test_singletons_after_max_depth(case):
    res = case(1, 7, 20, 9)
    table = res.table()
    dmax = max(depth_value(v) for v in res.depths().values())
    assert table.all_distinct_at(dmax + 1)
    assert not table.all_distinct_at(dmax)


def test_unresolved_rows_are_marked():
    a = _es(0, {2: 5}, M=3)
    b = _es(1, {2: 5}, M=3)
    table = changepoint_table([a, b], [2])
    assert table.changepoints == [1]
    assert "unresolved" in table.to_markdown()


def test_csv_output():
    a, b, c = _es(0, {2: 1}), _es(1, {2: 4}), _es(2, {2: 2})
    table = changepoint_table([a, b, c], [2])
    lines = table.to_csv().splitlines()
    assert lines[0] == "depth,class,members,labels"
    assert lines[1:] == ["1,0,0 1,0 1", "1,1,2,2", "2,0,0,0", "2,1,1,1", "2,2,2,2"]


def test_changepoint_rejects_mixed_precision():
    with pytest.raises(PrecisionMismatch):
        changepoint_table([_es(0, {2: 1}), _es(1, {2: 1}, M=5)], [2])
