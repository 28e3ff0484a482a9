from collections import Counter
from fractions import Fraction

import pytest

from pnewcong.congruence import depth_matrix
from pnewcong.eigensolve import Eigensystem
from pnewcong.padic import InsufficientPrecision, PadicNumber
from pnewcong.verify import (
    CountMismatch,
    LInvariantRecord,
    MalformedRecord,
    SignMismatch,
    an_doubling_check,
    available_fixtures,
    cancellation_from_pairs,
    cancellation_report,
    format_linv,
    ingest_linv,
    linv_fixture_path,
    load_cancellation_pairs,
    load_printed_table,
    match_partners,
    parse_linv,
    printed_partitions,
    structural_labels,
)


def _fixture_text(N, p, k):
    return linv_fixture_path(N, p, k).read_text(encoding="utf-8")


def test_fixture_multisets():
    t2 = ingest_linv(_fixture_text(1, 5, 32))
    assert len(t2) == 11
    assert sorted(r.vL for r in t2) == sorted([-1, -2, -2, -5, -5, -6, -6, -10, -10, -11, -11])
    t1 = ingest_linv(_fixture_text(1, 3, 44))
    assert sorted(r.vL for r in t1) == sorted([0, -6, -6, -8, -8, -11, -11])


def test_fixtures_agree_with_printed_tables():
    for case in available_fixtures():
        printed = load_printed_table(*case)
        want = Counter(v for cls in printed["rows"][0][1] for v in cls)
        got = Counter(r.vL for r in ingest_linv(_fixture_text(*case)))
        assert got == want, case


def test_count_mismatch(case):
    res = case(1, 5, 32, 15)
    lines = _fixture_text(1, 5, 32).splitlines()
    short = "\n".join(lines[:-1])
    with pytest.raises(CountMismatch):
        ingest_linv(short, res.systems)


def test_sign_mismatch(case):
    res = case(1, 3, 44, 16)
    text = _fixture_text(1, 3, 44).replace("\n0 -1 -11", "\n0 1 -11")
    with pytest.raises(SignMismatch):
        ingest_linv(text, res.systems)


@pytest.mark.parametrize(
    "text",
    ["0 1", "0 1 x", "0 1 -3\n0 -1 -3", "0 2 -3", "0 1 -3 -3 5 10"],
)
def test_malformed(text):
    with pytest.raises(MalformedRecord):
        parse_linv(text)


def test_full_l_records_round_trip():
    recs = [
        LInvariantRecord(0, 1, -11, PadicNumber(5, -11, 7, 12)),
        LInvariantRecord(1, -1, -11, PadicNumber(5, -11, 18, 12)),
    ]
    text = format_linv(recs, {"p": 5, "k": 32})
    meta, back = parse_linv(text)
    assert meta == {"p": "5", "k": "32"}
    assert back == recs
    with pytest.raises(MalformedRecord):
        LInvariantRecord(0, 1, -10, PadicNumber(5, -11, 7, 12))


def _audit(case, N, p, k, M):
    res = case(N, p, k, M)
    records = ingest_linv(_fixture_text(N, p, k), res.systems)
    return res, records, match_partners(res.systems, records, depth_matrix(res.systems, res.primes))


def test_p5_k32_audit(case):
    res, records, report = _audit(case, 1, 5, 32, 15)
    assert report.passed and report.unique
    assert sorted(a.vL for a in report.audits) == [-11, -11, -10, -10]
    for a in report.audits:
        if a.vL == -11:
            assert a.required_depth == 12
            assert a.measured_depth >= 12


def test_p3_k44_minus_eight_pair(case):
    _, _, report = _audit(case, 1, 3, 44, 16)
    assert report.passed
    eights = [a for a in report.audits if a.vL == -8]
    assert len(eights) == 2 and all(a.required_depth == 9 and a.measured_depth >= 9 for a in eights)


def test_synthetic_sign_violation(case):
    res, records, _ = _audit(case, 1, 5, 32, 15)
    elevens = {r.index for r in records if r.vL == -11}
    systems = [
        Eigensystem(e.p, e.k, e.N, e.index, 1, -(5**15), e.aell, e.precision) if e.index in elevens else e
        for e in res.systems
    ]
    report = match_partners(systems, records, depth_matrix(systems, res.primes))
    assert not report.passed
    bad = [a for a in report.audits if a.vL == -11]
    assert all(a.partners == [] and a.clauses["sign"] is False for a in bad)
    assert "FAIL" in report.to_text()


def test_caption_constant_changes_admissible_set(case):
    res, records, _ = _audit(case, 1, 3, 44, 16)
    report = match_partners(res.systems, records, depth_matrix(res.systems, res.primes), C=8)
    assert report.passed
    assert sorted(a.vL for a in report.audits) == [-11, -11]


def test_doubling():
    assert an_doubling_check([-1, -2, -2, -5, -5, -6, -6, -10, -10, -11, -11], 5, 32).passed
    r = an_doubling_check([-9], 5, 32)
    assert not r.passed and r.witness == [-9]
    recs = ingest_linv(_fixture_text(1, 11, 18))
    assert sorted(x.vL for x in recs if x.vL < -5) == [-6, -6]
    assert an_doubling_check(recs, 11, 18).passed


def test_cancellation_from_fixtures():
    t1 = cancellation_from_pairs(load_cancellation_pairs(1, 3, 44), 3, 44)
    assert [e.pair() for e in t1] == [[-3, -6], [-3, -8], [-3, -11]]
    t2 = cancellation_from_pairs(load_cancellation_pairs(1, 5, 32), 5, 32)
    assert [e.pair() for e in t2] == [[0, -2], [-1, -5], [-1, -6], [-2, -10], [-2, -11]]
    assert all(e.above_minus_C for e in t1 + t2)
    assert cancellation_report([], [], 5, 32) == []


def _pair_with_sum(index, vL, s, p, prec=20):
    # L_f = 3 p^vL + 1 and L_g = -3 p^vL + 2 p^s - 1, so L_f + L_g = 2 p^s
    base = 3 * Fraction(p) ** vL
    a = PadicNumber.from_rational(base + 1, p, prec)
    b = PadicNumber.from_rational(-base + 2 * Fraction(p) ** s - 1, p, prec)
    return LInvariantRecord(index, 1, vL, a), LInvariantRecord(index + 1, -1, vL, b)


def test_cancellation_report_with_full_values():
    p, k = 5, 32
    records, pairing = [], []
    for i, (s, v) in enumerate([(0, -2), (-1, -5), (-2, -11)]):
        a, b = _pair_with_sum(2 * i, v, s, p)
        records += [a, b]
        pairing.append((a.index, b.index))
    got = cancellation_report(records, pairing, p, k)
    assert [e.pair() for e in got] == [[0, -2], [-1, -5], [-2, -11]]
    assert all(e.above_minus_C for e in got)


def test_cancellation_needs_full_values():
    recs = [LInvariantRecord(0, 1, -3), LInvariantRecord(1, -1, -3)]
    with pytest.raises(InsufficientPrecision):
        cancellation_report(recs, [(0, 1)], 5, 32)


def test_structural_labelling_is_unique_up_to_swaps(case):
    counts = {}
    for key, M in [((1, 3, 44), 16), ((1, 11, 18), 9), ((1, 7, 20), 9)]:
        res = case(*key, M)
        printed = load_printed_table(*key)
        skip = tuple(printed.get("rows_not_reproduced", ()))
        counts[key] = len(structural_labels(res.table(), printed, skip_rows=skip))
    assert counts == {(1, 3, 44): 1, (1, 11, 18): 1, (1, 7, 20): 2}


def test_printed_partitions_expand_distinct():
    rows = printed_partitions(load_printed_table(1, 3, 44))
    assert rows[-1] == (15, [[-11], [-11], [-8], [-8], [-6], [-6], [0]])
