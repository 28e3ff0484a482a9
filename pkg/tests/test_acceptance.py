"""Acceptance criteria, one verdict line each (printed in the terminal summary).

Run on its own with ``pytest tests/test_acceptance.py -v``. A criterion that
cannot be met is reported as FAIL in the summary; the corresponding pytest
item is a strict xfail so that a later fix is noticed.
"""

import io
import json

import pytest

from acceptance_registry import TIMINGS, record
from conftest import TABLE_CASES
from oracles import cubic_discriminant, zp_roots_digit_tree
from pnewcong.cli import main
from pnewcong.congruence import check_refinement, depth_matrix, depth_value
from pnewcong.eigensolve import al_split, write_archive
from pnewcong.local import c_constant
from pnewcong.modsym import atkin_lehner_matrix, hecke_matrix
from pnewcong import linalg
from pnewcong.padic import IntPoly, hensel_roots
from pnewcong.verify import (
    an_doubling_check,
    cancellation_from_pairs,
    ingest_linv,
    linv_fixture_path,
    load_cancellation_pairs,
    load_printed_table,
    match_partners,
    printed_partitions,
    structural_labels,
)

BUDGET = {(1, 3, 44): 1800, (1, 5, 32): 3600, (1, 7, 20): 1800, (1, 11, 18): 1800, (2, 3, 36): 3600}


def _fixture_labels(key):
    records = ingest_linv(linv_fixture_path(*key).read_text(encoding="utf-8"))
    return {r.index: r.vL for r in records}


def _load(case, key):
    res = case(*key, TABLE_CASES[key])
    seconds = TIMINGS.get((*key, TABLE_CASES[key], False), 0.0)
    return res, seconds


def _row_mismatches(res, key, printed_key=None):
    """Depths whose classes differ from the transcription under the shipped labels."""
    table = res.table(_fixture_labels(key))
    printed = dict(printed_partitions(load_printed_table(*(printed_key or key))))
    bad = []
    for n, classes in table.canonical():
        want = printed.get(n)
        if want is None or sorted(want) != sorted(classes):
            bad.append(n)
    return bad


def _consistent_labellings(res, key, printed_key=None):
    return structural_labels(res.table(), load_printed_table(*(printed_key or key)))


def _runtime(key, seconds):
    return (f"runtime {seconds:.0f}s <= {BUDGET[key]}s", seconds <= BUDGET[key])


def test_criterion_1_p3_k44(case):
    key = (1, 3, 44)
    res, seconds = _load(case, key)
    table = res.table()
    parts = [
        ("changepoints {1,2,4,9,11,15}", table.changepoints == [1, 2, 4, 9, 11, 15]),
        ("classes match the printed table", not _row_mismatches(res, key)),
        ("a consistent labelling exists", len(_consistent_labellings(res, key)) >= 1),
        _runtime(key, seconds),
    ]
    assert record(1, "depth table N=1 p=3 k=44 M=16", parts)


def _criterion_2_parts(case):
    key = (1, 5, 32)
    res, seconds = _load(case, key)
    labels = _fixture_labels(key)
    a, b = [i for i, v in labels.items() if v == -11]
    d = depth_value(depth_matrix([res.systems[a], res.systems[b]], res.primes)[(min(a, b), max(a, b))])
    bad = _row_mismatches(res, key)
    return res, key, bad, [
        ("changepoints {1,2,4,7,8,12,14}", res.table().changepoints == [1, 2, 4, 7, 8, 12, 14]),
        (f"classes as printed (rows differing: {bad or 'none'})", not bad),
        (f"vL=-11 pair depth {d} >= 12", d >= 12),
        _runtime(key, seconds),
    ]


def test_criterion_2_p5_k32(case):
    res, key, bad, parts = _criterion_2_parts(case)
    extra = ""
    if bad == [1]:
        extra = ("depth 1 splits into two residual classes of sizes 6 and 5; T_2 char poly mod 5 "
                 "is (x+1)^5 (x+4)^6, so one printed class of 11 is not attainable")
    record(2, "depth table N=1 p=5 k=32 M=15", parts, extra)
    # everything except the printed depth-1 row must hold
    assert all(ok for name, ok in parts if not name.startswith("classes as printed"))
    assert bad == [1]


@pytest.mark.xfail(strict=True, reason="p=5, k=32: transcribed depth-1 row has one class; computation gives two")
def test_criterion_2_depth_one_row(case):
    _, _, bad, _ = _criterion_2_parts(case)
    assert bad == []


def test_criterion_3_p7_k20(case):
    key = (1, 7, 20)
    res, seconds = _load(case, key)
    table = res.table(_fixture_labels(key))
    row1 = table.canonical()[0][1]
    parts = [
        ("changepoints {1,2,3,5,7,8}", table.changepoints == [1, 2, 3, 5, 7, 8]),
        ("depth-1 class [0,-1,-5,-5] present", [0, -1, -5, -5] in row1),
        _runtime(key, seconds),
    ]
    assert record(3, "depth table N=1 p=7 k=20 M=9", parts)


def test_criterion_4_p11_k18(case):
    key = (1, 11, 18)
    res, seconds = _load(case, key)
    bad = _row_mismatches(res, key)
    parts = [
        ("changepoints {1,2,3,5,6,7,8}", res.table().changepoints == [1, 2, 3, 5, 6, 7, 8]),
        ("14 forms", len(res.systems) == 14),
        _runtime(key, seconds),
    ]
    extra = f"class rows differing from print: {bad or 'none'}"
    if bad == [7]:
        extra += "; both computed [-5,-5] pairs split at depth 6, the printed row keeps one until 7"
    assert record(4, "depth table N=1 p=11 k=18 M=9", parts, extra)


def test_criterion_5_tame_level_two(case):
    key = (2, 3, 36)
    res, seconds = _load(case, key)
    parts = [
        ("changepoints {1,2,5,8,13,16}", res.table().changepoints == [1, 2, 5, 8, 13, 16]),
        ("7 forms", len(res.systems) == 7),
        ("classes match the printed table", not _row_mismatches(res, key)),
        _runtime(key, seconds),
    ]
    assert record(5, "depth table N=2 p=3 k=36 M=17", parts)


def test_criterion_6_weight_stability(case):
    t44 = case(1, 3, 44, 16).table(_fixture_labels((1, 3, 44)))
    r48 = case(1, 3, 48, 16)
    t48 = r48.table(_fixture_labels((1, 3, 48)))
    parts = [
        ("labelled tables identical", t44.canonical() == t48.canonical()),
        ("k=48 matches the k=44 printed table", len(_consistent_labellings(r48, (1, 3, 48), (1, 3, 44))) >= 1),
    ]
    assert record(6, "k=48 table equals k=44 table (p=3)", parts)


def test_criterion_7_deep_partner_audit(case):
    parts = []
    for key, M in TABLE_CASES.items():
        res = case(*key, M)
        records = ingest_linv(linv_fixture_path(*key).read_text(encoding="utf-8"), res.systems)
        report = match_partners(res.systems, records, depth_matrix(res.systems, res.primes))
        dbl = an_doubling_check(records, key[1], key[2])
        n = len(report.audits)
        parts.append((f"N={key[0]} p={key[1]} k={key[2]} ({n} admissible)", report.passed and report.unique and dbl.passed))
    assert record(7, "unique opposite-sign deep partner for every admissible form", parts)


def test_criterion_8_cancellation():
    t1 = cancellation_from_pairs(load_cancellation_pairs(1, 3, 44), 3, 44)
    t2 = cancellation_from_pairs(load_cancellation_pairs(1, 5, 32), 5, 32)
    parts = [
        ("p=3,k=44 list", [e.pair() for e in t1] == [[-3, -6], [-3, -8], [-3, -11]]),
        ("p=5,k=32 list", [e.pair() for e in t2] == [[0, -2], [-1, -5], [-1, -6], [-2, -10], [-2, -11]]),
        ("every sum valuation > -C", all(e.above_minus_C for e in t1 + t2)),
    ]
    assert record(8, "cancellation reports", parts)


def test_criterion_9_constants(case, tmp_path):
    res = case(1, 3, 44, 16)
    path = tmp_path / "p3k44.json"
    write_archive(path, res.systems, N=1, p=3, k=44, M=16, cutoff=res.cutoff)
    out = io.StringIO()
    main(["verify", "--archive", str(path)], out=out)
    text = out.getvalue()
    parts = [
        ("C(5,32)=6", c_constant(5, 32) == 6),
        ("C(7,20)=5", c_constant(7, 20) == 5),
        ("C(11,18)=5", c_constant(11, 18) == 5),
        ("C(3,44)=7", c_constant(3, 44) == 7),
        ("caption value 8 surfaced in report", "caption" in text and "uses 8" in text),
    ]
    captions = {key: load_printed_table(*key)["caption_C"] for key in TABLE_CASES if key != (1, 3, 48)}
    extra = "captions " + ", ".join(f"p={k[1]},k={k[2]}: {v}" for k, v in captions.items())
    assert record(9, "C_{p,k} constants", parts, extra)


def _trace_det_ok(case, newspace, key, M, nprimes=20):
    res = case(*key, M)
    _, sub = newspace(*key)
    mod = key[1] ** M
    for part in al_split(sub):
        forms = [e for e in res.systems if e.eps == part.sign]
        for ell in res.primes[:nprimes]:
            m = hecke_matrix(part, ell)
            tr = sum(m[i, i] for i in range(m.nrows()))
            det = m.det()
            if tr.q != 1 or det.q != 1:
                return False
            prod = 1
            for e in forms:
                prod = prod * e.aell[ell] % mod
            if sum(e.aell[ell] for e in forms) % mod != int(tr.p) % mod or prod != int(det.p) % mod:
                return False
    return True


def _cubic_sweep():
    for c2 in range(-20, 21):
        for c1 in range(-20, 21):
            for c0 in range(-20, 21):
                coeffs = [c0, c1, c2, 1]
                if cubic_discriminant(coeffs) == 0:
                    continue
                f = IntPoly(coeffs)
                for p in (3, 5):
                    ref = zp_roots_digit_tree(coeffs, p, 4)
                    for m in (1, 2, 3, 4):
                        if hensel_roots(f, p, m) != sorted(r % p**m for r in ref):
                            return False
    return True


def test_criterion_10_invariants(case, newspace):
    ap_ok, al_ok, refine_ok = True, True, True
    for key, M in TABLE_CASES.items():
        N, p, k = key
        res = case(*key, M)
        half = p ** ((k - 2) // 2)
        ap_ok &= all(abs(e.ap) == half and e.ap == -e.eps * half for e in res.systems)
        space, sub = newspace(*key)
        u = linalg.restrict(sub.basis, space.hecke_matrix(p))
        al_ok &= u == atkin_lehner_matrix(sub) * (-half)
        refine_ok &= check_refinement(res.table())
    trace_ok = all(_trace_det_ok(case, newspace, key, M) for key, M in TABLE_CASES.items())
    parts = [
        ("(a) a_p = -eps p^((k-2)/2), U_p = -p^((k-2)/2) w_p", ap_ok and al_ok),
        ("(b) trace/det vs exact T_ell, 20 primes per sign space", trace_ok),
        ("(c) hensel_roots vs digit-tree oracle, all monic cubics", _cubic_sweep()),
        ("(d) refinement", refine_ok),
    ]
    assert record(10, "invariant suites", parts)


@pytest.mark.slow
def test_criterion_11_sturm_grade(case):
    key = (1, 3, 44)
    base = case(*key, 16)
    full = case(*key, 16, True)
    seconds = TIMINGS[(*key, 16, True)]
    parts = [
        (f"cutoff {full.cutoff} ({len(full.primes)} primes)", full.cutoff == 1186),
        ("depths unchanged from cutoff 300", full.depths() == base.depths()),
        ("table unchanged", full.table().rows == base.table().rows),
        (f"runtime {seconds:.0f}s <= 8h", seconds <= 8 * 3600),
    ]
    assert record(11, "proof-grade run of p=3, k=44 with the Sturm bound", parts)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
