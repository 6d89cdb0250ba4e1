"""Acceptance suite: one PASS/FAIL line per criterion.

Each ``crit_N(threads)`` returns ``(passed, text)``. The text holds only
exact values and pinned tolerances (no timings, no float noise), so the
determinism criterion can compare whole runs byte for byte.

Run standalone with ``python tests/test_acceptance.py [--threads N]``.
"""

from __future__ import annotations

import contextlib
import io
import itertools
import random
import sys
from fractions import Fraction

import numpy as np
import pytest

from nonsignal import bounds, frames as fr, qsim
from nonsignal.cli import main as cli_main
from nonsignal.lp import Certificate, verify_certificate
from nonsignal.lp.build import build_ring_lp, build_segment_lp, coloring_distribution
from nonsignal.lp.presolve import solve_via_presolve
from nonsignal.rational import format_rational as fmt
from nonsignal.ring_model import count_colorings, distinct_beta_array, uniform_same_color_prob

SEG15_DELTA = Fraction(569800825, 2362818191739)
SEG15_REFERENCE_GAMMA = Fraction(218333768903290121, 655639517480121198)


def _cli(*argv: str) -> tuple[int, str]:
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli_main(list(argv))
    return code, buf.getvalue()


def _brute_counts(length: int) -> tuple[int, int]:
    """Proper colorings of a (length+1)-node path split by endpoint equality, by enumeration."""
    nodes = length + 1
    chunk = min(3**nodes, 3**12)
    a = b = 0
    for start in range(0, 3**nodes, chunk):
        codes = np.arange(start, start + chunk, dtype=np.int64)
        digits = np.stack([(codes // 3**i) % 3 for i in range(nodes)], axis=1)
        proper = np.all(digits[:, 1:] != digits[:, :-1], axis=1)
        same = digits[:, 0] == digits[:, -1]
        a += int(np.sum(proper & same))
        b += int(np.sum(proper & ~same))
    return a, b


def crit_1(threads: int) -> tuple[bool, str]:
    ok = True
    for length, want in ((11, 2046), (4, 18)):
        code, out = _cli("--threads", str(threads), "count", "--l", str(length))
        ok &= code == 0 and out.splitlines()[0] == f"a_{length} = {want}"
    mismatches = [l for l in range(15) if count_colorings(l) != _brute_counts(l)]
    ok &= not mismatches
    return ok, f"count: a_11=2046, a_4=18, brute force agrees for l<=14 (mismatches: {mismatches})"


def crit_2(threads: int) -> tuple[bool, str]:
    bad = []
    checked = 0
    for n in range(3, 13):
        proper = [c for c in itertools.product(range(3), repeat=n)
                  if all(c[i] != c[(i + 1) % n] for i in range(n))]
        for d in range(1, n):
            freq = Fraction(sum(c[0] == c[d] for c in proper), len(proper))
            checked += 1
            if uniform_same_color_prob(n, d) != freq:
                bad.append((n, d))
    return not bad, f"uniform same-color probability exact for {checked} (n, d) pairs with n<=12 (mismatches: {bad})"


def crit_3(threads: int) -> tuple[bool, str]:
    got = {n: len(distinct_beta_array(n, proper_only=True)) for n in (11, 16, 21)}
    ok = got == {11: 21, 16: 410, 21: 8336}
    return ok, f"distinct beta counts {got} (want 21, 410, 8336)"


def crit_4(threads: int) -> tuple[bool, str]:
    rep = bounds.experiments11()
    ok = rep.min_bias == Fraction(1, 451) and rep.per_coloring_check and rep.colorings_scanned == 2046
    return ok, f"experiments11 min bias {fmt(rep.min_bias)} over {rep.colorings_scanned} proper colorings"


def crit_5(threads: int) -> tuple[bool, str]:
    w = bounds.experiment_witness()
    g = bounds.gamma(w, threads=threads)
    up = bounds.error_lower_bound(w.delta, g).success_upper
    ok = g == Fraction(244, 451) and up == Fraction(244, 245)
    return ok, f"gamma(n=11) = {fmt(g)}, success_upper = {fmt(up)}"


def crit_6(threads: int) -> tuple[bool, str]:
    deltas = {}
    ok = True
    for n in (11, 12, 13, 14, 15, 16):
        w = bounds.bias_lp_ring(n)
        lp, _ = bounds.bias_lp_ring_model(n)
        ok &= bool(verify_certificate(lp, w.certificate)) and bounds.verify_witness(w)
        deltas[n] = w.delta
    witness_ok = bounds.min_bias_over_proper(bounds.experiment_witness()) == Fraction(1, 451)
    ok &= witness_ok and deltas[12] == 0 and deltas[11] >= Fraction(1, 451)
    ok &= all(deltas[n] > 0 for n in (13, 14, 15, 16))
    text = ", ".join(f"{n}:{fmt(d)}" for n, d in deltas.items())
    return ok, f"ring bias LP deltas {text}; n=11 witness brute-force min {fmt(Fraction(1, 451))}"


def crit_7(threads: int) -> tuple[bool, str]:
    w14 = bounds.bias_lp_segment(14)
    w = bounds.bias_lp_segment(15)
    lp, _ = bounds.bias_lp_segment_model(15)
    ok = w14.delta == 0 and w.delta == SEG15_DELTA and bool(verify_certificate(lp, w.certificate))
    ok &= bounds.verify_witness(w)
    g = bounds.gamma(w, threads=threads)
    up = bounds.error_lower_bound(w.delta, g).success_upper
    ok &= up <= 1 / (1 + w.delta)
    if g == SEG15_REFERENCE_GAMMA:
        vertex = "same vertex as the reference witness, gamma equal"
    else:
        vertex = "different optimal vertex, gamma equality not applicable"
    return ok, (f"segment bias delta(14)={fmt(w14.delta)}, delta(15)={fmt(w.delta)}, gamma={fmt(g)}, "
                f"success_upper={fmt(up)} <= 1/(1+delta); {vertex}")


def _ring_opt(n: int) -> tuple[Fraction, bool]:
    lp = build_ring_lp(n, 1, use_color_symmetry=True)
    cert = solve_via_presolve(lp)
    return cert.objective_value, bool(verify_certificate(lp, cert))


def crit_8(threads: int) -> tuple[bool, str]:
    want = {7: 1, 8: 1, 9: 1, 10: Fraction(2, 3), 11: Fraction(32, 63)}
    got = {n: _ring_opt(n) for n in want}
    ok = all(got[n] == (want[n], True) for n in want)
    text = ", ".join(f"{n}:{fmt(v)}{'' if acc else ' (REJECTED)'}" for n, (v, acc) in got.items())
    return ok, f"ring LP r=1 optima with accepted certificates {text}"


def crit_9(threads: int) -> tuple[bool, str]:
    lp9 = build_segment_lp(9, 1, use_color_symmetry=True)
    c9 = solve_via_presolve(lp9)
    ok9 = c9.objective_value == Fraction(11, 15) and bool(verify_certificate(lp9, c9))
    lp8 = build_segment_lp(8, 1, use_color_symmetry=True)
    c8 = solve_via_presolve(lp8)
    ok8 = c8.objective_value == 1 and bool(verify_certificate(lp8, c8))
    ring = build_ring_lp(9, 1, use_color_symmetry=True)
    cr = solve_via_presolve(ring)
    seg = bounds.restrict_ring_to_segment(coloring_distribution(ring, cr.primal), 8, 1)
    restricted = bounds.success_probability(seg, fr.Segment(8))
    ok = ok9 and ok8 and restricted == 1 and bool(verify_certificate(ring, cr))
    return ok, (f"segment LP k=9 optimum {fmt(c9.objective_value)} accepted; k=8 optimum {fmt(c8.objective_value)} "
                f"direct, {fmt(restricted)} via non-signaling restriction of the n=9 ring solution")


def crit_10(threads: int) -> tuple[bool, str]:
    ok = True
    for q, k, block in ((Fraction(11, 15), 9, 10), (Fraction(1382, 1383), 15, 16)):
        for N in (10, 16, 100):
            code, out = _cli("bound", "--q", fmt(q), "--k", str(k), "--r", "1", "--n", str(N))
            value = q ** (N // block)
            ok &= code == 0 and out.startswith(f"({fmt(q)})^{N // block} = {fmt(value)} (")
    return ok, "bound reproduces (11/15)^floor(N/10) and (1382/1383)^floor(N/16) for N in 10, 16, 100"


def crit_11(threads: int) -> tuple[bool, str]:
    rep = bounds.n4_infeasibility_scan(1000, threads=threads)
    ok = rep.all_violated and rep.worst_value < 0
    pt = ", ".join(fmt(x) for x in rep.worst_point)
    return ok, f"n=4 scan over {rep.points} grid points all violated; worst {fmt(rep.worst_value)} at ({pt})"


def _perturbations(lp, cert: Certificate, count: int, seed: int):
    """Yield (expected_kind, perturbed certificate) for single-entry perturbations."""
    rng = random.Random(seed)
    support = sorted(j for j, v in cert.primal.items() if v > 0)
    tight = []  # (row, column) with x_j > 0, so column j's dual constraint is tight
    csc = lp.A.tocsc()
    for j in support:
        for p in range(csc.indptr[j], csc.indptr[j + 1]):
            if csc.data[p]:
                tight.append((int(csc.indices[p]), j, int(np.sign(csc.data[p]))))
    for _ in range(count):
        kind = rng.choice(("primal-sign", "dual-column", "objective"))
        delta = Fraction(1, rng.randint(1, 10**6))
        if kind == "primal-sign":
            j = rng.choice(support)
            yield kind, Certificate({**cert.primal, j: -cert.primal[j]}, cert.dual, cert.objective_value)
        elif kind == "dual-column":
            i, _, sign = rng.choice(tight)
            dual = dict(cert.dual)
            dual[i] = dual.get(i, Fraction(0)) - sign * delta
            yield kind, Certificate(cert.primal, dual, cert.objective_value)
        else:
            yield kind, Certificate(cert.primal, cert.dual, cert.objective_value + rng.choice((-1, 1)) * delta)


def crit_12(threads: int) -> tuple[bool, str]:
    lp = build_ring_lp(10, 1, use_color_symmetry=True)
    cert = solve_via_presolve(lp)
    ok = bool(verify_certificate(lp, cert))
    tally = {"primal-sign": 0, "dual-column": 0, "objective": 0}
    wrong = 0
    for kind, bad in _perturbations(lp, cert, 100, seed=12):
        verdict = verify_certificate(lp, bad)
        tally[kind] += 1
        if verdict or verdict.kind != kind:
            wrong += 1
    ok &= wrong == 0
    text = ", ".join(f"{k} {v}" for k, v in tally.items())
    return ok, f"100 perturbations of the n=10 certificate ({text}): {100 - wrong} rejected with the right diagnostic"


def crit_13(threads: int) -> tuple[bool, str]:
    tol = 1e-9
    failures = []
    for n in (3, 4, 5):
        for seed in range(20):
            dist = qsim.run_protocol(qsim.random_protocol(n, 1, 1, 1, seed))
            rep = qsim.check_independence(dist, r=1, tol=tol)
            if not (rep.passed(tol) and qsim.check_cyclicity(dist, tol)):
                failures.append((n, seed))
    control = qsim.signaling_control(5, seed=0)
    ok = not failures and control.max_deviation > 1e-3
    return ok, (f"60 one-round protocols independent and cyclic within {tol:g} (failures: {failures}); "
                f"signaling control deviation {control.max_deviation:.2g} > 0.001")


CRITERIA = [crit_1, crit_2, crit_3, crit_4, crit_5, crit_6, crit_7, crit_8, crit_9, crit_10, crit_11, crit_12,
            crit_13]
_RESULTS: dict[tuple[int, int], tuple[bool, str]] = {}


def result(number: int, threads: int) -> tuple[bool, str]:
    key = (number, threads)
    if key not in _RESULTS:
        _RESULTS[key] = CRITERIA[number - 1](threads)
    return _RESULTS[key]


def crit_14(threads: int) -> tuple[bool, str]:
    diffs = [i for i in range(1, 14) if result(i, 1)[1] != CRITERIA[i - 1](8)[1]]
    return not diffs, f"criteria 1-13 byte-identical between a threads=1 run and a threads=8 rerun (differ: {diffs})"


def _line(number: int, passed: bool, text: str) -> str:
    return f"CRITERION {number}: {'PASS' if passed else 'FAIL'} {text}"


@pytest.mark.slow
@pytest.mark.parametrize("number", range(1, 14))
def test_criterion(number, capsys):
    passed, text = result(number, 1)
    with capsys.disabled():
        print("\n" + _line(number, passed, text))
    assert passed, text


@pytest.mark.slow
def test_criterion_14(capsys):
    passed, text = crit_14(8)
    with capsys.disabled():
        print("\n" + _line(14, passed, text))
    assert passed, text


if __name__ == "__main__":
    import argparse

    ap = argparse.ArgumentParser(description="run the acceptance criteria")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--only", type=int, nargs="+", help="criterion numbers to run")
    args = ap.parse_args()
    failed = 0
    for number in args.only or range(1, 15):
        if number == 14:
            passed, text = crit_14(args.threads)
        else:
            passed, text = result(number, args.threads)
        failed += not passed
        print(_line(number, passed, text), flush=True)
    sys.exit(1 if failed else 0)
