"""Float solve with HiGHS, then exact reconstruction and verification.

Order of attempts, each gated by :func:`verify_certificate`:

1. continued-fraction rounding of the float primal/dual, denominator bounds
   10**3, 10**6, 10**9 (capped by ``max_denominator``);
2. exact re-solve of the optimal float basis (``A_B x_B = b``, ``A_B^T y = c_B``);
3. exact simplex warm-started from that basis, then the plain exact simplex.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

import highspy
import numpy as np
from flint import fmpq, fmpq_mat

from .model import Certificate, LPError, RationalLP
from .simplex import solve_exact
from .verify import verify_certificate

log = logging.getLogger(__name__)

DENOMINATOR_LADDER = (10**3, 10**6, 10**9)


@dataclass
class FloatSolution:
    x: np.ndarray
    y: np.ndarray
    objective: float
    basic_cols: list[int]
    active_rows: list[int]  # rows whose slack is nonbasic


def solve_float(lp: RationalLP, tolerance: float = 1e-9) -> FloatSolution:
    A = lp.float_matrix()
    b = lp.float_rhs()
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("random_seed", 0)
    h.setOptionValue("threads", 1)
    h.setOptionValue("primal_feasibility_tolerance", tolerance)
    h.setOptionValue("dual_feasibility_tolerance", tolerance)
    h.setOptionValue("solver", "simplex")
    model = highspy.HighsLp()
    model.num_col_ = lp.n_vars
    model.num_row_ = lp.n_rows
    model.col_cost_ = lp.float_objective()
    model.col_lower_ = np.zeros(lp.n_vars)
    model.col_upper_ = np.full(lp.n_vars, highspy.kHighsInf)
    model.row_lower_ = b
    model.row_upper_ = b
    model.sense_ = highspy.ObjSense.kMaximize
    model.a_matrix_.format_ = highspy.MatrixFormat.kRowwise
    model.a_matrix_.start_ = A.indptr.astype(np.int32)
    model.a_matrix_.index_ = A.indices.astype(np.int32)
    model.a_matrix_.value_ = A.data
    model.a_matrix_.num_col_ = lp.n_vars
    model.a_matrix_.num_row_ = lp.n_rows
    h.passModel(model)
    h.run()
    status = h.getModelStatus()
    if status != highspy.HighsModelStatus.kOptimal:
        raise LPError(f"float solve did not reach optimality: {status}")
    sol = h.getSolution()
    basis = h.getBasis()
    basic = highspy.HighsBasisStatus.kBasic
    basic_cols = [j for j, s in enumerate(basis.col_status) if s == basic]
    active_rows = [i for i, s in enumerate(basis.row_status) if s != basic]
    return FloatSolution(
        np.asarray(sol.col_value), np.asarray(sol.row_dual), h.getInfo().objective_function_value,
        basic_cols, active_rows,
    )


def _round_vector(values: np.ndarray, max_den: int, zero_tol: float) -> dict[int, Fraction]:
    out = {}
    for i, v in enumerate(values):
        if abs(v) <= zero_tol:
            continue
        q = Fraction(float(v)).limit_denominator(max_den)
        if q != 0:
            out[i] = q
    return out


def round_certificate(lp: RationalLP, fs: FloatSolution, max_den: int, zero_tol: float = 1e-11) -> Certificate:
    primal = _round_vector(fs.x, max_den, zero_tol)
    dual = _round_vector(fs.y, max_den, zero_tol)
    obj = sum((Fraction(lp.c_num[j], lp.c_den) * v for j, v in primal.items()), Fraction(0))
    return Certificate(primal, dual, obj, {"method": f"cf-rounding<= {max_den}"})


def _as_fraction(v: fmpq) -> Fraction:
    return Fraction(int(v.p), int(v.q))


def basis_certificate(lp: RationalLP, basic_cols: list[int], active_rows: list[int]) -> Certificate | None:
    """Solve the square basis system exactly; None if it is not square or singular.

    Basic columns with a single nonzero among the active rows (slacks) are
    eliminated first, so only the structural core goes to the dense solver.
    """
    if len(basic_cols) != len(active_rows) or not basic_cols:
        return None
    sub = lp.A[active_rows][:, basic_cols].tocsc()
    row_of = {}  # singleton basic column -> active row position
    for k in range(len(basic_cols)):
        lo, hi = sub.indptr[k], sub.indptr[k + 1]
        if hi - lo == 1:
            row_of[k] = int(sub.indices[lo])
    if len(set(row_of.values())) != len(row_of):
        return None
    elim_rows = set(row_of.values())
    core_cols = [k for k in range(len(basic_cols)) if k not in row_of]
    core_rows = [r for r in range(len(active_rows)) if r not in elim_rows]
    m = len(core_cols)
    if len(core_rows) != m:
        return None

    def entry(r: int, k: int) -> Fraction:
        return Fraction(int(sub[r, k]), lp.row_den[active_rows[r]])

    csr = sub.tocsr()
    col_pos = {k: p for p, k in enumerate(core_cols)}
    M = fmpq_mat(m, m)
    for p, r in enumerate(core_rows):
        den = lp.row_den[active_rows[r]]
        for q in range(csr.indptr[r], csr.indptr[r + 1]):
            k = col_pos.get(int(csr.indices[q]))
            if k is not None:
                M[p, k] = fmpq(int(csr.data[q]), den)
    # duals fixed by the singleton columns
    y_fixed: dict[int, Fraction] = {}
    for k, r in row_of.items():
        j = basic_cols[k]
        y_fixed[r] = Fraction(lp.c_num[j], lp.c_den) / entry(r, k)
    b = fmpq_mat(m, 1, [fmpq(lp.rhs[active_rows[r]].numerator, lp.rhs[active_rows[r]].denominator) for r in core_rows])
    rhs_dual = []
    for k in core_cols:
        j = basic_cols[k]
        v = Fraction(lp.c_num[j], lp.c_den)
        lo, hi = sub.indptr[k], sub.indptr[k + 1]
        for q in range(lo, hi):
            r = int(sub.indices[q])
            if r in y_fixed and y_fixed[r] != 0:
                v -= y_fixed[r] * Fraction(int(sub.data[q]), lp.row_den[active_rows[r]])
        rhs_dual.append(fmpq(v.numerator, v.denominator))
    try:
        if m:
            xC = M.solve(b)
            yC = M.transpose().solve(fmpq_mat(m, 1, rhs_dual))
    except ZeroDivisionError:
        return None
    primal: dict[int, Fraction] = {}
    for p, k in enumerate(core_cols):
        v = xC[p, 0]
        if v != 0:
            primal[basic_cols[k]] = _as_fraction(v)
    for k, r in row_of.items():
        i = active_rows[r]
        acc = lp.rhs[i]
        for q in range(csr.indptr[r], csr.indptr[r + 1]):
            k2 = int(csr.indices[q])
            if k2 != k:
                acc -= Fraction(int(csr.data[q]), lp.row_den[i]) * primal.get(basic_cols[k2], Fraction(0))
        v = acc / entry(r, k)
        if v != 0:
            primal[basic_cols[k]] = v
    dual: dict[int, Fraction] = {}
    for p, r in enumerate(core_rows):
        v = yC[p, 0]
        if v != 0:
            dual[active_rows[r]] = _as_fraction(v)
    for r, v in y_fixed.items():
        if v != 0:
            dual[active_rows[r]] = v
    obj = sum((Fraction(lp.c_num[j], lp.c_den) * v for j, v in primal.items()), Fraction(0))
    return Certificate(primal, dual, obj, {"method": "exact-basis"})


def solve_via_presolve(lp: RationalLP, float_tolerance: float = 1e-9, max_denominator: int = 10**9) -> Certificate:
    """Optimal verified certificate, preferring cheap reconstructions of the float optimum."""
    fs = solve_float(lp, float_tolerance)
    log.info("float optimum %.12g (%d basic columns, %d active rows)", fs.objective, len(fs.basic_cols),
             len(fs.active_rows))
    for den in DENOMINATOR_LADDER:
        if den > max_denominator:
            break
        cert = round_certificate(lp, fs, den)
        verdict = verify_certificate(lp, cert)
        log.info("cf rounding <= %d: %s", den, verdict.reason)
        if verdict:
            return cert
    cert = basis_certificate(lp, fs.basic_cols, fs.active_rows)
    if cert is not None:
        verdict = verify_certificate(lp, cert)
        log.info("exact basis: %s", verdict.reason)
        if verdict:
            return cert
    if len(fs.basic_cols) == len(fs.active_rows):
        try:
            cert = solve_exact(lp, initial_basis=fs.basic_cols, rows=fs.active_rows)
            verdict = verify_certificate(lp, cert)
            log.info("warm exact simplex on active rows: %s", verdict.reason)
            if verdict:
                cert.meta["method"] = "exact-simplex-warm"
                return cert
        except LPError as exc:
            log.info("warm exact simplex failed: %s", exc)
    cert = solve_exact(lp)
    verdict = verify_certificate(lp, cert)
    if not verdict:
        raise LPError(f"exact simplex produced a rejected certificate: {verdict.reason}")
    return cert
