"""Independent exact check of an LP optimality certificate.

Uses only Python integers and fractions; it shares no arithmetic with the
solvers, so an accepted certificate does not depend on trusting them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..rational import format_rational
from .model import Certificate, RationalLP


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    kind: str = "ok"  # ok | primal-sign | primal-row | dual-index | dual-column | objective
    index: int | None = None
    reason: str = "certificate accepted"

    def __bool__(self) -> bool:
        return self.accepted


def _reject(kind: str, index: int | None, reason: str) -> Verdict:
    return Verdict(False, kind, index, reason)


def verify_certificate(lp: RationalLP, cert: Certificate) -> Verdict:
    """Accept iff primal feasibility, dual feasibility and equal objectives hold exactly."""
    n, m = lp.n_vars, lp.n_rows

    # primal sign and index range
    for j in sorted(cert.primal):
        if not 0 <= j < n:
            return _reject("primal-sign", j, f"primal references unknown variable {j}")
        if cert.primal[j] < 0:
            return _reject(
                "primal-sign", j,
                f"primal infeasible: variable {j} ({lp.variables[j]}) = {format_rational(cert.primal[j])} < 0",
            )

    # primal rows: sum_j A_int[i,j] x_j == b_i * den_i, scaled by the primal common denominator
    support = sorted(j for j, v in cert.primal.items() if v != 0)
    X = 1
    for j in support:
        X = math.lcm(X, cert.primal[j].denominator)
    acc = np.zeros(m, dtype=object)
    acc[:] = 0
    if support:
        csc = lp.A[:, support].tocsc()
        for col, j in enumerate(support):
            xj = int(cert.primal[j] * X)
            lo, hi = csc.indptr[col], csc.indptr[col + 1]
            rows = csc.indices[lo:hi]
            vals = csc.data[lo:hi].astype(object)
            acc[rows] = acc[rows] + vals * xj
    for i in range(m):
        target = lp.rhs[i] * lp.row_den[i] * X
        if acc[i] != target:
            lhs = Fraction(int(acc[i]), X * lp.row_den[i])
            return _reject(
                "primal-row", i,
                f"primal infeasible: row {i} evaluates to {format_rational(lhs)}, rhs {format_rational(lp.rhs[i])}",
            )

    # dual columns: sum_i y_i A_int[i,j] / den_i >= c_j
    for i in sorted(cert.dual):
        if not 0 <= i < m:
            return _reject("dual-index", i, f"dual references unknown row {i}")
    dual_rows = sorted(i for i, v in cert.dual.items() if v != 0)
    L = 1
    for i in dual_rows:
        L = math.lcm(L, cert.dual[i].denominator * lp.row_den[i])
    col_acc = np.zeros(n, dtype=object)
    col_acc[:] = 0
    for i in dual_rows:
        w = cert.dual[i] * L / lp.row_den[i]
        assert w.denominator == 1
        wi = int(w)
        lo, hi = lp.A.indptr[i], lp.A.indptr[i + 1]
        cols = lp.A.indices[lo:hi]
        vals = lp.A.data[lo:hi].astype(object)
        col_acc[cols] = col_acc[cols] + vals * wi
    for j in range(n):
        # col_acc[j] / L >= c_num[j] / c_den
        if col_acc[j] * lp.c_den < lp.c_num[j] * L:
            gap = Fraction(int(col_acc[j]), L) - Fraction(lp.c_num[j], lp.c_den)
            return _reject(
                "dual-column", j,
                f"dual infeasible: column {j} ({lp.variables[j]}) has A^T y - c = {format_rational(gap)} < 0",
            )

    # objectives
    primal_obj = sum((Fraction(lp.c_num[j], lp.c_den) * cert.primal[j] for j in support), Fraction(0))
    dual_obj = sum((lp.rhs[i] * cert.dual[i] for i in dual_rows), Fraction(0))
    if primal_obj != cert.objective_value:
        return _reject(
            "objective", None,
            f"objective mismatch: c.x = {format_rational(primal_obj)}, claimed {format_rational(cert.objective_value)}",
        )
    if dual_obj != cert.objective_value:
        return _reject(
            "objective", None,
            f"objective mismatch: b.y = {format_rational(dual_obj)}, claimed {format_rational(cert.objective_value)}",
        )
    return Verdict(True)
