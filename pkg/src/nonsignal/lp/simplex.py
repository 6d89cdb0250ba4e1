"""Exact revised simplex over the rationals, in integer-preserving form.

Rows are scaled to integers, and the basis inverse is kept as ``N / d``
with ``N`` an integer matrix and ``d = |det B|``. A pivot updates ``N`` with
one exact division by the old ``d`` (the Bareiss step), so no gcds are
taken during the solve. Pricing takes the largest reduced cost. From the
artificial start the lexicographic ratio test rules out cycling; otherwise
Bland's rule takes over after a run of degenerate pivots until the
objective moves again. Every choice is a fixed function of the input.
Linearly dependent rows are dropped up front.

Meant for LPs up to a few hundred independent rows; larger instances go
through :mod:`nonsignal.lp.presolve`, which only calls into here when exact
basis recovery fails.
"""

from __future__ import annotations

import logging
import math
from fractions import Fraction
from typing import Sequence

from flint import fmpq_mat, fmpz, fmpz_mat, nmod_mat

from .model import Certificate, LPError, RationalLP

log = logging.getLogger(__name__)

PRIME = 2**61 - 1
DEGENERATE_STREAK = 50  # degenerate pivots tolerated before falling back to Bland's rule


def _row_scales(lp: RationalLP, rows: Sequence[int]) -> list[int]:
    """Per-row factor making the row and its rhs integral, with rhs >= 0."""
    out = []
    for i in rows:
        b = lp.rhs[i]
        s = math.lcm(lp.row_den[i], b.denominator)
        out.append(-s if b < 0 else s)
    return out


def _integer_system(lp: RationalLP, rows: Sequence[int], scales: Sequence[int]) -> tuple[fmpz_mat, fmpz_mat]:
    m, n = len(rows), lp.n_vars
    A = fmpz_mat(m, n)
    b = fmpz_mat(m, 1)
    csr = lp.A
    for r, (i, s) in enumerate(zip(rows, scales)):
        f = s // lp.row_den[i]
        for p in range(csr.indptr[i], csr.indptr[i + 1]):
            A[r, int(csr.indices[p])] = int(csr.data[p]) * f
        b[r, 0] = int(lp.rhs[i] * s)
    return A, b


class _Tableau:
    """Revised-simplex state for max c.x, [A | I] z = b, z >= 0 (I = artificials), b >= 0."""

    def __init__(self, A: fmpz_mat, b: fmpz_mat):
        self.A = A
        self.m = A.nrows()
        self.n = A.ncols()
        self.b = b
        self.basis: list[int] = list(range(self.n, self.n + self.m))
        self.N = fmpz_mat(self.m, self.m)
        for i in range(self.m):
            self.N[i, i] = 1
        self.d = fmpz(1)
        self.x = fmpz_mat(b)  # basic values are x / d
        self.pivots = 0
        # rows of [x | N] start lexicographically positive, which the
        # lexicographic ratio test preserves, so no basis repeats
        self.lexicographic = True

    def column(self, j: int) -> fmpz_mat:
        """N times column j of [A | I]; the basic representation scaled by d."""
        if j >= self.n:
            k = j - self.n
            return fmpz_mat(self.m, 1, [self.N[i, k] for i in range(self.m)])
        a = fmpz_mat(self.m, 1, [self.A[i, j] for i in range(self.m)])
        return self.N * a

    def set_basis(self, basis: list[int]) -> bool:
        """Install a basis; returns False if singular or primal infeasible."""
        B = fmpz_mat(self.m, self.m)
        for k, j in enumerate(basis):
            for i in range(self.m):
                B[i, k] = self.A[i, j] if j < self.n else int(i == j - self.n)
        det = B.det()
        if det == 0:
            return False
        inv = fmpq_mat(B).inv() * det  # adjugate, up to sign
        N = fmpz_mat(self.m, self.m, [int(v.p) for v in inv.entries()])
        if det < 0:
            N, det = -N, -det
        x = N * self.b
        if any(x[i, 0] < 0 for i in range(self.m)):
            return False
        self.basis, self.N, self.d, self.x = list(basis), N, fmpz(det), x
        self.lexicographic = False  # a warm basis need not be lex-positive; Bland guards instead
        return True

    def weights(self, cost: list[int]) -> fmpz_mat:
        """c_B N, so the duals are this over d."""
        return fmpz_mat(1, self.m, [cost[j] for j in self.basis]) * self.N

    def pivot(self, r: int, j: int, alpha: fmpz_mat) -> None:
        ar = alpha[r, 0]
        keep_row = [self.N[r, k] for k in range(self.m)]
        keep_x = self.x[r, 0]
        row_r = fmpz_mat(1, self.m, keep_row)
        self.N = (self.N * ar - alpha * row_r) / self.d
        self.x = (self.x * ar - alpha * fmpz_mat(1, 1, [keep_x])) / self.d
        for k in range(self.m):
            self.N[r, k] = keep_row[k]
        self.x[r, 0] = keep_x
        self.d = ar
        if self.d < 0:
            self.N, self.x, self.d = -self.N, -self.x, -self.d
        self.basis[r] = j
        self.pivots += 1

    def _leaving_row(self, alpha: fmpz_mat) -> int:
        """Min-ratio row; ties broken lexicographically on ``N[i, :] / alpha[i]``, then by basis index."""
        best: list[int] = []
        for i in range(self.m):
            a = alpha[i, 0]
            if a > 0:
                if not best:
                    best = [i]
                    continue
                k = best[0]
                lhs, rhs = self.x[i, 0] * alpha[k, 0], self.x[k, 0] * a
                if lhs < rhs:
                    best = [i]
                elif lhs == rhs:
                    best.append(i)
        if not best:
            return -1
        if self.lexicographic:
            for col in range(self.m):
                if len(best) == 1:
                    break
                low = [best[0]]
                for i in best[1:]:
                    k = low[0]
                    lhs, rhs = self.N[i, col] * alpha[k, 0], self.N[k, col] * alpha[i, 0]
                    if lhs < rhs:
                        low = [i]
                    elif lhs == rhs:
                        low.append(i)
                best = low
        return min(best, key=lambda i: self.basis[i])

    def run(self, cost: list[int], allowed: int) -> str:
        """Simplex iterations; columns >= ``allowed`` may not enter. Returns status."""
        streak, bland = 0, False
        while True:
            w = self.weights(cost)
            wA = w * self.A
            in_basis = set(self.basis)
            entering, best = -1, None
            for j in range(allowed):
                if j in in_basis:
                    continue
                red = cost[j] * self.d - (wA[0, j] if j < self.n else w[0, j - self.n])  # d * reduced cost
                if red > 0 and (best is None or red > best):
                    entering, best = j, red
                    if bland:
                        break  # Bland: first improving column
            if entering < 0:
                return "optimal"
            alpha = self.column(entering)
            r = self._leaving_row(alpha)
            if r < 0:
                return "unbounded"
            if not self.lexicographic:
                if self.x[r, 0] == 0:
                    streak += 1
                    bland = bland or streak >= DEGENERATE_STREAK
                else:
                    streak, bland = 0, False
            self.pivot(r, entering, alpha)


def independent_rows(lp: RationalLP, rows: Sequence[int]) -> list[int]:
    """First maximal subset of ``rows`` whose ``[A | b]`` rows are independent modulo a large prime.

    Independence mod p implies independence over Q. A row that is
    independent over Q but not mod p could be dropped wrongly; callers
    re-check the dropped rows exactly.
    """
    rows = list(rows)
    if not rows:
        return rows
    n = lp.n_vars
    M = nmod_mat(n + 1, len(rows), PRIME)  # transposed, so pivot columns are rows of A
    for r, i in enumerate(rows):
        b = lp.rhs[i]
        scale = math.lcm(lp.row_den[i], b.denominator)
        f = scale // lp.row_den[i]
        for p in range(lp.A.indptr[i], lp.A.indptr[i + 1]):
            M[int(lp.A.indices[p]), r] = int(lp.A.data[p]) * f % PRIME
        M[n, r] = int(b * scale) % PRIME
    R, rank = M.rref()
    keep, col = [], 0
    for i in range(rank):
        while int(R[i, col]) == 0:
            col += 1
        keep.append(rows[col])
        col += 1
    return keep


def _rows_satisfied(lp: RationalLP, rows: Sequence[int], primal: dict[int, Fraction]) -> bool:
    for i in rows:
        den = lp.row_den[i]
        lo, hi = lp.A.indptr[i], lp.A.indptr[i + 1]
        acc = sum((Fraction(int(v), den) * primal.get(int(j), 0)
                   for j, v in zip(lp.A.indices[lo:hi], lp.A.data[lo:hi])), Fraction(0))
        if acc != lp.rhs[i]:
            return False
    return True


def solve_exact(lp: RationalLP, initial_basis: Sequence[int] | None = None,
                rows: Sequence[int] | None = None) -> Certificate:
    """Optimal certificate for ``max c.x, Ax = b, x >= 0`` by exact simplex.

    ``rows`` restricts the solve to a subset of rows (the caller must then
    verify the result against the full LP). ``initial_basis`` is a list of
    real columns, one per selected row; if it is a feasible basis, phase one
    is skipped. Without a warm start, dependent rows are dropped first and
    re-checked exactly afterwards.
    """
    requested = list(range(lp.n_rows)) if rows is None else list(rows)
    if initial_basis is None:
        kept = independent_rows(lp, requested)
        cert = _solve_rows(lp, kept, None)
        dropped = sorted(set(requested) - set(kept))
        if _rows_satisfied(lp, dropped, cert.primal):
            return cert
        log.info("row reduction mod p was unsound here; solving with every row")
    return _solve_rows(lp, requested, initial_basis)


def _solve_rows(lp: RationalLP, rows: list[int], initial_basis: Sequence[int] | None) -> Certificate:
    scales = _row_scales(lp, rows)
    A, b = _integer_system(lp, rows, scales)
    m, n = len(rows), lp.n_vars
    tab = _Tableau(A, b)

    warm = initial_basis is not None and len(initial_basis) == m and tab.set_basis(list(initial_basis))
    if not warm:
        status = tab.run([0] * n + [-1] * m, allowed=n + m)
        if status != "optimal" or any(tab.x[i, 0] != 0 for i in range(m) if tab.basis[i] >= n):
            raise LPError("LP is infeasible")
        # drive zero-level artificials out where possible; the rest sit on redundant rows
        for r in range(m):
            if tab.basis[r] < n:
                continue
            row = fmpz_mat(1, m, [tab.N[r, k] for k in range(m)]) * A
            in_basis = set(tab.basis)
            for j in range(n):
                if j not in in_basis and row[0, j] != 0:
                    tab.pivot(r, j, tab.column(j))
                    tab.lexicographic = False
                    break
    cost = list(lp.c_num) + [0] * m
    if tab.run(cost, allowed=n) == "unbounded":
        raise LPError("LP is unbounded")

    d = int(tab.d)
    primal = {}
    for i, j in enumerate(tab.basis):
        if j < n and tab.x[i, 0] != 0:
            primal[j] = Fraction(int(tab.x[i, 0]), d)
    w = tab.weights(cost)
    dual = {}
    for r, i in enumerate(rows):
        v = int(w[0, r])
        if v:
            dual[i] = Fraction(v * scales[r], d * lp.c_den)
    obj = sum((Fraction(lp.c_num[j], lp.c_den) * v for j, v in primal.items()), Fraction(0))
    log.debug("exact simplex: %d rows, %d cols, %d pivots (warm=%s)", m, n, tab.pivots, warm)
    return Certificate(primal, dual, obj, {"method": "exact-simplex", "pivots": tab.pivots, "warm": warm})
