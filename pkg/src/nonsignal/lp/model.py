"""Equality-form rational LPs and their optimality certificates.

An LP here is always

    maximize c.x  subject to  A x = b,  x >= 0

with exact rational data. Rows are kept as integer coefficient vectors plus a
positive per-row denominator, so row i reads ``(A_int[i] / row_den[i]) x = b[i]``.
The dual is ``minimize b.y  subject to  A^T y >= c`` with ``y`` free.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from ..rational import format_rational, parse_rational


def _lcm_of_denominators(values: Iterable[Fraction]) -> int:
    out = 1
    for v in values:
        out = math.lcm(out, v.denominator)
    return out


@dataclass
class RationalLP:
    variables: list[str]
    A: sp.csr_matrix  # int64 numerators
    row_den: list[int]
    rhs: list[Fraction]
    c_num: list[int]
    c_den: int = 1
    normalization_row: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_rows(self) -> int:
        return len(self.rhs)

    @property
    def objective(self) -> list[Fraction]:
        return [Fraction(v, self.c_den) for v in self.c_num]

    def row_terms(self, i: int) -> list[tuple[int, Fraction]]:
        lo, hi = self.A.indptr[i], self.A.indptr[i + 1]
        den = self.row_den[i]
        return [
            (int(j), Fraction(int(v), den))
            for j, v in zip(self.A.indices[lo:hi], self.A.data[lo:hi])
            if v != 0
        ]

    # -- construction ---------------------------------------------------------

    @classmethod
    def from_rows(
        cls,
        variables: Sequence[str],
        objective: Mapping[int, Fraction | int],
        rows: Sequence[tuple[Mapping[int, Fraction | int], Fraction | int]],
        *,
        normalization_row: int | None = None,
        meta: dict | None = None,
    ) -> "RationalLP":
        """Build from sparse rational rows ``(terms, rhs)``."""
        nvar = len(variables)
        indptr = [0]
        indices: list[int] = []
        data: list[int] = []
        row_den: list[int] = []
        rhs: list[Fraction] = []
        for terms, b in rows:
            fr = {int(j): Fraction(v) for j, v in terms.items() if Fraction(v) != 0}
            for j in fr:
                if not 0 <= j < nvar:
                    raise ValueError(f"row references undeclared variable {j}")
            den = _lcm_of_denominators(fr.values())
            for j in sorted(fr):
                indices.append(j)
                data.append(int(fr[j] * den))
            indptr.append(len(indices))
            row_den.append(den)
            rhs.append(Fraction(b))
        A = sp.csr_matrix(
            (np.array(data, dtype=np.int64), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
            shape=(len(rhs), nvar),
        )
        obj = {int(j): Fraction(v) for j, v in objective.items()}
        c_den = _lcm_of_denominators(obj.values())
        c_num = [0] * nvar
        for j, v in obj.items():
            c_num[j] = int(v * c_den)
        return cls(list(variables), A, row_den, rhs, c_num, c_den, normalization_row, dict(meta or {}))

    # -- float views ------------------------------------------------------------

    def float_matrix(self) -> sp.csr_matrix:
        scale = sp.diags(1.0 / np.asarray(self.row_den, dtype=float))
        return (scale @ self.A.astype(float)).tocsr()

    def float_rhs(self) -> np.ndarray:
        return np.array([float(b) for b in self.rhs])

    def float_objective(self) -> np.ndarray:
        return np.array(self.c_num, dtype=float) / self.c_den

    # -- JSON --------------------------------------------------------------------

    def to_json_dict(self) -> dict:
        out_rows = []
        for i in range(self.n_rows):
            out_rows.append(
                {
                    "rhs": format_rational(self.rhs[i]),
                    "terms": [[j, format_rational(v)] for j, v in self.row_terms(i)],
                }
            )
        return {
            "variables": list(self.variables),
            "objective": [
                [j, format_rational(Fraction(v, self.c_den))] for j, v in enumerate(self.c_num) if v != 0
            ],
            "rows": out_rows,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "RationalLP":
        try:
            variables = [str(v) for v in data["variables"]]
            objective = {int(j): parse_rational(v) for j, v in data["objective"]}
            rows = [
                ({int(j): parse_rational(v) for j, v in row["terms"]}, parse_rational(row["rhs"]))
                for row in data["rows"]
            ]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed LP JSON: {exc}") from exc
        return cls.from_rows(variables, objective, rows)

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "RationalLP":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass
class Certificate:
    """Sparse exact primal and dual solutions with the claimed objective value."""

    primal: dict[int, Fraction]
    dual: dict[int, Fraction]
    objective_value: Fraction
    meta: dict = field(default_factory=dict)

    def primal_vector(self, n: int) -> list[Fraction]:
        out = [Fraction(0)] * n
        for j, v in self.primal.items():
            out[j] = v
        return out

    def to_json_dict(self) -> dict:
        return {
            "primal": [[j, format_rational(v)] for j, v in sorted(self.primal.items()) if v != 0],
            "dual": [[i, format_rational(v)] for i, v in sorted(self.dual.items()) if v != 0],
            "objective": format_rational(self.objective_value),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Certificate":
        try:
            primal = {int(j): parse_rational(v) for j, v in data["primal"]}
            dual = {int(i): parse_rational(v) for i, v in data["dual"]}
            obj = parse_rational(data["objective"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed certificate JSON: {exc}") from exc
        return cls(primal, dual, obj)

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Certificate":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


class LPError(RuntimeError):
    """The LP is infeasible or unbounded (never the case for LPs built by this package)."""
