"""Exact rational LPs: model, builders, solvers and certificate verification."""

from .model import Certificate, LPError, RationalLP
from .simplex import solve_exact
from .verify import Verdict, verify_certificate

__all__ = ["Certificate", "LPError", "RationalLP", "Verdict", "solve_exact", "verify_certificate"]
