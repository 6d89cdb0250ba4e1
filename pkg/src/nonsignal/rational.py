"""Exact rational parsing and formatting shared by every module.

All rationals cross module and file boundaries as ``num/den`` strings in
lowest terms with a positive denominator (integers print without ``/1``).
"""

from __future__ import annotations

import re
from fractions import Fraction

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


def parse_rational(text: str | int | Fraction) -> Fraction:
    """Parse ``num/den`` or an integer. Decimals are rejected on purpose."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    m = _RATIONAL_RE.match(str(text))
    if m is None:
        raise ValueError(f"not an exact rational (expected num/den or integer): {text!r}")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise ValueError(f"zero denominator in {text!r}")
    return Fraction(num, den)


def format_rational(x: Fraction | int) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def format_with_decimal(x: Fraction | int, digits: int = 12) -> str:
    """``num/den (≈decimal)`` as printed by the CLI."""
    x = Fraction(x)
    return f"{format_rational(x)} ({float(x):.{digits}g})"
