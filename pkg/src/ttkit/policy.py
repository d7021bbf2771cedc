"""Numeric policy: exact rational arithmetic with an optional tolerance regime.

All metric quantities (edge lengths, stretch factors, volumes, speeds) are
stored as ``fractions.Fraction``.  The policy only controls *comparisons*:
the exact policy compares rationals exactly, the float policy compares them
up to a relative tolerance.  Irrational constants such as sqrt(2) are
resolved to rational approximations accurate to 1e-12, which is far below
every tolerance used by the comparison layer.
"""

from __future__ import annotations

from fractions import Fraction
from math import isqrt

Scalar = Fraction

_APPROX_DIGITS = 12


def rational_sqrt(n: int, digits: int = _APPROX_DIGITS) -> Fraction:
    """Rational approximation of sqrt(n) with error below 10**-digits."""
    scale = 10 ** digits
    return Fraction(isqrt(n * scale * scale), scale)


SQRT2 = rational_sqrt(2)
SQRT5 = rational_sqrt(5)
GOLDEN = (1 + SQRT5) / 2


class NumericPolicy:
    """Comparison regime for scalar quantities.

    exact=True compares Fractions exactly.  Otherwise equality means
    |a-b| <= tol * max(1, |a|, |b|).
    """

    def __init__(self, exact: bool = True, tol: Scalar = Fraction(1, 10 ** 9)):
        self.exact = exact
        self.tol = Fraction(tol)

    def eq(self, a: Scalar, b: Scalar) -> bool:
        if self.exact:
            return a == b
        return abs(a - b) <= self.tol * max(1, abs(a), abs(b))

    def leq(self, a: Scalar, b: Scalar) -> bool:
        return a <= b or self.eq(a, b)

    def geq(self, a: Scalar, b: Scalar) -> bool:
        return a >= b or self.eq(a, b)

    def lt(self, a: Scalar, b: Scalar) -> bool:
        return a < b and not self.eq(a, b)

    def gt(self, a: Scalar, b: Scalar) -> bool:
        return a > b and not self.eq(a, b)

    def is_zero(self, a: Scalar) -> bool:
        return self.eq(a, Fraction(0))

    def __repr__(self):
        if self.exact:
            return "NumericPolicy(exact)"
        return f"NumericPolicy(float, tol={float(self.tol):g})"


EXACT = NumericPolicy(exact=True)


def float_policy(tol=Fraction(1, 10 ** 9)) -> NumericPolicy:
    if not isinstance(tol, Fraction):
        tol = Fraction(str(tol)) if isinstance(tol, str) else Fraction(tol).limit_denominator(10 ** 15)
    return NumericPolicy(exact=False, tol=tol)


def parse_scalar(text: str) -> Scalar:
    """Parse a scalar expression.

    Grammar: sums of products of atoms, where an atom is an integer,
    a decimal, a fraction p/q, or one of the tokens ``sqrt2``/``golden``.
    Examples: "2", "3/4", "0.25", "sqrt2", "2*sqrt2", "2+2*sqrt2".
    """
    text = text.strip()
    if not text:
        raise ValueError("empty scalar")
    total = Fraction(0)
    for term in _split_top(text, "+"):
        prod = Fraction(1)
        for factor in _split_top(term, "*"):
            prod *= _parse_atom(factor.strip())
        total += prod
    return total


def _split_top(text: str, sep: str):
    parts = [p for p in text.split(sep)]
    if any(p.strip() == "" for p in parts):
        raise ValueError(f"malformed scalar expression: {text!r}")
    return parts


def _parse_atom(tok: str) -> Fraction:
    if tok == "sqrt2":
        return SQRT2
    if tok == "golden":
        return GOLDEN
    neg = False
    if tok.startswith("-"):
        neg = True
        tok = tok[1:].strip()
    try:
        val = Fraction(tok)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse scalar atom {tok!r}") from exc
    return -val if neg else val


def render_scalar(x: Scalar) -> str:
    """Render a scalar as an exact fraction plus a decimal hint."""
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"
