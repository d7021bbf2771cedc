"""Independent numeric oracles used by the test suite.

These are computed from scratch (characteristic-polynomial bisection on
integer matrices, digit-by-digit square roots) so that test expectations
do not depend on the code under test.
"""

from fractions import Fraction


def bisect_root(poly, lo: Fraction, hi: Fraction, tol=Fraction(1, 10 ** 12)) -> Fraction:
    """Root of a polynomial (coefficient list, highest degree first) in
    [lo, hi]; the sign must change across the interval."""
    def ev(x):
        acc = Fraction(0)
        for c in poly:
            acc = acc * x + c
        return acc

    flo = ev(lo)
    assert flo * ev(hi) <= 0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if ev(mid) * flo <= 0:
            hi = mid
        else:
            lo = mid
            flo = ev(lo)
    return (lo + hi) / 2


def perron_eigenpair_fib():
    """Perron eigenvalue and eigenvector ratio of [[1,1],[1,0]].

    Characteristic polynomial x^2 - x - 1; the eigenvector of the dominant
    root r is (r, 1), so the component ratio equals r.
    """
    r = bisect_root([1, -1, -1], Fraction(1), Fraction(2))
    return r, r


def sqrt_oracle(n: int) -> Fraction:
    """sqrt(n) to 1e-12 by bisection on x^2 - n."""
    return bisect_root([1, 0, -n], Fraction(0), Fraction(n + 1))


GOLDEN_ORACLE = perron_eigenpair_fib()[0]
SQRT2_ORACLE = sqrt_oracle(2)
SILVER_ORACLE = 1 + SQRT2_ORACLE          # 1 + sqrt(2)
