"""Exact rational linear feasibility via Phase-I simplex.

Small dense problems only: the displacement minimizer asks whether a point
with prescribed lower bounds exists in an affine slice cut out by a family
of stretch inequalities.  Bland's rule guarantees termination; all pivots
are over Fraction, so answers are exact.
"""

from __future__ import annotations

from fractions import Fraction

from ttkit.policy import Scalar


def _pivot(tab, basis, r, c):
    piv = tab[r][c]
    tab[r] = [x / piv for x in tab[r]]
    for i, row in enumerate(tab):
        if i != r and row[c] != 0:
            coeff = row[c]
            tab[i] = [a - coeff * b for a, b in zip(row, tab[r])]
    basis[r] = c


def _phase_one(A, b):
    """Solve min sum(artificials) s.t. A y + I a = b, y, a >= 0 (b >= 0).

    Returns a feasible y (list of Fractions) or None.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    # tableau rows: [A | I | b]; objective row appended last
    tab = [list(A[i]) + [Fraction(1) if j == i else Fraction(0) for j in range(m)]
           + [b[i]] for i in range(m)]
    basis = [n + i for i in range(m)]
    # objective: minimize sum of artificials; reduced costs start as
    # -(column sums of A), constant -(sum b)
    obj = [Fraction(0)] * (n + m + 1)
    for i in range(m):
        for j in range(n):
            obj[j] -= tab[i][j]
        obj[n + m] -= tab[i][n + m]
    tab.append(obj)

    while True:
        # Bland: entering = smallest index with negative reduced cost
        enter = None
        for j in range(n + m):
            if tab[m][j] < 0:
                enter = j
                break
        if enter is None:
            break
        # ratio test, Bland tie-break by basis variable index
        leave = None
        best = None
        for i in range(m):
            if tab[i][enter] > 0:
                ratio = tab[i][n + m] / tab[i][enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave is None:
            return None  # unbounded phase-one cannot happen; defensive
        _pivot(tab, basis, leave, enter)

    if -tab[m][n + m] != 0:
        return None  # optimum of artificial objective is positive: infeasible
    # drive any artificial still in the basis out (or its row is zero)
    for i in range(m):
        if basis[i] >= n:
            pivot_col = None
            for j in range(n):
                if tab[i][j] != 0:
                    pivot_col = j
                    break
            if pivot_col is not None:
                _pivot(tab, basis, i, pivot_col)
    y = [Fraction(0)] * n
    for i in range(m):
        if basis[i] < n:
            y[basis[i]] = tab[i][n + m]
    return y


def feasible_point(A_ub=None, b_ub=None, A_eq=None, b_eq=None, lb=None, n=None):
    """A point x with A_ub x <= b_ub, A_eq x = b_eq, x >= lb, or None.

    All entries are coerced to Fraction.  `n` is the number of variables
    (inferred from the first constraint row when omitted).
    """
    A_ub = [list(map(Fraction, row)) for row in (A_ub or [])]
    b_ub = [Fraction(v) for v in (b_ub or [])]
    A_eq = [list(map(Fraction, row)) for row in (A_eq or [])]
    b_eq = [Fraction(v) for v in (b_eq or [])]
    if n is None:
        n = len(A_ub[0]) if A_ub else len(A_eq[0])
    lb = [Fraction(v) for v in (lb if lb is not None else [0] * n)]
    assert len(lb) == n

    # substitute x = y + lb with y >= 0, add slacks for the inequalities
    rows = []
    rhs = []
    num_slack = len(A_ub)
    for k, row in enumerate(A_ub):
        shift = sum(c * l for c, l in zip(row, lb))
        slack = [Fraction(1) if j == k else Fraction(0) for j in range(num_slack)]
        rows.append(row + slack)
        rhs.append(b_ub[k] - shift)
    for row, bv in zip(A_eq, b_eq):
        shift = sum(c * l for c, l in zip(row, lb))
        rows.append(row + [Fraction(0)] * num_slack)
        rhs.append(bv - shift)
    # make the right-hand side nonnegative
    for i in range(len(rows)):
        if rhs[i] < 0:
            rows[i] = [-c for c in rows[i]]
            rhs[i] = -rhs[i]
    if not rows:
        return list(lb)
    y = _phase_one(rows, rhs)
    if y is None:
        return None
    x = [y[j] + lb[j] for j in range(n)]
    # defensive exact verification
    for row, bv in zip(A_ub, b_ub):
        assert sum(c * v for c, v in zip(row, x)) <= bv
    for row, bv in zip(A_eq, b_eq):
        assert sum(c * v for c, v in zip(row, x)) == bv
    for v, l in zip(x, lb):
        assert v >= l
    return x
