"""Exact two-phase simplex over rationals.

Small dense tableau implementation using :class:`fractions.Fraction` and
Bland's rule, which is enough for the desk-scale feasibility problems the
arbitrage certifier builds (a handful of states and assets).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

Number = Fraction | int

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LPResult:
    status: str
    value: Fraction | None = None
    x: tuple[Fraction, ...] | None = None


def _pivot(rows: list[list[Fraction]], obj: list[Fraction], r: int, c: int) -> None:
    piv = rows[r][c]
    rows[r] = [v / piv for v in rows[r]]
    prow = rows[r]
    for i, row in enumerate(rows):
        if i != r and row[c] != 0:
            f = row[c]
            rows[i] = [a - f * b for a, b in zip(row, prow)]
    if obj[c] != 0:
        f = obj[c]
        obj[:] = [a - f * b for a, b in zip(obj, prow)]


def _run(rows, obj, basis, allowed: int) -> str:
    # Bland's rule: lowest-index entering column, lowest-index leaving basic.
    while True:
        entering = next((j for j in range(allowed) if obj[j] > 0), None)
        if entering is None:
            return OPTIMAL
        best = None
        for i, row in enumerate(rows):
            if row[entering] > 0:
                ratio = row[-1] / row[entering]
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            return UNBOUNDED
        r = best[1]
        _pivot(rows, obj, r, entering)
        basis[r] = entering


def maximize(c: Sequence[Number], A: Sequence[Sequence[Number]], b: Sequence[Number]) -> LPResult:
    """Maximize ``c @ x`` subject to ``A x = b`` and ``x >= 0``, exactly."""
    n = len(c)
    m = len(A)
    rows: list[list[Fraction]] = []
    for i in range(m):
        row = [Fraction(v) for v in A[i]]
        rhs = Fraction(b[i])
        if len(row) != n:
            raise ValueError("constraint row has wrong length")
        if rhs < 0:
            row = [-v for v in row]
            rhs = -rhs
        art = [Fraction(0)] * m
        art[i] = Fraction(1)
        rows.append(row + art + [rhs])
    basis = [n + i for i in range(m)]

    # phase 1: maximize -(sum of artificials)
    obj = [Fraction(0)] * (n + m + 1)
    for row in rows:
        for j in range(n):
            obj[j] += row[j]
        obj[-1] += row[-1]
    _run(rows, obj, basis, n + m)
    if obj[-1] != 0:
        return LPResult(INFEASIBLE)

    # drive remaining artificials out of the basis; drop redundant rows
    i = 0
    while i < len(rows):
        if basis[i] >= n:
            col = next((j for j in range(n) if rows[i][j] != 0), None)
            if col is None:
                del rows[i]
                del basis[i]
                continue
            _pivot(rows, [Fraction(0)] * (n + m + 1), i, col)
            basis[i] = col
        i += 1
    rows = [row[:n] + [row[-1]] for row in rows]

    cf = [Fraction(v) for v in c]
    obj = cf + [Fraction(0)]
    for i, row in enumerate(rows):
        cb = cf[basis[i]]
        if cb != 0:
            obj = [a - cb * v for a, v in zip(obj, row)]
    status = _run(rows, obj, basis, n)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED)
    x = [Fraction(0)] * n
    for i, row in enumerate(rows):
        x[basis[i]] = row[-1]
    value = sum((cf[j] * x[j] for j in range(n)), Fraction(0))
    return LPResult(OPTIMAL, value, tuple(x))
