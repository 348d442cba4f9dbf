"""Exact rank-revealing factorization over the rationals."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


def rational_rank_qr(matrix: Sequence[Sequence]) -> tuple[int, list[list[Fraction]], list[list[Fraction]]]:
    """Column-pivoted Gram-Schmidt without normalization.

    Returns ``(rank, Q, R)`` with ``matrix == Q @ R`` exactly, where ``Q`` is
    ``n x rank`` with mutually orthogonal columns and ``R`` is ``rank x m``
    with a unit entry at each pivot column.  The pivot at every step is the
    remaining column of largest squared norm, compared exactly.
    """
    rows = len(matrix)
    cols = len(matrix[0]) if rows else 0
    work = [[Fraction(matrix[i][j]) for i in range(rows)] for j in range(cols)]
    remaining = list(range(cols))
    q_cols: list[list[Fraction]] = []
    r_rows: list[list[Fraction]] = []
    while remaining:
        norms = {c: sum(v * v for v in work[c]) for c in remaining}
        pivot = max(remaining, key=lambda c: (norms[c], -c))
        nrm = norms[pivot]
        if nrm == 0:
            break
        q = work[pivot]
        remaining.remove(pivot)
        r_row = [Fraction(0)] * cols
        r_row[pivot] = Fraction(1)
        for c in remaining:
            coef = sum(a * b for a, b in zip(q, work[c])) / nrm
            if coef:
                work[c] = [b - coef * a for a, b in zip(q, work[c])]
            r_row[c] = coef
        q_cols.append(q)
        r_rows.append(r_row)
    rank = len(q_cols)
    Q = [[q_cols[i][row] for i in range(rank)] for row in range(rows)]
    return rank, Q, r_rows
