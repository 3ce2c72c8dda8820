"""Small exact linear algebra over Q used by the section-space and
order-by-order engines. Dense row-reduction with first-nonzero pivoting keeps
every result deterministic; systems here stay small (hundreds of columns).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Row = list  # list[Fraction]


def rref(matrix: Sequence[Sequence[Fraction]]):
    """Reduced row echelon form. Returns (rows, pivot_columns).

    Pivoting is deterministic: scan columns left to right, take the first row
    with a nonzero entry. Input is not modified.
    """
    rows = [list(r) for r in matrix]
    if not rows:
        return [], []
    ncols = len(rows[0])
    pivots = []
    rank = 0
    for col in range(ncols):
        pivot_row = None
        for r in range(rank, len(rows)):
            if rows[r][col]:
                pivot_row = r
                break
        if pivot_row is None:
            continue
        rows[rank], rows[pivot_row] = rows[pivot_row], rows[rank]
        pv = rows[rank][col]
        if pv != 1:
            rows[rank] = [x / pv for x in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col]:
                f = rows[r][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[rank])]
        pivots.append(col)
        rank += 1
        if rank == len(rows):
            break
    return rows, pivots


def rank(matrix: Sequence[Sequence[Fraction]]) -> int:
    return len(rref(matrix)[1])


def nullspace(matrix: Sequence[Sequence[Fraction]], ncols: int | None = None):
    """Deterministic basis of the right kernel.

    One basis vector per free column, in column order, with that free column
    set to 1 and the other free columns to 0.
    """
    rows = [list(r) for r in matrix]
    if ncols is None:
        if not rows:
            raise ValueError("empty matrix needs an explicit column count")
        ncols = len(rows[0])
    if not rows:
        rows = [[Fraction(0)] * ncols]
    red, pivots = rref(rows)
    pivot_set = set(pivots)
    free = [c for c in range(ncols) if c not in pivot_set]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * ncols
        vec[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            vec[pc] = -red[r][fc]
        basis.append(vec)
    return basis


def solve_min(matrix: Sequence[Sequence[Fraction]],
              rhs: Sequence[Fraction]):
    """Solve A x = b exactly.

    Returns the canonical solution with every free variable equal to zero, or
    None (plus the index of a failing row, as a pair) when inconsistent.
    Callers order the unknown columns so that this choice is the graded-lex
    minimal solution.
    """
    rows = [list(r) + [b] for r, b in zip(matrix, rhs)]
    ncols = len(matrix[0]) if matrix else 0
    if not rows:
        return [Fraction(0)] * ncols, None
    red, pivots = rref(rows)
    if pivots and pivots[-1] == ncols:
        # the augmented column became a pivot: inconsistent; find a witness
        # row in the ORIGINAL system (first row not satisfied by the
        # free-variables-zero attempt on the reduced system).
        return None, _witness_row(matrix, rhs, red, pivots, ncols)
    x = [Fraction(0)] * ncols
    for r, pc in enumerate(pivots):
        x[pc] = red[r][ncols]
    return x, None


def _witness_row(matrix, rhs, red, pivots, ncols):
    """Index of an original row that cannot hold, for diagnostics."""
    # build the best-effort solution ignoring the contradiction
    x = [Fraction(0)] * ncols
    for r, pc in enumerate(pivots):
        if pc < ncols:
            x[pc] = red[r][ncols]
    for i, (row, b) in enumerate(zip(matrix, rhs)):
        if sum(a * v for a, v in zip(row, x)) != b:
            return i
    return None


def column_span_rank(vectors) -> int:
    """Rank of the span of the given vectors (as rows)."""
    vecs = [list(v) for v in vectors]
    if not vecs:
        return 0
    return rank(vecs)


def in_span(vectors, target) -> bool:
    """True when target lies in the row span of vectors."""
    vecs = [list(v) for v in vectors]
    if not vecs:
        return all(not x for x in target)
    base = column_span_rank(vecs)
    return column_span_rank(vecs + [list(target)]) == base
