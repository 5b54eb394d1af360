"""Exact rational linear algebra on lists of Fractions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

Matrix = list[list[Fraction]]


def as_fractions(rows) -> Matrix:
    return [[Fraction(x) for x in row] for row in rows]


@dataclass
class PsdCheck:
    ok: bool
    pivots: list[Fraction]
    # rational vector v with v^T Q v < 0 when ``ok`` is False
    witness: list[Fraction] | None = None

    def __bool__(self):
        return self.ok


def quad_form(q: Matrix, v) -> Fraction:
    n = len(q)
    return sum((v[i] * q[i][j] * v[j] for i in range(n) if v[i] for j in range(n) if v[j]), Fraction(0))


def ldl_psd(q) -> PsdCheck:
    """LDL^T with diagonal pivoting; PSD iff every pivot is nonnegative.

    Alongside the Schur complements we track, for each remaining index, the
    vector (in original coordinates) it stands for, so that a failing pivot
    turns directly into a witness.
    """
    a = as_fractions(q)
    n = len(a)
    for i in range(n):
        if len(a[i]) != n:
            raise ValueError("matrix is not square")
        for j in range(i):
            if a[i][j] != a[j][i]:
                raise ValueError(f"matrix is not symmetric at ({j}, {i})")
    vecs = {i: {i: Fraction(1)} for i in range(n)}
    alive = list(range(n))
    pivots: list[Fraction] = []

    def witness(combo: dict[int, Fraction]) -> list[Fraction]:
        v = [Fraction(0)] * n
        for idx, c in combo.items():
            for k, x in vecs[idx].items():
                v[k] += c * x
        return v

    while alive:
        k = max(alive, key=lambda i: a[i][i])
        d = a[k][k]
        if d < 0:
            return PsdCheck(False, pivots, witness({k: Fraction(1)}))
        if d == 0:
            neg = next((j for j in alive if a[j][j] < 0), None)
            if neg is not None:
                return PsdCheck(False, pivots, witness({neg: Fraction(1)}))
            for i in alive:
                for j in alive:
                    if a[i][j] != 0:
                        # zero diagonal: (t e_i + e_j)^T S (t e_i + e_j) = 2 t s_ij = -1
                        t = Fraction(-1) / (2 * a[i][j])
                        return PsdCheck(False, pivots, witness({i: t, j: Fraction(1)}))
            # the whole remaining block is zero
            pivots.extend(Fraction(0) for _ in alive)
            return PsdCheck(True, pivots)
        pivots.append(d)
        alive.remove(k)
        row_k = a[k]
        for i in alive:
            f = a[i][k] / d
            if not f:
                continue
            row_i = a[i]
            for j in alive:
                if row_k[j]:
                    row_i[j] -= f * row_k[j]
            vi = vecs[i]
            for idx, x in vecs[k].items():
                vi[idx] = vi.get(idx, Fraction(0)) - f * x
    return PsdCheck(True, pivots)


def exact_psd_check(q) -> tuple[bool, list[Fraction] | None]:
    res = ldl_psd(q)
    return res.ok, res.witness


def rref(rows, ncols: int | None = None) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form and the pivot columns."""
    m = as_fractions(rows)
    if ncols is None:
        ncols = len(m[0]) if m else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def nullspace(rows, ncols: int) -> Matrix:
    """Basis of {x : rows x = 0}, one vector per free column."""
    r, pivots = rref(rows, ncols) if rows else ([], [])
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, p in zip(r, pivots):
            v[p] = -row[f]
        basis.append(v)
    return basis


def solve(a, b) -> list[Fraction] | None:
    """Some exact solution of a x = b (free variables set to zero), or None if inconsistent."""
    if not a:
        return []
    ncols = len(a[0])
    aug = [list(row) + [rhs] for row, rhs in zip(as_fractions(a), b)]
    r, pivots = rref(aug, ncols + 1)
    if pivots and pivots[-1] == ncols:
        return None
    x = [Fraction(0)] * ncols
    for row, p in zip(r, pivots):
        x[p] = row[ncols]
    return x


def matmul(a: Matrix, b: Matrix) -> Matrix:
    bt = list(zip(*b))
    return [[sum((x * y for x, y in zip(row, col) if x and y), Fraction(0)) for col in bt] for row in a]


def transpose(a: Matrix) -> Matrix:
    return [list(col) for col in zip(*a)]


def _lcm_den(values) -> int:
    out = 1
    for v in values:
        d = v.denominator
        out = out * d // math.gcd(out, d)
    return out


def solve_square(a, b) -> list[Fraction] | None:
    """Unique solution of a square system via fraction-free (Bareiss) elimination.

    Returns None when the matrix is singular.  Rows are scaled to integers
    first, so intermediate entries stay integral and grow only polynomially.
    """
    n = len(a)
    rows = []
    for row, rhs in zip(as_fractions(a), b):
        rhs = Fraction(rhs)
        s = _lcm_den(row + [rhs])
        rows.append([int(x * s) for x in row] + [int(rhs * s)])
    prev = 1
    for k in range(n):
        p = next((i for i in range(k, n) if rows[i][k] != 0), None)
        if p is None:
            return None
        rows[k], rows[p] = rows[p], rows[k]
        pk = rows[k]
        piv = pk[k]
        for i in range(k + 1, n):
            ri = rows[i]
            f = ri[k]
            for j in range(k + 1, n + 1):
                ri[j] = (ri[j] * piv - f * pk[j]) // prev
            ri[k] = 0
        prev = piv
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        acc = Fraction(rows[i][n])
        for j in range(i + 1, n):
            if rows[i][j]:
                acc -= rows[i][j] * x[j]
        x[i] = acc / rows[i][i]
    return x
