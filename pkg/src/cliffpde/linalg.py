"""Exact rational linear algebra on lists of Fractions, plus a mod-p rank.

Matrices are lists of rows.  Everything here is deliberately small and
dependency-free; the systems that occur (harmonic nullspaces, Gram
inverses, null-solution ansatzes) have at most a few hundred unknowns.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

PRIME = 2_147_483_629  # largest prime below 2**31


def rref(rows: Sequence[Sequence], ncols: int | None = None):
    """Reduced row echelon form.  Returns ``(matrix, pivot_columns)``."""
    mat = [[Fraction(c) for c in row] for row in rows]
    if not mat:
        return [], []
    ncols = len(mat[0]) if ncols is None else ncols
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        inv = 1 / mat[r][c]
        row_r = [v * inv for v in mat[r]]
        mat[r] = row_r
        nz = [j for j in range(c, ncols) if row_r[j] != 0]
        for i in range(len(mat)):
            if i != r:
                f = mat[i][c]
                if f != 0:
                    row_i = mat[i]
                    for j in nz:
                        row_i[j] -= f * row_r[j]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    return mat[:r], pivots


def nullspace(rows: Sequence[Sequence], ncols: int) -> list[list[Fraction]]:
    """Basis of {x : A x = 0}; each vector has a 1 at its own free column."""
    if not rows:
        return [[Fraction(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    red, pivots = rref(rows, ncols)
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for f in free:
        vec = [Fraction(0)] * ncols
        vec[f] = Fraction(1)
        for row, p in zip(red, pivots):
            vec[p] = -row[f]
        basis.append(vec)
    return basis


def rank(rows: Sequence[Sequence]) -> int:
    return len(rref(rows)[1]) if rows else 0


def solve(rows: Sequence[Sequence], rhs: Sequence) -> list[Fraction] | None:
    """One exact solution of A x = b (free variables set to 0), or None."""
    ncols = len(rows[0])
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    red, pivots = rref(aug, ncols + 1)
    if ncols in pivots:
        return None
    x = [Fraction(0)] * ncols
    for row, p in zip(red, pivots):
        x[p] = row[ncols]
    return x


def inverse(rows: Sequence[Sequence]) -> list[list[Fraction]]:
    n = len(rows)
    aug = [list(r) + [int(i == j) for j in range(n)] for i, r in enumerate(rows)]
    red, pivots = rref(aug, 2 * n)
    if pivots[:n] != list(range(n)) or len(pivots) < n:
        raise ZeroDivisionError("matrix is singular")
    return [row[n:] for row in red]


def matmul(a, b):
    bt = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col)) for col in bt] for row in a]


def _to_modp(c: Fraction, p: int) -> int:
    c = Fraction(c)
    den = c.denominator % p
    if den == 0:
        raise ZeroDivisionError("denominator divisible by the modulus")
    return (c.numerator % p) * pow(den, p - 2, p) % p


class ModpEliminator:
    """Incremental row reduction over GF(p).

    ``try_add`` reports whether a block of rows raises the rank by the block
    size.  Rank over GF(p) never exceeds rank over Q, so an accepted block is
    certified independent over Q as well.
    """

    def __init__(self, ncols: int, p: int = PRIME):
        self.p = p
        self.ncols = ncols
        self.rows = np.zeros((0, ncols), dtype=np.int64)
        self.pivots: list[int] = []

    def _reduce(self, vecs: np.ndarray) -> np.ndarray:
        p = self.p
        for row, c in zip(self.rows, self.pivots):
            f = vecs[:, c].copy()
            nz = f != 0
            if nz.any():
                vecs[nz] = (vecs[nz] - (f[nz, None] * row[None, :]) % p) % p
        return vecs

    def try_add(self, block: Sequence[Sequence]) -> bool:
        p = self.p
        vecs = np.array([[_to_modp(c, p) for c in v] for v in block], dtype=np.int64)
        vecs = self._reduce(vecs)
        new_rows, new_piv = [], []
        for i in range(len(vecs)):
            v = vecs[i]
            for row, c in zip(new_rows, new_piv):
                if v[c]:
                    v = (v - (int(v[c]) * row) % p) % p
            nz = np.nonzero(v)[0]
            if len(nz) == 0:
                return False
            c = int(nz[0])
            v = (v * pow(int(v[c]), p - 2, p)) % p
            for j, (row, cc) in enumerate(zip(new_rows, new_piv)):
                if row[c]:
                    new_rows[j] = (row - (int(row[c]) * v) % p) % p
            new_rows.append(v)
            new_piv.append(c)
        if new_rows:
            # keep stored rows reduced against the new pivots
            stored = self.rows
            for row, c in zip(new_rows, new_piv):
                f = stored[:, c].copy()
                nz = f != 0
                if nz.any():
                    stored[nz] = (stored[nz] - (f[nz, None] * row[None, :]) % p) % p
            self.rows = np.vstack([stored] + [r[None, :] for r in new_rows])
            self.pivots = self.pivots + new_piv
        return True

    @property
    def rank(self) -> int:
        return len(self.pivots)


def rank_modp(vectors: Sequence[Sequence], p: int = PRIME) -> int:
    """Rank over GF(p); a lower bound for the rank over Q."""
    if not vectors:
        return 0
    elim = ModpEliminator(len(vectors[0]), p)
    for v in vectors:
        elim.try_add([v])
    return elim.rank
