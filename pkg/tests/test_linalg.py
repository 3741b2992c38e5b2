from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cliffpde import linalg

small_matrices = st.integers(1, 5).flatmap(
    lambda r: st.integers(1, 5).flatmap(
        lambda c: st.lists(st.lists(st.integers(-3, 3), min_size=c, max_size=c),
                           min_size=r, max_size=r)))


@given(small_matrices)
def test_rank_matches_numpy(rows):
    assert linalg.rank(rows) == np.linalg.matrix_rank(np.array(rows, float))


@given(small_matrices)
def test_nullspace_vectors_are_null_and_complete(rows):
    ncols = len(rows[0])
    null = linalg.nullspace(rows, ncols)
    for vec in null:
        assert all(sum(Fraction(a) * b for a, b in zip(row, vec)) == 0 for row in rows)
    assert len(null) == ncols - linalg.rank(rows)


@given(small_matrices)
def test_modp_rank_equals_rational_rank(rows):
    assert linalg.rank_modp(rows) == linalg.rank(rows)


def test_inverse_and_solve():
    a = [[2, 1, 0], [1, 3, 1], [0, 1, 4]]
    inv = linalg.inverse(a)
    eye = linalg.matmul(a, inv)
    assert eye == [[Fraction(int(i == j)) for j in range(3)] for i in range(3)]
    x = linalg.solve(a, [1, 2, 3])
    assert linalg.matmul(a, [[v] for v in x]) == [[1], [2], [3]]


def test_solve_inconsistent_returns_none():
    assert linalg.solve([[1, 1], [2, 2]], [1, 3]) is None


def test_singular_inverse_raises():
    with pytest.raises(ZeroDivisionError):
        linalg.inverse([[1, 2], [2, 4]])


def test_eliminator_rejects_dependent_block():
    elim = linalg.ModpEliminator(3)
    assert elim.try_add([[1, 0, 0], [0, 1, 0]])
    assert not elim.try_add([[1, 1, 0]])
    assert elim.try_add([[0, 0, Fraction(1, 2)]])
    assert elim.rank == 3
