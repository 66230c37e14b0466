"""Linear algebra oracles: hand elimination results frozen before the
implementation, a minor-expansion rank oracle for small matrices, and
rank-nullity style properties.
"""

from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rht.exactq import (
    QMatrix,
    extend_to_basis,
    image_basis,
    kernel_basis,
    rank,
    rank_kernel_image,
    rat,
    rref,
    solve_linear,
    solve_matrix,
)

# -- frozen hand-computed expectations ---------------------------------------

# [[1,2],[2,4]]: R2 -= 2*R1 gives [[1,2],[0,0]]; rank 1; kernel (-2,1);
# solving against b=(1,2) gives x=(1,0) with the free variable zeroed.
HAND = QMatrix.from_rows([[1, 2], [2, 4]])


def test_rref_identity():
    m = QMatrix.identity(3)
    red, pivots = rref(m)
    assert red == m
    assert pivots == [0, 1, 2]


def test_rref_zero():
    m = QMatrix.zero(2, 2)
    red, pivots = rref(m)
    assert red == m
    assert pivots == []


def test_rref_hand_case():
    red, pivots = rref(HAND)
    assert red == QMatrix.from_rows([[1, 2], [0, 0]])
    assert pivots == [0]


def test_rank_kernel_image_identity():
    r, ker, img = rank_kernel_image(QMatrix.identity(4))
    assert r == 4 and ker == []
    assert img == [QMatrix.identity(4).column(j) for j in range(4)]


def test_rank_kernel_image_zero():
    r, ker, img = rank_kernel_image(QMatrix.zero(3, 3))
    assert r == 0 and img == []
    assert ker == [QMatrix.identity(3).column(j) for j in range(3)]


def test_rank_kernel_hand_case():
    r, ker, img = rank_kernel_image(HAND)
    assert r == 1
    assert ker == [(rat(-2), rat(1))]
    assert img == [(rat(1), rat(2))]


def test_solve_identity():
    b = (rat(3), rat("1/2"))
    assert solve_linear(QMatrix.identity(2), b) == b


def test_solve_zero():
    assert solve_linear(QMatrix.zero(2, 3), (rat(0), rat(0))) == (0, 0, 0)
    assert solve_linear(QMatrix.zero(2, 3), (rat(1), rat(0))) is None


def test_solve_hand_case():
    assert solve_linear(HAND, (rat(1), rat(2))) == (1, 0)
    assert solve_linear(HAND, (rat(1), rat(3))) is None


def test_solve_shape_error():
    with pytest.raises(ValueError):
        solve_linear(HAND, (rat(1),))


# -- minor-expansion rank oracle ----------------------------------------------


def _det_dense(rows):
    n = len(rows)
    if n == 0:
        return Fraction(1)
    if n == 1:
        return rows[0][0]
    total = Fraction(0)
    sign = 1
    for j in range(n):
        minor = [r[:j] + r[j + 1 :] for r in rows[1:]]
        total += sign * rows[0][j] * _det_dense(minor)
        sign = -sign
    return total


def _rank_by_minors(m: QMatrix) -> int:
    rows = m.to_rows()
    for size in range(min(m.rows, m.cols), 0, -1):
        for ri in combinations(range(m.rows), size):
            for ci in combinations(range(m.cols), size):
                sub = [[rows[r][c] for c in ci] for r in ri]
                if _det_dense(sub) != 0:
                    return size
    return 0


small_entries = st.integers(min_value=-4, max_value=4)


@st.composite
def small_matrix(draw, max_dim=4):
    r = draw(st.integers(1, max_dim))
    c = draw(st.integers(1, max_dim))
    data = draw(
        st.lists(st.lists(small_entries, min_size=c, max_size=c), min_size=r, max_size=r)
    )
    return QMatrix.from_rows(data)


@settings(max_examples=120, deadline=None)
@given(small_matrix())
def test_rank_matches_minor_oracle(m):
    assert rank(m) == _rank_by_minors(m)


@settings(max_examples=120, deadline=None)
@given(small_matrix(max_dim=5))
def test_rref_idempotent(m):
    red, pivots = rref(m)
    red2, pivots2 = rref(red)
    assert red2 == red and pivots2 == pivots


@settings(max_examples=120, deadline=None)
@given(small_matrix(max_dim=5))
def test_rank_nullity_and_kernel(m):
    r, ker, img = rank_kernel_image(m)
    assert r + len(ker) == m.cols
    assert len(img) == r
    for v in ker:
        assert all(x == 0 for x in m.apply(v))
    # image basis columns are independent
    if img:
        assert rank(QMatrix.from_columns(img, m.rows)) == r


@settings(max_examples=120, deadline=None)
@given(small_matrix(max_dim=4), st.data())
def test_solve_consistent_systems(m, data):
    x = tuple(
        rat(data.draw(small_entries, label=f"x{j}")) for j in range(m.cols)
    )
    b = m.apply(x)
    got = solve_linear(m, b)
    assert got is not None
    assert m.apply(got) == b


def test_solve_matrix_and_extend():
    m = QMatrix.from_rows([[1, 0], [0, 1], [1, 1]])
    b = QMatrix.from_rows([[1], [2], [3]])
    x = solve_matrix(m, b)
    assert x is not None and m * x == b
    spanning = QMatrix.from_columns([(rat(1), rat(0))], 2)
    cands = QMatrix.from_columns([(rat(2), rat(0)), (rat(0), rat(1))], 2)
    assert extend_to_basis(spanning, cands) == [1]


def test_kernel_image_deterministic_order():
    m = QMatrix.from_rows([[0, 1, 2], [0, 2, 4]])
    assert kernel_basis(m) == [
        (rat(1), rat(0), rat(0)),
        (rat(0), rat(-2), rat(1)),
    ]
    assert image_basis(m) == [(rat(1), rat(2))]
