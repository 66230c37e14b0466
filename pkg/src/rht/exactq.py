"""Exact rational scalars and sparse linear algebra over Q.

Every differential, bracket, and coproduct in the package reduces to
operations on QMatrix values.  All arithmetic is exact; there is no
floating-point mode anywhere.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Optional, Sequence

Rational = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)

Vector = tuple[Fraction, ...]


def rat(x) -> Fraction:
    """Coerce ints, strings like '-3/4', and Fractions to an exact rational."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot interpret {x!r} as a rational")


def format_rat(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def vec(xs: Iterable) -> Vector:
    return tuple(rat(x) for x in xs)


def zero_vec(n: int) -> Vector:
    return (ZERO,) * n


def vec_add(a: Vector, b: Vector) -> Vector:
    return tuple(x + y for x, y in zip(a, b, strict=True))


def vec_sub(a: Vector, b: Vector) -> Vector:
    return tuple(x - y for x, y in zip(a, b, strict=True))


def vec_scale(c: Fraction, a: Vector) -> Vector:
    return tuple(c * x for x in a)


def is_zero_vec(a: Vector) -> bool:
    return all(x == 0 for x in a)


class QMatrix:
    """Sparse matrix over Q.  Immutable by convention: no method mutates self.

    entries maps (row, col) -> nonzero Fraction; zeros are never stored.
    """

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries: Optional[dict] = None):
        if rows < 0 or cols < 0:
            raise ValueError("negative dimensions")
        self.rows = rows
        self.cols = cols
        clean: dict[tuple[int, int], Fraction] = {}
        if entries:
            for (r, c), v in entries.items():
                if not (0 <= r < rows and 0 <= c < cols):
                    raise ValueError(f"entry ({r},{c}) outside {rows}x{cols}")
                fv = rat(v)
                if fv != 0:
                    clean[(r, c)] = fv
        self.entries = clean

    # -- construction ------------------------------------------------------

    @staticmethod
    def zero(rows: int, cols: int) -> "QMatrix":
        return QMatrix(rows, cols)

    @staticmethod
    def identity(n: int) -> "QMatrix":
        return QMatrix(n, n, {(i, i): ONE for i in range(n)})

    @staticmethod
    def from_rows(data: Sequence[Sequence]) -> "QMatrix":
        rows = len(data)
        cols = len(data[0]) if rows else 0
        ent = {}
        for i, row in enumerate(data):
            if len(row) != cols:
                raise ValueError("ragged rows")
            for j, v in enumerate(row):
                fv = rat(v)
                if fv != 0:
                    ent[(i, j)] = fv
        return QMatrix(rows, cols, ent)

    @staticmethod
    def from_columns(cols: Sequence[Vector], nrows: int) -> "QMatrix":
        ent = {}
        for j, col in enumerate(cols):
            if len(col) != nrows:
                raise ValueError("column length mismatch")
            for i, v in enumerate(col):
                if v != 0:
                    ent[(i, j)] = v
        return QMatrix(nrows, len(cols), ent)

    # -- access ------------------------------------------------------------

    def get(self, r: int, c: int) -> Fraction:
        return self.entries.get((r, c), ZERO)

    def to_rows(self) -> list[list[Fraction]]:
        out = [[ZERO] * self.cols for _ in range(self.rows)]
        for (r, c), v in self.entries.items():
            out[r][c] = v
        return out

    def column(self, j: int) -> Vector:
        return tuple(self.entries.get((i, j), ZERO) for i in range(self.rows))

    def columns(self) -> list[Vector]:
        return [self.column(j) for j in range(self.cols)]

    def is_zero(self) -> bool:
        return not self.entries

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, QMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.entries == other.entries
        )

    def __hash__(self):
        return hash((self.rows, self.cols, frozenset(self.entries.items())))

    def __repr__(self):
        return f"QMatrix({self.rows}x{self.cols}, {len(self.entries)} entries)"

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "QMatrix") -> "QMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch in +")
        ent = dict(self.entries)
        for k, v in other.entries.items():
            s = ent.get(k, ZERO) + v
            if s == 0:
                ent.pop(k, None)
            else:
                ent[k] = s
        m = QMatrix(self.rows, self.cols)
        m.entries = ent
        return m

    def __sub__(self, other: "QMatrix") -> "QMatrix":
        return self + other.scale(Fraction(-1))

    def __neg__(self) -> "QMatrix":
        return self.scale(Fraction(-1))

    def scale(self, c) -> "QMatrix":
        c = rat(c)
        if c == 0:
            return QMatrix(self.rows, self.cols)
        m = QMatrix(self.rows, self.cols)
        m.entries = {k: c * v for k, v in self.entries.items()}
        return m

    def __mul__(self, other: "QMatrix") -> "QMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch in *: {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        # group other's entries by row for sparse product
        by_row: dict[int, list[tuple[int, Fraction]]] = {}
        for (r, c), v in other.entries.items():
            by_row.setdefault(r, []).append((c, v))
        ent: dict[tuple[int, int], Fraction] = {}
        for (r, k), a in self.entries.items():
            for c, b in by_row.get(k, ()):
                key = (r, c)
                s = ent.get(key, ZERO) + a * b
                if s == 0:
                    ent.pop(key, None)
                else:
                    ent[key] = s
        m = QMatrix(self.rows, other.cols)
        m.entries = ent
        return m

    def apply(self, v: Sequence[Fraction]) -> Vector:
        if len(v) != self.cols:
            raise ValueError("vector length mismatch")
        out = [ZERO] * self.rows
        for (r, c), a in self.entries.items():
            if v[c] != 0:
                out[r] += a * v[c]
        return tuple(out)

    def transpose(self) -> "QMatrix":
        m = QMatrix(self.cols, self.rows)
        m.entries = {(c, r): v for (r, c), v in self.entries.items()}
        return m

    # -- block assembly ------------------------------------------------------

    @staticmethod
    def hstack(mats: Sequence["QMatrix"]) -> "QMatrix":
        if not mats:
            return QMatrix(0, 0)
        rows = mats[0].rows
        ent = {}
        off = 0
        for m in mats:
            if m.rows != rows:
                raise ValueError("hstack row mismatch")
            for (r, c), v in m.entries.items():
                ent[(r, c + off)] = v
            off += m.cols
        out = QMatrix(rows, off)
        out.entries = ent
        return out

    @staticmethod
    def vstack(mats: Sequence["QMatrix"]) -> "QMatrix":
        if not mats:
            return QMatrix(0, 0)
        cols = mats[0].cols
        ent = {}
        off = 0
        for m in mats:
            if m.cols != cols:
                raise ValueError("vstack col mismatch")
            for (r, c), v in m.entries.items():
                ent[(r + off, c)] = v
            off += m.rows
        out = QMatrix(off, cols)
        out.entries = ent
        return out

    @staticmethod
    def direct_sum(mats: Sequence["QMatrix"]) -> "QMatrix":
        ent = {}
        ro = co = 0
        for m in mats:
            for (r, c), v in m.entries.items():
                ent[(r + ro, c + co)] = v
            ro += m.rows
            co += m.cols
        out = QMatrix(ro, co)
        out.entries = ent
        return out


# -- elimination ------------------------------------------------------------


def _sparse_rows(m: QMatrix) -> list[dict[int, Fraction]]:
    rows: list[dict[int, Fraction]] = [dict() for _ in range(m.rows)]
    for (r, c), v in m.entries.items():
        rows[r][c] = v
    return rows


def _rref_rows(rows: list[dict[int, Fraction]], cols: int) -> tuple[list[dict[int, Fraction]], list[int]]:
    """In-place reduced row echelon form; leftmost pivot column, lowest row."""
    pivots: list[int] = []
    r = 0
    nrows = len(rows)
    for c in range(cols):
        piv = None
        for i in range(r, nrows):
            if c in rows[i]:
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = ONE / rows[r][c]
        if inv != 1:
            rows[r] = {k: v * inv for k, v in rows[r].items()}
        prow = rows[r]
        for i in range(nrows):
            if i != r and c in rows[i]:
                f = rows[i][c]
                tgt = rows[i]
                for k, v in prow.items():
                    s = tgt.get(k, ZERO) - f * v
                    if s == 0:
                        tgt.pop(k, None)
                    else:
                        tgt[k] = s
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return rows, pivots


def rref(m: QMatrix) -> tuple[QMatrix, list[int]]:
    """Reduced row echelon form with strictly increasing pivot columns."""
    rows, pivots = _rref_rows(_sparse_rows(m), m.cols)
    ent = {}
    for i, row in enumerate(rows):
        for c, v in row.items():
            ent[(i, c)] = v
    out = QMatrix(m.rows, m.cols)
    out.entries = ent
    return out, pivots


def rank(m: QMatrix) -> int:
    return len(rref(m)[1])


def kernel_basis(m: QMatrix) -> list[Vector]:
    """Basis of ker(m), one vector per free column, deterministic order."""
    red, pivots = rref(m)
    pivot_set = set(pivots)
    rows = _sparse_rows(red)
    basis: list[Vector] = []
    for j in range(m.cols):
        if j in pivot_set:
            continue
        v = [ZERO] * m.cols
        v[j] = ONE
        for i, pc in enumerate(pivots):
            coeff = rows[i].get(j, ZERO)
            if coeff != 0:
                v[pc] = -coeff
        basis.append(tuple(v))
    return basis


def image_pivot_columns(m: QMatrix) -> list[int]:
    """Indices of the deterministic column basis of the image of m."""
    return rref(m)[1]


def image_basis(m: QMatrix) -> list[Vector]:
    return [m.column(j) for j in image_pivot_columns(m)]


def rank_kernel_image(m: QMatrix) -> tuple[int, list[Vector], list[Vector]]:
    red, pivots = rref(m)
    pivot_set = set(pivots)
    rows = _sparse_rows(red)
    kernel: list[Vector] = []
    for j in range(m.cols):
        if j in pivot_set:
            continue
        v = [ZERO] * m.cols
        v[j] = ONE
        for i, pc in enumerate(pivots):
            coeff = rows[i].get(j, ZERO)
            if coeff != 0:
                v[pc] = -coeff
        kernel.append(tuple(v))
    image = [m.column(j) for j in pivots]
    return len(pivots), kernel, image


def solve_linear(m: QMatrix, b: Sequence[Fraction]) -> Optional[Vector]:
    """Some x with m x = b, free variables set to 0; None when inconsistent."""
    if len(b) != m.rows:
        raise ValueError("right-hand side length mismatch")
    rows = _sparse_rows(m)
    for i, x in enumerate(b):
        if x != 0:
            rows[i][m.cols] = rat(x)
    rows, pivots = _rref_rows(rows, m.cols + 1)
    if pivots and pivots[-1] == m.cols:
        return None
    x = [ZERO] * m.cols
    for i, pc in enumerate(pivots):
        x[pc] = rows[i].get(m.cols, ZERO)
    return tuple(x)


def solve_matrix(m: QMatrix, b: QMatrix) -> Optional[QMatrix]:
    """Columnwise solve: X with m X = b, or None if any column is inconsistent."""
    if b.rows != m.rows:
        raise ValueError("shape mismatch in solve_matrix")
    cols = []
    for j in range(b.cols):
        x = solve_linear(m, b.column(j))
        if x is None:
            return None
        cols.append(x)
    return QMatrix.from_columns(cols, m.cols)


def extend_to_basis(spanning: QMatrix, candidates: QMatrix) -> list[int]:
    """Columns of `candidates` completing the column space of `spanning` to
    span both; returns candidate column indices, deterministic (leftmost).
    """
    combined = QMatrix.hstack([spanning, candidates])
    pivots = image_pivot_columns(combined)
    return [p - spanning.cols for p in pivots if p >= spanning.cols]
