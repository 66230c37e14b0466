"""Differential graded Lie algebras over the rationals.

Two representations are used side by side:

- DGL: a finite-basis Lie algebra given by structure constants on top of a
  dgcore.DG.  Everything (antisymmetry, Jacobi, Leibniz) is machine-checkable.
- FreeDGL: a degree-truncated free Lie algebra on positive-degree generators.
  Computations happen in the tensor algebra: a bracket monomial is expanded
  into graded commutators, manipulated as a polynomial in words, and projected
  back onto the chosen monomial basis by exact linear algebra.

The monomial basis is the super-Lyndon basis: standard bracketings of Lyndon
words plus the square [l, l] for each odd-degree Lyndon monomial l.  Squares
of even-degree elements vanish rationally, so nothing else is needed; the
test suite checks the per-degree dimensions against an independent
commutator-span rank computation in the tensor algebra.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Union

from .dgcore import (
    DG,
    DGMap,
    ZERO_DG,
    assert_valid,
    is_quasi_iso,
    is_quasi_iso_through,
    map_scale,
    reduce_with_inclusion,
    shift,
    strict_pullback,
    sum_dg,
    sum_many,
    quotient_dg,
    validate_dg,
)
from .exactq import ONE, QMatrix, Vector, ZERO, rat, solve_matrix, vec_add, vec_scale, zero_vec

# a word is a tuple of generator indices; a polynomial maps words to scalars
Word = tuple[int, ...]
TensorPoly = dict[Word, Fraction]
# a bracket monomial: either a generator index or a pair of monomials
Tree = Union[int, tuple]


# -- tensor algebra helpers -------------------------------------------------------


def tp_add(a: TensorPoly, b: TensorPoly) -> TensorPoly:
    out = dict(a)
    for w, c in b.items():
        v = out.get(w, ZERO) + c
        if v:
            out[w] = v
        else:
            out.pop(w, None)
    return out


def tp_scale(c, a: TensorPoly) -> TensorPoly:
    c = rat(c)
    if not c:
        return {}
    return {w: c * v for w, v in a.items()}


def tp_concat(a: TensorPoly, b: TensorPoly) -> TensorPoly:
    out: TensorPoly = {}
    for wa, ca in a.items():
        for wb, cb in b.items():
            w = wa + wb
            v = out.get(w, ZERO) + ca * cb
            if v:
                out[w] = v
            else:
                out.pop(w, None)
    return out


def tp_reindex(a: TensorPoly, mapping: Mapping[int, int]) -> TensorPoly:
    return {tuple(mapping[i] for i in w): c for w, c in a.items()}


class FreeLieBasis:
    """Super-Lyndon basis of the free graded Lie algebra, truncated at cap."""

    def __init__(self, generators, cap: int):
        gens = tuple((str(n), int(d)) for n, d in generators)
        names = [n for n, _ in gens]
        if len(set(names)) != len(names):
            raise ValueError("duplicate generator names")
        for n, d in gens:
            if d < 1:
                raise ValueError(f"generator {n!r} has degree {d} < 1")
        if gens and cap < max(d for _, d in gens):
            raise ValueError("cap below a generator degree")
        self.generators = gens
        self.cap = cap
        self.deg = tuple(d for _, d in gens)
        self.gen_name = tuple(n for n, _ in gens)
        self.gen_index = {n: i for i, n in enumerate(self.gen_name)}
        self._words: dict[int, tuple[Word, ...]] = {}
        self._word_index: dict[int, dict[Word, int]] = {}
        self.monomials: dict[int, tuple[Tree, ...]] = {}
        self._expand_cache: dict[Tree, TensorPoly] = {}
        self._expansion: dict[int, QMatrix] = {}
        self._left_inv: dict[int, QMatrix] = {}
        self._build_monomials()

    # equality is by presentation, not by caches
    def __eq__(self, other):
        return (
            isinstance(other, FreeLieBasis)
            and self.generators == other.generators
            and self.cap == other.cap
        )

    def __hash__(self):
        return hash((self.generators, self.cap))

    # words ------------------------------------------------------------------

    def words(self, d: int) -> tuple[Word, ...]:
        if d in self._words:
            return self._words[d]
        if d < 0:
            return ()
        if d == 0:
            out: tuple[Word, ...] = ((),)
        else:
            acc = []
            for i, gd in enumerate(self.deg):
                if gd <= d:
                    acc.extend((i,) + w for w in self.words(d - gd))
            out = tuple(acc)
        self._words[d] = out
        self._word_index[d] = {w: j for j, w in enumerate(out)}
        return out

    def word_degree(self, w: Word) -> int:
        return sum(self.deg[i] for i in w)

    # monomials ---------------------------------------------------------------

    def _build_monomials(self):
        per_degree: dict[int, list[tuple[tuple, Tree]]] = {}
        for d in range(1, self.cap + 1):
            for w in self.words(d):
                if len(w) >= 1 and _is_lyndon(w):
                    t = _lyndon_tree(w)
                    per_degree.setdefault(d, []).append(((len(w),) + w, t))
                    if d % 2 == 1 and 2 * d <= self.cap:
                        sq = (t, t)
                        per_degree.setdefault(2 * d, []).append(
                            ((2 * len(w),) + w + w, sq)
                        )
        self.monomials = {
            d: tuple(t for _, t in sorted(lst, key=lambda p: p[0]))
            for d, lst in sorted(per_degree.items())
            if d <= self.cap
        }

    def tree_degree(self, t: Tree) -> int:
        if isinstance(t, int):
            return self.deg[t]
        return self.tree_degree(t[0]) + self.tree_degree(t[1])

    def tree_length(self, t: Tree) -> int:
        if isinstance(t, int):
            return 1
        return self.tree_length(t[0]) + self.tree_length(t[1])

    def tree_name(self, t: Tree) -> str:
        if isinstance(t, int):
            return self.gen_name[t]
        return f"[{self.tree_name(t[0])},{self.tree_name(t[1])}]"

    def expand(self, t: Tree) -> TensorPoly:
        if t in self._expand_cache:
            return self._expand_cache[t]
        if isinstance(t, int):
            out: TensorPoly = {(t,): ONE}
        else:
            a = self.expand(t[0])
            b = self.expand(t[1])
            sign = -ONE if (self.tree_degree(t[0]) * self.tree_degree(t[1])) % 2 else ONE
            out = tp_add(tp_concat(a, b), tp_scale(-sign, tp_concat(b, a)))
        self._expand_cache[t] = out
        return out

    def bracket_poly(self, a: TensorPoly, b: TensorPoly) -> TensorPoly:
        """Graded commutator of homogeneous polynomials."""
        if not a or not b:
            return {}
        da = self.word_degree(next(iter(a)))
        db = self.word_degree(next(iter(b)))
        sign = -ONE if (da * db) % 2 else ONE
        return tp_add(tp_concat(a, b), tp_scale(-sign, tp_concat(b, a)))

    # coordinates ---------------------------------------------------------------

    def expansion_matrix(self, d: int) -> QMatrix:
        if d not in self._expansion:
            words = self.words(d)
            idx = self._word_index[d]
            ent = {}
            for j, t in enumerate(self.monomials.get(d, ())):
                for w, c in self.expand(t).items():
                    ent[(idx[w], j)] = c
            self._expansion[d] = QMatrix(len(words), len(self.monomials.get(d, ())), ent)
        return self._expansion[d]

    def _coord_map(self, d: int) -> QMatrix:
        if d not in self._left_inv:
            m = self.expansion_matrix(d)
            gram = m.transpose() * m
            sol = solve_matrix(gram, m.transpose())
            if sol is None:
                raise ValueError(f"monomial expansions dependent in degree {d}")
            self._left_inv[d] = sol
        return self._left_inv[d]

    def coords(self, poly: TensorPoly) -> dict[int, Vector]:
        """Coordinates of a Lie element in the monomial basis, per degree.

        Components above the cap are discarded (truncation); a component that
        is not in the commutator span raises.
        """
        split: dict[int, TensorPoly] = {}
        for w, c in poly.items():
            split.setdefault(self.word_degree(w), {})[w] = c
        out: dict[int, Vector] = {}
        for d, part in sorted(split.items()):
            if d > self.cap:
                continue
            words = self.words(d)
            idx = self._word_index[d]
            vec = [ZERO] * len(words)
            for w, c in part.items():
                vec[idx[w]] = c
            vec = tuple(vec)
            x = self._coord_map(d).apply(vec)
            if self.expansion_matrix(d).apply(x) != vec:
                raise ValueError(f"element is not in the Lie span in degree {d}")
            out[d] = x
        return out

    def diff_poly(self, gen_diff: Mapping[int, TensorPoly], poly: TensorPoly) -> TensorPoly:
        """Derivation extension of a generator differential, in word form."""
        out: TensorPoly = {}
        for w, c in poly.items():
            pre_deg = 0
            for i, letter in enumerate(w):
                dxi = gen_diff.get(letter)
                if dxi:
                    sign = -ONE if pre_deg % 2 else ONE
                    for w2, c2 in dxi.items():
                        word = w[:i] + w2 + w[i + 1 :]
                        v = out.get(word, ZERO) + sign * c * c2
                        if v:
                            out[word] = v
                        else:
                            out.pop(word, None)
                pre_deg += self.deg[letter]
        return out


def _is_lyndon(w: Word) -> bool:
    return all(w < w[i:] for i in range(1, len(w)))


def _lyndon_tree(w: Word) -> Tree:
    if len(w) == 1:
        return w[0]
    # standard factorization: split before the smallest proper suffix
    cut = min(range(1, len(w)), key=lambda i: w[i:])
    return (_lyndon_tree(w[:cut]), _lyndon_tree(w[cut:]))


def free_lie_basis(generators, cap: int) -> FreeLieBasis:
    return FreeLieBasis(generators, cap)


# -- finite DGLs --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DGL:
    """Finite-basis Lie algebra: a DG plus a structure-constant table.

    bracket maps (deg1, idx1, deg2, idx2) to the value vector in degree
    deg1 + deg2; missing entries are zero.
    """

    underlying: DG
    bracket: Mapping[tuple[int, int, int, int], Vector]
    # degree truncation boundary: brackets landing above it are cut off, so
    # Leibniz is only meaningful for pairs with total degree <= cap
    cap: Optional[int] = None

    def bracket_basis(self, k1: int, i1: int, k2: int, i2: int) -> Vector:
        v = self.bracket.get((k1, i1, k2, i2))
        if v is None:
            return zero_vec(self.underlying.dim(k1 + k2))
        return v

    def bracket_vec(self, k1: int, v1: Vector, k2: int, v2: Vector) -> Vector:
        out = zero_vec(self.underlying.dim(k1 + k2))
        for i1, c1 in enumerate(v1):
            if not c1:
                continue
            for i2, c2 in enumerate(v2):
                if not c2:
                    continue
                out = vec_add(out, vec_scale(c1 * c2, self.bracket_basis(k1, i1, k2, i2)))
        return out

    def __eq__(self, other):
        return (
            isinstance(other, DGL)
            and self.underlying == other.underlying
            and self.cap == other.cap
            and _clean_table(self.bracket) == _clean_table(other.bracket)
        )


def _clean_table(t) -> dict:
    return {k: v for k, v in t.items() if any(v)}


def abelian_dgl(v: DG) -> DGL:
    return DGL(v, {})


ZERO_DGL = abelian_dgl(ZERO_DG)


@dataclass(frozen=True, eq=False)
class DGLMap:
    source: DGL
    target: DGL
    dgmap: DGMap


def identity_dgl_map(l: DGL) -> DGLMap:
    from .dgcore import identity_map

    return DGLMap(l, l, identity_map(l.underlying))


def zero_dgl_map(a: DGL, b: DGL) -> DGLMap:
    from .dgcore import zero_map

    return DGLMap(a, b, zero_map(a.underlying, b.underlying))


# -- free DGLs ----------------------------------------------------------------------


class FreeDGL:
    """Truncated free DGL: a FreeLieBasis plus a generator differential.

    The differential is stored as a tensor-algebra polynomial per generator
    and extended to monomials as a derivation.  The cap is part of the value:
    brackets and differentials landing above the cap are silently zero.
    """

    def __init__(self, basis: FreeLieBasis, gen_diff: Mapping[int, TensorPoly]):
        self.basis = basis
        self.gen_diff: dict[int, TensorPoly] = {
            i: dict(p) for i, p in gen_diff.items() if p
        }
        self._dgl: Optional[DGL] = None

    @property
    def cap(self) -> int:
        return self.basis.cap

    def __eq__(self, other):
        return (
            isinstance(other, FreeDGL)
            and self.basis == other.basis
            and self.gen_diff == other.gen_diff
        )

    def d_poly(self, poly: TensorPoly) -> TensorPoly:
        return self.basis.diff_poly(self.gen_diff, poly)

    def gen_poly(self, name: str) -> TensorPoly:
        return {(self.basis.gen_index[name],): ONE}

    def linear_diff_part(self) -> dict[int, TensorPoly]:
        return {
            i: {w: c for w, c in p.items() if len(w) == 1}
            for i, p in self.gen_diff.items()
        }

    def is_truly_free(self) -> bool:
        return all(len(w) == 1 for p in self.gen_diff.values() for w in p)


def to_dgl(l: FreeDGL) -> DGL:
    """Expand a truncated free DGL into an explicit structure-constant DGL."""
    if l._dgl is not None:
        return l._dgl
    b = l.basis
    dg_basis = {d: tuple(b.tree_name(t) for t in ms) for d, ms in b.monomials.items()}
    diff: dict[int, QMatrix] = {}
    for d, ms in b.monomials.items():
        tgt = len(b.monomials.get(d - 1, ()))
        if not tgt:
            continue
        cols = []
        for t in ms:
            co = b.coords(l.d_poly(b.expand(t)))
            cols.append(co.get(d - 1, zero_vec(tgt)))
        diff[d] = QMatrix.from_columns(cols, tgt)
    table: dict[tuple[int, int, int, int], Vector] = {}
    degs = sorted(b.monomials)
    for d1 in degs:
        for d2 in degs:
            if d1 + d2 > b.cap or (d1 + d2) not in b.monomials:
                continue
            tgt = len(b.monomials[d1 + d2])
            for i1, t1 in enumerate(b.monomials[d1]):
                for i2, t2 in enumerate(b.monomials[d2]):
                    poly = b.bracket_poly(b.expand(t1), b.expand(t2))
                    vec = b.coords(poly).get(d1 + d2, zero_vec(tgt))
                    if any(vec):
                        table[(d1, i1, d2, i2)] = vec
    out = DGL(DG(dg_basis, diff), table, cap=b.cap)
    l._dgl = out
    return out


class FreeDGLMap:
    """Map of free DGLs determined by generator images (Lie elements)."""

    def __init__(self, source: FreeDGL, target: FreeDGL, gen_images: Mapping[int, TensorPoly]):
        self.source = source
        self.target = target
        self.gen_images: dict[int, TensorPoly] = {
            i: dict(p) for i, p in gen_images.items() if p
        }

    def image_poly(self, poly: TensorPoly) -> TensorPoly:
        out: TensorPoly = {}
        for w, c in poly.items():
            part: TensorPoly = {(): c}
            for letter in w:
                img = self.gen_images.get(letter, {})
                part = tp_concat(part, img)
                if not part:
                    break
            out = tp_add(out, part)
        return out

    def to_dgmap(self) -> DGMap:
        sb, tb = self.source.basis, self.target.basis
        src = to_dgl(self.source).underlying
        tgt = to_dgl(self.target).underlying
        blocks = {}
        for d, ms in sb.monomials.items():
            tdim = tgt.dim(d)
            cols = []
            for t in ms:
                img = self.image_poly(sb.expand(t))
                cols.append(tb.coords(img).get(d, zero_vec(tdim)))
            blocks[d] = QMatrix.from_columns(cols, tdim)
        return DGMap(src, tgt, blocks)

    def is_freely_generated(self) -> bool:
        return all(len(w) == 1 for p in self.gen_images.values() for w in p)

    def abelianized(self) -> DGMap:
        src = abelianize(self.source)
        tgt = abelianize(self.target)
        blocks = {}
        for d in src.degrees():
            ent = {}
            for j, (name, gd) in enumerate(self.source.basis.generators):
                if gd != d:
                    continue
                jj = _gen_position(self.source.basis, d, j)
                for w, c in self.gen_images.get(j, {}).items():
                    if len(w) == 1:
                        ii = _gen_position(self.target.basis, d, w[0])
                        ent[(ii, jj)] = ent.get((ii, jj), ZERO) + c
            blocks[d] = QMatrix(tgt.dim(d), src.dim(d), ent)
        return DGMap(src, tgt, blocks)


def _gen_position(b: FreeLieBasis, d: int, gen_idx: int) -> int:
    """Position of a generator among the degree-d generators."""
    pos = 0
    for i, gd in enumerate(b.deg):
        if i == gen_idx:
            return pos
        if gd == d:
            pos += 1
    raise ValueError("generator not found")


def free_dgl_identity(l: FreeDGL) -> FreeDGLMap:
    return FreeDGLMap(l, l, {i: {(i,): ONE} for i in range(len(l.basis.generators))})


# -- validation ----------------------------------------------------------------------


def dgl_validate(l) -> list[str]:
    """Report every violated Lie axiom with a witness; empty iff valid."""
    if isinstance(l, FreeDGL):
        report = []
        b = l.basis
        for i, p in l.gen_diff.items():
            for w in p:
                if b.word_degree(w) != b.deg[i] - 1:
                    report.append(f"d({b.gen_name[i]}) is not homogeneous of degree -1")
                    break
        for i in l.gen_diff:
            dd = l.d_poly(l.gen_diff[i])
            dd = {w: c for w, c in dd.items() if b.word_degree(w) <= b.cap}
            if dd:
                report.append(f"d^2({b.gen_name[i]}) != 0 below the cap")
        if report:
            return report
        return dgl_validate(to_dgl(l))
    if isinstance(l, DGLMap):
        report = list(validate_dg(l.dgmap))
        sl, tl = l.source, l.target
        caps = [c for c in (sl.cap, tl.cap) if c is not None]
        dg = sl.underlying
        for k1 in dg.degrees():
            for k2 in dg.degrees():
                k = k1 + k2
                if caps and k > min(caps):
                    continue
                if not tl.underlying.dim(k):
                    continue
                for i1 in range(dg.dim(k1)):
                    e1 = _basis_vec(dg.dim(k1), i1)
                    f1 = l.dgmap.apply(k1, e1)
                    for i2 in range(dg.dim(k2)):
                        e2 = _basis_vec(dg.dim(k2), i2)
                        lhs = l.dgmap.apply(k, sl.bracket_basis(k1, i1, k2, i2))
                        rhs = tl.bracket_vec(k1, f1, k2, l.dgmap.apply(k2, e2))
                        if lhs != rhs:
                            report.append(
                                f"map does not respect brackets at ({k1},{i1}),({k2},{i2})"
                            )
        return report
    report = list(validate_dg(l.underlying))
    dg = l.underlying
    degs = list(dg.degrees())
    items = [(k, i) for k in degs for i in range(dg.dim(k))]
    for (k1, i1) in items:
        for (k2, i2) in items:
            v12 = l.bracket_basis(k1, i1, k2, i2)
            v21 = l.bracket_basis(k2, i2, k1, i1)
            sign = -ONE if (k1 * k2) % 2 else ONE
            if v12 != vec_scale(-sign, v21):
                report.append(f"antisymmetry fails at ({k1},{i1}),({k2},{i2})")
            if l.cap is not None and k1 + k2 > l.cap:
                continue  # bracket truncated away, Leibniz not applicable
            # Leibniz
            e1 = _basis_vec(dg.dim(k1), i1)
            e2 = _basis_vec(dg.dim(k2), i2)
            lhs = dg.d(k1 + k2).apply(v12) if dg.dim(k1 + k2) else zero_vec(dg.dim(k1 + k2 - 1))
            t1 = l.bracket_vec(k1 - 1, dg.d(k1).apply(e1), k2, e2)
            t2 = l.bracket_vec(k1, e1, k2 - 1, dg.d(k2).apply(e2))
            rhs = vec_add(t1, vec_scale(-ONE if k1 % 2 else ONE, t2))
            if lhs != rhs:
                report.append(f"Leibniz fails at ({k1},{i1}),({k2},{i2})")
    for (k1, i1) in items:
        for (k2, i2) in items:
            for (k3, i3) in items:
                e1 = _basis_vec(dg.dim(k1), i1)
                e2 = _basis_vec(dg.dim(k2), i2)
                e3 = _basis_vec(dg.dim(k3), i3)
                lhs = l.bracket_vec(k1, e1, k2 + k3, l.bracket_basis(k2, i2, k3, i3))
                r1 = l.bracket_vec(k1 + k2, l.bracket_basis(k1, i1, k2, i2), k3, e3)
                r2 = l.bracket_vec(k2, e2, k1 + k3, l.bracket_basis(k1, i1, k3, i3))
                rhs = vec_add(r1, vec_scale(-ONE if (k1 * k2) % 2 else ONE, r2))
                if lhs != rhs:
                    report.append(
                        f"Jacobi fails at ({k1},{i1}),({k2},{i2}),({k3},{i3})"
                    )
                    if len(report) > 40:
                        return report
    return report


def _basis_vec(n: int, i: int) -> Vector:
    return tuple(ONE if j == i else ZERO for j in range(n))


def assert_valid_dgl(l, context: str = ""):
    rep = dgl_validate(l)
    if rep:
        raise AssertionError(f"invalid {type(l).__name__} {context}: " + "; ".join(rep[:4]))


# -- abelianization ----------------------------------------------------------------


def abelianize(l) -> DG:
    """(L)^ab: generators with the linear differential for free DGLs,
    quotient by the bracket image for finite DGLs."""
    if isinstance(l, FreeDGL):
        b = l.basis
        basis: dict[int, tuple[str, ...]] = {}
        for name, d in b.generators:
            basis[d] = basis.get(d, ()) + (name,)
        diff = {}
        lin = l.linear_diff_part()
        for d in sorted(basis):
            tgt = basis.get(d - 1, ())
            if not tgt:
                continue
            ent = {}
            for j, (name, gd) in enumerate(b.generators):
                if gd != d:
                    continue
                jj = _gen_position(b, d, j)
                for w, c in lin.get(j, {}).items():
                    ent[(_gen_position(b, d - 1, w[0]), jj)] = c
            diff[d] = QMatrix(len(tgt), len(basis[d]), ent)
        return DG(basis, diff)
    return abelianize_dgl(l)[0]


def abelianize_dgl(l: DGL) -> tuple[DG, DGMap]:
    """Strict quotient of a finite DGL by the span of all bracket values."""
    killed: dict[int, list[Vector]] = {}
    for (k1, i1, k2, i2), v in l.bracket.items():
        if any(v):
            killed.setdefault(k1 + k2, []).append(v)
    return quotient_dg(l.underlying, killed, prefix="ab")


# -- coproducts and products ---------------------------------------------------------


def free_product(a: FreeDGL, b: FreeDGL) -> FreeDGL:
    """Free product: the free DGL on the disjoint union of the generators."""
    if a.cap != b.cap:
        raise ValueError("free product requires equal caps")
    names_a = {n for n, _ in a.basis.generators}
    if any(n in names_a for n, _ in b.basis.generators):
        raise ValueError("generator name collision in free product")
    gens = a.basis.generators + b.basis.generators
    basis = FreeLieBasis(gens, a.cap)
    off = len(a.basis.generators)
    gd: dict[int, TensorPoly] = {i: dict(p) for i, p in a.gen_diff.items()}
    for i, p in b.gen_diff.items():
        gd[off + i] = {tuple(x + off for x in w): c for w, c in p.items()}
    return FreeDGL(basis, gd)


def dgl_strict_product(a: DGL, b: DGL) -> tuple[DGL, DGLMap, DGLMap]:
    """Categorical product: degreewise product with componentwise bracket."""
    dg, inl, inr = sum_dg(a.underlying, b.underlying, tags=("p1", "p2"))
    table: dict[tuple[int, int, int, int], Vector] = {}
    for (k1, i1, k2, i2), v in a.bracket.items():
        if not dg.dim(k1 + k2):
            continue
        table[(k1, i1, k2, i2)] = inl.apply(k1 + k2, v)
    na = {k: a.underlying.dim(k) for k in dg.degrees()}
    for (k1, i1, k2, i2), v in b.bracket.items():
        if not dg.dim(k1 + k2):
            continue
        table[(k1, na.get(k1, 0) + i1, k2, na.get(k2, 0) + i2)] = inr.apply(k1 + k2, v)
    caps = [c for c in (a.cap, b.cap) if c is not None]
    out = DGL(dg, table, cap=min(caps) if caps else None)
    # projections
    from .dgcore import map_from_names

    p1 = DGLMap(out, a, _strand_projection(dg, a.underlying, 0))
    p2 = DGLMap(out, b, _strand_projection(dg, b.underlying, 1, offset_from=a.underlying))
    return out, p1, p2


def _strand_projection(total: DG, part: DG, which: int, offset_from: Optional[DG] = None) -> DGMap:
    blocks = {}
    for k in part.degrees():
        off = offset_from.dim(k) if offset_from is not None else 0
        blocks[k] = QMatrix(
            part.dim(k), total.dim(k), {(j, off + j): ONE for j in range(part.dim(k))}
        )
    return DGMap(total, part, blocks)


def dgl_product(a, b, model: str = "strict"):
    """Product of DGLs.

    strict: componentwise product (finite DGLs; free inputs are expanded).
    free: for truly free inputs, the free model on V + W + s(V tensor W) with
    d(s(v|w)) = [v,w] - s(dv|w) - (-1)^{|v|} s(v|dw), together with the
    projection to the strict product (a quasi-isomorphism below the cap).
    """
    if model == "strict":
        da = to_dgl(a) if isinstance(a, FreeDGL) else a
        db = to_dgl(b) if isinstance(b, FreeDGL) else b
        return dgl_strict_product(da, db)[0]
    if model != "free":
        raise ValueError(f"unknown model {model!r}")
    if not (isinstance(a, FreeDGL) and isinstance(b, FreeDGL)):
        raise ValueError("free product model requires free inputs")
    if a.cap != b.cap:
        raise ValueError("free product model requires equal caps")
    if not (a.is_truly_free() and b.is_truly_free()):
        raise ValueError("free product model requires linear generator differentials")
    cap = a.cap
    gens = list(a.basis.generators) + list(b.basis.generators)
    na, nb = len(a.basis.generators), len(b.basis.generators)
    mixed: list[tuple[int, int]] = []
    for i, (an, ad) in enumerate(a.basis.generators):
        for j, (bn, bd) in enumerate(b.basis.generators):
            if ad + bd + 1 <= cap:
                gens.append((f"s({an}|{bn})", ad + bd + 1))
                mixed.append((i, j))
    basis = FreeLieBasis(gens, cap)
    gd: dict[int, TensorPoly] = {i: dict(p) for i, p in a.gen_diff.items()}
    for i, p in b.gen_diff.items():
        gd[na + i] = {tuple(x + na for x in w): c for w, c in p.items()}
    sidx = {pair: na + nb + m for m, pair in enumerate(mixed)}
    for m, (i, j) in enumerate(mixed):
        ad = a.basis.deg[i]
        poly: TensorPoly = {}
        # [v, w]
        sign = -ONE if (ad * b.basis.deg[j]) % 2 else ONE
        poly = tp_add(poly, {(i, na + j): ONE, (na + j, i): -sign})
        # - s(dv|w)
        for w1, c in a.gen_diff.get(i, {}).items():
            pair = (w1[0], j)
            if pair in sidx:
                poly = tp_add(poly, {(sidx[pair],): -c})
        # - (-1)^{|v|} s(v|dw)
        s2 = -ONE if ad % 2 else ONE
        for w2, c in b.gen_diff.get(j, {}).items():
            pair = (i, w2[0])
            if pair in sidx:
                poly = tp_add(poly, {(sidx[pair],): -s2 * c})
        gd[na + nb + m] = poly
    model_l = FreeDGL(basis, gd)
    # witness: collapse onto the strict product
    strict, _, _ = dgl_strict_product(to_dgl(a), to_dgl(b))
    images: dict[int, tuple[int, Vector]] = {}
    for i, (an, ad) in enumerate(a.basis.generators):
        pos = to_dgl(a).underlying.index_of(ad, a.basis.tree_name(i))
        images[i] = (ad, _embedded_basis_vec(strict.underlying, ad, pos))
    for j, (bn, bd) in enumerate(b.basis.generators):
        pos = to_dgl(b).underlying.index_of(bd, b.basis.tree_name(j))
        off = to_dgl(a).underlying.dim(bd)
        images[na + j] = (bd, _basis_vec(strict.underlying.dim(bd), off + pos))
    witness = dgl_map_from_gen_images(model_l, strict, images)
    return model_l, witness


def _embedded_basis_vec(dg: DG, k: int, i: int) -> Vector:
    return _basis_vec(dg.dim(k), i)


def dgl_map_from_gen_images(
    source: FreeDGL, target: DGL, images: Mapping[int, tuple[int, Vector]]
) -> DGLMap:
    """DGL map out of a free DGL into a finite DGL, by structural recursion
    on bracket monomials using the target's structure constants."""
    b = source.basis
    cache: dict[Tree, tuple[int, Vector]] = {}

    def img(t: Tree) -> tuple[int, Vector]:
        if t in cache:
            return cache[t]
        if isinstance(t, int):
            out = images.get(t)
            if out is None:
                out = (b.deg[t], zero_vec(target.underlying.dim(b.deg[t])))
        else:
            k1, v1 = img(t[0])
            k2, v2 = img(t[1])
            out = (k1 + k2, target.bracket_vec(k1, v1, k2, v2))
        cache[t] = out
        return out

    src = to_dgl(source).underlying
    blocks = {}
    for d, ms in b.monomials.items():
        cols = [img(t)[1] for t in ms]
        blocks[d] = QMatrix.from_columns(cols, target.underlying.dim(d))
    return DGLMap(to_dgl(source), target, DGMap(src, target.underlying, blocks))


# -- reduction -----------------------------------------------------------------------


def reduce_dgl(r: int, l: DGL) -> DGL:
    """r-reduction: degrees > r kept, degree r replaced by its cycles."""
    rdg, incl = reduce_with_inclusion(r, l.underlying)
    table: dict[tuple[int, int, int, int], Vector] = {}
    for k1 in rdg.degrees():
        for k2 in rdg.degrees():
            k = k1 + k2
            if not rdg.dim(k):
                continue
            inc_k = incl.block(k)
            for i1 in range(rdg.dim(k1)):
                v1 = incl.apply(k1, _basis_vec(rdg.dim(k1), i1))
                for i2 in range(rdg.dim(k2)):
                    v2 = incl.apply(k2, _basis_vec(rdg.dim(k2), i2))
                    val = l.bracket_vec(k1, v1, k2, v2)
                    if not any(val):
                        continue
                    sol = solve_matrix(inc_k, QMatrix.from_columns([val], len(val)))
                    if sol is None:
                        raise ValueError(f"bracket escapes the reduction at degree {k}")
                    table[(k1, i1, k2, i2)] = sol.column(0)
    return DGL(rdg, table, cap=l.cap)


# -- homotopy pullback ----------------------------------------------------------------


def dgl_ho_pullback(
    f1: DGLMap, f2: DGLMap, reduce_to: Optional[int] = None
) -> tuple[DGL, Optional[DGLMap]]:
    """Path-object model (L1 x s^-1 K x L2) of the homotopy pullback of
    L1 -> K <- L2, with the half-factor mixed bracket, plus the verified
    map from the strict limit.  If reduce_to is given the reduction is
    applied last and the witness map is omitted."""
    if f1.target is not f2.target and f1.target != f2.target:
        raise ValueError("pullback codomain mismatch")
    l1, l2, k = f1.source, f2.source, f1.target
    dg1, dg2, dgk = l1.underlying, l2.underlying, k.underlying
    mid = shift(dgk, -1)
    total, incls = sum_many([dg1, mid, dg2], tags=["l1", "k", "l2"])
    diff = dict(total.diff)
    for m in sorted(set(total.basis) | {kk + 1 for kk in total.basis}):
        if not total.dim(m) or not total.dim(m - 1):
            continue
        ent = dict(total.d(m).entries)
        roff = dg1.dim(m - 1)
        for (r, c), val in f1.dgmap.block(m).entries.items():
            ent[(roff + r, c)] = ent.get((roff + r, c), ZERO) + val
        coff = dg1.dim(m) + mid.dim(m)
        for (r, c), val in f2.dgmap.block(m).entries.items():
            ent[(roff + r, coff + c)] = ent.get((roff + r, coff + c), ZERO) - val
        diff[m] = QMatrix(total.dim(m - 1), total.dim(m), ent)
    pdg = DG(total.basis, diff)

    def offs(m: int) -> tuple[int, int]:
        return dg1.dim(m), dg1.dim(m) + mid.dim(m)

    half = Fraction(1, 2)
    table: dict[tuple[int, int, int, int], Vector] = {}
    # strand brackets
    for (k1, i1, k2, i2), v in l1.bracket.items():
        if pdg.dim(k1 + k2) and any(v):
            table[(k1, i1, k2, i2)] = incls[0].apply(k1 + k2, v)
    for (k1, i1, k2, i2), v in l2.bracket.items():
        if pdg.dim(k1 + k2) and any(v):
            o1, _ = offs(k1)
            o2, _ = offs(k2)
            table[(k1, offs(k1)[1] + i1, k2, offs(k2)[1] + i2)] = incls[2].apply(k1 + k2, v)
    # mixed brackets with the shifted strand
    for m in pdg.degrees():
        nk = dgk.dim(m + 1)
        if not nk:
            continue
        for (li, fi, strand) in ((l1, f1, 0), (l2, f2, 2)):
            dgi = li.underlying
            for n in dgi.degrees():
                if not pdg.dim(m + n):
                    continue
                o_mid_src = offs(m)[0]
                o_str = 0 if strand == 0 else offs(n)[1]
                o_mid_tgt = offs(m + n)[0]
                for a in range(nk):
                    ek = _basis_vec(nk, a)
                    for j in range(dgi.dim(n)):
                        fl = fi.dgmap.apply(n, _basis_vec(dgi.dim(n), j))
                        val = k.bracket_vec(m + 1, ek, n, fl)
                        if any(val):
                            vec = [ZERO] * pdg.dim(m + n)
                            for t, c in enumerate(val):
                                vec[o_mid_tgt + t] = half * c
                            table[(m, o_mid_src + a, n, o_str + j)] = tuple(vec)
                        val2 = k.bracket_vec(n, fl, m + 1, ek)
                        if any(val2):
                            sgn = -ONE if n % 2 else ONE
                            vec = [ZERO] * pdg.dim(m + n)
                            for t, c in enumerate(val2):
                                vec[o_mid_tgt + t] = sgn * half * c
                            table[(n, o_str + j, m, o_mid_src + a)] = tuple(vec)
    caps = [c for c in (l1.cap, l2.cap) if c is not None]
    if k.cap is not None:
        caps.append(k.cap - 1)  # the shifted strand loses one degree of bracket data
    p = DGL(pdg, table, cap=min(caps) if caps else None)
    # strict limit {(x1, x2) : f1(x1) = f2(x2)} and its map into the model
    lim_dg, pu, pw = strict_pullback(f1.dgmap, map_scale(-1, f2.dgmap))
    lim_table: dict[tuple[int, int, int, int], Vector] = {}
    for k1 in lim_dg.degrees():
        for k2 in lim_dg.degrees():
            kk = k1 + k2
            if not lim_dg.dim(kk):
                continue
            inc = QMatrix.vstack([pu.block(kk), pw.block(kk)])
            for i1 in range(lim_dg.dim(k1)):
                x1 = pu.apply(k1, _basis_vec(lim_dg.dim(k1), i1))
                y1 = pw.apply(k1, _basis_vec(lim_dg.dim(k1), i1))
                for i2 in range(lim_dg.dim(k2)):
                    x2 = pu.apply(k2, _basis_vec(lim_dg.dim(k2), i2))
                    y2 = pw.apply(k2, _basis_vec(lim_dg.dim(k2), i2))
                    bx = l1.bracket_vec(k1, x1, k2, x2)
                    by = l2.bracket_vec(k1, y1, k2, y2)
                    val = tuple(bx) + tuple(by)
                    if not any(val):
                        continue
                    sol = solve_matrix(inc, QMatrix.from_columns([val], len(val)))
                    if sol is None:
                        raise ValueError("strict limit is not closed under brackets")
                    lim_table[(k1, i1, k2, i2)] = sol.column(0)
    lcaps = [c for c in (l1.cap, l2.cap) if c is not None]
    lim = DGL(lim_dg, lim_table, cap=min(lcaps) if lcaps else None)
    blocks = {}
    for m in lim_dg.degrees():
        cols = []
        for j in range(lim_dg.dim(m)):
            e = _basis_vec(lim_dg.dim(m), j)
            cols.append(
                tuple(pu.apply(m, e)) + zero_vec(mid.dim(m)) + tuple(pw.apply(m, e))
            )
        blocks[m] = QMatrix.from_columns(cols, pdg.dim(m))
    witness = DGLMap(lim, p, DGMap(lim_dg, pdg, blocks))
    assert_valid(witness.dgmap, "strict limit into the pullback model")
    if reduce_to is not None:
        return reduce_dgl(reduce_to, p), None
    return p, witness


def dgl_hofib(f: DGLMap) -> DGL:
    """Homotopy fiber: the pullback model of L -> K <- 0."""
    return dgl_ho_pullback(f, zero_dgl_map(ZERO_DGL, f.target))[0]


# -- free cones, suspensions, cylinders ----------------------------------------------


def free_cone_suspension(mode: str, l: FreeDGL) -> FreeDGL:
    """cone: free DGL on V + sV with d(sv) = -s dv + v (contractible);
    suspension: the truly free DGL on s of the generating DG;
    bigS: the three-strand model sV + V + sV.

    The cone and bigS differentials square to zero only when the generator
    differential is linear; other inputs are rejected.
    """
    b = l.basis
    n = len(b.generators)
    lin = l.linear_diff_part()
    if mode == "suspension":
        gens = [(f"s({nm})", d + 1) for nm, d in b.generators]
        gd = {
            i: {w: -c for w, c in lin.get(i, {}).items()}
            for i in range(n)
            if lin.get(i)
        }
        return FreeDGL(FreeLieBasis(gens, b.cap + 1), gd)
    if not l.is_truly_free():
        bad = next(
            b.gen_name[i]
            for i, p in l.gen_diff.items()
            if any(len(w) > 1 for w in p)
        )
        raise ValueError(
            f"{mode} requires a linear generator differential; d({bad}) has higher brackets"
        )
    if mode == "cone":
        gens = list(b.generators) + [(f"s({nm})", d + 1) for nm, d in b.generators]
        gd: dict[int, TensorPoly] = {i: dict(p) for i, p in l.gen_diff.items()}
        for i in range(n):
            poly: TensorPoly = {(i,): ONE}
            for w, c in lin.get(i, {}).items():
                poly = tp_add(poly, {(n + w[0],): -c})
            gd[n + i] = poly
        return FreeDGL(FreeLieBasis(gens, b.cap + 1), gd)
    if mode == "bigS":
        gens = (
            [(f"sl({nm})", d + 1) for nm, d in b.generators]
            + [(nm, d) for nm, d in b.generators]
            + [(f"sr({nm})", d + 1) for nm, d in b.generators]
        )
        gd = {}
        for i in range(n):
            if lin.get(i):
                gd[n + i] = {(n + w[0],): c for w, c in lin[i].items()}
        for i in range(n):
            poly: TensorPoly = {(n + i,): ONE}
            for w, c in lin.get(i, {}).items():
                poly = tp_add(poly, {(w[0],): -c})
            gd[i] = poly
            poly2: TensorPoly = {(n + i,): ONE}
            for w, c in lin.get(i, {}).items():
                poly2 = tp_add(poly2, {(2 * n + w[0],): -c})
            gd[2 * n + i] = poly2
        return FreeDGL(FreeLieBasis(gens, b.cap + 1), gd)
    raise ValueError(f"unknown mode {mode!r}")


def free_cylinder(f: FreeDGLMap, g: FreeDGLMap) -> FreeDGL:
    """Two-sided mapping cylinder of U <- V -> W for freely generated maps:
    the free DGL on U + sV + W with d(sv) = -s dv + f(v) + g(v)."""
    if f.source is not g.source and f.source != g.source:
        raise ValueError("cylinder legs must share their source")
    v = f.source
    u, w = f.target, g.target
    if not (u.cap == v.cap == w.cap):
        raise ValueError("cylinder requires equal caps")
    for m in (f, g):
        for i, p in m.gen_images.items():
            if any(len(word) != 1 for word in p):
                raise ValueError(
                    f"map is not freely generated at generator {v.basis.gen_name[i]!r}"
                )
    nu = len(u.basis.generators)
    nv = len(v.basis.generators)
    gens = (
        [(f"u({nm})", d) for nm, d in u.basis.generators]
        + [(f"s({nm})", d + 1) for nm, d in v.basis.generators]
        + [(f"w({nm})", d) for nm, d in w.basis.generators]
    )
    basis = FreeLieBasis(gens, v.cap + 1)
    gd: dict[int, TensorPoly] = {}
    for i, p in u.gen_diff.items():
        gd[i] = dict(p)
    for i, p in w.gen_diff.items():
        gd[nu + nv + i] = {tuple(x + nu + nv for x in word): c for word, c in p.items()}
    lin = v.linear_diff_part()
    for i in range(nv):
        poly: TensorPoly = {}
        for word, c in lin.get(i, {}).items():
            poly = tp_add(poly, {(nu + word[0],): -c})
        for word, c in f.gen_images.get(i, {}).items():
            poly = tp_add(poly, {(word[0],): c})
        for word, c in g.gen_images.get(i, {}).items():
            poly = tp_add(poly, {(nu + nv + word[0],): c})
        if poly:
            gd[nu + i] = poly
    out = FreeDGL(basis, gd)
    for i in range(nv):
        dd = out.d_poly(out.gen_diff.get(nu + i, {}))
        dd = {word: c for word, c in dd.items() if basis.word_degree(word) <= basis.cap}
        if dd:
            raise ValueError(
                "cylinder differential does not square to zero at generator "
                f"s({v.basis.gen_name[i]}): the middle object needs a linear "
                "generator differential"
            )
    return out


# -- bracket-length filtration ---------------------------------------------------------


def bracket_filtration(l: FreeDGL, n: int) -> tuple[list[DGL], list[DG]]:
    """Quotients B_k by bracket length > k (k = 1..n) and their layers."""
    if n < 1:
        raise ValueError("filtration depth must be >= 1")
    full = to_dgl(l)
    b = l.basis
    towers: list[DGL] = []
    layers: list[DG] = []
    lengths = {d: [b.tree_length(t) for t in ms] for d, ms in b.monomials.items()}
    for kmax in range(1, n + 1):
        keep = {
            d: [i for i, ln in enumerate(lens) if ln <= kmax]
            for d, lens in lengths.items()
        }
        basis = {
            d: tuple(full.underlying.basis[d][i] for i in idx)
            for d, idx in keep.items()
            if idx
        }
        diff = {}
        for d in basis:
            if (d - 1) in basis:
                dm = full.underlying.d(d)
                ent = {}
                for rr, r0 in enumerate(keep[d - 1]):
                    for cc, c0 in enumerate(keep[d]):
                        val = dm.get(r0, c0)
                        if val:
                            ent[(rr, cc)] = val
                diff[d] = QMatrix(len(keep[d - 1]), len(keep[d]), ent)
        bdg = DG(basis, diff)
        pos = {
            d: {orig: new for new, orig in enumerate(idx)} for d, idx in keep.items()
        }
        table: dict[tuple[int, int, int, int], Vector] = {}
        for (k1, i1, k2, i2), v in full.bracket.items():
            if k1 not in pos or k2 not in pos or (k1 + k2) not in pos:
                continue
            if i1 not in pos[k1] or i2 not in pos[k2]:
                continue
            vec = tuple(v[o] for o in keep[k1 + k2])
            if any(vec):
                table[(k1, pos[k1][i1], k2, pos[k2][i2])] = vec
        towers.append(DGL(bdg, table, cap=l.cap))
        exact = {
            d: [i for i, ln in enumerate(lens) if ln == kmax]
            for d, lens in lengths.items()
        }
        lbasis = {
            d: tuple(full.underlying.basis[d][i] for i in idx)
            for d, idx in exact.items()
            if idx
        }
        ldiff = {}
        for d in lbasis:
            if (d - 1) in lbasis:
                dm = full.underlying.d(d)
                ent = {}
                for rr, r0 in enumerate(exact[d - 1]):
                    for cc, c0 in enumerate(exact[d]):
                        val = dm.get(r0, c0)
                        if val:
                            ent[(rr, cc)] = val
                ldiff[d] = QMatrix(len(exact[d - 1]), len(exact[d]), ent)
        layers.append(DG(lbasis, ldiff))
    return towers, layers


# -- Hurewicz ---------------------------------------------------------------------------


def hurewicz_check(f) -> tuple[bool, bool]:
    """(quasi_iso, ab_quasi_iso), both computed through the cap-exact window.

    For maps of free DGLs the two flags agree (the rational Hurewicz
    theorem); the finite-DGL path exists to exhibit non-free failures."""
    if isinstance(f, FreeDGLMap):
        if f.source.cap != f.target.cap:
            raise ValueError("hurewicz check requires equal caps")
        window = f.source.cap - 1
        q = is_quasi_iso_through(f.to_dgmap(), window)
        ab = is_quasi_iso_through(f.abelianized(), window)
        return q, ab
    q = is_quasi_iso(f.dgmap)
    ab_s, proj_s = abelianize_dgl(f.source)
    ab_t, proj_t = abelianize_dgl(f.target)
    blocks = {}
    for m in ab_s.degrees():
        rhs = proj_t.block(m) * f.dgmap.block(m)
        sol = _solve_right(proj_s.block(m), rhs)
        if sol is None:
            raise ValueError("map does not descend to abelianizations")
        blocks[m] = sol
    ab_map = DGMap(ab_s, ab_t, blocks)
    assert_valid(ab_map, "abelianized map")
    return q, is_quasi_iso(ab_map)


def _solve_right(p: QMatrix, rhs: QMatrix) -> Optional[QMatrix]:
    """Solve X p = rhs for X given surjective p (via transposes)."""
    sol = solve_matrix(p.transpose(), rhs.transpose())
    if sol is None:
        return None
    x = sol.transpose()
    if x * p != rhs:
        return None
    return x
