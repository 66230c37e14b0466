"""Differential graded cocommutative coalgebras over the rationals.

Two representations are used side by side:

- DGC: a finite-basis coalgebra stored through its de-augmentation: a
  dgcore.DG in positive degrees plus the reduced coproduct as structure
  constants.  The counit and coaugmentation live implicitly in degree 0, so
  de-augmenting and re-augmenting are both the identity on this data.
- CofreeDGC: a degree-truncated cofree coalgebra on cogenerators of degree
  at least 2.  Basis elements are wedge words; Lambda^k is the subspace of
  Koszul-signed symmetric-group invariants of the k-fold tensor power, and
  the chosen section normalizes like divided powers, so one even cogenerator
  gives the polynomial coalgebra with unit coefficients and one odd
  cogenerator gives the exterior coalgebra.  The differential is stored as
  its corestriction (word -> cogenerator combination) and extended as a
  coderivation.

The tensor-product coproduct exists in two conventions: a symmetrized "half"
form carrying 1/2 coefficients and no Koszul signs, and a "koszul" form with
the usual sign rule.  The half form is the default but is not cocommutative
once odd classes are involved; dgc_validate reports the witness, and the
koszul variant is available through the sign_rule switch.  The cylinder
coproduct of dgc_ho_pushout likewise carries forced 1/2 coefficients: it is
cocommutative and compatible with the differential component by component,
but for a genuinely two-sided cylinder the cross component breaks full
compatibility and coassociativity, which the validator reports as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from math import factorial
from typing import Mapping, Optional

from .dgcore import (
    DG,
    DGMap,
    ZERO_DG,
    ho_pullback,
    ho_pushout,
    identity_map,
    is_quasi_iso_through,
    reduce_with_inclusion,
    sub_dg,
    sum_dg,
    sum_many,
    tensor_dg,
    validate_dg,
    zero_map,
)
from .exactq import (
    ONE,
    QMatrix,
    Vector,
    ZERO,
    kernel_basis,
    rat,
    solve_linear,
    solve_matrix,
)

# a word is a sorted tuple of cogenerator indices; a polynomial maps words to
# scalars in the divided-power normalization described in the module docstring
Word = tuple[int, ...]
LPoly = dict[Word, Fraction]

Key = tuple[int, int]  # (degree, index) into a de-augmentation basis
PairKey = tuple[Key, Key]
CoTable = dict[Key, dict[PairKey, Fraction]]


# -- finite-basis coalgebras ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class DGC:
    """Finite coalgebra: the DG of the de-augmentation plus the reduced
    coproduct as a table (degree, index) -> {((d1,i1),(d2,i2)): coefficient}."""

    underlying: DG
    coproduct: Mapping[Key, Mapping[PairKey, Fraction]]

    def __post_init__(self):
        if self.underlying.basis and min(self.underlying.basis) < 1:
            raise ValueError("de-augmentation must live in positive degrees")
        clean: CoTable = {}
        for key, table in self.coproduct.items():
            t = {p: rat(c) for p, c in table.items() if c}
            if t:
                clean[key] = t
        object.__setattr__(self, "coproduct", clean)

    def delta_basis(self, k: int, i: int) -> dict[PairKey, Fraction]:
        return dict(self.coproduct.get((k, i), {}))

    def delta_vec(self, k: int, v: Vector) -> dict[PairKey, Fraction]:
        out: dict[PairKey, Fraction] = {}
        for i, c in enumerate(v):
            if not c:
                continue
            for p, val in self.coproduct.get((k, i), {}).items():
                s = out.get(p, ZERO) + c * val
                if s:
                    out[p] = s
                else:
                    out.pop(p, None)
        return out

    def __eq__(self, other):
        return (
            isinstance(other, DGC)
            and self.underlying == other.underlying
            and self.coproduct == other.coproduct
        )


def trivial_dgc(v: DG) -> DGC:
    """[V]_DGC: a DG with zero reduced coproduct and a disjoint counit."""
    return DGC(v, {})


ZERO_DGC = trivial_dgc(ZERO_DG)


@dataclass(frozen=True, eq=False)
class DGCMap:
    source: DGC
    target: DGC
    dgmap: DGMap


def identity_dgc_map(c: DGC) -> DGCMap:
    return DGCMap(c, c, identity_map(c.underlying))


def zero_dgc_map(a: DGC, b: DGC) -> DGCMap:
    return DGCMap(a, b, zero_map(a.underlying, b.underlying))


def _basis_vec(n: int, i: int) -> Vector:
    return tuple(ONE if j == i else ZERO for j in range(n))


def _pair_keys(dg: DG, k: int) -> list[PairKey]:
    out = []
    for k1 in dg.degrees():
        k2 = k - k1
        if dg.dim(k2) == 0:
            continue
        for i1 in range(dg.dim(k1)):
            for i2 in range(dg.dim(k2)):
                out.append(((k1, i1), (k2, i2)))
    return out


def _delta_matrix(c: DGC, k: int) -> tuple[QMatrix, list[PairKey]]:
    """Matrix of the reduced coproduct in degree k over the listed pair basis."""
    pairs = _pair_keys(c.underlying, k)
    index = {p: r for r, p in enumerate(pairs)}
    ent = {}
    for i in range(c.underlying.dim(k)):
        for p, val in c.coproduct.get((k, i), {}).items():
            ent[(index[p], i)] = val
    return QMatrix(len(pairs), c.underlying.dim(k), ent), pairs


def _apply_pair(f: DGMap, table: Mapping[PairKey, Fraction]) -> dict[PairKey, Fraction]:
    """(f tensor f) applied to a reduced-coproduct value."""
    out: dict[PairKey, Fraction] = {}
    for ((k1, i1), (k2, i2)), val in table.items():
        v1 = f.block(k1).column(i1) if f.target.dim(k1) else ()
        v2 = f.block(k2).column(i2) if f.target.dim(k2) else ()
        for j1, c1 in enumerate(v1):
            if not c1:
                continue
            for j2, c2 in enumerate(v2):
                if not c2:
                    continue
                p = ((k1, j1), (k2, j2))
                s = out.get(p, ZERO) + val * c1 * c2
                if s:
                    out[p] = s
                else:
                    out.pop(p, None)
    return out


def _d_of_pair(dg: DG, table: Mapping[PairKey, Fraction]) -> dict[PairKey, Fraction]:
    """(d tensor 1 + signed 1 tensor d) applied to a reduced-coproduct value."""
    out: dict[PairKey, Fraction] = {}

    def add(p, c):
        s = out.get(p, ZERO) + c
        if s:
            out[p] = s
        else:
            out.pop(p, None)

    for ((k1, i1), (k2, i2)), val in table.items():
        d1 = dg.d(k1)
        for r in range(dg.dim(k1 - 1)):
            c = d1.get(r, i1)
            if c:
                add(((k1 - 1, r), (k2, i2)), val * c)
        sign = -ONE if k1 % 2 else ONE
        d2 = dg.d(k2)
        for r in range(dg.dim(k2 - 1)):
            c = d2.get(r, i2)
            if c:
                add(((k1, i1), (k2 - 1, r)), sign * val * c)
    return out


def dgc_validate(c) -> list[str]:
    """Report every violated coalgebra axiom with a witness; empty iff valid."""
    if isinstance(c, CofreeDGC):
        report = []
        for w, lin in c.corestriction.items():
            wdeg = c.word_degree(w)
            for h in lin:
                if c.deg[h] != wdeg - 1:
                    report.append(f"d({c.word_name(w)}) is not homogeneous of degree -1")
                    break
        if report:
            return report
        return dgc_validate(to_dgc(c))
    if isinstance(c, DGCMap):
        report = list(validate_dg(c.dgmap))
        src, tgt = c.source, c.target
        for k in src.underlying.degrees():
            for i in range(src.underlying.dim(k)):
                lhs = tgt.delta_vec(k, c.dgmap.apply(k, _basis_vec(src.underlying.dim(k), i)))
                rhs = _apply_pair(c.dgmap, src.delta_basis(k, i))
                if lhs != rhs:
                    report.append(f"map does not respect the coproduct at ({k},{i})")
        return report
    report = list(validate_dg(c.underlying))
    dg = c.underlying
    for (k, i), table in sorted(c.coproduct.items()):
        for ((k1, i1), (k2, i2)), val in table.items():
            if k1 + k2 != k or i1 >= dg.dim(k1) or i2 >= dg.dim(k2):
                report.append(f"malformed coproduct entry at ({k},{i})")
                continue
            sign = -ONE if (k1 * k2) % 2 else ONE
            if table.get(((k2, i2), (k1, i1)), ZERO) != sign * val:
                report.append(
                    f"cocommutativity fails at ({k},{i}) on pair (({k1},{i1}),({k2},{i2}))"
                )
    for k in dg.degrees():
        for i in range(dg.dim(k)):
            table = c.delta_basis(k, i)
            left: dict[tuple[Key, Key, Key], Fraction] = {}
            right: dict[tuple[Key, Key, Key], Fraction] = {}
            for ((k1, i1), b), val in table.items():
                for (a1, a2), v2 in c.coproduct.get((k1, i1), {}).items():
                    t = (a1, a2, b)
                    left[t] = left.get(t, ZERO) + val * v2
            for (a, (k2, i2)), val in table.items():
                for (b1, b2), v2 in c.coproduct.get((k2, i2), {}).items():
                    t = (a, b1, b2)
                    right[t] = right.get(t, ZERO) + val * v2
            left = {t: v for t, v in left.items() if v}
            right = {t: v for t, v in right.items() if v}
            if left != right:
                report.append(f"coassociativity fails at ({k},{i})")
            lhs = c.delta_vec(k - 1, dg.d(k).apply(_basis_vec(dg.dim(k), i)))
            rhs = _d_of_pair(dg, table)
            if lhs != rhs:
                report.append(f"coproduct does not commute with d at ({k},{i})")
    return report


def assert_valid_dgc(c, context: str = ""):
    rep = dgc_validate(c)
    if rep:
        raise AssertionError(f"invalid {type(c).__name__} {context}: " + "; ".join(rep[:4]))


# -- primitives ----------------------------------------------------------------


def primitives_with_inclusion(c: DGC, prefix: str = "pr") -> tuple[DG, DGMap]:
    """Kernel of the reduced coproduct as a sub-DG with its inclusion."""
    vectors: dict[int, list[Vector]] = {}
    for k in c.underlying.degrees():
        m, _ = _delta_matrix(c, k)
        vectors[k] = kernel_basis(m)
    return sub_dg(c.underlying, vectors, prefix=prefix)


def primitives(c) -> DG:
    """Primitive elements.  For a cofree coalgebra these are exactly the
    length-one words, so the cogenerator DG is returned on the nose."""
    if isinstance(c, CofreeDGC):
        return c.gen_dg()
    return primitives_with_inclusion(c)[0]


# -- sums, products, smash -----------------------------------------------------


def _shift_table(table: Mapping[Key, Mapping[PairKey, Fraction]], off) -> CoTable:
    def mv(key: Key) -> Key:
        k, i = key
        return (k, off(k) + i)

    return {mv(k): {(mv(a), mv(b)): v for (a, b), v in t.items()} for k, t in table.items()}


def _full_delta(c: DGC, key) -> list[tuple[tuple, tuple, Fraction]]:
    """Full coproduct including counit terms; keys are ('e', k, i) or ('1',)."""
    if key == ("1",):
        return [(("1",), ("1",), ONE)]
    _, k, i = key
    out = [(("1",), key, ONE), (key, ("1",), ONE)]
    for ((k1, i1), (k2, i2)), val in c.delta_basis(k, i).items():
        out.append((("e", k1, i1), ("e", k2, i2), val))
    return out


def _key_degree(key) -> int:
    return 0 if key == ("1",) else key[1]


def dgc_combine(kind: str, a, b, sign_rule: str = "half"):
    """Coaugmented sum, product, or smash of two coalgebras.

    sign_rule applies to the product coproduct: "half" symmetrizes with 1/2
    coefficients and no Koszul signs, "koszul" uses the usual signed rule.
    The half rule fails graded cocommutativity when both factors carry
    odd-degree classes; dgc_validate exhibits the witness.
    """
    a, b = _as_dgc(a), _as_dgc(b)
    if kind == "sumTilde":
        total, inl, inr = sum_dg(a.underlying, b.underlying)
        table = _shift_table(a.coproduct, lambda k: 0)
        table.update(_shift_table(b.coproduct, lambda k: a.underlying.dim(k)))
        return DGC(total, table)
    if kind not in ("product", "smashTilde"):
        raise ValueError(f"unknown combine kind {kind!r}")
    if sign_rule not in ("half", "koszul"):
        raise ValueError(f"unknown sign rule {sign_rule!r}")
    t_dg, t_index = _tensor_with_index(a.underlying, b.underlying)
    if kind == "product":
        total, _ = sum_many([a.underlying, b.underlying, t_dg], tags=["c", "d", "t"])

        def locate(ckey, dkey) -> Optional[Key]:
            if ckey == ("1",) and dkey == ("1",):
                return None
            if dkey == ("1",):
                _, k, i = ckey
                return (k, i)
            if ckey == ("1",):
                _, k, i = dkey
                return (k, a.underlying.dim(k) + i)
            _, kc, ic = ckey
            _, kd, idx = dkey
            n, pos = t_index[(kc, ic, kd, idx)]
            return (n, a.underlying.dim(n) + b.underlying.dim(n) + pos)

    else:
        total = t_dg

        def locate(ckey, dkey) -> Optional[Key]:
            if ckey == ("1",) or dkey == ("1",):
                return None
            _, kc, ic = ckey
            _, kd, idx = dkey
            return t_index[(kc, ic, kd, idx)]

    table: CoTable = {}
    classes = [(("e", k, i), ("1",)) for k in a.underlying.degrees() for i in range(a.underlying.dim(k))]
    classes += [(("1",), ("e", k, i)) for k in b.underlying.degrees() for i in range(b.underlying.dim(k))]
    classes += [
        (("e", kc, ic), ("e", kd, idx))
        for kc in a.underlying.degrees()
        for ic in range(a.underlying.dim(kc))
        for kd in b.underlying.degrees()
        for idx in range(b.underlying.dim(kd))
    ]
    for ckey, dkey in classes:
        src = locate(ckey, dkey)
        if src is None:
            continue
        acc: dict[PairKey, Fraction] = {}
        unit_weight = ZERO

        def add(lc, ld, rc, rd, coeff):
            nonlocal unit_weight
            left = locate(lc, ld)
            right = locate(rc, rd)
            if left is None and right is None:
                return
            if left is None or right is None:
                # counit terms; in the product they must sum to 1 tensor x + x tensor 1
                if kind == "product" and (lc, ld) == (("1",), ("1",)):
                    unit_weight += coeff
                return
            s = acc.get((left, right), ZERO) + coeff
            if s:
                acc[(left, right)] = s
            else:
                acc.pop((left, right), None)

        for vk, wk, cv in _full_delta(a, ckey):
            for ak, bk, ca in _full_delta(b, dkey):
                if sign_rule == "half":
                    add(vk, ak, wk, bk, cv * ca / 2)
                    add(vk, bk, wk, ak, cv * ca / 2)
                else:
                    sign = -ONE if (_key_degree(wk) * _key_degree(ak)) % 2 else ONE
                    add(vk, ak, wk, bk, sign * cv * ca)
        if kind == "product" and unit_weight != ONE:
            raise AssertionError("internal: counit terms of the product do not normalize")
        if acc:
            table[src] = acc
    return DGC(total, table)


def _tensor_with_index(a: DG, b: DG) -> tuple[DG, dict[tuple[int, int, int, int], Key]]:
    """tensor_dg together with the position of each pure tensor in its degree."""
    out = tensor_dg(a, b)
    counts: dict[int, int] = {}
    index: dict[tuple[int, int, int, int], Key] = {}
    for i in a.degrees():
        for j in b.degrees():
            n = i + j
            for p in range(a.dim(i)):
                for q in range(b.dim(j)):
                    pos = counts.get(n, 0)
                    counts[n] = pos + 1
                    index[(i, p, j, q)] = (n, pos)
    return out, index


# -- homotopy pushouts ----------------------------------------------------------


def dgc_ho_pushout(f1: DGCMap, f2: DGCMap) -> tuple[DGC, DGCMap, DGCMap]:
    """Two-sided cylinder (B1 + sC + B2, d(sc) = -s dc + f1(c) + f2(c)) with
    the halved suspension coproduct on the middle strand.  Returns the object
    and the two end inclusions.

    The coproduct on sc is cocommutative, and each of its two components
    (the one valued in B_i tensor factors) commutes with the differential
    after projecting to that component; both facts are exercised by the test
    suite as matrix identities.  When both legs are nonzero and C has a
    nonzero reduced coproduct, the discarded cross component in B_1 tensor
    B_2 breaks full compatibility, and coassociativity fails as well;
    dgc_validate reports the witnesses.  The one-leg specializations
    (suspension, mapping cone) are fully compatible.
    """
    if f1.source is not f2.source and f1.source != f2.source:
        raise ValueError("pushout domain mismatch")
    c = f1.source
    b1, b2 = f1.target, f2.target
    total, _ = ho_pushout(f1.dgmap, f2.dgmap)

    def key_b1(k, i):
        return (k, i)

    def key_s(k1, i1):
        # suspended class of degree k1 + 1
        return (k1 + 1, b1.underlying.dim(k1 + 1) + i1)

    def key_b2(k, i):
        return (k, b1.underlying.dim(k) + c.underlying.dim(k - 1) + i)

    table: CoTable = {}
    for (k, i), t in b1.coproduct.items():
        table[key_b1(k, i)] = {(key_b1(*p), key_b1(*q)): v for (p, q), v in t.items()}
    for (k, i), t in b2.coproduct.items():
        table[key_b2(k, i)] = {(key_b2(*p), key_b2(*q)): v for (p, q), v in t.items()}
    for k in c.underlying.degrees():
        for i in range(c.underlying.dim(k)):
            acc: dict[PairKey, Fraction] = {}

            def add(p, coeff):
                s = acc.get(p, ZERO) + coeff
                if s:
                    acc[p] = s
                else:
                    acc.pop(p, None)

            for ((k1, i1), (k2, i2)), val in c.delta_basis(k, i).items():
                sign = -ONE if k1 % 2 else ONE
                for which, g in ((key_b1, f1.dgmap), (key_b2, f2.dgmap)):
                    img2 = g.block(k2).column(i2) if g.target.dim(k2) else ()
                    for j, cc in enumerate(img2):
                        if cc:
                            add((key_s(k1, i1), which(k2, j)), val * cc / 2)
                    img1 = g.block(k1).column(i1) if g.target.dim(k1) else ()
                    for j, cc in enumerate(img1):
                        if cc:
                            add((which(k1, j), key_s(k2, i2)), sign * val * cc / 2)
            if acc:
                table[key_s(k, i)] = acc
    out = DGC(total, table)
    inc1_blocks = {
        k: QMatrix(
            total.dim(k), b1.underlying.dim(k), {(i, i): ONE for i in range(b1.underlying.dim(k))}
        )
        for k in b1.underlying.degrees()
    }
    inc2_blocks = {}
    for k in b2.underlying.degrees():
        off = b1.underlying.dim(k) + c.underlying.dim(k - 1)
        inc2_blocks[k] = QMatrix(
            total.dim(k), b2.underlying.dim(k), {(off + i, i): ONE for i in range(b2.underlying.dim(k))}
        )
    inc1 = DGCMap(b1, out, DGMap(b1.underlying, total, inc1_blocks))
    inc2 = DGCMap(b2, out, DGMap(b2.underlying, total, inc2_blocks))
    return out, inc1, inc2


def dgc_ho_cofiber(f: DGCMap) -> tuple[DGC, DGCMap]:
    """Mapping cone (sC + B): the pushout along 0 <- C -> B."""
    cone, _, inc = dgc_ho_pushout(zero_dgc_map(f.source, ZERO_DGC), f)
    return cone, inc


def suspension_dgc(c: DGC) -> DGC:
    """Pushout of 0 <- C -> 0: the shift of the de-augmentation with zero
    reduced coproduct."""
    return dgc_ho_pushout(zero_dgc_map(c, ZERO_DGC), zero_dgc_map(c, ZERO_DGC))[0]


# -- reduction -------------------------------------------------------------------


def reduce_dgc(r: int, c) -> DGC:
    """Largest sub-coalgebra supported in degrees >= r.

    Starts from the DG reduction (kernel of d at degree r, everything above)
    and repeatedly discards classes whose reduced coproduct leaves the tensor
    square of the candidate, until stable.
    """
    c = _as_dgc(c)
    dg = c.underlying
    spans: dict[int, QMatrix] = {}
    for k in dg.degrees():
        if k > r:
            spans[k] = QMatrix.identity(dg.dim(k))
        elif k == r:
            spans[k] = QMatrix.from_columns(kernel_basis(dg.d(r)), dg.dim(r))
    changed = True
    while changed:
        changed = False
        for k in sorted(spans):
            x = spans[k]
            if x.cols == 0:
                continue
            pairs = _pair_keys(dg, k)
            index = {p: rr for rr, p in enumerate(pairs)}
            # columns spanning the allowed tensor square inside the pair space
            good_cols = []
            for k1 in sorted(spans):
                k2 = k - k1
                if k2 not in spans:
                    continue
                x1, x2 = spans[k1], spans[k2]
                for j1 in range(x1.cols):
                    c1 = x1.column(j1)
                    for j2 in range(x2.cols):
                        c2 = x2.column(j2)
                        col = [ZERO] * len(pairs)
                        for i1, a1 in enumerate(c1):
                            if not a1:
                                continue
                            for i2, a2 in enumerate(c2):
                                if a2:
                                    col[index[((k1, i1), (k2, i2))]] = a1 * a2
                        good_cols.append(tuple(col))
            smat = QMatrix.from_columns(good_cols, len(pairs))
            ann = kernel_basis(smat.transpose())  # functionals killing the square
            amat = QMatrix.from_columns(ann, len(pairs)).transpose()
            dmat = QMatrix(
                len(pairs),
                dg.dim(k),
                {
                    (index[p], i): v
                    for i in range(dg.dim(k))
                    for p, v in c.coproduct.get((k, i), {}).items()
                },
            )
            keep = kernel_basis(amat * (dmat * x))
            if len(keep) != x.cols:
                spans[k] = x * QMatrix.from_columns(keep, x.cols)
                changed = True
    if all(spans.get(k, QMatrix.zero(0, 0)).cols == dg.dim(k) for k in dg.degrees()):
        return c
    vectors = {k: [m.column(j) for j in range(m.cols)] for k, m in spans.items()}
    return _sub_dgc(c, vectors, prefix=f"r{r}_")[0]


def _sub_dgc(c: DGC, vectors: dict[int, list[Vector]], prefix: str) -> tuple[DGC, DGCMap]:
    """Sub-coalgebra spanned by the given vectors (must be closed under d and
    under the reduced coproduct)."""
    sub, incl = sub_dg(c.underlying, vectors, prefix=prefix)
    table: CoTable = {}
    for k in sub.degrees():
        pairs = _pair_keys(sub, k)
        if not pairs:
            for i in range(sub.dim(k)):
                if c.delta_vec(k, incl.block(k).column(i)):
                    raise ValueError(f"span not closed under the coproduct at degree {k}")
            continue
        amb_pairs = _pair_keys(c.underlying, k)
        amb_index = {p: rr for rr, p in enumerate(amb_pairs)}
        cols = []
        for (k1, i1), (k2, i2) in pairs:
            c1 = incl.block(k1).column(i1)
            c2 = incl.block(k2).column(i2)
            col = [ZERO] * len(amb_pairs)
            for j1, a1 in enumerate(c1):
                if not a1:
                    continue
                for j2, a2 in enumerate(c2):
                    if a2:
                        col[amb_index[((k1, j1), (k2, j2))]] = a1 * a2
            cols.append(tuple(col))
        basis_mat = QMatrix.from_columns(cols, len(amb_pairs))
        rhs_cols = []
        for i in range(sub.dim(k)):
            t = c.delta_vec(k, incl.block(k).column(i))
            col = [ZERO] * len(amb_pairs)
            for p, v in t.items():
                col[amb_index[p]] = v
            rhs_cols.append(tuple(col))
        sol = solve_matrix(basis_mat, QMatrix.from_columns(rhs_cols, len(amb_pairs)))
        if sol is None:
            raise ValueError(f"span not closed under the coproduct at degree {k}")
        for i in range(sub.dim(k)):
            t = {pairs[rr]: sol.get(rr, i) for rr in range(len(pairs)) if sol.get(rr, i)}
            if t:
                table[(k, i)] = t
    out = DGC(sub, table)
    return out, DGCMap(out, c, incl)


def _as_dgc(x) -> DGC:
    if isinstance(x, CofreeDGC):
        return to_dgc(x)
    if isinstance(x, DGC):
        return x
    raise TypeError(f"expected a coalgebra, got {type(x)!r}")


# -- cofree coalgebras -----------------------------------------------------------


def _canonical(letters, deg) -> tuple[Fraction, Word]:
    """Sort letters ascending with the Koszul sign; zero on repeated odd letters."""
    ls = list(letters)
    sign = ONE
    for i in range(1, len(ls)):
        j = i
        while j > 0 and ls[j - 1] > ls[j]:
            if (deg[ls[j - 1]] * deg[ls[j]]) % 2:
                sign = -sign
            ls[j - 1], ls[j] = ls[j], ls[j - 1]
            j -= 1
    for i in range(1, len(ls)):
        if ls[i] == ls[i - 1] and deg[ls[i]] % 2:
            return ZERO, ()
    return sign, tuple(ls)


def _runs(w: Word) -> list[tuple[int, int]]:
    out: list[tuple[int, int]] = []
    for g in w:
        if out and out[-1][0] == g:
            out[-1] = (g, out[-1][1] + 1)
        else:
            out.append((g, 1))
    return out


def _splits(w: Word, deg, proper: bool):
    """Unshuffles of a sorted word into (A, B) with the Koszul sign of moving
    A to the front; A is always nonempty, and B too when proper."""
    runs = _runs(w)
    for choice in iproduct(*(range(m + 1) for _, m in runs)):
        if not any(choice):
            continue
        if proper and all(k == m for k, (_, m) in zip(choice, runs)):
            continue
        a: list[int] = []
        b: list[int] = []
        exp = 0
        bdeg = 0
        for k, (g, m) in zip(choice, runs):
            exp += deg[g] * bdeg * k
            a.extend([g] * k)
            b.extend([g] * (m - k))
            bdeg += deg[g] * (m - k)
        sign = -ONE if exp % 2 else ONE
        yield sign, tuple(a), tuple(b)


def _insert(h: int, b: Word, deg) -> tuple[Fraction, Word]:
    """Divided-power product of a cogenerator with a word: coefficient
    (multiplicity of h in the result) times the sorted word."""
    if deg[h] % 2 and h in b:
        return ZERO, ()
    exp = deg[h] * sum(deg[x] for x in b if x < h)
    count = b.count(h) + 1
    coeff = Fraction(count) * (-ONE if exp % 2 else ONE)
    merged = tuple(sorted(b + (h,)))
    return coeff, merged


def _mfact(w: Word) -> int:
    out = 1
    for _, m in _runs(w):
        out *= factorial(m)
    return out


def _apply_letterwise(w: Word, images: Mapping[int, Mapping[int, Fraction]], tgt_deg) -> LPoly:
    """Extend a linear cogenerator assignment multiplicatively to a word,
    in the divided-power normalization."""
    parts: list[tuple[Fraction, tuple[int, ...]]] = [(ONE, ())]
    for letter in w:
        img = images.get(letter, {})
        parts = [(c * ci, ls + (h,)) for c, ls in parts for h, ci in img.items() if ci]
        if not parts:
            return {}
    out: LPoly = {}
    mw = _mfact(w)
    for c, ls in parts:
        sign, x = _canonical(ls, tgt_deg)
        if not sign:
            continue
        v = out.get(x, ZERO) + c * sign * _mfact(x) / mw
        if v:
            out[x] = v
        else:
            out.pop(x, None)
    return out


class CofreeDGC:
    """Degree-truncated cofree coalgebra with a coderivation differential.

    The differential is stored through its corestriction: a map from basis
    words to cogenerator combinations, homogeneous of degree -1.  Length-one
    entries are the cogenerator differential d_0; longer words carry the
    word-length-lowering parts d_{-1}, d_{-2}, ...
    """

    def __init__(self, cogenerators, cap: int, corestriction: Mapping[Word, Mapping[int, Fraction]]):
        gens = tuple((str(n), int(d)) for n, d in cogenerators)
        names = [n for n, _ in gens]
        if len(set(names)) != len(names):
            raise ValueError("duplicate cogenerator names")
        for n, d in gens:
            if d < 2:
                raise ValueError(f"cogenerator {n!r} has degree {d} < 2")
        if gens and cap < max(d for _, d in gens):
            raise ValueError("cap below a cogenerator degree")
        self.cogenerators = gens
        self.cap = cap
        self.deg = tuple(d for _, d in gens)
        self.gen_name = tuple(n for n, _ in gens)
        self.gen_index = {n: i for i, n in enumerate(self.gen_name)}
        self.corestriction: dict[Word, dict[int, Fraction]] = {}
        for w, lin in corestriction.items():
            lin = {h: rat(cc) for h, cc in lin.items() if cc}
            if lin:
                self.corestriction[tuple(w)] = lin
        self._words: Optional[dict[int, tuple[Word, ...]]] = None
        self._dgc: Optional[DGC] = None

    def __eq__(self, other):
        return (
            isinstance(other, CofreeDGC)
            and self.cogenerators == other.cogenerators
            and self.cap == other.cap
            and self.corestriction == other.corestriction
        )

    def word_degree(self, w: Word) -> int:
        return sum(self.deg[g] for g in w)

    def word_name(self, w: Word) -> str:
        return "^".join(self.gen_name[g] for g in w)

    def words(self) -> dict[int, tuple[Word, ...]]:
        """Canonical basis words by degree: sorted tuples of cogenerator
        indices, odd cogenerators without repetition, total degree <= cap."""
        if self._words is not None:
            return self._words
        found: list[Word] = []

        def grow(w: Word, start: int, degsum: int):
            if w:
                found.append(w)
            for g in range(start, len(self.deg)):
                d = degsum + self.deg[g]
                if d > self.cap:
                    continue
                if self.deg[g] % 2 and w and w[-1] == g:
                    continue
                grow(w + (g,), g, d)

        grow((), 0, 0)
        by_deg: dict[int, list[Word]] = {}
        for w in found:
            by_deg.setdefault(self.word_degree(w), []).append(w)
        self._words = {k: tuple(sorted(ws, key=lambda w: (len(w), w))) for k, ws in sorted(by_deg.items())}
        return self._words

    def d_word(self, w: Word) -> LPoly:
        """Coderivation extension of the corestriction."""
        out: LPoly = {}
        for sign, a, b in _splits(w, self.deg, proper=False):
            for h, c in self.corestriction.get(a, {}).items():
                coeff, x = _insert(h, b, self.deg)
                if not coeff:
                    continue
                v = out.get(x, ZERO) + sign * c * coeff
                if v:
                    out[x] = v
                else:
                    out.pop(x, None)
        return out

    def delta_word(self, w: Word) -> dict[tuple[Word, Word], Fraction]:
        """Reduced coproduct: signed proper unshuffles."""
        out: dict[tuple[Word, Word], Fraction] = {}
        for sign, a, b in _splits(w, self.deg, proper=True):
            out[(a, b)] = out.get((a, b), ZERO) + sign
        return {p: v for p, v in out.items() if v}

    def gen_dg(self) -> DG:
        basis: dict[int, tuple[str, ...]] = {}
        for name, d in self.cogenerators:
            basis[d] = basis.get(d, ()) + (name,)
        diff = {}
        for d in sorted(basis):
            tgt = basis.get(d - 1, ())
            if not tgt:
                continue
            ent = {}
            for j, (name, gd) in enumerate(self.cogenerators):
                if gd != d:
                    continue
                jj = _gen_position(self, d, j)
                for h, c in self.corestriction.get((j,), {}).items():
                    ent[(_gen_position(self, d - 1, h), jj)] = c
            diff[d] = QMatrix(len(tgt), len(basis[d]), ent)
        return DG(basis, diff)


def _gen_position(c: CofreeDGC, d: int, gen_idx: int) -> int:
    """Position of a cogenerator among those of its degree."""
    pos = 0
    for i, gd in enumerate(c.deg):
        if i == gen_idx:
            return pos
        if gd == d:
            pos += 1
    raise ValueError("cogenerator not found")


def to_dgc(c: CofreeDGC) -> DGC:
    """Expand a cofree coalgebra into an explicit finite-basis DGC."""
    if c._dgc is not None:
        return c._dgc
    words = c.words()
    index: dict[Word, Key] = {}
    basis: dict[int, tuple[str, ...]] = {}
    for k, ws in words.items():
        basis[k] = tuple(c.word_name(w) for w in ws)
        for i, w in enumerate(ws):
            index[w] = (k, i)
    diff: dict[int, QMatrix] = {}
    for k, ws in words.items():
        tgt = words.get(k - 1, ())
        if not tgt:
            continue
        cols = []
        for w in ws:
            col = [ZERO] * len(tgt)
            for x, v in c.d_word(w).items():
                col[index[x][1]] = v
            cols.append(tuple(col))
        diff[k] = QMatrix.from_columns(cols, len(tgt))
    table: CoTable = {}
    for k, ws in words.items():
        for i, w in enumerate(ws):
            t = {(index[a], index[b]): v for (a, b), v in c.delta_word(w).items()}
            if t:
                table[(k, i)] = t
    out = DGC(DG(basis, diff), table)
    c._dgc = out
    return out


def cofree_lambda(v: DG, cap: int) -> CofreeDGC:
    """Truly cofree coalgebra on a cogenerator DG (degrees >= 2)."""
    gens: list[tuple[str, int]] = []
    locate: dict[tuple[int, int], int] = {}
    for k in v.degrees():
        for i, name in enumerate(v.basis[k]):
            locate[(k, i)] = len(gens)
            gens.append((name, k))
    corestriction: dict[Word, dict[int, Fraction]] = {}
    for k in v.degrees():
        dk = v.d(k)
        for i in range(v.dim(k)):
            lin = {locate[(k - 1, r)]: dk.get(r, i) for r in range(v.dim(k - 1)) if dk.get(r, i)}
            if lin:
                corestriction[(locate[(k, i)],)] = lin
    return CofreeDGC(gens, cap, corestriction)


class CofreeDGCMap:
    """Cofreely generated map: a linear cogenerator assignment extended
    multiplicatively to wedge words."""

    def __init__(self, source: CofreeDGC, target: CofreeDGC, gen_images: Mapping[int, Mapping[int, Fraction]]):
        self.source = source
        self.target = target
        self.gen_images: dict[int, dict[int, Fraction]] = {}
        for i, lin in gen_images.items():
            lin = {h: rat(cc) for h, cc in lin.items() if cc}
            if lin:
                for h in lin:
                    if self.target.deg[h] != self.source.deg[i]:
                        raise ValueError("cogenerator assignment is not degree 0")
                self.gen_images[i] = lin

    def apply_word(self, w: Word) -> LPoly:
        return _apply_letterwise(w, self.gen_images, self.target.deg)

    def gen_dgmap(self) -> DGMap:
        src, tgt = self.source.gen_dg(), self.target.gen_dg()
        blocks = {}
        for d in src.degrees():
            ent = {}
            for j, (name, gd) in enumerate(self.source.cogenerators):
                if gd != d:
                    continue
                jj = _gen_position(self.source, d, j)
                for h, cc in self.gen_images.get(j, {}).items():
                    ent[(_gen_position(self.target, d, h), jj)] = cc
            blocks[d] = QMatrix(tgt.dim(d), src.dim(d), ent)
        return DGMap(src, tgt, blocks)

    def to_dgc_map(self) -> DGCMap:
        sdgc, tdgc = to_dgc(self.source), to_dgc(self.target)
        swords, twords = self.source.words(), self.target.words()
        blocks = {}
        for k, ws in swords.items():
            tws = twords.get(k, ())
            tindex = {w: i for i, w in enumerate(tws)}
            cols = []
            for w in ws:
                col = [ZERO] * len(tws)
                for x, v in self.apply_word(w).items():
                    col[tindex[x]] = v
                cols.append(tuple(col))
            blocks[k] = QMatrix.from_columns(cols, len(tws))
        return DGCMap(sdgc, tdgc, DGMap(sdgc.underlying, tdgc.underlying, blocks))


def cofree_identity(c: CofreeDGC) -> CofreeDGCMap:
    return CofreeDGCMap(c, c, {i: {i: ONE} for i in range(len(c.cogenerators))})


def cofree_zero_map(a: CofreeDGC, b: CofreeDGC) -> CofreeDGCMap:
    return CofreeDGCMap(a, b, {})


# -- paths: homotopy limits of cofreely generated spans ---------------------------


def cofree_path(f: CofreeDGCMap, g: CofreeDGCMap, r: int = 2, cap: Optional[int] = None) -> CofreeDGC:
    """Cofree path object of the span  source(f) -> target <- source(g).

    The cogenerator DG is the reduced path complex U + s^-1 V + W with
    d_fg(u + s^-1 v + w) = s^-1(f(u) + g(w)) added, and the word-length
    lowering parts of the differentials of the two outer coalgebras are
    transported onto it.  Specializations: 0 -> Lambda V <- 0 gives loops,
    the identity against 0 gives a contractible path coalgebra.
    """
    if f.target != g.target:
        raise ValueError("path codomain mismatch")
    if r < 2:
        raise ValueError("reduction level must be at least 2")
    u, v, w = f.source, f.target, g.source
    if cap is None:
        cap = min(u.cap, w.cap, v.cap - 1)
    total, _ = ho_pullback(f.gen_dgmap(), g.gen_dgmap())
    red, incl = reduce_with_inclusion(r, total)

    # locate the pure strands inside the path complex
    udg, vdg = u.gen_dg(), v.gen_dg()
    strand: dict[tuple[int, int], tuple[str, int]] = {}
    for k in total.degrees():
        nu = udg.dim(k)
        nm = vdg.dim(k + 1)
        for i in range(total.dim(k)):
            if i < nu:
                strand[(k, i)] = ("u", _gen_global(u, k, i))
            elif i < nu + nm:
                strand[(k, i)] = ("m", i - nu)
            else:
                strand[(k, i)] = ("w", _gen_global(w, k, i - nu - nm))

    # cogenerators above the cap can never enter a word, so drop them
    kept = [k for k in red.degrees() if k <= cap]
    gens: list[tuple[str, int]] = []
    locate: dict[tuple[int, int], int] = {}
    for k in kept:
        for i, name in enumerate(red.basis[k]):
            locate[(k, i)] = len(gens)
            gens.append((name, k))
    images = {
        locate[(k, i)]: {
            (k, j): incl.block(k).get(j, i) for j in range(total.dim(k)) if incl.block(k).get(j, i)
        }
        for k in kept
        for i in range(red.dim(k))
    }
    tot_deg = {key: key[0] for key in strand}

    def pure_corestriction(word: tuple[tuple[int, int], ...]) -> dict[tuple[int, int], Fraction]:
        # word of path-complex classes, canonically sorted; value in the path complex
        if len(word) == 1:
            (k, i) = word[0]
            col = total.d(k).column(i) if total.dim(k - 1) else ()
            return {(k - 1, j): cc for j, cc in enumerate(col) if cc}
        kinds = {strand[p][0] for p in word}
        if kinds == {"u"}:
            inner, tag = u, "u"
        elif kinds == {"w"}:
            inner, tag = w, "w"
        else:
            return {}
        sign, key = _canonical([strand[p][1] for p in word], inner.deg)
        if not sign:
            return {}
        back = _strand_keys(inner, tag, udg, vdg)
        out: dict[tuple[int, int], Fraction] = {}
        for h, cc in inner.corestriction.get(key, {}).items():
            out[back[h]] = out.get(back[h], ZERO) + sign * cc
        return {p: cc for p, cc in out.items() if cc}

    def _strand_keys(inner, tag, udg_, v_):
        # path-complex coordinates of each cogenerator of the given strand
        keys = {}
        for h, (_, d) in enumerate(inner.cogenerators):
            pos = _gen_position(inner, d, h)
            off = 0 if tag == "u" else udg_.dim(d) + v_.dim(d + 1)
            keys[h] = (d, off + pos)
        return keys

    out_core: dict[Word, dict[int, Fraction]] = {}
    stub = CofreeDGC(gens, cap, {})
    for k, ws in stub.words().items():
        for word in ws:
            expanded = _apply_letterwise(word, images, tot_deg)
            acc: dict[tuple[int, int], Fraction] = {}
            for pure, c0 in expanded.items():
                for p, cc in pure_corestriction(pure).items():
                    s = acc.get(p, ZERO) + c0 * cc
                    if s:
                        acc[p] = s
                    else:
                        acc.pop(p, None)
            if not acc:
                continue
            kk = k - 1
            rhs = [ZERO] * total.dim(kk)
            for (dd, j), cc in acc.items():
                if dd != kk:
                    raise AssertionError("internal: path corestriction not homogeneous")
                rhs[j] = cc
            sol = solve_linear(incl.block(kk), tuple(rhs)) if red.dim(kk) else None
            if sol is None:
                raise ValueError(
                    f"path reduction is not closed under the differential at {stub.word_name(word)}"
                )
            out_core[word] = {locate[(kk, j)]: cc for j, cc in enumerate(sol) if cc}
    return CofreeDGC(gens, cap, out_core)


def _gen_global(c: CofreeDGC, d: int, pos: int) -> int:
    """Inverse of _gen_position: global index of the pos-th degree-d cogenerator."""
    seen = 0
    for i, gd in enumerate(c.deg):
        if gd == d:
            if seen == pos:
                return i
            seen += 1
    raise ValueError("cogenerator not found")


def cofree_loops(v: CofreeDGC, r: int = 2, cap: Optional[int] = None) -> CofreeDGC:
    zero = CofreeDGC((), v.cap, {})
    return cofree_path(cofree_zero_map(zero, v), cofree_zero_map(zero, v), r=r, cap=cap)


def cofree_paths(v: CofreeDGC, r: int = 2, cap: Optional[int] = None) -> CofreeDGC:
    zero = CofreeDGC((), v.cap, {})
    return cofree_path(cofree_identity(v), cofree_zero_map(zero, v), r=r, cap=cap)


# -- detection of quasi-isomorphisms ------------------------------------------------


def hurewicz_check_dgc(f: CofreeDGCMap) -> tuple[bool, bool]:
    """(quasi-iso on de-augmentations, quasi-iso on cogenerator DGs), both
    read in the cap-exact window.  For cofreely generated maps of cofree
    coalgebras the two flags agree."""
    if f.source.cap != f.target.cap:
        raise ValueError("cap mismatch")
    top = f.source.cap - 1
    q = is_quasi_iso_through(f.to_dgc_map().dgmap, top)
    pr = is_quasi_iso_through(f.gen_dgmap(), top)
    return q, pr
