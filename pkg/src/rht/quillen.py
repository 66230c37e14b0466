"""Bridge functors between Lie and coalgebra models.

cec_C builds the Chevalley-Eilenberg coalgebra of a DGL: the cofree
coalgebra on the suspension of the underlying DG, with the differential
split into a word-length-preserving part (from d_L) and a word-length
lowering part (from the bracket).  cobar_L goes the other way: the free
Lie algebra on the desuspended de-augmentation, with a bracket-length
raising differential carrying half of the reduced coproduct.  Both land in
truncated (co)free objects, so every output can be expanded and validated
degree by degree.

The stable category here is plain DG: suspension spectra of Lie models are
abelianized suspensions, loop spectra of DGs are reduced desuspensions with
trivial structure, and the Snaith splitting realizes the stable homotopy of
a loop space as the symmetric coalgebra on its stable pieces.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Union

from .dgc import (
    CofreeDGC,
    DGC,
    _as_dgc,
    cofree_lambda,
    to_dgc,
    trivial_dgc,
)
from .dgcore import (
    DG,
    DGMap,
    ZERO_DG,
    homology_dims,
    is_quasi_iso_through,
    reduce_dg,
    shift,
    validate_dg,
)
from .dgl import (
    DGL,
    FreeDGL,
    FreeDGLMap,
    TensorPoly,
    abelian_dgl,
    abelianize,
    free_lie_basis,
    to_dgl,
    tp_add,
    tp_scale,
)
from .exactq import ONE, QMatrix

HALF = Fraction(1, 2)


def _as_finite_dgl(l) -> DGL:
    if isinstance(l, FreeDGL):
        return to_dgl(l)
    if isinstance(l, DGL):
        return l
    raise TypeError(f"expected a Lie algebra, got {type(l)!r}")


# -- the Chevalley-Eilenberg coalgebra ------------------------------------------------


def cec_C(l, cap: int) -> CofreeDGC:
    """Cofree coalgebra on s[L] with d = d_Lambda + d_bracket.

    Corestriction entries: s x -> -s(d_L x) on single letters, and
    (s x)^(s y) -> (-1)^{|x|} s[x, y] on pairs (halved when x = y, matching
    the divided-power normalization of the word basis).
    """
    ld = _as_finite_dgl(l)
    dg = ld.underlying
    if dg.basis and min(dg.basis) < 1:
        raise ValueError("Lie input must live in positive degrees")
    if ld.cap is not None and cap > ld.cap + 2:
        raise ValueError("cap exceeds the bracket-faithful window of the input")
    gens: list[tuple[str, int]] = []
    locate: dict[tuple[int, int], int] = {}
    for k in dg.degrees():
        for i, name in enumerate(dg.basis[k]):
            locate[(k, i)] = len(gens)
            gens.append((f"s({name})", k + 1))
    core: dict[tuple[int, ...], dict[int, Fraction]] = {}
    for k in dg.degrees():
        dk = dg.d(k)
        for i in range(dg.dim(k)):
            lin = {
                locate[(k - 1, r)]: -dk.get(r, i)
                for r in range(dg.dim(k - 1))
                if dk.get(r, i)
            }
            if lin:
                core[(locate[(k, i)],)] = lin
    for k1 in dg.degrees():
        for k2 in dg.degrees():
            if k2 < k1 or k1 + k2 + 2 > cap or dg.dim(k1 + k2) == 0:
                continue
            sign = -ONE if k1 % 2 else ONE
            for i1 in range(dg.dim(k1)):
                start = i1 if k1 == k2 else 0
                for i2 in range(start, dg.dim(k2)):
                    vec = ld.bracket_basis(k1, i1, k2, i2)
                    if not any(vec):
                        continue
                    same = k1 == k2 and i1 == i2
                    if same and (k1 + 1) % 2:
                        continue  # repeated odd letter is not a word
                    coeff = sign * (HALF if same else ONE)
                    word = tuple(sorted((locate[(k1, i1)], locate[(k2, i2)])))
                    lin = {
                        locate[(k1 + k2, r)]: coeff * c for r, c in enumerate(vec) if c
                    }
                    if lin:
                        core[word] = lin
    return CofreeDGC(gens, cap, core)


# -- the cobar Lie algebra -------------------------------------------------------------


def cobar_L(c, cap: int, sign_rule: str = "desuspended") -> FreeDGL:
    """Free Lie algebra on the desuspended de-augmentation, with
    d(s^-1 x) = -s^-1(dx) + (1/2) sum (-1)^{|alpha|} [s^-1 alpha, s^-1 beta].

    The coefficient reads |alpha| as the degree of s^-1 alpha (sign_rule
    "desuspended", the default): this is the convention under which the
    counit sends word-length-one cobar generators to their Lie elements.
    sign_rule "suspended" reads |alpha| as the degree of alpha itself; the
    two differ by the sign automorphism on generators, so both square to
    zero, but the suspended reading breaks the counit (see counit_eps).
    """
    if sign_rule not in ("desuspended", "suspended"):
        raise ValueError(f"unknown sign_rule {sign_rule!r}")
    flip = -ONE if sign_rule == "desuspended" else ONE
    cd = _as_dgc(c)
    dg = cd.underlying
    if dg.basis and min(dg.basis) < 2:
        raise ValueError("coalgebra input must be at least 2-reduced")
    gens: list[tuple[str, int]] = []
    locate: dict[tuple[int, int], int] = {}
    for k in dg.degrees():
        for i, name in enumerate(dg.basis[k]):
            locate[(k, i)] = len(gens)
            gens.append((f"si({name})", k - 1))
    basis = free_lie_basis(gens, cap)
    gen_diff: dict[int, TensorPoly] = {}
    for k in dg.degrees():
        dk = dg.d(k)
        for i in range(dg.dim(k)):
            poly: TensorPoly = {}
            for r in range(dg.dim(k - 1)):
                if dk.get(r, i):
                    poly = tp_add(poly, {(locate[(k - 1, r)],): -dk.get(r, i)})
            for ((k1, i1), (k2, i2)), val in cd.delta_basis(k, i).items():
                a = {(locate[(k1, i1)],): ONE}
                b = {(locate[(k2, i2)],): ONE}
                sign = flip * (-ONE if k1 % 2 else ONE)
                poly = tp_add(poly, tp_scale(HALF * sign * val, basis.bracket_poly(a, b)))
            if poly:
                gen_diff[locate[(k, i)]] = poly
    return FreeDGL(basis, gen_diff)


# -- counit and linearizations -----------------------------------------------------------


def counit_eps(l: FreeDGL, cap: Optional[int] = None) -> tuple[FreeDGLMap, bool]:
    """The natural map LC(L) -> L: cobar generators coming from single-letter
    words s x are sent to x, longer words to zero, freely extended.

    The chain-map property is verified and a failure raises (it would signal
    a sign inconsistency between the two functors).  The quasi-isomorphism
    flag is read in the window where both truncations are exact.
    """
    if cap is None:
        cap = l.cap
    cc = cec_C(l, cap + 1)
    lc = cobar_L(cc, cap)
    ld = to_dgl(l)
    words = cc.words()
    images: dict[int, TensorPoly] = {}
    gi = 0
    for k in sorted(words):
        for w in words[k]:
            if len(w) == 1:
                # cogenerator s(t) for the monomial t of L
                d = cc.deg[w[0]] - 1
                pos = _cogen_position(cc, w[0])
                tree = l.basis.monomials[d][pos]
                images[gi] = dict(l.basis.expand(tree))
            gi += 1
    eps = FreeDGLMap(lc, l, images)
    fm = eps.to_dgmap()
    report = validate_dg(fm)
    if report:
        raise RuntimeError("counit is not a chain map: " + "; ".join(report[:3]))
    q = is_quasi_iso_through(fm, cap - 1)
    return eps, q


def _cogen_position(c: CofreeDGC, gen_idx: int) -> int:
    """Position of a cogenerator among those of its degree."""
    d = c.deg[gen_idx]
    pos = 0
    for i, gd in enumerate(c.deg):
        if i == gen_idx:
            return pos
        if gd == d:
            pos += 1
    raise ValueError("cogenerator not found")


def linearize_equiv(side: str, x) -> tuple[DGMap, bool]:
    """Word-length-one comparison maps of underlying DGs.

    side "C": for a free DGL L, the projection [C(L)] -> s(L)^ab killing
    words of length >= 2 and bracket monomials.
    side "L": for a cofree DGC C, the inclusion s^-1(C)^pr -> [L(C)] of
    cogenerators as single-letter monomials.
    """
    if side == "C":
        if not isinstance(x, FreeDGL):
            raise TypeError("side C expects a free DGL")
        cc = cec_C(x, x.cap + 1)
        src = to_dgc(cc).underlying
        tgt = shift(abelianize(x), 1)
        words = cc.words()
        blocks = {}
        for k, ws in words.items():
            ent = {}
            for j, w in enumerate(ws):
                if len(w) != 1:
                    continue
                d = cc.deg[w[0]] - 1
                pos = _cogen_position(cc, w[0])
                tree = x.basis.monomials[d][pos]
                if isinstance(tree, int):
                    ent[(_abelian_position(x, tree), j)] = ONE
            blocks[k] = QMatrix(tgt.dim(k), len(ws), ent)
        f = DGMap(src, tgt, blocks)
        window = x.cap
    elif side == "L":
        if not isinstance(x, CofreeDGC):
            raise TypeError("side L expects a cofree DGC")
        lc = cobar_L(x, x.cap - 1)
        src = shift(x.gen_dg(), -1)
        tgt = to_dgl(lc).underlying
        blocks = {}
        for k in src.degrees():
            ent = {}
            for i in range(src.dim(k)):
                # the i-th degree-(k+1) cogenerator, as a length-one monomial
                gidx = _gen_at(x, k + 1, i)
                tree_pos = _monomial_position(lc, k, gidx)
                if tree_pos is not None:
                    ent[(tree_pos, i)] = ONE
            blocks[k] = QMatrix(tgt.dim(k), src.dim(k), ent)
        f = DGMap(src, tgt, blocks)
        window = lc.cap - 1
    else:
        raise ValueError(f"unknown side {side!r}")
    report = validate_dg(f)
    if report:
        raise RuntimeError("linearization is not a chain map: " + "; ".join(report[:3]))
    return f, is_quasi_iso_through(f, window)


def _abelian_position(l: FreeDGL, gen_idx: int) -> int:
    pos = 0
    d = l.basis.deg[gen_idx]
    for i, gd in enumerate(l.basis.deg):
        if i == gen_idx:
            return pos
        if gd == d:
            pos += 1
    raise ValueError("generator not found")


def _gen_at(c: CofreeDGC, d: int, pos: int) -> int:
    seen = 0
    for i, gd in enumerate(c.deg):
        if gd == d:
            if seen == pos:
                return i
            seen += 1
    raise ValueError("cogenerator not found")


def _monomial_position(l: FreeDGL, d: int, gen_idx: int) -> Optional[int]:
    for j, t in enumerate(l.basis.monomials.get(d, ())):
        if t == gen_idx:
            return j
    return None


# -- stable functors ------------------------------------------------------------------


def stable_functors(which: str, x, r: int = 2, cap: int = 16):
    """The suspension/loop spectrum functors, by their closed formulas."""
    if which == "sigma_dgl":
        return shift(abelianize(x), 1)
    if which == "omega_dgl":
        return abelian_dgl(shift(reduce_dg(r, x), -1))
    if which == "sigma_dgc":
        return _as_dgc(x).underlying
    if which == "omega_dgc":
        return cofree_lambda(reduce_dg(r, x), cap)
    if which == "sigma_dg":
        return x
    if which == "omega_dg":
        return reduce_dg(r, x)
    raise ValueError(f"unknown stable functor {which!r}")


def snaith(v: DG, cap: int, r: int = 2) -> DG:
    """Underlying DG of the symmetric coalgebra on the r-reduction: the
    stable splitting of Omega^infinity."""
    red = reduce_dg(r, v)
    if red.is_trivial():
        return ZERO_DG
    return to_dgc(cofree_lambda(red, cap)).underlying


# -- rational homotopy and homology of models --------------------------------------------


def sphere_model(n: int) -> DGC:
    """Homology coalgebra of the n-sphere: one class in degree n, trivial
    reduced coproduct."""
    if n < 2:
        raise ValueError("sphere models start at n = 2")
    return trivial_dgc(DG({n: (f"s{n}",)}))


def rational_invariants(kind: str, x, cap: int) -> dict[int, int]:
    """Graded dimensions of rational homotopy or homology of a model.

    Homotopy of a coalgebra C is H(L C) with degree n reporting pi_n; Lie
    models report their own homology with the same shift.  Homology of a
    Lie model is H(C L); coalgebra homology is read off directly.  Both
    homology answers include the counit class in degree 0.
    """
    if kind == "homotopy":
        if isinstance(x, (DGC, CofreeDGC)):
            h = homology_dims(to_dgl(cobar_L(x, cap)).underlying)
        elif isinstance(x, (DGL, FreeDGL)):
            h = homology_dims(_as_finite_dgl(x).underlying)
        else:
            raise TypeError("homotopy expects a Lie or coalgebra model")
        return {k + 1: n for k, n in sorted(h.items()) if k + 1 <= cap}
    if kind == "homology":
        if isinstance(x, (DGL, FreeDGL)):
            h = homology_dims(to_dgc(cec_C(x, cap)).underlying)
        elif isinstance(x, (DGC, CofreeDGC)):
            h = homology_dims(_as_dgc(x).underlying)
        else:
            raise TypeError("homology expects a Lie or coalgebra model")
        out = {0: 1}
        out.update({k: n for k, n in sorted(h.items()) if k <= cap})
        return out
    raise ValueError(f"unknown invariant kind {kind!r}")
