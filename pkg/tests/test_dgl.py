"""Lie-side oracles.

The monomial basis is checked against an independent rank computation: the
graded-commutator span in the tensor algebra, built length by length with its
own sign handling (no shared code with the implementation under test).
"""

from fractions import Fraction
from random import Random

import pytest

from rht.dgcore import DG, ZERO_DG, homology_dims, is_quasi_iso_through, ho_square, zero_map
from rht.dgl import (
    DGL,
    DGLMap,
    FreeDGL,
    FreeDGLMap,
    ZERO_DGL,
    abelian_dgl,
    abelianize,
    abelianize_dgl,
    bracket_filtration,
    dgl_ho_pullback,
    dgl_hofib,
    dgl_product,
    dgl_strict_product,
    dgl_validate,
    free_cone_suspension,
    free_cylinder,
    free_dgl_identity,
    free_lie_basis,
    free_product,
    hurewicz_check,
    identity_dgl_map,
    to_dgl,
    zero_dgl_map,
)
from rht.exactq import ONE, QMatrix, rank, rat


# -- independent commutator-span oracle -----------------------------------------


def _comm(degs, a, b):
    """Graded commutator of word-polynomials (dict word -> coeff)."""
    out = {}

    def deg_of(word):
        return sum(degs[i] for i in word)

    for wa, ca in a.items():
        for wb, cb in b.items():
            sign = -1 if (deg_of(wa) * deg_of(wb)) % 2 else 1
            for w, c in ((wa + wb, ca * cb), (wb + wa, -sign * ca * cb)):
                out[w] = out.get(w, 0) + c
    return {w: c for w, c in out.items() if c}


def commutator_span_dims(gens, cap):
    """Per-degree rank of the span of all iterated commutators, degree <= cap."""
    degs = [d for _, d in gens]
    by_length = {1: [{(i,): Fraction(1)} for i in range(len(degs))]}
    maxlen = cap  # degrees are >= 1
    for ln in range(2, maxlen + 1):
        acc = []
        for i in range(1, ln):
            for a in by_length.get(i, []):
                for b in by_length.get(ln - i, []):
                    c = _comm(degs, a, b)
                    if c:
                        acc.append(c)
        by_length[ln] = acc
    per_degree = {}
    for polys in by_length.values():
        for p in polys:
            d = sum(degs[i] for i in next(iter(p)))
            if d <= cap:
                per_degree.setdefault(d, []).append(p)
    dims = {}
    for d, polys in per_degree.items():
        words = sorted({w for p in polys for w in p})
        idx = {w: i for i, w in enumerate(words)}
        cols = []
        for p in polys:
            v = [rat(0)] * len(words)
            for w, c in p.items():
                v[idx[w]] = rat(c)
            cols.append(tuple(v))
        r = rank(QMatrix.from_columns(cols, len(words)))
        if r:
            dims[d] = r
    return dims


def basis_dims(b):
    return {d: len(ms) for d, ms in b.monomials.items() if ms}


def test_one_even_generator():
    b = free_lie_basis([("x", 2)], 8)
    assert basis_dims(b) == {2: 1}
    assert commutator_span_dims([("x", 2)], 8) == {2: 1}


def test_one_odd_generator_has_square():
    b = free_lie_basis([("x", 1)], 4)
    assert basis_dims(b) == {1: 1, 2: 1}
    assert b.tree_name(b.monomials[2][0]) == "[x,x]"
    assert commutator_span_dims([("x", 1)], 4) == {1: 1, 2: 1}


def test_two_even_generators_dims_2_1_2():
    gens = [("x", 2), ("y", 2)]
    b = free_lie_basis(gens, 6)
    assert basis_dims(b) == {2: 2, 4: 1, 6: 2}
    assert commutator_span_dims(gens, 6) == {2: 2, 4: 1, 6: 2}


def test_degree_zero_generator_rejected():
    with pytest.raises(ValueError):
        free_lie_basis([("x", 0)], 4)


def test_basis_matches_oracle_randomized():
    rng = Random(31)
    for _ in range(12):
        n = rng.randint(1, 3)
        gens = [(f"g{i}", rng.randint(1, 3)) for i in range(n)]
        cap = rng.randint(max(d for _, d in gens), 6)
        b = free_lie_basis(gens, cap)
        assert basis_dims(b) == commutator_span_dims(gens, cap)


def test_truncation_coherence():
    gens = [("x", 1), ("y", 2)]
    big = free_lie_basis(gens, 6)
    small = free_lie_basis(gens, 4)
    assert {d: v for d, v in basis_dims(big).items() if d <= 4} == basis_dims(small)


# -- validation --------------------------------------------------------------------


def test_abelian_dgl_valid():
    v = DG({1: ("a",), 2: ("b",)})
    assert dgl_validate(abelian_dgl(v)) == []


def test_free_sphere_valid():
    l = FreeDGL(free_lie_basis([("x", 3)], 9), {})
    assert dgl_validate(l) == []


def test_missing_sign_reported():
    # [a,b] and [b,a] set equal: violates antisymmetry for odd.even degrees
    dg = DG({1: ("a",), 2: ("b",), 3: ("c",)})
    bad = DGL(dg, {(1, 0, 2, 0): (ONE,), (2, 0, 1, 0): (ONE,)})
    rep = dgl_validate(bad)
    assert any("antisymmetry" in r for r in rep)


def counterexample_dgl() -> DGL:
    """(Qv + Q[v,v] + Qw, dw = [v,v]) with |v| = 1: free only as a coincidence
    of dimensions, not as a Lie algebra."""
    dg = DG({1: ("v",), 2: ("u",), 3: ("w",)}, {3: QMatrix.from_rows([[1]])})
    return DGL(dg, {(1, 0, 1, 0): (ONE,)})


def test_counterexample_valid():
    assert dgl_validate(counterexample_dgl()) == []


def test_to_dgl_small_free_valid():
    b = free_lie_basis([("x", 1), ("y", 3)], 5)
    # dy = [x,x]
    l = FreeDGL(b, {1: dict(b.expand((0, 0)))})
    assert dgl_validate(l) == []
    dgl = to_dgl(l)
    h = homology_dims(dgl.underlying)
    # [x,x] is hit by y, so nothing survives in degree 2
    assert h.get(1) == 1 and 2 not in h


# -- coproducts and products ----------------------------------------------------------


def test_free_product_with_zero():
    a = FreeDGL(free_lie_basis([("x", 2)], 6), {})
    z = FreeDGL(free_lie_basis([], 6), {})
    assert basis_dims(free_product(a, z).basis) == basis_dims(a.basis)


def test_free_product_dims_match_union():
    a = FreeDGL(free_lie_basis([("x", 1)], 5), {})
    b = FreeDGL(free_lie_basis([("y", 2)], 5), {})
    p = free_product(a, b)
    assert basis_dims(p.basis) == basis_dims(free_lie_basis([("x", 1), ("y", 2)], 5))
    ab = abelianize(p)
    assert {k: ab.dim(k) for k in ab.degrees()} == {1: 1, 2: 1}


def test_strict_product_with_zero():
    a = counterexample_dgl()
    p = dgl_product(a, ZERO_DGL, model="strict")
    assert dgl_validate(p) == []
    assert homology_dims(p.underlying) == homology_dims(a.underlying)


def test_strict_product_homology_adds():
    a = counterexample_dgl()
    p, p1, p2 = dgl_strict_product(a, a)
    assert dgl_validate(p) == []
    assert dgl_validate(p1) == [] and dgl_validate(p2) == []
    ha = homology_dims(a.underlying)
    assert homology_dims(p.underlying) == {k: 2 * v for k, v in ha.items()}


def test_free_product_model_projection_quasi_iso():
    a = FreeDGL(free_lie_basis([("x", 2)], 6), {})
    b = FreeDGL(free_lie_basis([("y", 2)], 6), {})
    model, witness = dgl_product(a, b, model="free")
    assert dgl_validate(model) == []
    assert dgl_validate(witness) == []
    assert is_quasi_iso_through(witness.dgmap, 5)


# -- abelianization --------------------------------------------------------------------


def test_abelianize_free():
    b = free_lie_basis([("x", 1), ("y", 2)], 5)
    l = FreeDGL(b, {1: {(0,): ONE}})  # dy = x
    ab = abelianize(l)
    assert {k: ab.dim(k) for k in ab.degrees()} == {1: 1, 2: 1}
    assert ab.d(2).get(0, 0) == 1


def test_abelianize_counterexample():
    ab, proj = abelianize_dgl(counterexample_dgl())
    assert {k: ab.dim(k) for k in ab.degrees()} == {1: 1, 3: 1}
    assert homology_dims(ab) == {1: 1, 3: 1}


def test_abelianize_abelian_identity():
    v = DG({2: ("a", "b")})
    ab, _ = abelianize_dgl(abelian_dgl(v))
    assert {k: ab.dim(k) for k in ab.degrees()} == {2: 2}


# -- homotopy pullback ------------------------------------------------------------------


def test_pullback_of_zeros_is_loops():
    k = counterexample_dgl()
    p, witness = dgl_ho_pullback(zero_dgl_map(ZERO_DGL, k), zero_dgl_map(ZERO_DGL, k))
    assert dgl_validate(p) == []
    dims = {m: p.underlying.dim(m) for m in p.underlying.degrees() if p.underlying.dim(m)}
    assert dims == {0: 1, 1: 1, 2: 1}  # s^-1 of degrees 1,2,3
    assert not any(any(v) for v in p.bracket.values())


def test_pullback_over_zero_is_product():
    l = counterexample_dgl()
    p, witness = dgl_ho_pullback(zero_dgl_map(l, ZERO_DGL), zero_dgl_map(l, ZERO_DGL))
    assert dgl_validate(p) == []
    assert homology_dims(p.underlying) == {
        k: 2 * v for k, v in homology_dims(l.underlying).items()
    }
    assert dgl_validate(witness) == []


def test_pullback_along_identity_half_brackets():
    k = counterexample_dgl()
    i = identity_dgl_map(k)
    p, witness = dgl_ho_pullback(i, i)
    assert dgl_validate(p) == []
    assert dgl_validate(witness) == []
    assert is_quasi_iso_through(witness.dgmap, 10)
    # mixed bracket carries the 1/2 factor: [s^-1 v, v] = 1/2 s^-1 [v, v]
    val = p.bracket.get((0, 0, 1, 0))
    assert val is not None
    nv = k.underlying.dim(1)
    assert val[nv] == Fraction(1, 2)


def test_hofib_matches_two_strand_formula():
    k = counterexample_dgl()
    fib = dgl_hofib(identity_dgl_map(k))
    assert dgl_validate(fib) == []
    assert homology_dims(fib.underlying) == {}


def test_pullback_reduce_to():
    k = counterexample_dgl()
    p, w = dgl_ho_pullback(
        zero_dgl_map(ZERO_DGL, k), zero_dgl_map(ZERO_DGL, k), reduce_to=1
    )
    assert w is None
    assert dgl_validate(p) == []
    assert all(m >= 1 for m in p.underlying.degrees() if p.underlying.dim(m))


# -- cones, suspensions, cylinders ----------------------------------------------------


def truly_free_example(cap=6) -> FreeDGL:
    b = free_lie_basis([("x", 1), ("y", 2)], cap)
    return FreeDGL(b, {1: {(0,): ONE}})  # dy = x


def test_suspension_one_generator():
    l = FreeDGL(free_lie_basis([("x", 3)], 6), {})
    s = free_cone_suspension("suspension", l)
    assert basis_dims(s.basis) == {4: 1}
    assert s.basis.generators[0] == ("s(x)", 4)


def test_cone_contractible():
    l = truly_free_example()
    c = free_cone_suspension("cone", l)
    assert dgl_validate(c) == []
    h = homology_dims(to_dgl(c).underlying)
    assert not {k: v for k, v in h.items() if k < c.cap}


def test_cone_rejects_higher_differential():
    b = free_lie_basis([("x", 1), ("y", 3)], 6)
    l = FreeDGL(b, {1: dict(b.expand((0, 0)))})  # dy = [x,x]
    with pytest.raises(ValueError):
        free_cone_suspension("cone", l)
    s = free_cone_suspension("suspension", l)  # drops the quadratic part
    assert dgl_validate(s) == []


def test_suspension_commutes_with_abelianization():
    l = truly_free_example()
    lhs = abelianize(free_cone_suspension("suspension", l))
    ab = abelianize(l)
    assert {k: lhs.dim(k) for k in lhs.degrees()} == {
        k + 1: ab.dim(k) for k in ab.degrees()
    }
    assert lhs.d(3).get(0, 0) == -ab.d(2).get(0, 0)


def test_bigS_valid_and_projections_exist():
    l = truly_free_example(5)
    big = free_cone_suspension("bigS", l)
    assert dgl_validate(big) == []
    # strand count: 2 suspended copies + original generators
    assert len(big.basis.generators) == 3 * len(l.basis.generators)


def test_cylinder_of_identity_is_cone():
    l = truly_free_example(5)
    zero = FreeDGL(free_lie_basis([], 5), {})
    cyl = free_cylinder(FreeDGLMap(l, zero, {}), free_dgl_identity(l))
    assert dgl_validate(cyl) == []
    h = homology_dims(to_dgl(cyl).underlying)
    assert not {k: v for k, v in h.items() if k < cyl.cap}


def test_cylinder_of_zeros_is_suspension():
    l = truly_free_example(5)
    zero = FreeDGL(free_lie_basis([], 5), {})
    cyl = free_cylinder(FreeDGLMap(l, zero, {}), FreeDGLMap(l, zero, {}))
    s = free_cone_suspension("suspension", l)
    assert basis_dims(cyl.basis) == basis_dims(s.basis)
    assert homology_dims(to_dgl(cyl).underlying) == homology_dims(to_dgl(s).underlying)


def test_cylinder_abelianization_matches_dg_pushout():
    u = FreeDGL(free_lie_basis([("a", 2)], 5), {})
    w = FreeDGL(free_lie_basis([("b", 2)], 5), {})
    v = FreeDGL(free_lie_basis([("x", 2)], 5), {})
    f = FreeDGLMap(v, u, {0: {(0,): ONE}})
    g = FreeDGLMap(v, w, {0: {(0,): rat(2)}})
    cyl = free_cylinder(f, g)
    ab = abelianize(cyl)
    push, _ = ho_square("pushout", f.abelianized(), g.abelianized())
    assert {k: ab.dim(k) for k in ab.degrees()} == {
        k: push.dim(k) for k in push.degrees()
    }
    assert homology_dims(ab) == homology_dims(push)


def test_cylinder_rejects_non_free_map():
    l = FreeDGL(free_lie_basis([("x", 1)], 4), {})
    t = FreeDGL(free_lie_basis([("a", 1)], 4), {})
    bad = FreeDGLMap(l, t, {0: dict(t.basis.expand((0, 0)))})  # x -> [a,a]
    zero = FreeDGL(free_lie_basis([], 4), {})
    with pytest.raises(ValueError):
        free_cylinder(bad, FreeDGLMap(l, zero, {}))


def test_cylinder_rejects_nonlinear_middle():
    b = free_lie_basis([("x", 1), ("y", 3)], 6)
    v = FreeDGL(b, {1: dict(b.expand((0, 0)))})
    tgt = FreeDGL(free_lie_basis([("p", 1), ("q", 3)], 6), {1: dict(
        free_lie_basis([("p", 1), ("q", 3)], 6).expand((0, 0))
    )})
    f = FreeDGLMap(v, tgt, {0: {(0,): ONE}, 1: {(1,): ONE}})
    zero = FreeDGL(free_lie_basis([], 6), {})
    with pytest.raises(ValueError):
        free_cylinder(f, FreeDGLMap(v, zero, {}))


# -- bracket filtration -----------------------------------------------------------------


def test_filtration_bottom_is_abelianization():
    l = truly_free_example()
    towers, layers = bracket_filtration(l, 3)
    b1 = towers[0]
    ab = abelianize(l)
    assert {k: b1.underlying.dim(k) for k in b1.underlying.degrees()} == {
        k: ab.dim(k) for k in ab.degrees()
    }
    assert not any(any(v) for v in b1.bracket.values())
    for b in towers:
        assert dgl_validate(b) == []


def test_filtration_layer_two_even_generators():
    l = FreeDGL(free_lie_basis([("x", 2), ("y", 2)], 6), {})
    towers, layers = bracket_filtration(l, 2)
    assert {k: layers[1].dim(k) for k in layers[1].degrees() if layers[1].dim(k)} == {4: 1}


def test_filtration_layers_partition():
    l = truly_free_example()
    n = 4
    towers, layers = bracket_filtration(l, n)
    total = {}
    for lay in layers:
        for k in lay.degrees():
            total[k] = total.get(k, 0) + lay.dim(k)
    bn = towers[-1]
    assert total == {k: bn.underlying.dim(k) for k in bn.underlying.degrees() if bn.underlying.dim(k)}


# -- Hurewicz ---------------------------------------------------------------------------


def test_hurewicz_identity():
    l = truly_free_example()
    assert hurewicz_check(free_dgl_identity(l)) == (True, True)


def test_hurewicz_free_flags_agree():
    cap = 5
    b1 = free_lie_basis([("x", 1), ("y", 2)], cap)
    b2 = free_lie_basis([("a", 1), ("b", 2)], cap)
    l1 = FreeDGL(b1, {1: {(0,): ONE}})
    l2 = FreeDGL(b2, {1: {(0,): rat(3)}})
    # x -> 3a, y -> b: chain map, abelianization is an iso
    f = FreeDGLMap(l1, l2, {0: {(0,): rat(3)}, 1: {(1,): ONE}})
    assert hurewicz_check(f) == (True, True)
    # everything to zero: a chain map that is not a quasi-iso on either side
    z1 = FreeDGL(free_lie_basis([("x", 1)], cap), {})
    z2 = FreeDGL(free_lie_basis([("a", 1)], cap), {})
    g = FreeDGLMap(z1, z2, {})
    flags = hurewicz_check(g)
    assert flags == (False, False)


def test_hurewicz_counterexample_flags_disagree():
    l = counterexample_dgl()
    ab, proj = abelianize_dgl(l)
    f = DGLMap(l, abelian_dgl(ab), proj)
    assert dgl_validate(f) == []
    q, abq = hurewicz_check(f)
    assert (q, abq) == (False, True)
