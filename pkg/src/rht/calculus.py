"""Taylor tower machinery for DG-valued functors.

The geometric input is the fiberwise join: crossing an object with a finite
set T is tensoring with the T-cell complex [T] (one vertex, |T| edges all
killing it), which is the cone for |T| = 1 and a suspension model for
|T| = 2.  Cubes of iterated joins are strongly cocartesian, and the n-th
Taylor approximation T_nF is the homotopy limit of F over the punctured
(n+1)-cube.  Iterating and telescoping gives P_nF; total homotopy fibers of
coproduct cubes give cross effects; the n-th derivative of the identity is
the Lie representation Lie(n), and layer data of towers is extracted into
jets (layers plus the triangular differential blocks).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

from .dgc import DGC, _as_dgc, _tensor_with_index, cofree_lambda, to_dgc
from .dgcore import (
    DG,
    DGMap,
    Cube,
    SymmetricDG,
    _subset_tag,
    assert_valid,
    compose,
    ho_cofiber,
    ho_cube,
    ho_fiber,
    homology_dims,
    identity_map,
    map_add,
    map_scale,
    reduce_dg,
    shift,
    sub_dg,
    sum_many,
    telescope,
    tensor_dg,
    zero_map,
)
from .dgl import FreeDGL, TensorPoly, bracket_filtration, free_lie_basis, to_dgl
from .exactq import ONE, QMatrix, ZERO, kernel_basis, rat, solve_matrix
from .quillen import cobar_L

HALF = Fraction(1, 2)


# -- joins and test cubes ---------------------------------------------------------


def tset_dg(size: int) -> DG:
    """[T]: one vertex v0 in degree 0 and an edge t_i killing it per element."""
    if size == 0:
        return DG({0: ("v0",)})
    return DG(
        {0: ("v0",), 1: tuple(f"t{i}" for i in range(1, size + 1))},
        {1: QMatrix(1, size, {(0, j): ONE for j in range(size)})},
    )


def join(x, t: int):
    """x * T for a finite set of size t; the empty join is x itself."""
    if t < 0:
        raise ValueError("join size must be >= 0")
    if isinstance(x, DG):
        if t == 0:
            return x
        return tensor_dg(tset_dg(t), x)
    if isinstance(x, DGC) or hasattr(x, "corestriction"):
        return _join_dgc(_as_dgc(x), t)
    raise TypeError(f"join is defined on DG and DGC values, got {type(x)!r}")


def _join_dgc(c: DGC, t: int) -> DGC:
    if t == 0:
        return c
    und, idx = _tensor_with_index(tset_dg(t), c.underlying)
    coproduct: dict = {}
    for kc in c.underlying.degrees():
        for ic in range(c.underlying.dim(kc)):
            delta = c.delta_basis(kc, ic)
            if not delta:
                continue
            # vertex slot: Delta(v0 (x) c) keeps the vertex on both sides
            table = {}
            for ((k1, i1), (k2, i2)), val in delta.items():
                left = idx[(0, 0, k1, i1)]
                right = idx[(0, 0, k2, i2)]
                table[(left, right)] = table.get((left, right), ZERO) + val
            coproduct[idx[(0, 0, kc, ic)]] = table
            # edge slots: the halved vertex/edge split of the suspension model
            for j in range(t):
                table = {}
                for ((k1, i1), (k2, i2)), val in delta.items():
                    sgn = -ONE if k1 % 2 else ONE
                    p1 = (idx[(0, 0, k1, i1)], idx[(1, j, k2, i2)])
                    p2 = (idx[(1, j, k1, i1)], idx[(0, 0, k2, i2)])
                    table[p1] = table.get(p1, ZERO) + HALF * sgn * val
                    table[p2] = table.get(p2, ZERO) + HALF * val
                coproduct[idx[(1, j, kc, ic)]] = table
    return DGC(und, coproduct)


def _tensor_index(a: DG, b: DG) -> dict:
    """(deg_a, i_a, deg_b, i_b) -> (total degree, position), matching tensor_dg."""
    pairs: dict[int, int] = {}
    index = {}
    for i in a.degrees():
        for j in b.degrees():
            n = i + j
            for p in range(a.dim(i)):
                for q in range(b.dim(j)):
                    index[(i, p, j, q)] = (n, pairs.get(n, 0))
                    pairs[n] = pairs.get(n, 0) + 1
    return index


def tensor_map(f: DGMap, g: DGMap) -> DGMap:
    """f (x) g for degree-zero chain maps (no Koszul signs arise)."""
    src = tensor_dg(f.source, g.source)
    tgt = tensor_dg(f.target, g.target)
    si = _tensor_index(f.source, g.source)
    ti = _tensor_index(f.target, g.target)
    ent: dict[int, dict] = {}
    for (i, p, j, q), (n, col) in si.items():
        fb = f.block(i)
        gb = g.block(j)
        for r in range(f.target.dim(i)):
            v1 = fb.get(r, p)
            if not v1:
                continue
            for s in range(g.target.dim(j)):
                v2 = gb.get(s, q)
                if not v2:
                    continue
                row = ti[(i, r, j, s)][1]
                d = ent.setdefault(n, {})
                d[(row, col)] = d.get((row, col), ZERO) + v1 * v2
    blocks = {n: QMatrix(tgt.dim(n), src.dim(n), e) for n, e in ent.items()}
    return DGMap(src, tgt, blocks)


def _join_map(g: DGMap, size: int) -> DGMap:
    if size == 0:
        return g
    return tensor_map(identity_map(tset_dg(size)), g)


def test_cube(n: int, x: DG) -> Cube:
    """The strongly cocartesian n-cube S |-> x * S.

    Objects depend only on |S| and are shared, as are the edge maps (an
    inclusion is determined by the slot the new element occupies).
    """
    if not isinstance(x, DG):
        raise TypeError("test cubes are built over DG values")
    objs_by_size = {k: join(x, k) for k in range(n + 1)}
    idx_by_size = {
        k: _tensor_index(tset_dg(k), x) for k in range(1, n + 1)
    }
    edge_by_shape: dict[tuple[int, int], DGMap] = {}

    def edge_map(k: int, pos: int) -> DGMap:
        # source join of size k, new element inserted at 1-based position pos
        key = (k, pos)
        if key in edge_by_shape:
            return edge_by_shape[key]
        if k == 0:
            tgt = objs_by_size[1]
            ti = idx_by_size[1]
            blocks = {}
            for deg in x.degrees():
                ent = {(ti[(0, 0, deg, q)][1], q): ONE for q in range(x.dim(deg))}
                blocks[deg] = QMatrix(tgt.dim(deg), x.dim(deg), ent)
            m = DGMap(x, tgt, blocks)
        else:
            tm_blocks = {(0, 0): (0, 0)}
            for r in range(1, k + 1):
                tm_blocks[(1, r - 1)] = (1, r - 1 if r < pos else r)
            a, b = tset_dg(k), tset_dg(k + 1)
            tm = DGMap(
                a,
                b,
                {
                    d: QMatrix(
                        b.dim(d),
                        a.dim(d),
                        {(tm_blocks[(d, c)][1], c): ONE for c in range(a.dim(d))},
                    )
                    for d in a.degrees()
                },
            )
            m = tensor_map(tm, identity_map(x))
        edge_by_shape[key] = m
        return m

    objects = {}
    edges = {}
    elements = list(range(1, n + 1))
    for r in range(n + 1):
        for s in itertools.combinations(elements, r):
            fs = frozenset(s)
            objects[fs] = objs_by_size[r]
            for t in elements:
                if t in fs:
                    continue
                pos = sorted(fs | {t}).index(t) + 1
                edges[(fs, fs | {t})] = edge_map(r, pos)
    return Cube(n, objects, edges)


# -- total homotopy fibers and cofibers --------------------------------------------


def _into_holim(cube: Cube) -> tuple[DG, DGMap]:
    """The canonical chain map cube(empty) -> holim over nonempty subsets."""
    hol = ho_cube("limit", cube, cap=max(6, cube.n))
    src = cube.objects[frozenset()]
    blocks = {}
    for k in src.degrees():
        ent: dict = {}
        for t in range(1, cube.n + 1):
            e = cube.edge(frozenset(), frozenset({t}))
            tag = _subset_tag(frozenset({t}))
            names = e.target.basis.get(k, ())
            for (r, c), val in e.block(k).entries.items():
                row = hol.index_of(k, f"{tag}:{names[r]}@v0")
                ent[(row, c)] = ent.get((row, c), ZERO) + val
        blocks[k] = QMatrix(hol.dim(k), src.dim(k), ent)
    m = DGMap(src, hol, blocks)
    assert_valid(m, "comparison into the homotopy limit")
    return hol, m


def _outof_hocolim(cube: Cube) -> tuple[DG, DGMap]:
    """The canonical chain map hocolim over proper subsets -> cube(full)."""
    hoc = ho_cube("colimit", cube, cap=max(6, cube.n))
    full = frozenset(range(1, cube.n + 1))
    tgt = cube.objects[full]
    blocks = {}
    for k in hoc.degrees():
        ent: dict = {}
        for j in range(1, cube.n + 1):
            t = full - {j}
            e = cube.edge(t, full)
            tag = _subset_tag(t)
            sign = -ONE if j % 2 else ONE
            names = e.source.basis.get(k, ())
            for (r, c), val in e.block(k).entries.items():
                col = hoc.index_of(k, f"{tag}:{names[c]}@v0")
                ent[(r, col)] = ent.get((r, col), ZERO) + sign * val
        blocks[k] = QMatrix(tgt.dim(k), hoc.dim(k), ent)
    m = DGMap(hoc, tgt, blocks)
    assert_valid(m, "comparison out of the homotopy colimit")
    return hoc, m


def _fiber_square_map(a: DGMap, b: DGMap, src: DG, tgt: DG) -> DGMap:
    # induced map ho_fiber(f) -> ho_fiber(f') for a square (a, b) over f, f'
    blocks = {}
    for k in src.degrees():
        ent = dict(a.block(k).entries)
        roff, coff = a.target.dim(k), a.source.dim(k)
        for (r, c), val in b.block(k + 1).entries.items():
            ent[(roff + r, coff + c)] = val
        blocks[k] = QMatrix(tgt.dim(k), src.dim(k), ent)
    return DGMap(src, tgt, blocks)


def _cofiber_square_map(a: DGMap, b: DGMap, src: DG, tgt: DG) -> DGMap:
    blocks = {}
    for k in src.degrees():
        ent = dict(b.block(k).entries)
        roff, coff = b.target.dim(k), b.source.dim(k)
        for (r, c), val in a.block(k - 1).entries.items():
            ent[(roff + r, coff + c)] = val
        blocks[k] = QMatrix(tgt.dim(k), src.dim(k), ent)
    return DGMap(src, tgt, blocks)


def thfib_thcof(mode: str, cube: Cube) -> DG:
    """Total homotopy fiber or cofiber, by iterating along the last coordinate."""
    if mode not in ("fiber", "cofiber"):
        raise ValueError(f"unknown mode {mode!r}")
    problems = cube.validate_commuting()
    if problems:
        raise ValueError("non-commuting cube: " + problems[0])
    while cube.n > 0:
        cube = _collapse_last(cube, mode)
    return cube.objects[frozenset()]


def _collapse_last(cube: Cube, mode: str) -> Cube:
    n = cube.n
    objects = {}
    for s in cube.objects:
        if n in s:
            continue
        f = cube.edge(s, s | {n})
        objects[s] = ho_fiber(f) if mode == "fiber" else ho_cofiber(f)
    edges = {}
    for (s, t), a in cube.edges.items():
        if n in s or n in t:
            continue
        b = cube.edge(s | {n}, t | {n})
        if mode == "fiber":
            edges[(s, t)] = _fiber_square_map(a, b, objects[s], objects[t])
        else:
            edges[(s, t)] = _cofiber_square_map(a, b, objects[s], objects[t])
    return Cube(n - 1, objects, edges)


def thfib_total(cube: Cube) -> DG:
    """One-step model: the homotopy fiber of the map into the punctured holim."""
    if cube.n == 0:
        return cube.objects[frozenset()]
    problems = cube.validate_commuting()
    if problems:
        raise ValueError("non-commuting cube: " + problems[0])
    _, m = _into_holim(cube)
    return ho_fiber(m)


def thcof_total(cube: Cube) -> DG:
    if cube.n == 0:
        return cube.objects[frozenset()]
    problems = cube.validate_commuting()
    if problems:
        raise ValueError("non-commuting cube: " + problems[0])
    _, m = _outof_hocolim(cube)
    return ho_cofiber(m)


# -- symbolic functors --------------------------------------------------------------


class FunctorSpec:
    """A functor on DG given by apply (objects) and apply_map (chain maps)."""

    def apply(self, v: DG) -> DG:
        raise NotImplementedError

    def apply_map(self, f: DGMap) -> DGMap:
        raise NotImplementedError


@dataclass(frozen=True)
class IdentityFunctor(FunctorSpec):
    def apply(self, v: DG) -> DG:
        return v

    def apply_map(self, f: DGMap) -> DGMap:
        return f


@dataclass(frozen=True)
class ConstantFunctor(FunctorSpec):
    value: DG

    def apply(self, v: DG) -> DG:
        return self.value

    def apply_map(self, f: DGMap) -> DGMap:
        return identity_map(self.value)


@dataclass(frozen=True)
class TensorPowerFunctor(FunctorSpec):
    power: int

    def __post_init__(self):
        if self.power < 1:
            raise ValueError("tensor power must be >= 1")

    def apply(self, v: DG) -> DG:
        out = v
        for _ in range(self.power - 1):
            out = tensor_dg(out, v)
        return out

    def apply_map(self, f: DGMap) -> DGMap:
        out = f
        for _ in range(self.power - 1):
            out = tensor_map(out, f)
        return out


@dataclass(frozen=True)
class CoefficientFunctor(FunctorSpec):
    """A (x) - for a fixed coefficient DG."""

    coefficient: DG

    def apply(self, v: DG) -> DG:
        return tensor_dg(self.coefficient, v)

    def apply_map(self, f: DGMap) -> DGMap:
        return tensor_map(identity_map(self.coefficient), f)


@dataclass(frozen=True)
class SumFunctor(FunctorSpec):
    parts: tuple

    def apply(self, v: DG) -> DG:
        return sum_many([p.apply(v) for p in self.parts])[0]

    def apply_map(self, f: DGMap) -> DGMap:
        maps = [p.apply_map(f) for p in self.parts]
        src = sum_many([m.source for m in maps])[0]
        tgt = sum_many([m.target for m in maps])[0]
        blocks = {
            k: QMatrix.direct_sum([m.block(k) for m in maps]) for k in src.degrees()
        }
        return DGMap(src, tgt, blocks)


@dataclass(frozen=True)
class SuspensionFunctor(FunctorSpec):
    shift_by: int
    inner: FunctorSpec

    def apply(self, v: DG) -> DG:
        return shift(self.inner.apply(v), self.shift_by)

    def apply_map(self, f: DGMap) -> DGMap:
        g = self.inner.apply_map(f)
        return DGMap(
            shift(g.source, self.shift_by),
            shift(g.target, self.shift_by),
            {k + self.shift_by: m for k, m in g.blocks.items()},
        )


@dataclass(frozen=True)
class CompositeFunctor(FunctorSpec):
    outer: FunctorSpec
    inner: FunctorSpec

    def apply(self, v: DG) -> DG:
        return self.outer.apply(self.inner.apply(v))

    def apply_map(self, f: DGMap) -> DGMap:
        return self.outer.apply_map(self.inner.apply_map(f))


@dataclass(frozen=True)
class LambdaFunctor(FunctorSpec):
    """V |-> the DG of the cofree coalgebra on red_2 V, up to the cap."""

    cap: int

    def _cofree(self, v: DG):
        return cofree_lambda(reduce_dg(2, v), self.cap)

    def apply(self, v: DG) -> DG:
        return to_dgc(self._cofree(v)).underlying

    def apply_map(self, f: DGMap) -> DGMap:
        from .dgc import CofreeDGCMap
        from .dgcore import reduce_with_inclusion

        rv, iv = reduce_with_inclusion(2, f.source)
        rw, iw = reduce_with_inclusion(2, f.target)
        src_c, tgt_c = cofree_lambda(rv, self.cap), cofree_lambda(rw, self.cap)
        gen_images: dict[int, dict[int, Fraction]] = {}
        for k in rv.degrees():
            sol = solve_matrix(iw.block(k), f.block(k) * iv.block(k))
            if sol is None:
                raise ValueError("map does not restrict to the reduction")
            for c in range(rv.dim(k)):
                src_gen = src_c.gen_index[rv.basis[k][c]]
                img = {}
                for r in range(rw.dim(k)):
                    if sol.get(r, c):
                        img[tgt_c.gen_index[rw.basis[k][r]]] = sol.get(r, c)
                if img:
                    gen_images[src_gen] = img
        return CofreeDGCMap(src_c, tgt_c, gen_images).to_dgc_map().dgmap


@dataclass(frozen=True)
class FreeLieFunctor(FunctorSpec):
    """V |-> the DG of the free Lie algebra on V (degrees >= 1), up to the cap."""

    cap: int

    def _free(self, v: DG) -> FreeDGL:
        if v.basis and min(v.basis) < 1:
            raise ValueError("free Lie input must live in positive degrees")
        gens = [(name, k) for k in v.degrees() for name in v.basis[k]]
        locate = {}
        pos = 0
        for k in v.degrees():
            for i in range(v.dim(k)):
                locate[(k, i)] = pos
                pos += 1
        gen_diff: dict[int, TensorPoly] = {}
        for k in v.degrees():
            dk = v.d(k)
            for i in range(v.dim(k)):
                poly = {
                    (locate[(k - 1, r)],): dk.get(r, i)
                    for r in range(v.dim(k - 1))
                    if dk.get(r, i)
                }
                if poly:
                    gen_diff[locate[(k, i)]] = poly
        return FreeDGL(free_lie_basis(gens, self.cap), gen_diff)

    def apply(self, v: DG) -> DG:
        return to_dgl(self._free(v)).underlying

    def apply_map(self, f: DGMap) -> DGMap:
        from .dgl import FreeDGLMap

        src, tgt = self._free(f.source), self._free(f.target)
        locate_src, locate_tgt = {}, {}
        for loc, v in ((locate_src, f.source), (locate_tgt, f.target)):
            pos = 0
            for k in v.degrees():
                for i in range(v.dim(k)):
                    loc[(k, i)] = pos
                    pos += 1
        images: dict[int, TensorPoly] = {}
        for k in f.source.degrees():
            fb = f.block(k)
            for c in range(f.source.dim(k)):
                poly = {
                    (locate_tgt[(k, r)],): fb.get(r, c)
                    for r in range(f.target.dim(k))
                    if fb.get(r, c)
                }
                if poly:
                    images[locate_src[(k, c)]] = poly
        return FreeDGLMap(src, tgt, images).to_dgmap()


def _apply_functor_cube(f: FunctorSpec, cube: Cube) -> Cube:
    objs: dict = {}
    by_id: dict[int, DG] = {}
    for s, obj in cube.objects.items():
        if id(obj) not in by_id:
            by_id[id(obj)] = f.apply(obj)
        objs[s] = by_id[id(obj)]
    edges: dict = {}
    edge_by_id: dict[int, DGMap] = {}
    for key, e in cube.edges.items():
        if id(e) not in edge_by_id:
            edge_by_id[id(e)] = f.apply_map(e)
        edges[key] = edge_by_id[id(e)]
    return Cube(cube.n, objs, edges)


# -- Taylor approximations ----------------------------------------------------------


def t_n(f: FunctorSpec, n: int, x: DG) -> tuple[DG, DGMap]:
    """T_nF(x) and the natural map F(x) -> T_nF(x)."""
    cube = test_cube(n + 1, x)
    fc = _apply_functor_cube(f, cube)
    return _into_holim(fc)


class TnFunctor(FunctorSpec):
    """T_n of another functor, usable as a functor itself (for iteration)."""

    def __init__(self, inner: FunctorSpec, n: int):
        self.inner = inner
        self.n = n

    def apply(self, v: DG) -> DG:
        fc = _apply_functor_cube(self.inner, test_cube(self.n + 1, v))
        return ho_cube("limit", fc, cap=self.n + 2)

    def apply_map(self, g: DGMap) -> DGMap:
        src_cube = _apply_functor_cube(self.inner, test_cube(self.n + 1, g.source))
        tgt_cube = _apply_functor_cube(self.inner, test_cube(self.n + 1, g.target))
        src = ho_cube("limit", src_cube, cap=self.n + 2)
        tgt = ho_cube("limit", tgt_cube, cap=self.n + 2)
        comps = {
            size: self.inner.apply_map(_join_map(g, size))
            for size in range(1, self.n + 2)
        }
        ent: dict[int, dict] = {}
        elements = list(range(1, self.n + 2))
        for r in range(1, self.n + 2):
            for s in itertools.combinations(elements, r):
                fs = frozenset(s)
                tag = _subset_tag(fs)
                vdeg = 1 - r
                comp = comps[r]
                for k in comp.source.degrees():
                    snames = comp.source.basis[k]
                    tnames = comp.target.basis.get(k, ())
                    for (rr, cc), val in comp.block(k).entries.items():
                        row = tgt.index_of(k + vdeg, f"{tag}:{tnames[rr]}@v{vdeg}")
                        col = src.index_of(k + vdeg, f"{tag}:{snames[cc]}@v{vdeg}")
                        d = ent.setdefault(k + vdeg, {})
                        d[(row, col)] = d.get((row, col), ZERO) + val
        blocks = {
            k: QMatrix(tgt.dim(k), src.dim(k), e) for k, e in ent.items() if src.dim(k)
        }
        return DGMap(src, tgt, blocks)


class PnResult(NamedTuple):
    value: DG
    iterations: int
    converged: bool


def _window_quasi_iso(m: DGMap, lo: int, hi: int) -> bool:
    h = homology_dims(ho_cofiber(m))
    return not any(lo <= k <= hi + 1 and v for k, v in h.items())


def p_n_stabilize(
    f: FunctorSpec,
    n: int,
    x: DG,
    window: tuple[int, int] = (0, 10),
    max_iter: int = 6,
) -> PnResult:
    """Iterate T_n and telescope; stop at a windowed quasi-iso or at max_iter.

    iterations reports how many connecting maps preceded the stabilizing one
    (0 means the very first map F(x) -> T_nF(x) already stabilized).
    """
    lo, hi = window
    cur: FunctorSpec = f
    maps: list[DGMap] = []
    converged = False
    iterations = 0
    for i in range(max_iter):
        _, m = t_n(cur, n, x)
        maps.append(m)
        cur = TnFunctor(cur, n)
        if _window_quasi_iso(m, lo, hi):
            converged = True
            iterations = i
            break
        iterations = i + 1
    if not maps:
        return PnResult(f.apply(x), 0, False)
    value = telescope(maps)[0] if len(maps) > 1 else maps[0].target
    return PnResult(value, iterations, converged)


# -- cross effects ------------------------------------------------------------------


def _perm_sort_sign(seq: Sequence[int]) -> Fraction:
    inv = sum(
        1
        for a in range(len(seq))
        for b in range(a + 1, len(seq))
        if seq[a] > seq[b]
    )
    return -ONE if inv % 2 else ONE


def _coproduct_cube(inputs: Sequence[DG]) -> Cube:
    n = len(inputs)
    elements = list(range(1, n + 1))
    objects = {}
    for r in range(n + 1):
        for s in itertools.combinations(elements, r):
            fs = frozenset(s)
            comp = [i for i in elements if i not in fs]
            objects[fs] = sum_many(
                [inputs[i - 1] for i in comp], tags=[f"x{i}" for i in comp]
            )[0]
    edges = {}
    for fs, obj in objects.items():
        for t in elements:
            if t in fs:
                continue
            tgt = objects[fs | {t}]
            blocks = {}
            for k in obj.degrees():
                ent = {}
                for c, name in enumerate(obj.basis[k]):
                    if name.startswith(f"x{t}("):
                        continue
                    ent[(tgt.index_of(k, name), c)] = ONE
                blocks[k] = QMatrix(tgt.dim(k), obj.dim(k), ent)
            edges[(fs, fs | {t})] = DGMap(obj, tgt, blocks)
    return Cube(n, objects, edges)


def cross_effect(f: FunctorSpec, n: int, inputs: Sequence[DG]) -> SymmetricDG:
    """cr_nF as the total homotopy fiber of F of the coproduct cube.

    When all inputs coincide the symmetric-group action is recorded: an
    adjacent transposition rotates the cube, acting on each holim strand by
    the orientation sign of the permuted subset.
    """
    if len(inputs) != n:
        raise ValueError("cross effect of order n takes n inputs")
    cube = _coproduct_cube(inputs)
    fc = _apply_functor_cube(f, cube)
    if n == 0:
        return SymmetricDG(fc.objects[frozenset()], 0, [])
    hol, m = _into_holim(fc)
    value = ho_fiber(m)
    if n < 2 or any(v != inputs[0] for v in inputs[1:]):
        return SymmetricDG(value, n, [])
    actions = []
    for a in range(1, n):
        perm = {i: i for i in range(1, n + 1)}
        perm[a], perm[a + 1] = a + 1, a
        # F of the summand-permuting maps, per subset
        strand_maps: dict[frozenset, DGMap] = {}
        for fs, obj in cube.objects.items():
            pfs = frozenset(perm[i] for i in fs)
            tgt = cube.objects[pfs]
            blocks = {}
            for k in obj.degrees():
                ent = {}
                for c, name in enumerate(obj.basis[k]):
                    i = int(name[1 : name.index("(")])
                    new = f"x{perm[i]}" + name[name.index("(") :]
                    ent[(tgt.index_of(k, new), c)] = ONE
                blocks[k] = QMatrix(tgt.dim(k), obj.dim(k), ent)
            strand_maps[fs] = f.apply_map(DGMap(obj, tgt, blocks))
        base = strand_maps[frozenset()]
        ent_by_deg: dict[int, dict] = {}
        for k in value.degrees():
            ent_by_deg[k] = {}
        # F(X(empty)) part of the fiber
        for k in base.source.degrees():
            snames = fc.objects[frozenset()].basis[k]
            tnames = base.target.basis.get(k, ())
            for (r, c), val in base.block(k).entries.items():
                row = value.index_of(k, f"v({tnames[r]})")
                col = value.index_of(k, f"v({snames[c]})")
                ent_by_deg.setdefault(k, {})[(row, col)] = val
        # desuspended holim part, strand by strand with orientation signs
        for fs in cube.objects:
            if not fs:
                continue
            pfs = frozenset(perm[i] for i in fs)
            sign = _perm_sort_sign([perm[i] for i in sorted(fs)])
            tag_s, tag_t = _subset_tag(fs), _subset_tag(pfs)
            vdeg = 1 - len(fs)
            comp = strand_maps[fs]
            for k in comp.source.degrees():
                snames = comp.source.basis[k]
                tnames = comp.target.basis.get(k, ())
                for (r, c), val in comp.block(k).entries.items():
                    tot_deg = k + vdeg - 1
                    row = value.index_of(
                        tot_deg, f"f(si({tag_t}:{tnames[r]}@v{vdeg}))"
                    )
                    col = value.index_of(
                        tot_deg, f"f(si({tag_s}:{snames[c]}@v{vdeg}))"
                    )
                    d = ent_by_deg.setdefault(tot_deg, {})
                    d[(row, col)] = d.get((row, col), ZERO) + sign * val
        blocks = {
            k: QMatrix(value.dim(k), value.dim(k), e)
            for k, e in ent_by_deg.items()
            if value.dim(k)
        }
        act = DGMap(value, value, blocks)
        assert_valid(act, "cross-effect symmetry generator")
        actions.append(act)
    return SymmetricDG(value, n, actions)


# -- Lie(n) and derivatives of the identity ------------------------------------------


def _left_normed_expand(seq: Sequence[int]) -> dict[tuple[int, ...], Fraction]:
    """[s1,[s2,...,[s_{k-1},s_k]...]] expanded in the free associative algebra."""
    if len(seq) == 1:
        return {(seq[0],): ONE}
    rest = _left_normed_expand(seq[1:])
    out: dict[tuple[int, ...], Fraction] = {}
    for w, c in rest.items():
        for word, coeff in (((seq[0],) + w, c), (w + (seq[0],), -c)):
            s = out.get(word, ZERO) + coeff
            if s:
                out[word] = s
            else:
                out.pop(word, None)
    return out


@dataclass
class LieRep:
    """Lie(n) with its plain permutation action in degree zero."""

    n: int
    rep: SymmetricDG

    def placed(self, degree: int, sign_twist: bool) -> SymmetricDG:
        """The same representation moved to one degree, optionally twisted
        by the sign character (every transposition picks up a -1)."""
        und = shift(self.rep.underlying, degree, tag="")
        actions = []
        for a in self.rep.action:
            m = DGMap(und, und, {degree: a.block(0)})
            actions.append(map_scale(-ONE, m) if sign_twist else m)
        return SymmetricDG(und, self.n, actions)

    def derivative(self) -> SymmetricDG:
        """The n-th derivative of the identity: degree 1 - n, sign-twisted."""
        return self.placed(1 - self.n, True)


def lie_n(n: int) -> LieRep:
    """Left-normed bracket basis of Lie(n) with the letter-permutation action."""
    if n < 1 or n > 8:
        raise ValueError("Lie(n) is computed for 1 <= n <= 8")
    perms = [tuple(p) + (n,) for p in itertools.permutations(range(1, n))]
    words = list(itertools.permutations(range(1, n + 1)))
    windex = {w: i for i, w in enumerate(words)}

    def column(seq):
        vec = [ZERO] * len(words)
        for w, c in _left_normed_expand(seq).items():
            vec[windex[w]] = c
        return tuple(vec)

    cols = [column(p) for p in perms]
    basis_matrix = QMatrix.from_columns(cols, len(words))
    names = tuple(
        "[" + ",".join(f"x{i}" for i in p[:-1]) + f",x{p[-1]}" + "]" * (n - 1)
        if n > 1
        else "x1"
        for p in perms
    )
    und = DG({0: names})
    actions = []
    for a in range(1, n):
        swapped = []
        for p in perms:
            relabeled = tuple(a + 1 if i == a else (a if i == a + 1 else i) for i in p)
            swapped.append(column(relabeled))
        sol = solve_matrix(basis_matrix, QMatrix.from_columns(swapped, len(words)))
        if sol is None:
            raise AssertionError("internal: permuted bracket left the basis span")
        actions.append(DGMap(und, und, {0: sol}))
    return LieRep(n, SymmetricDG(und, n, actions))


def lie_dim_oracle(n: int) -> int:
    """Rank of ALL length-n multilinear bracket monomials in the free
    associative algebra; independent check of the (n-1)! basis size."""
    words = list(itertools.permutations(range(1, n + 1)))
    windex = {w: i for i, w in enumerate(words)}

    def expand(tree):
        if isinstance(tree, int):
            return {(tree,): ONE}
        l, r = expand(tree[0]), expand(tree[1])
        out: dict[tuple[int, ...], Fraction] = {}
        for wl, cl in l.items():
            for wr, cr in r.items():
                for word, coeff in ((wl + wr, cl * cr), ((wr + wl), -cl * cr)):
                    s = out.get(word, ZERO) + coeff
                    if s:
                        out[word] = s
                    else:
                        out.pop(word, None)
        return out

    def trees(letters):
        if len(letters) == 1:
            yield letters[0]
            return
        for cut in range(1, len(letters)):
            for l in trees(letters[:cut]):
                for r in trees(letters[cut:]):
                    yield (l, r)

    cols = []
    for p in words:
        for t in trees(list(p)):
            vec = [ZERO] * len(words)
            for w, c in expand(t).items():
                vec[windex[w]] = c
            if any(vec):
                cols.append(tuple(vec))
    from .exactq import rank

    return rank(QMatrix.from_columns(cols, len(words))) if cols else 0


# -- homogeneous functors ------------------------------------------------------------


def _power_with_swaps(x: DG, n: int) -> tuple[DG, list[DGMap]]:
    """x^{(x) n} with the n-1 adjacent Koszul-signed factor swaps."""
    factors = [(k, i) for k in x.degrees() for i in range(x.dim(k))]
    by_deg: dict[int, list[tuple]] = {}
    index: dict[tuple, tuple[int, int]] = {}
    for combo in itertools.product(factors, repeat=n):
        total = sum(k for k, _ in combo)
        lst = by_deg.setdefault(total, [])
        index[combo] = (total, len(lst))
        lst.append(combo)
    basis = {
        deg: tuple(
            "(" + "⊗".join(x.basis[k][i] for k, i in combo) + ")" for combo in lst
        )
        for deg, lst in by_deg.items()
    }
    diff = {}
    for deg, lst in by_deg.items():
        tgt = by_deg.get(deg - 1, [])
        if not tgt:
            continue
        ent: dict = {}
        for col, combo in enumerate(lst):
            sign = ONE
            for m, (k, i) in enumerate(combo):
                dk = x.d(k)
                for r in range(x.dim(k - 1)):
                    val = dk.get(r, i)
                    if val:
                        new = combo[:m] + ((k - 1, r),) + combo[m + 1 :]
                        row = index[new][1]
                        ent[(row, col)] = ent.get((row, col), ZERO) + sign * val
                sign = -sign if k % 2 else sign
        diff[deg] = QMatrix(len(tgt), len(lst), ent)
    pw = DG(basis, diff)
    swaps = []
    for m in range(n - 1):
        blocks: dict[int, dict] = {}
        for combo, (deg, col) in index.items():
            new = combo[:m] + (combo[m + 1], combo[m]) + combo[m + 2 :]
            sgn = -ONE if (combo[m][0] * combo[m + 1][0]) % 2 else ONE
            blocks.setdefault(deg, {})[(index[new][1], col)] = sgn
        swaps.append(
            DGMap(pw, pw, {k: QMatrix(pw.dim(k), pw.dim(k), e) for k, e in blocks.items()})
        )
    return pw, swaps


def homogeneous_eval(
    coefficient: SymmetricDG, x: DG, n: int, target: str = "dg", r: int = 2
):
    """(A (x) x^{(x) n})_{Sigma_n} by the averaging projector, then delooped
    into the target category (dg: as is; dgl: one desuspension; dgc: reduced)."""
    if coefficient.n != n:
        raise ValueError("coefficient arity does not match n")
    pw, swaps = _power_with_swaps(x, n)
    und = tensor_dg(coefficient.underlying, pw)
    actions = [
        tensor_map(a, s) for a, s in zip(coefficient.action, swaps)
    ]
    sym = SymmetricDG(und, n, actions)
    from .dgcore import sym_invariants

    orbits = sym_invariants(sym)[1]
    if target == "dg":
        return orbits
    if target == "dgl":
        return shift(orbits, -1)
    if target == "dgc":
        return reduce_dg(r, orbits)
    raise ValueError(f"unknown target {target!r}")


# -- Taylor layers of the cobar tower ------------------------------------------------


@dataclass
class Tower:
    """Finite tower of DGs with degreewise-surjective (above r) maps,
    maps[i]: objects[i+1] -> objects[i]."""

    objects: list[DG]
    maps: list[DGMap]
    r: int = 0

    def validate(self) -> list[str]:
        from .exactq import rank

        report = []
        if len(self.maps) != max(len(self.objects) - 1, 0):
            report.append("wrong number of tower maps")
            return report
        for i, m in enumerate(self.maps):
            if m.source != self.objects[i + 1] or m.target != self.objects[i]:
                report.append(f"tower map {i} endpoints mismatch")
                continue
            for k in m.target.degrees():
                if k >= self.r and rank(m.block(k)) < m.target.dim(k):
                    report.append(f"tower map {i} is not surjective in degree {k}")
        return report


def taylor_layers_cobar(c, n: int, cap: int):
    """Bracket-length tower of the cobar Lie algebra with its layers, and a
    layer-vs-derivative-formula dimension comparison below the cap."""
    cd = _as_dgc(c)
    lc = cobar_L(cd, cap)
    dgls, layers = bracket_filtration(lc, n)
    objects = [b.underlying for b in dgls]
    maps = []
    for i in range(len(objects) - 1):
        big, small = objects[i + 1], objects[i]
        blocks = {}
        for k in big.degrees():
            ent = {}
            small_names = set(small.basis.get(k, ()))
            for col, name in enumerate(big.basis[k]):
                if name in small_names:
                    ent[(small.index_of(k, name), col)] = ONE
            blocks[k] = QMatrix(small.dim(k), big.dim(k), ent)
        maps.append(DGMap(big, small, blocks))
    tower = Tower(objects[:], maps, r=0)
    report = {}
    x = cd.underlying
    for k in range(1, n + 1):
        formula = homogeneous_eval(lie_n(k).derivative(), x, k, target="dgl")
        fd = {d: formula.dim(d) for d in formula.degrees() if d <= cap and formula.dim(d)}
        layer = layers[k - 1]
        ld = {d: layer.dim(d) for d in layer.degrees() if d <= cap and layer.dim(d)}
        report[k] = {"layer": ld, "formula": fd, "match": ld == fd}
    return tower, layers, report


# -- jets -----------------------------------------------------------------------------


@dataclass
class Jet:
    """Layers D_1..D_m plus the triangular blocks of the total differential:
    blocks[(i, j)][k] maps (D_j)_k -> (D_i)_{k-1}, nonzero only for i >= j,
    with blocks[(i, i)] the layer differentials.  Optional surjection-indexed
    structure maps f_sigma: D_k -> s D_{k+1} (keys are value tuples) with
    layer symmetric-group actions for the equivariance checks."""

    layers: list[DG]
    blocks: dict[tuple[int, int], dict[int, QMatrix]]
    f_sigma: dict[tuple[int, ...], DGMap] = field(default_factory=dict)
    actions: Optional[list[SymmetricDG]] = None

    def block(self, i: int, j: int, k: int) -> QMatrix:
        m = self.blocks.get((i, j), {}).get(k)
        if m is None:
            return QMatrix.zero(self.layers[i - 1].dim(k - 1), self.layers[j - 1].dim(k))
        return m


def jet_extract(tower: Tower) -> Jet:
    """Split the tower degreewise and read off the triangular differential.

    Sections are chosen deterministically by pivoting; the extraction
    verifies that the diagonal blocks are the layer differentials and that
    nothing lands above the diagonal.
    """
    problems = tower.validate()
    if problems:
        raise ValueError(problems[0])
    objs = tower.objects
    m = len(objs)
    layers: list[DG] = [objs[0]]
    incls: list[DGMap] = [identity_map(objs[0])]
    for j in range(1, m):
        q = tower.maps[j - 1]
        vectors = {
            k: kernel_basis(q.block(k)) if q.source.dim(k) else []
            for k in q.source.degrees()
        }
        layer, incl = sub_dg(q.source, vectors, prefix=f"D{j + 1}")
        layers.append(layer)
        incls.append(incl)
    # sections s_j: objs[j-1] -> objs[j], solved degreewise
    sections: list[DGMap] = []
    for j in range(1, m):
        q = tower.maps[j - 1]
        blocks = {}
        for k in q.target.degrees():
            sol = solve_matrix(q.block(k), QMatrix.identity(q.target.dim(k)))
            if sol is None:
                raise ValueError(f"tower map {j - 1} has no section in degree {k}")
            blocks[k] = sol
        sections.append(DGMap(q.target, q.source, blocks))
    # embeddings of each layer into the top object
    embeds: list[DGMap] = []
    for j in range(m):
        e = incls[j]
        for s in sections[j:]:
            e = compose(s, e)
        embeds.append(e)
    top = objs[-1]
    degrees = sorted(set(top.basis) | {k + 1 for k in top.basis})
    phi = {
        k: QMatrix.hstack([e.block(k) for e in embeds]) for k in degrees
    }
    offsets = {
        k: [sum(l.dim(k) for l in layers[:j]) for j in range(m + 1)] for k in degrees
    }
    blocks: dict[tuple[int, int], dict[int, QMatrix]] = {}
    for k in degrees:
        if top.dim(k) == 0 or top.dim(k - 1) == 0:
            continue
        coords = solve_matrix(phi[k - 1], top.d(k) * phi[k])
        if coords is None:
            raise AssertionError("internal: splitting is not a graded isomorphism")
        for i in range(1, m + 1):
            r0, r1 = offsets[k - 1][i - 1], offsets[k - 1][i]
            for j in range(1, m + 1):
                c0, c1 = offsets[k][j - 1], offsets[k][j]
                ent = {
                    (r - r0, c - c0): v
                    for (r, c), v in coords.entries.items()
                    if r0 <= r < r1 and c0 <= c < c1
                }
                if not ent:
                    continue
                if j > i:
                    raise AssertionError(
                        "internal: differential escaped above the diagonal"
                    )
                blocks.setdefault((i, j), {})[k] = QMatrix(r1 - r0, c1 - c0, ent)
    for i in range(1, m + 1):
        layer = layers[i - 1]
        for k in layer.degrees():
            got = blocks.get((i, i), {}).get(k, QMatrix.zero(layer.dim(k - 1), layer.dim(k)))
            if got != layer.d(k):
                raise AssertionError("internal: diagonal block is not the layer differential")
    return Jet(layers, blocks)


def jet_validate(jet: Jet) -> list[str]:
    """Check the square-zero identities of the triangular blocks and, when
    structure maps are present, their equivariance on group generators."""
    report = []
    m = len(jet.layers)
    degrees = sorted({k for l in jet.layers for k in l.basis})
    degrees = sorted(set(degrees) | {k + 1 for k in degrees})
    # reassembled differential squares to zero
    for k in degrees:
        for i in range(1, m + 1):
            for j in range(1, m + 1):
                total = QMatrix.zero(jet.layers[i - 1].dim(k - 2), jet.layers[j - 1].dim(k))
                for mid in range(1, m + 1):
                    total = total + jet.block(i, mid, k - 1) * jet.block(mid, j, k)
                if total.entries:
                    report.append(
                        f"d^2 block ({i},{j}) is nonzero at degree {k}"
                    )
    # chain-map identity for the first off-diagonal
    for i in range(1, m):
        for k in degrees:
            lhs = jet.block(i + 1, i + 1, k - 1) * jet.block(i + 1, i, k)
            rhs = jet.block(i + 1, i, k - 1) * jet.block(i, i, k)
            if (lhs + rhs).entries:
                report.append(f"suspended d_{i + 1}{i} is not a chain map at degree {k}")
    # null-homotopy identity for the second off-diagonal
    for i in range(1, m - 1):
        for k in degrees:
            total = (
                jet.block(i + 2, i + 2, k - 1) * jet.block(i + 2, i, k)
                + jet.block(i + 2, i + 1, k - 1) * jet.block(i + 1, i, k)
                + jet.block(i + 2, i, k - 1) * jet.block(i, i, k)
            )
            if total.entries:
                report.append(f"d_{i + 2}{i} is not a null homotopy at degree {k}")
    if jet.f_sigma:
        report.extend(_validate_f_sigma(jet))
    return report


def _shifted_action(a: DGMap) -> DGMap:
    s = shift(a.source, 1)
    return DGMap(s, s, {k + 1: mm for k, mm in a.blocks.items()})


def _validate_f_sigma(jet: Jet) -> list[str]:
    report = []
    if jet.actions is None:
        return ["structure maps present but layer actions are missing"]
    for sigma, f in jet.f_sigma.items():
        k = len(sigma) - 1
        if sorted(set(sigma)) != list(range(1, k + 1)):
            report.append(f"key {sigma} is not a surjection onto 1..{k}")
            continue
        # position relabeling by Sigma_{k+1} generators
        if k + 1 <= len(jet.actions) and jet.actions[k].n == k + 1:
            for a in range(k):
                tau = list(sigma)
                tau[a], tau[a + 1] = tau[a + 1], tau[a]
                other = jet.f_sigma.get(tuple(tau))
                if other is None:
                    report.append(f"missing structure map for {tuple(tau)}")
                    continue
                act = _shifted_action(jet.actions[k].action[a])
                if compose(act, f) != other:
                    report.append(f"position equivariance fails for {sigma} at slot {a + 1}")
        # value relabeling by Sigma_k generators
        if k >= 2 and jet.actions[k - 1].n == k:
            for a in range(k - 1):
                swap = {a + 1: a + 2, a + 2: a + 1}
                tau = tuple(swap.get(v, v) for v in sigma)
                other = jet.f_sigma.get(tau)
                if other is None:
                    report.append(f"missing structure map for {tau}")
                    continue
                if compose(f, jet.actions[k - 1].action[a]) != other:
                    report.append(f"value equivariance fails for {sigma} at slot {a + 1}")
    return report
