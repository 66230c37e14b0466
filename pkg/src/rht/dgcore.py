"""Differential graded vector spaces over Q.

A DG stores an ordered named basis per integer degree and the degree -1
differential as one matrix per degree.  Everything downstream (Lie algebras,
coalgebras, towers) reduces to these objects, so the sign bookkeeping here is
machine-checked by validate_dg rather than trusted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .exactq import (
    ONE,
    ZERO,
    QMatrix,
    Vector,
    extend_to_basis,
    image_pivot_columns,
    kernel_basis,
    rank,
    rat,
    solve_linear,
    zero_vec,
)


def _clean_basis(basis: dict) -> dict[int, tuple[str, ...]]:
    return {k: tuple(v) for k, v in sorted(basis.items()) if len(v) > 0}


@dataclass(frozen=True)
class DG:
    basis: dict[int, tuple[str, ...]]
    diff: dict[int, QMatrix] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "basis", _clean_basis(self.basis))
        clean = {}
        for k, m in self.diff.items():
            if m.rows != self.dim(k - 1) or m.cols != self.dim(k):
                raise ValueError(f"differential shape mismatch at degree {k}")
            if not m.is_zero():
                clean[k] = m
        object.__setattr__(self, "diff", clean)

    def dim(self, k: int) -> int:
        return len(self.basis.get(k, ()))

    def degrees(self) -> list[int]:
        return sorted(self.basis)

    def d(self, k: int) -> QMatrix:
        m = self.diff.get(k)
        if m is None:
            return QMatrix.zero(self.dim(k - 1), self.dim(k))
        return m

    def total_dim(self) -> int:
        return sum(len(v) for v in self.basis.values())

    def is_trivial(self) -> bool:
        return not self.basis

    def index_of(self, k: int, name: str) -> int:
        return self.basis[k].index(name)

    def __eq__(self, other):
        return (
            isinstance(other, DG)
            and self.basis == other.basis
            and all(self.d(k) == other.d(k) for k in set(self.diff) | set(other.diff))
        )


ZERO_DG = DG({})
ONE_DG = DG({0: ("1",)})


def dg_from_dims(dims: dict[int, int], prefix: str = "e") -> DG:
    return DG({k: tuple(f"{prefix}{k}_{i}" for i in range(n)) for k, n in dims.items() if n})


@dataclass(frozen=True)
class DGMap:
    source: DG
    target: DG
    blocks: dict[int, QMatrix] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, m in self.blocks.items():
            if m.rows != self.target.dim(k) or m.cols != self.source.dim(k):
                raise ValueError(f"map block shape mismatch at degree {k}")
            if not m.is_zero():
                clean[k] = m
        object.__setattr__(self, "blocks", clean)

    def block(self, k: int) -> QMatrix:
        m = self.blocks.get(k)
        if m is None:
            return QMatrix.zero(self.target.dim(k), self.source.dim(k))
        return m

    def apply(self, k: int, v: Vector) -> Vector:
        return self.block(k).apply(v)

    def is_zero(self) -> bool:
        return not self.blocks

    def __eq__(self, other):
        return (
            isinstance(other, DGMap)
            and self.source == other.source
            and self.target == other.target
            and all(self.block(k) == other.block(k) for k in set(self.blocks) | set(other.blocks))
        )


def identity_map(v: DG) -> DGMap:
    return DGMap(v, v, {k: QMatrix.identity(v.dim(k)) for k in v.degrees()})


def zero_map(v: DG, w: DG) -> DGMap:
    return DGMap(v, w, {})


def compose(g: DGMap, f: DGMap) -> DGMap:
    """g after f."""
    if f.target != g.source:
        raise ValueError("composition mismatch")
    blocks = {}
    for k in f.blocks:
        blocks[k] = g.block(k) * f.block(k)
    return DGMap(f.source, g.target, blocks)


def map_add(f: DGMap, g: DGMap) -> DGMap:
    if f.source != g.source or f.target != g.target:
        raise ValueError("map sum mismatch")
    ks = set(f.blocks) | set(g.blocks)
    return DGMap(f.source, f.target, {k: f.block(k) + g.block(k) for k in ks})


def map_scale(c, f: DGMap) -> DGMap:
    return DGMap(f.source, f.target, {k: m.scale(c) for k, m in f.blocks.items()})


def map_from_names(source: DG, target: DG, assignment: Callable[[int, str], dict]) -> DGMap:
    """Build a map from a function (degree, basis name) -> {target name: coeff}."""
    blocks = {}
    for k in source.degrees():
        tnames = target.basis.get(k, ())
        idx = {n: i for i, n in enumerate(tnames)}
        ent = {}
        for j, name in enumerate(source.basis[k]):
            for tname, c in assignment(k, name).items():
                ent[(idx[tname], j)] = rat(c)
        blocks[k] = QMatrix(len(tnames), source.dim(k), ent)
    return DGMap(source, target, blocks)


# -- validation ---------------------------------------------------------------


def validate_dg(x) -> list[str]:
    """Report every violated invariant; empty list iff valid."""
    report: list[str] = []
    if isinstance(x, DG):
        for k in sorted(set(x.diff) | {d + 1 for d in x.diff}):
            comp = x.d(k - 1) * x.d(k)
            if not comp.is_zero():
                (r, c), v = sorted(comp.entries.items())[0]
                report.append(f"d^2 != 0 from degree {k}: entry ({r},{c}) = {v}")
        return report
    if isinstance(x, DGMap):
        for k in sorted(set(x.blocks) | set(x.source.diff) | set(x.target.diff)):
            lhs = x.target.d(k) * x.block(k)
            rhs = x.block(k - 1) * x.source.d(k)
            if lhs != rhs:
                diffm = lhs - rhs
                (r, c), v = sorted(diffm.entries.items())[0]
                report.append(f"map does not commute with d at degree {k}: entry ({r},{c}) = {v}")
        return report
    if isinstance(x, BiDG):
        return x.validate()
    if isinstance(x, SymmetricDG):
        return x.validate()
    raise TypeError(f"cannot validate {type(x)!r}")


def assert_valid(x, context: str = ""):
    rep = validate_dg(x)
    if rep:
        raise AssertionError(f"invalid {type(x).__name__} {context}: " + "; ".join(rep[:4]))


# -- homology -----------------------------------------------------------------


def homology(v: DG) -> tuple[dict[int, int], dict[int, list[Vector]]]:
    """Homology dimensions and representative cycles per degree."""
    dims: dict[int, int] = {}
    reps: dict[int, list[Vector]] = {}
    degrees = set(v.basis)
    for k in sorted(degrees):
        n = v.dim(k)
        if n == 0:
            continue
        cycles = kernel_basis(v.d(k))
        dkp1 = v.d(k + 1)
        bpivots = image_pivot_columns(dkp1)
        bmat = QMatrix.from_columns([dkp1.column(j) for j in bpivots], n)
        zmat = QMatrix.from_columns(cycles, n)
        chosen = extend_to_basis(bmat, zmat)
        h = len(chosen)
        if h:
            dims[k] = h
            reps[k] = [cycles[i] for i in chosen]
    return dims, reps


def homology_dims(v: DG) -> dict[int, int]:
    return homology(v)[0]


def is_contractible(v: DG) -> bool:
    return not homology_dims(v)


def is_quasi_iso(f: DGMap) -> bool:
    return _quasi_iso(f, None)


def is_quasi_iso_through(f: DGMap, top: int) -> bool:
    """Quasi-isomorphism test restricted to homology in degrees <= top.

    Degree-truncated objects have unreliable homology at the truncation
    degree (boundaries from above are missing), so comparisons on them
    should stop one degree below the cap.
    """
    return _quasi_iso(f, top)


def _quasi_iso(f: DGMap, top) -> bool:
    hv, rv = homology(f.source)
    hw, _ = homology(f.target)
    if top is not None:
        hv = {k: d for k, d in hv.items() if k <= top}
        hw = {k: d for k, d in hw.items() if k <= top}
        rv = {k: r for k, r in rv.items() if k <= top}
    if hv != hw:
        return False
    for k, reps in rv.items():
        n = f.target.dim(k)
        dkp1 = f.target.d(k + 1)
        bpivots = image_pivot_columns(dkp1)
        bmat = QMatrix.from_columns([dkp1.column(j) for j in bpivots], n)
        images = QMatrix.from_columns([f.apply(k, z) for z in reps], n)
        # induced map injective iff images stay independent modulo boundaries
        if rank(QMatrix.hstack([bmat, images])) != bmat.cols + len(reps):
            return False
    return True


# -- basic constructions --------------------------------------------------------


def sum_dg(a: DG, b: DG, tags=("inl", "inr")) -> tuple[DG, DGMap, DGMap]:
    """Direct sum with the two inclusions."""
    basis = {}
    for k in sorted(set(a.basis) | set(b.basis)):
        basis[k] = tuple(f"{tags[0]}({x})" for x in a.basis.get(k, ())) + tuple(
            f"{tags[1]}({x})" for x in b.basis.get(k, ())
        )
    diff = {}
    for k in set(a.diff) | set(b.diff):
        diff[k] = QMatrix.direct_sum([a.d(k), b.d(k)])
    out = DG(basis, diff)
    inl = DGMap(
        a,
        out,
        {
            k: QMatrix(out.dim(k), a.dim(k), {(i, i): ONE for i in range(a.dim(k))})
            for k in a.degrees()
        },
    )
    inr = DGMap(
        b,
        out,
        {
            k: QMatrix(
                out.dim(k),
                b.dim(k),
                {(a.dim(k) + i, i): ONE for i in range(b.dim(k))},
            )
            for k in b.degrees()
        },
    )
    return out, inl, inr


def sum_many(parts: Sequence[DG], tags: Optional[Sequence[str]] = None) -> tuple[DG, list[DGMap]]:
    if tags is None:
        tags = [f"i{i}" for i in range(len(parts))]
    basis: dict[int, tuple[str, ...]] = {}
    degrees = sorted({k for p in parts for k in p.basis})
    offsets: list[dict[int, int]] = []
    for k in degrees:
        names: list[str] = []
        for p, tag in zip(parts, tags):
            names.extend(f"{tag}({x})" for x in p.basis.get(k, ()))
        basis[k] = tuple(names)
    diff = {}
    for k in {kk for p in parts for kk in p.diff}:
        diff[k] = QMatrix.direct_sum([p.d(k) for p in parts])
    out = DG(basis, diff)
    incls = []
    for i, p in enumerate(parts):
        blocks = {}
        for k in p.degrees():
            off = sum(q.dim(k) for q in parts[:i])
            blocks[k] = QMatrix(
                out.dim(k), p.dim(k), {(off + j, j): ONE for j in range(p.dim(k))}
            )
        incls.append(DGMap(p, out, blocks))
    return out, incls


def tensor_dg(a: DG, b: DG) -> DG:
    """Tensor product with the Koszul-signed differential."""
    pairs: dict[int, list[tuple[int, int, int, int]]] = {}
    for i in a.degrees():
        for j in b.degrees():
            n = i + j
            for p in range(a.dim(i)):
                for q in range(b.dim(j)):
                    pairs.setdefault(n, []).append((i, p, j, q))
    basis = {}
    index: dict[tuple[int, int, int, int], int] = {}
    for n, lst in pairs.items():
        names = []
        for pos, (i, p, j, q) in enumerate(lst):
            index[(i, p, j, q)] = pos
            names.append(f"({a.basis[i][p]}⊗{b.basis[j][q]})")
        basis[n] = tuple(names)
    diff = {}
    for n, lst in pairs.items():
        tgt = pairs.get(n - 1, [])
        ent = {}
        for col, (i, p, j, q) in enumerate(lst):
            da = a.d(i)
            for r in range(a.dim(i - 1)):
                v = da.get(r, p)
                if v != 0:
                    ent[(index[(i - 1, r, j, q)], col)] = ent.get((index[(i - 1, r, j, q)], col), ZERO) + v
            sign = -ONE if i % 2 else ONE
            db = b.d(j)
            for r in range(b.dim(j - 1)):
                v = db.get(r, q)
                if v != 0:
                    key = (index[(i, p, j - 1, r)], col)
                    ent[key] = ent.get(key, ZERO) + sign * v
        if tgt:
            diff[n] = QMatrix(len(tgt), len(lst), ent)
    return DG(basis, diff)


def combine(kind: str, a: DG, b: DG) -> DG:
    if kind == "sum":
        return sum_dg(a, b)[0]
    if kind == "tensor":
        return tensor_dg(a, b)
    raise ValueError(f"unknown combine kind {kind!r}")


def relabel(v: DG, fn: Callable[[int, str], str]) -> DG:
    return DG({k: tuple(fn(k, x) for x in names) for k, names in v.basis.items()}, dict(v.diff))


def shift(v: DG, n: int, tag: Optional[str] = None) -> DG:
    """s^n V: degree shift by n with differential scaled by (-1)^n."""
    if tag is None:
        tag = "s" * n if n >= 0 else "si" * (-n)
    basis = {k + n: tuple(f"{tag}({x})" if tag else x for x in names) for k, names in v.basis.items()}
    sign = -ONE if n % 2 else ONE
    diff = {k + n: m.scale(sign) for k, m in v.diff.items()}
    return DG(basis, diff)


# -- cells ---------------------------------------------------------------------


def cone_dg(v: DG) -> tuple[DG, DGMap]:
    """cV = (V + sV, d(sv) = -s dv + v), with the inclusion V -> cV."""
    basis = {}
    for k in sorted(set(v.basis) | {k + 1 for k in v.basis}):
        basis[k] = tuple(v.basis.get(k, ())) + tuple(f"s({x})" for x in v.basis.get(k - 1, ()))
    diff = {}
    for k in sorted(set(basis)):
        nv, ns = v.dim(k), v.dim(k - 1)
        tv, ts = v.dim(k - 1), v.dim(k - 2)
        ent = {}
        dv = v.d(k)
        for (r, c), x in dv.entries.items():
            ent[(r, c)] = x
        dsv = v.d(k - 1)
        for (r, c), x in dsv.entries.items():
            ent[(tv + r, nv + c)] = -x
        for i in range(ns):
            ent[(i, nv + i)] = ent.get((i, nv + i), ZERO) + ONE
        if tv + ts and nv + ns:
            diff[k] = QMatrix(tv + ts, nv + ns, ent)
    out = DG(basis, diff)
    incl = DGMap(
        v, out, {k: QMatrix(out.dim(k), v.dim(k), {(i, i): ONE for i in range(v.dim(k))}) for k in v.degrees()}
    )
    return out, incl


def paths_dg(v: DG) -> tuple[DG, DGMap]:
    """pV = (V + s^-1 V, d(v) = dv + s^-1 v), with the surjection pV -> V."""
    basis = {}
    for k in sorted(set(v.basis) | {k - 1 for k in v.basis}):
        basis[k] = tuple(v.basis.get(k, ())) + tuple(f"si({x})" for x in v.basis.get(k + 1, ()))
    diff = {}
    for k in sorted(set(basis)):
        nv, ns = v.dim(k), v.dim(k + 1)
        tv, ts = v.dim(k - 1), v.dim(k)
        ent = {}
        for (r, c), x in v.d(k).entries.items():
            ent[(r, c)] = x
        for i in range(nv):
            ent[(tv + i, i)] = ent.get((tv + i, i), ZERO) + ONE
        for (r, c), x in v.d(k + 1).entries.items():
            ent[(tv + r, nv + c)] = ent.get((tv + r, nv + c), ZERO) - x
        if tv + ts and nv + ns:
            diff[k] = QMatrix(tv + ts, nv + ns, ent)
    out = DG(basis, diff)
    proj = DGMap(
        out, v, {k: QMatrix(v.dim(k), out.dim(k), {(i, i): ONE for i in range(v.dim(k))}) for k in v.degrees()}
    )
    return out, proj


def big_suspension(v: DG) -> tuple[DG, DGMap, DGMap]:
    """Larger suspension model sV + V + sV with d(sv1+v2+sv3) adding v1+v3
    into the middle strand; returns the two strand projections to sV."""
    sv = shift(v, 1)
    parts, incls = sum_many([sv, relabel(v, lambda k, x: x), sv], tags=["l", "m", "r"])
    # add the correction differential: middle strand receives v1 + v3
    diff = {k: m for k, m in parts.diff.items()}
    for k in sorted(set(parts.basis)):
        nl = sv.dim(k)
        nm = v.dim(k)
        ent = dict(parts.d(k).entries)
        # target offsets in degree k-1: [sv | v | sv]
        toff = sv.dim(k - 1)
        for i in range(nl):  # l strand s(x) with x in degree k-1 -> x in middle
            ent[(toff + i, i)] = ent.get((toff + i, i), ZERO) + ONE
        for i in range(sv.dim(k)):  # r strand
            ent[(toff + i, nl + nm + i)] = ent.get((toff + i, nl + nm + i), ZERO) + ONE
        if parts.dim(k - 1) and parts.dim(k):
            diff[k] = QMatrix(parts.dim(k - 1), parts.dim(k), ent)
        elif k in diff:
            del diff[k]
    out = DG(parts.basis, diff)
    projs = []
    for which in (0, 2):
        blocks = {}
        for k in sv.degrees():
            off = (sv.dim(k) + v.dim(k)) if which == 2 else 0
            blocks[k] = QMatrix(sv.dim(k), out.dim(k), {(i, off + i): ONE for i in range(sv.dim(k))})
        projs.append(DGMap(out, sv, blocks))
    return out, projs[0], projs[1]


def big_loops(v: DG) -> tuple[DG, DGMap, DGMap]:
    """Larger loops model s^-1 V x V x s^-1 V; returns the two inclusions of s^-1 V."""
    siv = shift(v, -1)
    parts, incls = sum_many([siv, relabel(v, lambda k, x: x), siv], tags=["l", "m", "r"])
    diff = {k: m for k, m in parts.diff.items()}
    for k in sorted(set(parts.basis)):
        nl = siv.dim(k)
        nm = v.dim(k)
        ent = dict(parts.d(k).entries)
        # middle strand v2 (degree k) maps into both s^-1 strands at degree k-1
        for i in range(nm):
            ent[(i, nl + i)] = ent.get((i, nl + i), ZERO) + ONE
            roff = siv.dim(k - 1) + v.dim(k - 1)
            ent[(roff + i, nl + i)] = ent.get((roff + i, nl + i), ZERO) + ONE
        if parts.dim(k - 1) and parts.dim(k):
            diff[k] = QMatrix(parts.dim(k - 1), parts.dim(k), ent)
        elif k in diff:
            del diff[k]
    out = DG(parts.basis, diff)
    injs = []
    for which in (0, 2):
        blocks = {}
        for k in siv.degrees():
            off = (siv.dim(k) + v.dim(k)) if which == 2 else 0
            blocks[k] = QMatrix(out.dim(k), siv.dim(k), {(off + i, i): ONE for i in range(siv.dim(k))})
        injs.append(DGMap(siv, out, blocks))
    return out, injs[0], injs[1]


def standard_tensor(cell: str, v: DG) -> DG:
    if cell == "s":
        return shift(v, 1)
    if cell == "s_inv":
        return shift(v, -1)
    if cell == "cone":
        return cone_dg(v)[0]
    if cell == "paths":
        return paths_dg(v)[0]
    if cell == "bigS":
        return big_suspension(v)[0]
    if cell == "bigP":
        return big_loops(v)[0]
    raise ValueError(f"unknown cell {cell!r}")


# -- reduction and truncation -----------------------------------------------


def truncate(r: int, v: DG) -> DG:
    basis = {k: names for k, names in v.basis.items() if k >= r}
    diff = {k: m for k, m in v.diff.items() if k > r}
    return DG(basis, diff)


def sub_dg(v: DG, vectors: dict[int, list[Vector]], prefix: str = "k") -> tuple[DG, DGMap]:
    """Sub-DG spanned by the given per-degree vectors (must be d-closed)."""
    basis = {}
    cols: dict[int, QMatrix] = {}
    for k, vs in sorted(vectors.items()):
        if not vs:
            continue
        basis[k] = tuple(f"{prefix}{k}_{i}" for i in range(len(vs)))
        cols[k] = QMatrix.from_columns(vs, v.dim(k))
    diff = {}
    for k in sorted(basis):
        if (k - 1) not in basis:
            if not (v.d(k) * cols[k]).is_zero():
                raise ValueError(f"span not closed under d at degree {k}")
            continue
        from .exactq import solve_matrix

        img = v.d(k) * cols[k]
        sol = solve_matrix(cols[k - 1], img)
        if sol is None:
            raise ValueError(f"span not closed under d at degree {k}")
        diff[k] = sol
    out = DG(basis, diff)
    incl = DGMap(out, v, {k: cols[k] for k in basis})
    return out, incl


def reduce_dg(r: int, v: DG) -> DG:
    return reduce_with_inclusion(r, v)[0]


def reduce_with_inclusion(r: int, v: DG) -> tuple[DG, DGMap]:
    """red_r V: degrees > r unchanged, degree r becomes ker(d_r)."""
    if v.d(r).is_zero():
        basis = {k: names for k, names in v.basis.items() if k >= r}
        diff = {k: m for k, m in v.diff.items() if k > r}
        out = DG(basis, diff)
        incl = DGMap(
            out, v, {k: QMatrix.identity(v.dim(k)) for k in out.degrees()}
        )
        return out, incl
    vectors: dict[int, list[Vector]] = {}
    std = QMatrix.identity
    for k in v.degrees():
        if k > r:
            vectors[k] = [std(v.dim(k)).column(j) for j in range(v.dim(k))]
        elif k == r:
            vectors[k] = kernel_basis(v.d(r))
    return sub_dg(v, vectors, prefix=f"r{r}_")


def reduce_truncate(mode: str, r: int, v: DG) -> DG:
    if mode == "truncate":
        return truncate(r, v)
    if mode == "reduce":
        return reduce_dg(r, v)
    raise ValueError(f"unknown mode {mode!r}")


def quotient_dg(v: DG, killed: dict[int, list[Vector]], prefix: str = "q") -> tuple[DG, DGMap]:
    """Quotient of V by the span of the given vectors (must be d-closed);
    returns the quotient and the projection map."""
    # choose representative complement via pivoting
    reps: dict[int, list[int]] = {}
    proj_blocks: dict[int, QMatrix] = {}
    basis = {}
    for k in v.degrees():
        n = v.dim(k)
        kvecs = killed.get(k, [])
        kmat = QMatrix.from_columns(kvecs, n)
        chosen = extend_to_basis(kmat, QMatrix.identity(n))
        reps[k] = chosen
        basis[k] = tuple(f"{prefix}({v.basis[k][j]})" for j in chosen)
        # projection: express each standard basis vector in [killed | reps]
        full = QMatrix.hstack([kmat, QMatrix.from_columns([QMatrix.identity(n).column(j) for j in chosen], n)])
        from .exactq import solve_matrix

        sol = solve_matrix(full, QMatrix.identity(n))
        if sol is None:
            raise ValueError("internal: quotient basis does not span")
        # rows below the killed block give the quotient coordinates
        ent = {}
        for (r0, c0), val in sol.entries.items():
            if r0 >= kmat.cols:
                ent[(r0 - kmat.cols, c0)] = val
        proj_blocks[k] = QMatrix(len(chosen), n, ent)
    diff = {}
    for k in v.degrees():
        if basis.get(k) and basis.get(k - 1) is not None:
            inc = QMatrix.from_columns(
                [QMatrix.identity(v.dim(k)).column(j) for j in reps[k]], v.dim(k)
            )
            m = proj_blocks.get(k - 1, QMatrix.zero(len(basis.get(k - 1, ())), v.dim(k - 1)))
            diff[k] = m * (v.d(k) * inc)
    out = DG(basis, diff)
    proj = DGMap(v, out, proj_blocks)
    # sanity: projection must be a chain map, which certifies d-closedness
    assert_valid(proj, "quotient projection")
    return out, proj


# -- homotopy pushouts and pullbacks ------------------------------------------


def strict_pullback(f: DGMap, g: DGMap) -> tuple[DG, DGMap, DGMap]:
    """{(u,w) : f(u) + g(w) = 0} with the two projections."""
    if f.target != g.target:
        raise ValueError("pullback codomain mismatch")
    u, w, v = f.source, g.source, f.target
    vectors: dict[int, list[Vector]] = {}
    for k in sorted(set(u.basis) | set(w.basis)):
        stacked = QMatrix.hstack([f.block(k), g.block(k)])
        vectors[k] = kernel_basis(stacked)
    prod, _, _ = sum_dg(u, w, tags=("u", "w"))
    sub, incl = sub_dg(prod, vectors, prefix="lim")
    pu = DGMap(
        prod, u, {k: QMatrix(u.dim(k), prod.dim(k), {(i, i): ONE for i in range(u.dim(k))}) for k in u.degrees()}
    )
    pw_blocks = {}
    for k in w.degrees():
        pw_blocks[k] = QMatrix(
            w.dim(k), prod.dim(k), {(i, u.dim(k) + i): ONE for i in range(w.dim(k))}
        )
    pw = DGMap(prod, w, pw_blocks)
    return sub, compose(pu, incl), compose(pw, incl)


def strict_pushout(f: DGMap, g: DGMap) -> tuple[DG, DGMap, DGMap]:
    """(U + W)/<f(v) + g(v)> with the two quotient inclusions."""
    if f.source != g.source:
        raise ValueError("pushout domain mismatch")
    u, w, v = f.target, g.target, f.source
    total, inl, inr = sum_dg(u, w, tags=("u", "w"))
    killed: dict[int, list[Vector]] = {}
    for k in v.degrees():
        vs = []
        for j in range(v.dim(k)):
            e = tuple(ONE if i == j else ZERO for i in range(v.dim(k)))
            vs.append(tuple(f.apply(k, e)) + tuple(g.apply(k, e)))
        killed[k] = vs
    quot, proj = quotient_dg(total, killed, prefix="co")
    return quot, compose(proj, inl), compose(proj, inr)


def ho_pullback(f: DGMap, g: DGMap) -> tuple[DG, DGMap]:
    """Path model (U x s^-1 V x W, d_x + d_fg) for U -f-> V <-g- W, plus the
    natural map from the strict pullback."""
    if f.target != g.target:
        raise ValueError("pullback codomain mismatch")
    u, w, v = f.source, g.source, f.target
    siv = shift(v, -1)
    total, incls = sum_many([u, siv, w], tags=["u", "m", "w"])
    diff = dict(total.diff)
    for k in sorted(set(total.basis) | {kk + 1 for kk in total.basis}):
        if not total.dim(k) or not total.dim(k - 1):
            continue
        ent = dict(total.d(k).entries)
        toff = u.dim(k - 1)
        fb = f.block(k)
        for (r, c), val in fb.entries.items():
            ent[(toff + r, c)] = ent.get((toff + r, c), ZERO) + val
        gb = g.block(k)
        coff = u.dim(k) + siv.dim(k)
        for (r, c), val in gb.entries.items():
            ent[(toff + r, coff + c)] = ent.get((toff + r, coff + c), ZERO) + val
        diff[k] = QMatrix(total.dim(k - 1), total.dim(k), ent)
    out = DG(total.basis, diff)
    lim, pu, pw = strict_pullback(f, g)
    e_blocks = {}
    for k in lim.degrees():
        cols = []
        for j in range(lim.dim(k)):
            ej = tuple(ONE if i == j else ZERO for i in range(lim.dim(k)))
            col = tuple(pu.apply(k, ej)) + zero_vec(siv.dim(k)) + tuple(pw.apply(k, ej))
            cols.append(col)
        e_blocks[k] = QMatrix.from_columns(cols, out.dim(k))
    e = DGMap(lim, out, e_blocks)
    return out, e


def ho_pushout(f: DGMap, g: DGMap) -> tuple[DG, DGMap]:
    """Cylinder model (U + sV + W, d(sv) = -s dv + f(v) + g(v)) for
    U <-f- V -g-> W, plus the natural map to the strict pushout."""
    if f.source != g.source:
        raise ValueError("pushout domain mismatch")
    u, w, v = f.target, g.target, f.source
    sv = shift(v, 1)
    total, incls = sum_many([u, sv, w], tags=["u", "m", "w"])
    diff = dict(total.diff)
    for k in sorted(set(total.basis) | {kk + 1 for kk in total.basis}):
        if not total.dim(k) or not total.dim(k - 1):
            continue
        ent = dict(total.d(k).entries)
        coff = u.dim(k)
        fb = f.block(k - 1)
        for (r, c), val in fb.entries.items():
            ent[(r, coff + c)] = ent.get((r, coff + c), ZERO) + val
        gb = g.block(k - 1)
        roff = u.dim(k - 1) + sv.dim(k - 1)
        for (r, c), val in gb.entries.items():
            ent[(roff + r, coff + c)] = ent.get((roff + r, coff + c), ZERO) + val
        diff[k] = QMatrix(total.dim(k - 1), total.dim(k), ent)
    out = DG(total.basis, diff)
    colim, ju, jw = strict_pushout(f, g)
    e_blocks = {}
    for k in out.degrees():
        cols = []
        for j in range(out.dim(k)):
            if j < u.dim(k):
                ej = tuple(ONE if i == j else ZERO for i in range(u.dim(k)))
                col = ju.apply(k, ej)
            elif j < u.dim(k) + sv.dim(k):
                col = zero_vec(colim.dim(k))
            else:
                jj = j - u.dim(k) - sv.dim(k)
                ej = tuple(ONE if i == jj else ZERO for i in range(w.dim(k)))
                col = jw.apply(k, ej)
            cols.append(col)
        e_blocks[k] = QMatrix.from_columns(cols, colim.dim(k))
    e = DGMap(out, colim, e_blocks)
    return out, e


def ho_square(mode: str, f: DGMap, g: DGMap) -> tuple[DG, DGMap]:
    if mode == "pullback":
        return ho_pullback(f, g)
    if mode == "pushout":
        return ho_pushout(f, g)
    raise ValueError(f"unknown mode {mode!r}")


def ho_fiber(f: DGMap) -> DG:
    """(V + s^-1 W, d(v) = dv - s^-1 f(v), d(s^-1 w) = -s^-1 dw)."""
    v, w = f.source, f.target
    siw = shift(w, -1)
    total, _ = sum_many([v, siw], tags=["v", "f"])
    diff = dict(total.diff)
    for k in sorted(set(total.basis) | {kk + 1 for kk in total.basis}):
        if not total.dim(k) or not total.dim(k - 1):
            continue
        ent = dict(total.d(k).entries)
        toff = v.dim(k - 1)
        for (r, c), val in f.block(k).entries.items():
            ent[(toff + r, c)] = ent.get((toff + r, c), ZERO) - val
        diff[k] = QMatrix(total.dim(k - 1), total.dim(k), ent)
    return DG(total.basis, diff)


def ho_cofiber(f: DGMap) -> DG:
    """(W + sV, d(sv) = f(v) - s dv)."""
    v, w = f.source, f.target
    sv = shift(v, 1)
    total, _ = sum_many([w, sv], tags=["w", "c"])
    diff = dict(total.diff)
    for k in sorted(set(total.basis) | {kk + 1 for kk in total.basis}):
        if not total.dim(k) or not total.dim(k - 1):
            continue
        ent = dict(total.d(k).entries)
        coff = w.dim(k)
        for (r, c), val in f.block(k - 1).entries.items():
            ent[(r, coff + c)] = ent.get((r, coff + c), ZERO) + val
        diff[k] = QMatrix(total.dim(k - 1), total.dim(k), ent)
    return DG(total.basis, diff)


def ho_fiber_cofiber(mode: str, f: DGMap) -> DG:
    if mode == "fiber":
        return ho_fiber(f)
    if mode == "cofiber":
        return ho_cofiber(f)
    raise ValueError(f"unknown mode {mode!r}")


# -- bigraded vector spaces and n-dimensional cubes -----------------------------


@dataclass(frozen=True)
class BiDG:
    basis: dict[tuple[int, int], tuple[str, ...]]
    dh: dict[tuple[int, int], QMatrix] = field(default_factory=dict)
    dv: dict[tuple[int, int], QMatrix] = field(default_factory=dict)

    def dim(self, hv: tuple[int, int]) -> int:
        return len(self.basis.get(hv, ()))

    def get_dh(self, hv: tuple[int, int]) -> QMatrix:
        m = self.dh.get(hv)
        if m is None:
            return QMatrix.zero(self.dim((hv[0] - 1, hv[1])), self.dim(hv))
        return m

    def get_dv(self, hv: tuple[int, int]) -> QMatrix:
        m = self.dv.get(hv)
        if m is None:
            return QMatrix.zero(self.dim((hv[0], hv[1] - 1)), self.dim(hv))
        return m

    def validate(self) -> list[str]:
        report = []
        keys = set(self.basis)
        for (h, v) in sorted(keys):
            if not (self.get_dh((h - 1, v)) * self.get_dh((h, v))).is_zero():
                report.append(f"dh^2 != 0 at ({h},{v})")
            if not (self.get_dv((h, v - 1)) * self.get_dv((h, v))).is_zero():
                report.append(f"dv^2 != 0 at ({h},{v})")
            anti = self.get_dh((h, v - 1)) * self.get_dv((h, v)) + self.get_dv((h - 1, v)) * self.get_dh((h, v))
            if not anti.is_zero():
                report.append(f"dh dv + dv dh != 0 at ({h},{v})")
        return report


def tot(b: BiDG) -> DG:
    """Total DG: degree n collects bidegrees (h, v) with h + v = n."""
    by_deg: dict[int, list[tuple[int, int]]] = {}
    for (h, v) in sorted(b.basis):
        by_deg.setdefault(h + v, []).append((h, v))
    basis = {}
    offsets: dict[tuple[int, int], int] = {}
    for n, keys in by_deg.items():
        names = []
        for hv in keys:
            offsets[hv] = len(names)
            names.extend(f"{x}@v{hv[1]}" for x in b.basis[hv])
        basis[n] = tuple(names)
    diff = {}
    for n, keys in by_deg.items():
        tgt = by_deg.get(n - 1, [])
        if not tgt:
            continue
        tdim = sum(b.dim(hv) for hv in tgt)
        ent = {}
        for hv in keys:
            h, v = hv
            col0 = offsets[hv]
            for mat, thv in ((b.get_dh(hv), (h - 1, v)), (b.get_dv(hv), (h, v - 1))):
                if thv in offsets and h - 1 + v == n - 1:
                    row0 = offsets[thv]
                    for (r, c), val in mat.entries.items():
                        key = (row0 + r, col0 + c)
                        ent[key] = ent.get(key, ZERO) + val
        diff[n] = QMatrix(tdim, sum(b.dim(hv) for hv in keys), ent)
    return DG(basis, diff)


def bi_strand(v: DG, vdeg: int, tag: str) -> tuple[dict, dict]:
    """Place DG v at vertical grading vdeg; internal differential times (-1)^vdeg."""
    basis = {}
    dh = {}
    sign = -ONE if vdeg % 2 else ONE
    for k in v.degrees():
        basis[(k, vdeg)] = tuple(f"{tag}:{x}" for x in v.basis[k])
    for k, m in v.diff.items():
        dh[(k, vdeg)] = m.scale(sign)
    return basis, dh


@dataclass
class Cube:
    """Diagram over subsets of {1..n}: objects per subset, edge maps for
    one-element inclusions.  Subsets are frozensets of 1-based ints."""

    n: int
    objects: dict[frozenset, DG]
    edges: dict[tuple[frozenset, frozenset], DGMap]

    def edge(self, s: frozenset, t: frozenset) -> DGMap:
        return self.edges[(s, t)]

    def map_along(self, s: frozenset, t: frozenset) -> DGMap:
        """Composite map for any inclusion s <= t, through sorted additions."""
        cur = identity_map(self.objects[s])
        here = s
        for el in sorted(t - s):
            nxt = here | {el}
            cur = compose(self.edge(here, nxt), cur)
            here = nxt
        return cur

    def validate_commuting(self) -> list[str]:
        report = []
        for (s, t), m in self.edges.items():
            if m.source != self.objects[s] or m.target != self.objects[t]:
                report.append(f"edge {sorted(s)}->{sorted(t)} endpoints mismatch")
        for s in self.objects:
            outside = [e for e in range(1, self.n + 1) if e not in s]
            for i, a in enumerate(outside):
                for bel in outside[i + 1 :]:
                    sa, sb, sab = s | {a}, s | {bel}, s | {a, bel}
                    if sab not in self.objects or sa not in self.objects or sb not in self.objects:
                        continue
                    one = compose(self.edge(sa, sab), self.edge(s, sa))
                    two = compose(self.edge(sb, sab), self.edge(s, sb))
                    if one != two:
                        report.append(
                            f"face at {sorted(s)} +{a},+{bel} does not commute"
                        )
        return report


def _subset_tag(t: frozenset) -> str:
    return "T" + "".join(str(i) for i in sorted(t)) if t else "T0"


def _incl_sign(s: frozenset, t_added: int) -> Fraction:
    return -ONE if len([x for x in s if x < t_added]) % 2 else ONE


def cube_bidg(cube: Cube, mode: str) -> BiDG:
    """BiDG underlying the n-dimensional path or cylinder object."""
    n = cube.n
    if mode == "limit":
        wanted = [s for s in cube.objects if len(s) >= 1]
        vdeg = lambda t: 1 - len(t)
    elif mode == "colimit":
        wanted = [s for s in cube.objects if len(s) <= n - 1]
        vdeg = lambda t: n - 1 - len(t)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    wanted.sort(key=lambda s: (len(s), sorted(s)))
    basis: dict[tuple[int, int], tuple[str, ...]] = {}
    dh: dict[tuple[int, int], QMatrix] = {}
    offsets: dict[tuple[frozenset, int], int] = {}
    strands_at: dict[tuple[int, int], list[frozenset]] = {}
    for t in wanted:
        v = vdeg(t)
        obj = cube.objects[t]
        b, h = bi_strand(obj, v, _subset_tag(t))
        for (k, vv), names in b.items():
            if (k, vv) in basis:
                offsets[(t, k)] = len(basis[(k, vv)])
                basis[(k, vv)] = basis[(k, vv)] + names
            else:
                offsets[(t, k)] = 0
                basis[(k, vv)] = names
            strands_at.setdefault((k, vv), []).append(t)
    # horizontal differentials assembled per bidegree
    for (k, vv), strands in sorted(strands_at.items()):
        tdim = len(basis.get((k - 1, vv), ()))
        sdim = len(basis[(k, vv)])
        if tdim == 0:
            continue
        ent = {}
        sign = -ONE if vv % 2 else ONE
        for t in strands:
            obj = cube.objects[t]
            m = obj.d(k)
            r0 = offsets.get((t, k - 1))
            c0 = offsets[(t, k)]
            if r0 is None:
                continue
            for (r, c), val in m.entries.items():
                ent[(r0 + r, c0 + c)] = sign * val
        if ent:
            dh[(k, vv)] = QMatrix(tdim, sdim, ent)
    dv: dict[tuple[int, int], QMatrix] = {}
    wanted_set = set(wanted)
    for (k, vv), strands in sorted(strands_at.items()):
        tdim = len(basis.get((k, vv - 1), ()))
        if tdim == 0:
            continue
        ent = {}
        for t in strands:
            for el in range(1, n + 1):
                if el in t:
                    continue
                tt = t | {el}
                if tt not in wanted_set:
                    continue
                m = cube.edge(t, tt).block(k)
                sgn = _incl_sign(t, el)
                r0 = offsets.get((tt, k))
                c0 = offsets[(t, k)]
                if r0 is None:
                    continue
                for (r, c), val in m.entries.items():
                    key = (r0 + r, c0 + c)
                    ent[key] = ent.get(key, ZERO) + sgn * val
        if ent:
            dv[(k, vv)] = QMatrix(tdim, len(basis[(k, vv)]), ent)
    return BiDG(basis, dh, dv)


def ho_cube(mode: str, cube: Cube, cap: int = 6) -> DG:
    """Totalized n-dimensional homotopy limit/colimit of a subset-indexed cube."""
    if cube.n > cap:
        raise ValueError(f"cube dimension {cube.n} exceeds cap {cap}")
    problems = cube.validate_commuting()
    if problems:
        raise ValueError("non-commuting cube: " + problems[0])
    b = cube_bidg(cube, mode)
    return tot(b)


# -- cartesian / cocartesian ----------------------------------------------------


def is_bicartesian(s: DGMap, t: DGMap, f: DGMap, g: DGMap) -> tuple[bool, bool]:
    """Square with top-left U, maps s: U->W, t: U->V, f: W->X, g: V->X.

    cartesian: U -> ho-pullback(W -> X <- V) is a quasi-iso;
    cocartesian: ho-pushout(W <- U -> V) -> X is a quasi-iso.
    """
    if compose(f, s) != compose(g, t):
        raise ValueError("square does not commute")
    u = s.source
    x = f.target
    # cartesian: u -> (W x s^-1 X x V) via (s(u), 0, -t(u))
    pb, _ = ho_pullback(f, map_scale(-1, g))
    w, v = f.source, g.source
    blocks = {}
    for k in u.degrees():
        cols = []
        for j in range(u.dim(k)):
            ej = tuple(ONE if i == j else ZERO for i in range(u.dim(k)))
            col = tuple(s.apply(k, ej)) + zero_vec(x.dim(k + 1)) + tuple(t.apply(k, ej))
            cols.append(col)
        blocks[k] = QMatrix.from_columns(cols, pb.dim(k))
    to_pb = DGMap(u, pb, blocks)
    assert_valid(to_pb, "canonical map into homotopy pullback")
    cartesian = is_quasi_iso(to_pb)
    # cocartesian: (W + sU + V) -> X via (f, 0, -g)... sign fixed by d(su) = s(u)+t(u)
    po, _ = ho_pushout(s, map_scale(-1, t))
    blocks = {}
    for k in po.degrees():
        cols = []
        for j in range(po.dim(k)):
            if j < w.dim(k):
                ej = tuple(ONE if i == j else ZERO for i in range(w.dim(k)))
                col = f.apply(k, ej)
            elif j < w.dim(k) + u.dim(k - 1):
                col = zero_vec(x.dim(k))
            else:
                jj = j - w.dim(k) - u.dim(k - 1)
                ej = tuple(ONE if i == jj else ZERO for i in range(v.dim(k)))
                col = g.apply(k, ej)
            cols.append(col)
        blocks[k] = QMatrix.from_columns(cols, x.dim(k))
    from_po = DGMap(po, x, blocks)
    assert_valid(from_po, "canonical map out of homotopy pushout")
    cocartesian = is_quasi_iso(from_po)
    return cartesian, cocartesian


# -- telescopes -----------------------------------------------------------------


def telescope(maps: Sequence[DGMap]) -> tuple[DG, DGMap]:
    """Mapping telescope of V_1 -> ... -> V_m with d(sv_i) = -s dv_i + v_i + g_i(v_i),
    plus the comparison quasi-isomorphism to the strict colimit V_m."""
    if not maps:
        raise ValueError("telescope needs at least one map")
    for a, b in zip(maps, maps[1:]):
        if a.target != b.source:
            raise ValueError("telescope chain does not compose")
    objs = [maps[0].source] + [m.target for m in maps]
    m = len(objs)
    parts: list[DG] = []
    tags: list[str] = []
    for i, o in enumerate(objs):
        parts.append(o)
        tags.append(f"v{i+1}")
        if i < m - 1:
            parts.append(shift(o, 1))
            tags.append(f"sv{i+1}")
    total, _ = sum_many(parts, tags=tags)
    # offsets per degree for each part
    def offset(k: int, idx: int) -> int:
        return sum(p.dim(k) for p in parts[:idx])

    diff = dict(total.diff)
    for k in sorted(set(total.basis) | {kk + 1 for kk in total.basis}):
        if not total.dim(k) or not total.dim(k - 1):
            continue
        ent = dict(total.d(k).entries)
        for i in range(m - 1):
            sidx = 2 * i + 1  # sV_i strand
            src_dim = objs[i].dim(k - 1)
            c0 = offset(k, sidx)
            r0 = offset(k - 1, 2 * i)  # V_i strand
            for j in range(src_dim):
                ent[(r0 + j, c0 + j)] = ent.get((r0 + j, c0 + j), ZERO) + ONE
            g = maps[i].block(k - 1)
            r1 = offset(k - 1, 2 * i + 2)  # V_{i+1} strand
            for (r, c), val in g.entries.items():
                ent[(r1 + r, c0 + c)] = ent.get((r1 + r, c0 + c), ZERO) + val
        diff[k] = QMatrix(total.dim(k - 1), total.dim(k), ent)
    out = DG(total.basis, diff)
    # comparison map: V_i by (-1)^(m-i) times the composite into V_m, sV_i to 0
    last = objs[-1]
    comps: list[DGMap] = []
    cur = identity_map(last)
    composites = [None] * m
    composites[m - 1] = cur
    for i in range(m - 2, -1, -1):
        cur = compose(cur, maps[i])
        composites[i] = cur
    blocks = {}
    for k in out.degrees():
        cols = []
        for idx, p in enumerate(parts):
            n = p.dim(k)
            if idx % 2 == 1 or n == 0:
                cols.extend([zero_vec(last.dim(k))] * n)
                continue
            i = idx // 2
            sign = -ONE if (m - 1 - i) % 2 else ONE
            blockm = composites[i].block(k).scale(sign)
            cols.extend(blockm.column(j) for j in range(n))
        blocks[k] = QMatrix.from_columns(cols, last.dim(k))
    comparison = DGMap(out, last, blocks)
    assert_valid(comparison, "telescope comparison")
    return out, comparison


# -- chain map spaces -------------------------------------------------------------


def chain_map_space(v: DG, w: DG) -> list[DGMap]:
    """Basis of the space of degree 0 chain maps v -> w."""
    slots: list[tuple[int, int, int]] = []  # (degree, target row, source col)
    pos: dict[tuple[int, int, int], int] = {}
    for k in sorted(set(v.basis) & set(w.basis)):
        for r in range(w.dim(k)):
            for c in range(v.dim(k)):
                pos[(k, r, c)] = len(slots)
                slots.append((k, r, c))
    if not slots:
        return []
    rows: list[tuple[int, int, int]] = []
    rpos: dict[tuple[int, int, int], int] = {}
    ent: dict[tuple[int, int], Fraction] = {}

    def rowid(k, r, c):
        key = (k, r, c)
        if key not in rpos:
            rpos[key] = len(rows)
            rows.append(key)
        return rpos[key]

    degrees = sorted(set(v.basis) | set(w.basis))
    for k in degrees:
        dw = w.d(k)
        dv = v.d(k)
        # equation: (d_w f_k - f_{k-1} d_v)[r, c] = 0 for r in w_{k-1}, c in v_k
        for (r, m), a in dw.entries.items():
            for c in range(v.dim(k)):
                if (k, m, c) in pos:
                    key = (rowid(k, r, c), pos[(k, m, c)])
                    ent[key] = ent.get(key, ZERO) + a
        for (r, c0), a in dv.entries.items():
            for r2 in range(w.dim(k - 1)):
                if (k - 1, r2, r) in pos:
                    key = (rowid(k, r2, c0), pos[(k - 1, r2, r)])
                    ent[key] = ent.get(key, ZERO) - a
    system = QMatrix(len(rows), len(slots), ent)
    basis = []
    for kv in kernel_basis(system):
        blocks: dict[int, dict] = {}
        for idx, val in enumerate(kv):
            if val != 0:
                k, r, c = slots[idx]
                blocks.setdefault(k, {})[(r, c)] = val
        basis.append(
            DGMap(v, w, {k: QMatrix(w.dim(k), v.dim(k), e) for k, e in blocks.items()})
        )
    return basis


# -- symmetric DGs ----------------------------------------------------------------


def permutation_from_transpositions(n: int):
    """Adjacent transpositions (i, i+1) generating Sigma_n, as index pairs."""
    return [(i, i + 1) for i in range(1, n)]


@dataclass
class SymmetricDG:
    underlying: DG
    n: int
    action: list[DGMap]  # one DGMap per adjacent transposition (1 2), ..., (n-1 n)

    def validate(self) -> list[str]:
        report = []
        if len(self.action) != max(self.n - 1, 0):
            report.append("wrong number of generator actions")
            return report
        for i, a in enumerate(self.action):
            if a.source != self.underlying or a.target != self.underlying:
                report.append(f"generator {i} endpoints mismatch")
                continue
            report.extend(f"generator {i}: {msg}" for msg in validate_dg(a))
            if compose(a, a) != identity_map(self.underlying):
                report.append(f"generator {i} is not an involution")
        ident = identity_map(self.underlying)
        for i in range(len(self.action) - 1):
            a, b = self.action[i], self.action[i + 1]
            aba = compose(a, compose(b, a))
            bab = compose(b, compose(a, b))
            if aba != bab:
                report.append(f"braid relation fails at generators {i},{i+1}")
        for i in range(len(self.action)):
            for j in range(i + 2, len(self.action)):
                if compose(self.action[i], self.action[j]) != compose(self.action[j], self.action[i]):
                    report.append(f"distant generators {i},{j} do not commute")
        return report

    def group_elements(self) -> list[DGMap]:
        """All n! action maps, by breadth-first closure over the generators."""
        ident = identity_map(self.underlying)
        seen = {self._key(ident): ident}
        frontier = [ident]
        while frontier:
            nxt = []
            for g in frontier:
                for a in self.action:
                    h = compose(a, g)
                    k = self._key(h)
                    if k not in seen:
                        seen[k] = h
                        nxt.append(h)
            frontier = nxt
        return list(seen.values())

    def _key(self, m: DGMap):
        return tuple(sorted((k, frozenset(q.entries.items())) for k, q in m.blocks.items()))

    def average(self) -> DGMap:
        elems = self.group_elements()
        total = zero_map(self.underlying, self.underlying)
        for g in elems:
            total = map_add(total, g)
        return map_scale(Fraction(1, len(elems)), total)


def sym_invariants(v: SymmetricDG):
    """Fixed points, orbits, trace, norm, and the averaging idempotent."""
    u = v.underlying
    vectors: dict[int, list[Vector]] = {}
    for k in u.degrees():
        stacked = QMatrix.vstack([a.block(k) - QMatrix.identity(u.dim(k)) for a in v.action]) if v.action else QMatrix.zero(0, u.dim(k))
        vectors[k] = kernel_basis(stacked) if v.action else [QMatrix.identity(u.dim(k)).column(j) for j in range(u.dim(k))]
    fixed, incl = sub_dg(u, vectors, prefix="fix")
    killed: dict[int, list[Vector]] = {}
    for k in u.degrees():
        vs = []
        for a in v.action:
            m = a.block(k) - QMatrix.identity(u.dim(k))
            vs.extend(m.column(j) for j in range(u.dim(k)))
        killed[k] = vs
    orbits, proj = quotient_dg(u, killed, prefix="orb")
    trace = compose(proj, incl)
    avg = v.average()
    # norm: orbit class [x] -> Avg(x), expressed in the fixed-point basis
    from .exactq import solve_matrix

    norm_blocks = {}
    for k in orbits.degrees():
        # representative columns: solve proj * X = id via the chosen section
        sec = solve_matrix(proj.block(k), QMatrix.identity(orbits.dim(k)))
        if sec is None:
            raise AssertionError("internal: quotient projection not surjective")
        avg_rep = avg.block(k) * sec
        coords = solve_matrix(incl.block(k), avg_rep)
        if coords is None:
            raise AssertionError("internal: average does not land in fixed points")
        norm_blocks[k] = coords
    norm = DGMap(orbits, fixed, norm_blocks)
    return fixed, orbits, trace, norm, avg
