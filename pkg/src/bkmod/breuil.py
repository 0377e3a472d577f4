"""Breuil modules over truncated S and the comparison functor from Kisin modules.

Vectors of M = S^d are arrays of shape (d, M) in the basis 1 (x) e_j; they
are flattened to length d*M (index j*M + n) for linear algebra over Z/p^N.
Matrices act in the column convention, like Kisin Frobenius matrices.

Besides Fil^r M and phi_r, a module records the matrix Psi of the full
Frobenius on the basis.  It ties phi_r on Fil^r S * M to the rest:
phi_r(s m) = phi_r(s) Psi phi(m) for s in Fil^r S.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .chainring import (
    FPModule,
    HowellForm,
    contains,
    full_span,
    howell_array,
    intersect,
    kernel_array,
    members,
    preimage_array,
    project_span,
    scale_span,
    solver,
    span_sum,
    zero_span,
)
from .errors import (
    ContextMismatch,
    DimensionMismatch,
    FilMembershipError,
    HeightError,
    MissingMonodromy,
    MissingProvenance,
    NotAResolution,
    NotComposable,
)
from .kisin import KisinModule, KisinMorphism, Margins, height_result, tensor, tensor_morphism, unit_module
from .report import CheckReport, Verdict, combine
from .series import (
    S_RING,
    SIGMA,
    RingContext,
    derivation_array,
    divide_exact,
    embed_array,
    fil_module_span,
    fil_s,
    flatten_map,
    frobenius_array,
    identity_matrix,
    mat_product,
    mat_vec,
    mult_matrix,
    vectors_span,
)


def _s_embed(ctx: RingContext, A: np.ndarray) -> np.ndarray:
    return embed_array(ctx, A)


def _phi_r_raw(ctx: RingContext, y: np.ndarray, r: int) -> np.ndarray:
    """phi(y) / p^r for y with entries in Fil^r S; exact on the truncated ring."""
    return divide_exact(ctx, frobenius_array(ctx, S_RING, y, guard=False), r, ctx.N)


@dataclass(frozen=True, eq=False)
class BreuilModule:
    ctx: RingContext
    r: int
    rank: int
    fil_span: HowellForm
    fil_generators: np.ndarray
    phi_r_values: np.ndarray
    frobenius: np.ndarray
    monodromy: np.ndarray | None = None
    provenance: KisinModule | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def prec(self) -> int:
        """p-adic precision of phi_r values."""
        return self.ctx.N - self.r

    @property
    def width(self) -> int:
        return self.rank * self.ctx.M

    def with_monodromy(self, matrix) -> "BreuilModule":
        N = self.ctx.ring.array(np.asarray(matrix))
        if N.shape != (self.rank, self.rank, self.ctx.M):
            raise DimensionMismatch("monodromy matrix has the wrong shape")
        return BreuilModule(self.ctx, self.r, self.rank, self.fil_span, self.fil_generators, self.phi_r_values,
                            self.frobenius, N, self.provenance)

    def __repr__(self):
        src = "kisin" if self.provenance is not None else "explicit"
        return f"BreuilModule(r={self.r}, rank={self.rank}, fil_log_size={self.fil_span.log_size}, {src})"

    # phi_r ---------------------------------------------------------------

    def phi_r(self, x: np.ndarray) -> np.ndarray:
        """phi_r on a batch of Fil vectors (shape (..., d, M)); values mod p^(N-r)."""
        x = np.asarray(x)
        single = x.ndim == 2
        batch = x.reshape(-1, self.rank, self.ctx.M)
        flat = self.ctx.ring.array(batch.reshape(batch.shape[0], -1))
        if not np.all(members(flat, self.fil_span)):
            raise FilMembershipError("vector is not in Fil^r M")
        if self.provenance is not None:
            out = self._phi_r_kisin(batch)
        else:
            out = self._phi_r_generic(flat)
        return out[0] if single else out.reshape(x.shape)

    def _phi_r_kisin(self, batch: np.ndarray) -> np.ndarray:
        ctx = self.ctx
        phi_s = self._cached("phi_s", lambda: _s_embed(ctx, self.provenance.frobenius))
        ys = np.stack([mat_vec(ctx, S_RING, phi_s, v) for v in batch])
        return _phi_r_raw(ctx, ys, self.r)

    def _phi_r_generic(self, flat: np.ndarray) -> np.ndarray:
        ctx, d, M = self.ctx, self.rank, self.ctx.M

        def build():
            rows, images = _decomposition_rows(self)
            return solver(ctx.ring, rows), images

        run, images = self._cached("solver", build)
        coeffs, ok = run(flat)
        if not np.all(ok):
            raise FilMembershipError("vector is not in the span of the distinguished Fil generators")
        ring = ctx.chain(self.prec)
        return ring.matmul(ring.array(coeffs), images).reshape(-1, d, M)

    def _cached(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]


def _decomposition_rows(b: BreuilModule):
    """Z/p^N-generators of Fil^r M with their phi_r images."""
    ctx, d, M = b.ctx, b.rank, b.ctx.M
    lo = ctx.chain(b.prec)
    rows, images = [], []
    weights = ctx.phi_weights
    for g, v in zip(b.fil_generators, b.phi_r_values):
        for n in range(M):
            bn = np.zeros(M, dtype=object)
            bn[n] = 1
            rows.append(np.concatenate([_mul_s(ctx, bn, g[j]) for j in range(d)]))
            img = np.zeros(M, dtype=object)
            if n < len(weights) and ctx.p * n < M:
                img[ctx.p * n] = weights[n]
            images.append(np.concatenate([_mul_s(ctx, img, v[j], b.prec) for j in range(d)]))
    fil = fil_s_rows(ctx, b.r)
    phis = _phi_r_raw(ctx, fil, b.r) if len(fil) else fil
    for j in range(d):
        for h, ph in zip(fil, phis):
            row = np.zeros(d * M, dtype=object)
            row[j * M:(j + 1) * M] = h
            rows.append(row)
            images.append(np.concatenate([_mul_s(ctx, ph, b.frobenius[i, j], b.prec) for i in range(d)]))
    return ctx.ring.array(np.stack(rows)), lo.array(np.stack(images))


def _mul_s(ctx: RingContext, a: np.ndarray, b: np.ndarray, N: int | None = None) -> np.ndarray:
    ring = ctx.chain(N)
    return ring.matmul(ring.array(a).reshape(1, -1), mult_matrix(ctx, S_RING, b, N))[0]


def fil_s_rows(ctx: RingContext, r: int) -> np.ndarray:
    """Z/p^N-basis rows (Howell form) of Fil^r S."""
    from .series import fil_span

    h = fil_span(ctx, r)
    return h.matrix if h.rank else ctx.ring.zeros((0, ctx.M))


# ---------------------------------------------------------------------------
# constructors


def from_kisin(m: KisinModule, r: int) -> BreuilModule:
    """The comparison functor: S (x)_phi M_frak with Fil^r the preimage of
    Fil^r S (x) M_frak under 1 (x) phi_lin, and phi_r = (phi_r (x) 1) o (1 (x) phi_lin)."""
    ctx = m.ctx
    if not 0 <= r <= ctx.p - 2:
        raise ValueError(f"weight r = {r} must satisfy 0 <= r <= p - 2")
    hr = height_result(m, r)
    if hr.verdict is not Verdict.PASS:
        raise HeightError(f"Kisin module is not of height <= {r}")
    d, M = m.rank, ctx.M
    phi_s = _s_embed(ctx, m.frobenius)
    flat = flatten_map(ctx, S_RING, phi_s)
    fil = preimage_array(ctx.ring, flat, fil_module_span(ctx, r, d))
    X = np.stack([_s_embed(ctx, hr.witness[:, k, :]) for k in range(d)])
    base = span_sum(vectors_span(ctx, S_RING, X), fil_module_span(ctx, r, d))
    extra = [row for row in fil.matrix if not members(row.reshape(1, -1), base)[0]] if fil.rank else []
    gens = X if not extra else np.concatenate([X, np.stack(extra).reshape(-1, d, M)])
    ys = np.stack([mat_vec(ctx, S_RING, phi_s, g) for g in gens])
    values = _phi_r_raw(ctx, ys, r)
    psi = frobenius_array(ctx, S_RING, phi_s, guard=False)
    return BreuilModule(ctx, r, d, fil, ctx.ring.array(gens), values, psi, None, m)


def unit_r(ctx: RingContext, r: int) -> BreuilModule:
    """The object 1(r) = (S, Fil^r S, phi_r)."""
    return from_kisin(unit_module(ctx), r)


def unit_object(ctx: RingContext, r: int) -> BreuilModule:
    """The object 1 = (S, S, phi) viewed in weight r: Fil^r M = M and phi_r = phi."""
    ring = ctx.ring
    one = ring.zeros((1, 1, ctx.M))
    one[0, 0, 0] = 1
    psi = ring.zeros((1, 1, ctx.M))
    psi[0, 0, 0] = ctx.p ** r % ctx.q
    values = ctx.chain(ctx.N - r).zeros((1, 1, ctx.M))
    values[0, 0, 0] = 1
    return BreuilModule(ctx, r, 1, full_span(ring, ctx.M), one[0][None], values, psi)


def mutate_fil(b: BreuilModule, c: int) -> BreuilModule:
    """Negative control: replace Fil by c * Fil (and rescale phi_r accordingly)."""
    ring = b.ctx.ring
    lo = b.ctx.chain(b.prec)
    return BreuilModule(b.ctx, b.r, b.rank, scale_span(b.fil_span, c), ring.array(b.fil_generators * c),
                        lo.array(b.phi_r_values * c), b.frobenius, b.monodromy, None)


def zero_monodromy(b: BreuilModule) -> BreuilModule:
    return b.with_monodromy(b.ctx.ring.zeros((b.rank, b.rank, b.ctx.M)))


# ---------------------------------------------------------------------------
# axioms


def _full_vectors(b: BreuilModule) -> np.ndarray:
    return np.eye(b.rank, dtype=np.int64)[:, :, None] * np.eye(1, b.ctx.M, dtype=np.int64)[0]


def _fil_s_generators(ctx: RingContext, r: int, limit: int | None = None) -> list[np.ndarray]:
    gens = [g.coeffs for g in fil_s(ctx, r).generators]
    return gens if limit is None else gens[:limit]


def check_sdm_axioms(b: BreuilModule, samples: int = 3) -> CheckReport:
    ctx, d, M, r = b.ctx, b.rank, b.ctx.M, b.r
    rep = CheckReport("strongly divisible axioms", notes={"precision": [ctx.N, ctx.M], "phi_r_precision": b.prec})
    rep.add("free of finite rank", True, {"rank": d})
    fsm = fil_module_span(ctx, r, d)
    rep.add("Fil^r S * M in Fil^r M", contains(b.fil_span, fsm))
    rep.add("0 <= r <= p - 2", 0 <= r <= ctx.p - 2)
    # phi_r(s m) c1^r = phi_r(s) phi_r(E^r m), for s in Fil^r S and sample m
    lo = ctx.chain(b.prec)
    c1r = np.zeros(M, dtype=object)
    c1r[0] = 1
    for _ in range(r):
        c1r = _mul_s(ctx, c1r, ctx.c1.coeffs)
    Er = np.zeros(M, dtype=object)
    Er[0] = 1
    for _ in range(r):
        Er = _mul_s(ctx, Er, ctx.E_s.coeffs)
    ms = list(_full_vectors(b)) + list(b.fil_generators[:samples])
    ss = _fil_s_generators(ctx, r, samples)
    bad = None
    try:
        for si, s in enumerate(ss):
            ps = _phi_r_raw(ctx, s, r)
            for mi, m in enumerate(ms):
                sm = np.stack([_mul_s(ctx, s, m[j]) for j in range(d)])
                erm = np.stack([_mul_s(ctx, Er, m[j]) for j in range(d)])
                lhs = np.stack([_mul_s(ctx, c1r, v, b.prec) for v in b.phi_r(sm)])
                rhs = np.stack([_mul_s(ctx, ps, v, b.prec) for v in b.phi_r(erm)])
                if not np.array_equal(lo.array(lhs), lo.array(rhs)):
                    bad = {"s": si, "m": mi}
                    break
            if bad:
                break
        rep.add("phi_r semilinearity", bad is None, bad)
    except FilMembershipError as exc:
        rep.add("phi_r semilinearity", False, {"error": str(exc)})
    rep.add("phi_r(Fil^r M) generates M", *_generation(b))
    sat = intersect(b.fil_span, scale_span(full_span(ctx.ring, d * M), ctx.p))
    pfil = scale_span(b.fil_span, ctx.p)
    ok = sat == pfil
    rep.add("Fil^r M cap pM = p Fil^r M", ok, None if ok else {"log_excess": sat.log_size - pfil.log_size})
    return rep


def _generation(b: BreuilModule):
    """S-span of phi_r(Fil^r M), modulo p^(N-r), must be all of M."""
    ctx, d, M = b.ctx, b.rank, b.ctx.M
    prec = b.prec
    if prec <= 0:
        return Verdict.INDETERMINATE, {"reason": "no p-adic precision left after phi_r"}
    vecs = list(b.phi_r_values)
    for s in _fil_s_generators(ctx, b.r):
        ps = _phi_r_raw(ctx, s, b.r)
        if not np.any(np.mod(ps, ctx.p ** prec)):
            continue
        for j in range(d):
            vecs.append(np.stack([_mul_s(ctx, ps, b.frobenius[i, j], prec) for i in range(d)]))
    span = vectors_span(ctx, S_RING, np.stack(vecs), prec)
    ok = span.is_full()
    return Verdict.of(ok), None if ok else {"missing_log_size": d * M * prec - span.log_size}


# ---------------------------------------------------------------------------
# monodromy


def apply_monodromy(b: BreuilModule, x: np.ndarray, N: int | None = None) -> np.ndarray:
    """N(x) = N_S(x) + Nmat x on vectors of shape (d, M)."""
    if b.monodromy is None:
        raise MissingMonodromy("module carries no monodromy operator")
    ctx = b.ctx
    ring = ctx.chain(N)
    return np.mod(derivation_array(ctx, x, N) + mat_vec(ctx, S_RING, ring.array(b.monodromy), x, N), ring.q)


def check_monodromy(b: BreuilModule, samples: int = 3) -> CheckReport:
    if b.monodromy is None:
        raise MissingMonodromy("module carries no monodromy operator")
    ctx, d, M = b.ctx, b.rank, b.ctx.M
    rep = CheckReport("monodromy", notes={"precision": [ctx.N, ctx.M]})
    # Leibniz on sample pairs
    rng = np.random.default_rng(0)
    ok = True
    for _ in range(samples):
        s = rng.integers(0, ctx.q, M)
        m = rng.integers(0, ctx.q, (d, M))
        sm = np.stack([_mul_s(ctx, s, m[j]) for j in range(d)])
        lhs = apply_monodromy(b, sm)
        Nm = apply_monodromy(b, m)
        rhs = np.stack([_mul_s(ctx, derivation_array(ctx, s), m[j]) + _mul_s(ctx, s, Nm[j]) for j in range(d)])
        ok &= np.array_equal(lhs, np.mod(rhs, ctx.q))
    rep.add("Leibniz rule", bool(ok))
    # E N(Fil) in Fil, on S-module generators of Fil
    gens = list(b.fil_generators)
    for s in _fil_s_generators(ctx, b.r, samples):
        for j in range(d):
            v = np.zeros((d, M), dtype=object)
            v[j] = s
            gens.append(v)
    gens = np.stack(gens)
    ENg = np.stack([np.stack([_mul_s(ctx, ctx.E_s.coeffs, v) for v in apply_monodromy(b, g)]) for g in gens])
    inside = members(ctx.ring.array(ENg.reshape(len(gens), -1)), b.fil_span)
    rep.add("E N(Fil^r M) in Fil^r M", bool(np.all(inside)), None if np.all(inside) else {"generator": int(np.argmin(inside))})
    # phi_r(E N(x)) = c1 N(phi_r(x)) on the distinguished generators
    prec = b.prec - 1
    if prec <= 0:
        rep.add("phi_r E N = c1 N phi_r", Verdict.INDETERMINATE, {"reason": "no precision left"})
    elif bool(np.all(inside)):
        lo = ctx.chain(prec)
        k = len(b.fil_generators)
        lhs = lo.array(b.phi_r(ENg[:k]))
        rhs = []
        for v in b.phi_r_values:
            Nv = apply_monodromy(b, lo.array(v), prec)
            rhs.append(np.stack([_mul_s(ctx, ctx.c1.coeffs, w, prec) for w in Nv]))
        ok = np.array_equal(lhs, lo.array(np.stack(rhs))) if k else True
        rep.add("phi_r E N = c1 N phi_r", ok, {"precision": prec})
    else:
        rep.add("phi_r E N = c1 N phi_r", Verdict.FAIL, {"reason": "E N(Fil) leaves Fil"})
    # crystalline: N(M) in uM
    umod = vectors_span(ctx, S_RING, np.stack([_u_vector(ctx, d, j) for j in range(d)]))
    cols = np.stack([apply_monodromy(b, _basis(ctx, d, j)) for j in range(d)])
    crys = np.all(members(ctx.ring.array(cols.reshape(d, -1)), umod))
    rep.add("crystalline: N(M) in uM", bool(crys))
    return rep


def _basis(ctx: RingContext, d: int, j: int) -> np.ndarray:
    v = ctx.ring.zeros((d, ctx.M))
    v[j, 0] = 1
    return v


def _u_vector(ctx: RingContext, d: int, j: int) -> np.ndarray:
    v = ctx.ring.zeros((d, ctx.M))
    v[j] = ctx.u("s").coeffs
    return v


def tensor_monodromy(N1: np.ndarray, N2: np.ndarray, ctx: RingContext) -> np.ndarray:
    d1, d2 = N1.shape[0], N2.shape[0]
    out = ctx.ring.zeros((d1 * d2, d1 * d2, ctx.M))
    for i in range(d1):
        for j in range(d1):
            for k in range(d2):
                out[i * d2 + k, j * d2 + k] = np.mod(out[i * d2 + k, j * d2 + k] + N1[i, j], ctx.q)
    for i in range(d1):
        for k in range(d2):
            for l in range(d2):
                out[i * d2 + k, i * d2 + l] = np.mod(out[i * d2 + k, i * d2 + l] + N2[k, l], ctx.q)
    return out


# ---------------------------------------------------------------------------
# morphisms


@dataclass(frozen=True, eq=False)
class BreuilMorphism:
    source: BreuilModule
    target: BreuilModule
    matrix: np.ndarray

    @property
    def ctx(self) -> RingContext:
        return self.source.ctx

    def flat(self) -> np.ndarray:
        return flatten_map(self.ctx, S_RING, self.matrix)


def breuil_morphism(f: KisinMorphism, source: BreuilModule, target: BreuilModule) -> BreuilMorphism:
    """The image of a Kisin morphism: matrix phi(F) in the basis 1 (x) e_j."""
    F = _s_embed(f.ctx, frobenius_array(f.ctx, SIGMA, f.matrix, guard=False))
    return BreuilMorphism(source, target, F)


def from_kisin_sequence(seq: Sequence[KisinMorphism], r: int) -> list[BreuilMorphism]:
    mods = [from_kisin(seq[0].source, r)] + [from_kisin(f.target, r) for f in seq]
    return [breuil_morphism(f, a, b) for f, a, b in zip(seq, mods, mods[1:])]


def check_breuil_morphism(f: BreuilMorphism) -> CheckReport:
    ctx = f.ctx
    src, tgt = f.source, f.target
    rep = CheckReport("Breuil morphism")
    img = howell_array(ctx.ring, ctx.ring.matmul(src.fil_span.matrix, f.flat()), tgt.width) if src.fil_span.rank \
        else zero_span(ctx.ring, tgt.width)
    rep.add("Fil into Fil", contains(tgt.fil_span, img))
    if contains(tgt.fil_span, img) and len(src.fil_generators):
        lo = ctx.chain(src.prec)
        lhs = np.stack([mat_vec(ctx, S_RING, lo.array(f.matrix), v, src.prec) for v in src.phi_r_values])
        moved = np.stack([mat_vec(ctx, S_RING, f.matrix, g) for g in src.fil_generators])
        rhs = lo.array(tgt.phi_r(moved))
        rep.add("commutes with phi_r", np.array_equal(lo.array(lhs), rhs))
    else:
        rep.add("commutes with phi_r", Verdict.FAIL, {"reason": "Fil not preserved"})
    phiF = frobenius_array(ctx, S_RING, f.matrix, guard=False)
    lhs = mat_product(ctx, S_RING, f.matrix, src.frobenius)
    rhs = mat_product(ctx, S_RING, tgt.frobenius, phiF)
    rep.add("commutes with Frobenius", np.array_equal(lhs, rhs))
    if src.monodromy is not None and tgt.monodromy is not None:
        lhs = mat_product(ctx, S_RING, f.matrix, src.monodromy)
        rhs = np.mod(derivation_array(ctx, f.matrix) + mat_product(ctx, S_RING, tgt.monodromy, f.matrix), ctx.q)
        rep.add("commutes with N", np.array_equal(lhs, rhs))
    return rep


# ---------------------------------------------------------------------------
# exactness


@dataclass
class ExactnessReport:
    underlying: CheckReport
    fil: CheckReport
    diagnostics: dict = field(default_factory=dict)

    @property
    def verdict(self) -> Verdict:
        return combine([self.underlying.verdict, self.fil.verdict])

    @property
    def passed(self) -> bool:
        return self.verdict is Verdict.PASS

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "underlying": self.underlying.as_dict(),
            "fil": self.fil.as_dict(),
            "diagnostics": self.diagnostics,
        }


BREUIL_MARGINS = Margins(dN=1, dM=None)


def _margins(ctx: RingContext, margins: Margins | None) -> tuple[int, int]:
    if margins is None:
        return ctx.N - 1, ctx.M - ctx.e * ctx.p
    return margins.resolve(ctx)


def _proj(span: HowellForm, d: int, ctx: RingContext, coarse: tuple[int, int]) -> HowellForm:
    N2, M2 = coarse
    cols = [j * ctx.M + n for j in range(d) for n in range(M2)]
    return project_span(span, N2, cols)


def _image(span: HowellForm, fm: np.ndarray, width: int) -> HowellForm:
    ring = span.ring
    if span.is_zero():
        return zero_span(ring, width)
    return howell_array(ring, ring.matmul(span.matrix, fm), width)


def _homology(ker: HowellForm, im: HowellForm) -> FPModule:
    """ker / im (im inside ker) as a finitely presented module on the rows of ker."""
    ring = ker.ring
    if ker.is_zero():
        return FPModule(ring, 0, zero_span(ring, 0))
    rel = preimage_array(ring, ker.matrix, im)
    return FPModule(ring, ker.rank, rel)


def check_exact_complex(maps: Sequence[BreuilMorphism], margins: Margins | None = None,
                        saturation: bool = True) -> ExactnessReport:
    """Exactness of 0 -> C_0 -> ... -> C_n -> 0 in the exact-category sense.

    At each interior object the subobject Z = ker = im is exhibited, and the
    filtration must be strict: ker(g) cap Fil = f(Fil), g(Fil) = im(g) cap Fil.
    Kernel-side comparisons are made after projecting to the coarse precision
    (N - 1, M - e p) by default, since truncation creates spurious kernel
    vectors near the boundary; surjectivity of the last map is tested at full
    precision."""
    maps = list(maps)
    if not maps:
        raise ValueError("empty complex")
    for a, b in zip(maps, maps[1:]):
        if a.target is not b.source:
            raise NotComposable("consecutive maps do not compose")
    ctx = maps[0].ctx
    coarse = _margins(ctx, margins)
    und = CheckReport("underlying modules", notes={"fine": [ctx.N, ctx.M], "coarse": list(coarse)})
    fil = CheckReport("Fil^r level", notes={"fine": [ctx.N, ctx.M], "coarse": list(coarse)})
    diag: dict = {}
    ring = ctx.ring
    flats = [f.flat() for f in maps]

    head = maps[0]
    d0 = head.source.rank
    k0 = kernel_array(ring, flats[0])
    pk = _proj(k0, d0, ctx, coarse)
    und.add("head injective", pk.is_zero(), None if pk.is_zero() else {"kernel_log_size": pk.log_size})
    kf = _proj(intersect(k0, head.source.fil_span), d0, ctx, coarse)
    fil.add("head injective on Fil", kf.is_zero())

    for i, (f, g) in enumerate(zip(maps, maps[1:]), start=1):
        C = f.target
        d = C.rank
        comp = mat_product(ctx, S_RING, g.matrix, f.matrix)
        und.add(f"junction {i}: composite zero", not np.any(comp))
        kg = kernel_array(ring, flats[i])
        im = howell_array(ring, flats[i - 1], C.width)
        pk, pim = _proj(kg, d, ctx, coarse), _proj(im, d, ctx, coarse)
        ok = contains(pim, pk)
        witness = None
        if not ok:
            h = _homology(pk, intersect(pk, pim))
            witness = {"cohomology_log_p_size": h.log_cardinality}
            diag[f"junction {i} cohomology"] = h
        und.add(f"junction {i}: kernel = image", ok, witness)
        kfil = _proj(intersect(kg, C.fil_span), d, ctx, coarse)
        ifil = _proj(_image(f.source.fil_span, flats[i - 1], C.width), d, ctx, coarse)
        fil.add(f"junction {i}: kernel cap Fil = image of Fil", contains(ifil, kfil))
        if saturation:
            psat = _proj(intersect(im, scale_span(full_span(ring, C.width), ctx.p)), d, ctx, coarse)
            pim_p = _proj(scale_span(im, ctx.p), d, ctx, coarse)
            und.add(f"junction {i}: Z saturated", contains(pim_p, psat))
        # strictness of g: g(Fil) = g(C) cap Fil, compared at coarse precision
        T = g.target
        gfil = _image(C.fil_span, flats[i], T.width)
        gim = howell_array(ring, flats[i], T.width)
        strict = contains(_proj(gfil, T.rank, ctx, coarse), _proj(intersect(gim, T.fil_span), T.rank, ctx, coarse))
        fil.add(f"junction {i}: strict image", strict)

    tail = maps[-1]
    T = tail.target
    im = howell_array(ring, flats[-1], T.width)
    surj = im.is_full()
    und.add("tail surjective", surj, None if surj else {"cokernel_log_p_size": T.width * ctx.N - im.log_size})
    ifil = _image(tail.source.fil_span, flats[-1], T.width)
    fil.add("tail surjective on Fil", ifil == T.fil_span)
    return ExactnessReport(und, fil, diag)


def check_exact_breuil(seq: Sequence[BreuilMorphism], margins: Margins | None = None) -> ExactnessReport:
    return check_exact_complex(seq, margins, saturation=False)


def middle_cohomology(f: BreuilMorphism, g: BreuilMorphism, margins: Margins | None = None) -> FPModule:
    """ker g / im f at the coarse precision."""
    ctx = f.ctx
    coarse = _margins(ctx, margins)
    d = f.target.rank
    pk = _proj(kernel_array(ctx.ring, g.flat()), d, ctx, coarse)
    pim = _proj(howell_array(ctx.ring, f.flat(), f.target.width), d, ctx, coarse)
    return _homology(pk, intersect(pk, pim))


def tail_cokernel(g: BreuilMorphism) -> FPModule:
    ctx = g.ctx
    im = howell_array(ctx.ring, g.flat(), g.target.width)
    return FPModule(ctx.ring, g.target.width, im)


# ---------------------------------------------------------------------------
# tensor products and splicing


def tensor_breuil(b1: BreuilModule, b2: BreuilModule) -> BreuilModule:
    """Tensor product through the Kisin side: from_kisin(M1 (x) M2, r1 + r2)."""
    if b1.provenance is None or b2.provenance is None:
        raise MissingProvenance("tensor products need the Kisin modules the factors came from")
    if b1.ctx != b2.ctx:
        raise ContextMismatch("Breuil modules over different contexts")
    out = from_kisin(tensor(b1.provenance, b2.provenance), b1.r + b2.r)
    if b1.monodromy is not None and b2.monodromy is not None:
        out = out.with_monodromy(tensor_monodromy(b1.monodromy, b2.monodromy, b1.ctx))
    return out


def tensor_fil_probe(b1: BreuilModule, b2: BreuilModule, b12: BreuilModule | None = None) -> dict:
    """Compare Fil of the tensor product with Fil1 (x) Fil2 + Fil^{r1+r2} S M.

    Containment is expected; equality is recorded without being asserted."""
    ctx = b1.ctx
    b12 = tensor_breuil(b1, b2) if b12 is None else b12
    d1, d2, M = b1.rank, b2.rank, ctx.M

    def s_gens(b):
        out = list(b.fil_generators)
        for s in _fil_s_generators(ctx, b.r):
            for j in range(b.rank):
                v = np.zeros((b.rank, M), dtype=object)
                v[j] = s
                out.append(v)
        return out

    vecs = []
    for x in s_gens(b1):
        for y in s_gens(b2):
            v = np.zeros((d1 * d2, M), dtype=object)
            for i in range(d1):
                for k in range(d2):
                    v[i * d2 + k] = _mul_s(ctx, x[i], y[k])
            if np.any(v):
                vecs.append(v)
    part = vectors_span(ctx, S_RING, np.stack(vecs)) if vecs else zero_span(ctx.ring, d1 * d2 * M)
    total = span_sum(part, fil_module_span(ctx, b1.r + b2.r, d1 * d2))
    return {"contained": contains(b12.fil_span, total), "equal": b12.fil_span == total}


def tensor_breuil_morphism(f: BreuilMorphism, b: BreuilModule, kisin_f: KisinMorphism) -> BreuilMorphism:
    """f (x) id_b, through the Kisin side."""
    idm = _kisin_identity(b.provenance)
    kf = tensor_morphism(kisin_f, idm)
    return breuil_morphism(kf, tensor_breuil(f.source, b), tensor_breuil(f.target, b))


def _kisin_identity(m: KisinModule) -> KisinMorphism:
    return KisinMorphism(m, m, identity_matrix(m.ctx, m.rank))


@dataclass
class Complex:
    maps: list[BreuilMorphism]

    @property
    def objects(self) -> list[BreuilModule]:
        return [self.maps[0].source] + [f.target for f in self.maps]


def splice(first: Sequence[BreuilMorphism], second: Sequence[BreuilMorphism]) -> Complex:
    """Yoneda composition of 0 -> A -> ... -> C -> 0 with 0 -> C -> ... -> B -> 0:
    the map onto C is composed with the map out of C."""
    first, second = list(first), list(second)
    last, head = first[-1], second[0]
    if last.target is not head.source and not _same_module(last.target, head.source):
        raise NotComposable("the end of the first extension is not the start of the second")
    ctx = last.ctx
    glued = BreuilMorphism(last.source, head.target, mat_product(ctx, S_RING, head.matrix, last.matrix))
    return Complex(first[:-1] + [glued] + second[1:])


def _same_module(a: BreuilModule, b: BreuilModule) -> bool:
    return (
        a.ctx == b.ctx and a.r == b.r and a.rank == b.rank and a.fil_span == b.fil_span
        and np.array_equal(a.frobenius, b.frobenius)
    )


def same_breuil(a: BreuilModule, b: BreuilModule) -> bool:
    """Equal Fil, Frobenius and phi_r (checked on the generators of a)."""
    if not _same_module(a, b):
        return False
    lo = a.ctx.chain(a.prec)
    return np.array_equal(lo.array(a.phi_r_values), lo.array(b.phi_r(a.fil_generators)))


# ---------------------------------------------------------------------------
# Tor against S


def tor1_with_s(ctx: RingContext, resolution: Sequence[np.ndarray], margins: Margins | None = None) -> FPModule:
    """H_1 of S (x) F_* for a free resolution F_1 -> F_0 (-> Q -> 0) given by
    matrices d_1, d_2, ... over S_frak (column convention, d_k : F_k -> F_{k-1}).

    Homology is taken precision-qualified: ker at full precision, projected to
    the coarse precision, modulo the projected image."""
    mats = [np.asarray(d) for d in resolution]
    if not mats:
        raise NotAResolution("empty resolution")
    coarse = _margins(ctx, margins)
    ring = ctx.ring
    for a, b in zip(mats, mats[1:]):
        if a.shape[1] != b.shape[0]:
            raise NotAResolution("ranks of consecutive maps do not match")
        if np.any(mat_product(ctx, SIGMA, a, b)):
            raise NotAResolution("composite of consecutive maps is not zero")
        k = _proj(kernel_array(ring, flatten_map(ctx, SIGMA, a)), a.shape[1], ctx, coarse)
        im = _proj(howell_array(ring, flatten_map(ctx, SIGMA, b), a.shape[1] * ctx.M), a.shape[1], ctx, coarse)
        if not contains(im, k):
            raise NotAResolution("the complex over S_frak is not exact")
    last = mats[-1]
    if last.shape[1]:
        k = _proj(kernel_array(ring, flatten_map(ctx, SIGMA, last)), last.shape[1], ctx, coarse)
        if not k.is_zero():
            raise NotAResolution("the last map of the resolution is not injective")
    d1 = _s_embed(ctx, mats[0])
    n1 = mats[0].shape[1]
    ker = kernel_array(ring, flatten_map(ctx, S_RING, d1))
    pk = _proj(ker, n1, ctx, coarse)
    if len(mats) > 1:
        d2 = _s_embed(ctx, mats[1])
        im = howell_array(ring, flatten_map(ctx, S_RING, d2), n1 * ctx.M)
    else:
        im = zero_span(ring, n1 * ctx.M)
    pim = _proj(im, n1, ctx, coarse)
    return _homology(pk, intersect(pk, pim))


def tor_class_nonzero(ctx: RingContext, resolution: Sequence[np.ndarray], vector: np.ndarray,
                      margins: Margins | None = None) -> Verdict:
    """Is the flattened vector a cycle of S (x) F_1 whose class in Tor_1 is nonzero?"""
    coarse = _margins(ctx, margins)
    ring = ctx.ring
    d1 = _s_embed(ctx, np.asarray(resolution[0]))
    n1 = d1.shape[1]
    v = ring.array(np.asarray(vector).reshape(-1))
    if np.any(ring.matmul(v.reshape(1, -1), flatten_map(ctx, S_RING, d1))):
        return Verdict.FAIL
    im = howell_array(ring, flatten_map(ctx, S_RING, _s_embed(ctx, np.asarray(resolution[1]))), n1 * ctx.M) \
        if len(resolution) > 1 else zero_span(ring, n1 * ctx.M)
    pim = _proj(im, n1, ctx, coarse)
    cols = [j * ctx.M + n for j in range(n1) for n in range(coarse[1])]
    pv = ctx.chain(coarse[0]).array(v[cols])
    return Verdict.of(not members(pv.reshape(1, -1), pim)[0])
