"""Free Kisin modules over truncated S_frak.

A Kisin module of rank d is stored by its Frobenius matrix Phi in the column
convention: column j holds the coordinates of phi(e_j).  The optional
denominator exponent s means phi(e_j) = E^{-s} * Phi[:, j].  Entries are
polynomials of degree < M, so determinants and E-adic valuations are computed
exactly in (Z/p^N)[u]; everything else works modulo (p^N, u^M).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _poly
from .chainring import (
    ChainMatrix,
    FPModule,
    HowellForm,
    contains,
    howell_array,
    kernel_array,
    members,
    project_span,
    quotient_presentation,
    solver,
    zero_span,
)
from .errors import (
    ContextMismatch,
    DegenerateFrobenius,
    DimensionMismatch,
    HeightError,
    InsufficientPrecision,
    NotAMorphism,
    NotComposable,
)
from .report import CheckReport, Verdict
from .series import (
    SIGMA,
    RingContext,
    SigmaElem,
    flatten_map,
    frobenius_array,
    identity_matrix,
    mat_product,
    vectors_span,
)

# ---------------------------------------------------------------------------
# matrices with polynomial entries


def as_matrix(ctx: RingContext, entries, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Coerce nested lists of SigmaElem / int / coefficient lists into an
    array of shape (rows, cols, M)."""
    if isinstance(entries, np.ndarray) and entries.ndim == 3:
        arr = ctx.ring.array(entries)
        if arr.shape[2] != ctx.M:
            raise DimensionMismatch(f"entries have length {arr.shape[2]}, expected M = {ctx.M}")
        return arr
    rows = len(entries) if rows is None else rows
    cols = (len(entries[0]) if rows else 0) if cols is None else cols
    out = ctx.ring.zeros((rows, cols, ctx.M))
    for i in range(rows):
        if len(entries[i]) != cols:
            raise DimensionMismatch("ragged matrix")
        for j in range(cols):
            x = entries[i][j]
            if isinstance(x, SigmaElem):
                if x.ctx != ctx:
                    raise ContextMismatch("matrix entry from another context")
                out[i, j] = x.coeffs
            elif isinstance(x, (int, np.integer)):
                out[i, j, 0] = int(x) % ctx.q
            else:
                out[i, j] = SigmaElem.from_list(ctx, list(x)).coeffs
    return out


def degree(a: np.ndarray) -> int:
    """Degree of a coefficient vector (-1 for zero)."""
    nz = np.nonzero(a)[0]
    return int(nz[-1]) if nz.size else -1


def exact_product(ctx: RingContext, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Matrix product of polynomial matrices, refusing to truncate."""
    dA = np.array([[degree(x) for x in row] for row in A], dtype=np.int64).reshape(A.shape[:2])
    dB = np.array([[degree(x) for x in row] for row in B], dtype=np.int64).reshape(B.shape[:2])
    if dA.size and dB.size:
        s = dA[:, :, None] + dB[None, :, :]
        mask = (dA[:, :, None] >= 0) & (dB[None, :, :] >= 0)
        if np.any(mask & (s >= ctx.M)):
            raise InsufficientPrecision(f"polynomial product reaches degree >= M = {ctx.M}")
    return mat_product(ctx, SIGMA, A, B)


def kron(ctx: RingContext, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    r1, c1, M = A.shape
    r2, c2, _ = B.shape
    out = ctx.ring.zeros((r1 * r2, c1 * c2, M))
    for i in range(r1):
        for j in range(c1):
            if not np.any(A[i, j]):
                continue
            block = exact_product(ctx, scalar_block(ctx, A[i, j], r2), B)
            out[i * r2:(i + 1) * r2, j * c2:(j + 1) * c2] = block
    return out


def scalar_block(ctx: RingContext, a: np.ndarray, n: int) -> np.ndarray:
    out = ctx.ring.zeros((n, n, ctx.M))
    for i in range(n):
        out[i, i] = a
    return out


def to_polys(A: np.ndarray) -> list[list[tuple]]:
    return [[_poly.trim(x.tolist()) for x in row] for row in A]


def from_polys(ctx: RingContext, P: list[list[tuple]]) -> np.ndarray:
    out = ctx.ring.zeros((len(P), len(P[0]) if P else 0, ctx.M))
    for i, row in enumerate(P):
        for j, f in enumerate(row):
            if len(f) > ctx.M:
                raise InsufficientPrecision(f"polynomial of degree {len(f) - 1} does not fit below M = {ctx.M}")
            out[i, j, : len(f)] = f
    return out


def e_power(ctx: RingContext, k: int) -> np.ndarray:
    f = _poly.power(_poly.trim(ctx.E.coeffs), k, ctx.q)
    if len(f) > ctx.M:
        raise InsufficientPrecision(f"E^{k} does not fit below M = {ctx.M}")
    out = ctx.ring.zeros(ctx.M)
    out[: len(f)] = f
    return out


def frobenius_matrix(ctx: RingContext, A: np.ndarray, guard: bool = True) -> np.ndarray:
    return frobenius_array(ctx, SIGMA, A, guard)


# ---------------------------------------------------------------------------
# modules


@dataclass(frozen=True, eq=False)
class KisinModule:
    ctx: RingContext
    rank: int
    frobenius: np.ndarray
    denom_exp: int = 0
    det_exp: int = 0
    det_unit: tuple = (1,)

    @property
    def effective(self) -> bool:
        return self.denom_exp == 0

    def entry(self, i: int, j: int) -> SigmaElem:
        return SigmaElem(self.ctx, self.frobenius[i, j])

    def polys(self) -> list[list[tuple]]:
        return to_polys(self.frobenius)

    def __eq__(self, other):
        if not isinstance(other, KisinModule):
            return NotImplemented
        return (
            self.ctx == other.ctx
            and self.rank == other.rank
            and self.denom_exp == other.denom_exp
            and np.array_equal(self.frobenius, other.frobenius)
        )

    def __hash__(self):
        return hash((self.ctx, self.rank, self.denom_exp, self.frobenius.tobytes()))

    def __repr__(self):
        return f"KisinModule(rank={self.rank}, denom_exp={self.denom_exp}, det=unit*E^{self.det_exp})"


def make_kisin(ctx: RingContext, rank: int, frobenius, denom_exp: int = 0) -> KisinModule:
    """Validate and build a Kisin module; det(Phi) must be unit * E^h."""
    phi = as_matrix(ctx, frobenius)
    if phi.shape[:2] != (rank, rank):
        raise DimensionMismatch(f"Frobenius matrix must be {rank} x {rank}, got {phi.shape[:2]}")
    if denom_exp < 0:
        raise ValueError("denominator exponent must be nonnegative")
    d = _poly.det(to_polys(phi), ctx.q)
    if not d:
        raise DegenerateFrobenius("det(Phi) vanishes at this precision")
    h, unit = _poly.e_valuation(d, _poly.trim(ctx.E.coeffs), ctx.q)
    if h is None or not unit or unit[0] % ctx.p == 0:
        raise DegenerateFrobenius(
            f"det(Phi) is not a unit times a power of E (E-adic cofactor has constant term {unit[0] if unit else 0})"
        )
    phi.setflags(write=False)
    return KisinModule(ctx, rank, phi, denom_exp, h, unit)


def unit_module(ctx: RingContext) -> KisinModule:
    return make_kisin(ctx, 1, [[1]])


def bk_twist(ctx: RingContext, s: int) -> KisinModule:
    """The Breuil-Kisin twist S_frak{s}; S_frak{-r} has Frobenius (c0^{-1} E)^r."""
    if s <= 0:
        f = np.mod(e_power(ctx, -s) * pow(ctx.c0_inv, -s, ctx.q), ctx.q)
        return make_kisin(ctx, 1, f.reshape(1, 1, -1))
    return make_kisin(ctx, 1, [[pow(ctx.c0, s, ctx.q)]], denom_exp=s)


def counterexample_module(ctx: RingContext) -> KisinModule:
    """phi(e1) = e1, phi(e2) = -u e1 + E e2."""
    return make_kisin(ctx, 2, [[1, [0, -1]], [0, list(ctx.E.coeffs)]])


# ---------------------------------------------------------------------------
# height and weights


@dataclass
class HeightResult:
    verdict: Verdict
    r: int
    witness: np.ndarray | None = None
    failing_column: int | None = None

    def __bool__(self):
        return self.verdict is Verdict.PASS


def height_result(m: KisinModule, r: int) -> HeightResult:
    """Decide whether E^r e_i lies in the column span of Phi for every i.

    A solution modulo (p^N, u^M) is reported as a pass at that precision.
    Absence of a solution is definitive: any true solution would reduce."""
    if not m.effective:
        raise HeightError("height is only defined for effective modules (denom_exp = 0)")
    ctx, d, M = m.ctx, m.rank, m.ctx.M
    Er = e_power(ctx, r)
    fm = flatten_map(ctx, SIGMA, m.frobenius)
    targets = ctx.ring.zeros((d, d * M))
    for i in range(d):
        targets[i, i * M:(i + 1) * M] = Er
    coeffs, ok = solver(ctx.ring, fm)(targets)
    if not np.all(ok):
        return HeightResult(Verdict.FAIL, r, failing_column=int(np.argmin(ok)))
    X = ctx.ring.zeros((d, d, M))
    for i in range(d):
        X[:, i, :] = coeffs[i].reshape(d, M)
    return HeightResult(Verdict.PASS, r, witness=X)


def check_height(m: KisinModule, r: int) -> bool:
    return bool(height_result(m, r))


def hodge_tate_weights(m: KisinModule, depth: int | None = None) -> list[int]:
    """Jumps of the E-adic Smith invariants of Phi, via determinantal divisors.

    Over the discrete valuation ring obtained by localizing at E with p
    inverted, the k-th determinantal divisor is the minimal E-valuation of the
    k x k minors, and invariant factors are the successive quotients."""
    if not m.effective:
        raise HeightError("Hodge-Tate weights need an effective module")
    ctx = m.ctx
    depth = m.det_exp + 1 if depth is None else depth
    E = _poly.trim(ctx.E.coeffs)
    P = m.polys()
    divisors = [0]
    for k in range(1, m.rank + 1):
        best = None
        for _, _, minor in _poly.minors(P, k, ctx.q):
            h, _ = _poly.e_valuation(minor, E, ctx.q, cap=depth)
            if h is not None and (best is None or h < best):
                best = h
        if best is None or best >= depth:
            raise InsufficientPrecision(f"{k}x{k} determinantal divisor not resolved at depth {depth}")
        divisors.append(best)
    weights = [b - a for a, b in zip(divisors, divisors[1:])]
    if divisors[-1] != m.det_exp or any(w < 0 for w in weights) or weights != sorted(weights):
        raise InsufficientPrecision(f"inconsistent determinantal divisors {divisors}")
    return weights


# ---------------------------------------------------------------------------
# tensor, dual, twists


def _same_ctx(*mods: KisinModule):
    for m in mods[1:]:
        if m.ctx != mods[0].ctx:
            raise ContextMismatch("Kisin modules over different ring contexts")


def tensor(m1: KisinModule, m2: KisinModule) -> KisinModule:
    _same_ctx(m1, m2)
    return make_kisin(m1.ctx, m1.rank * m2.rank, kron(m1.ctx, m1.frobenius, m2.frobenius), m1.denom_exp + m2.denom_exp)


def _normalize(ctx: RingContext, phi: np.ndarray, s: int) -> tuple[np.ndarray, int]:
    if s < 0:
        phi = exact_product(ctx, phi, scalar_block(ctx, e_power(ctx, -s), phi.shape[1]))
        s = 0
    return phi, s


def dual(m: KisinModule) -> KisinModule:
    """Frobenius adj(Phi)^T / unit, denominator exponent raised by h."""
    ctx = m.ctx
    if len(m.det_unit) != 1:
        raise DegenerateFrobenius("dual needs det(Phi) = c * E^h with c a constant unit")
    adj = _poly.adjugate(m.polys(), ctx.q)
    inv = pow(m.det_unit[0], -1, ctx.q)
    d = m.rank
    t = [[_poly.scale(adj[j][i], inv, ctx.q) for j in range(d)] for i in range(d)]
    phi, s = _normalize(ctx, from_polys(ctx, t), m.det_exp - m.denom_exp)
    return make_kisin(ctx, d, phi, s)


def internal_hom(m1: KisinModule, m2: KisinModule) -> KisinModule:
    return tensor(dual(m1), m2)


def clear_denominator(m: KisinModule) -> KisinModule:
    """Divide Phi by E while the denominator is positive and every entry allows it."""
    ctx = m.ctx
    E = _poly.trim(ctx.E.coeffs)
    P, s = m.polys(), m.denom_exp
    while s > 0:
        divided = []
        for row in P:
            new = []
            for f in row:
                quot, rem = _poly.divmod_monic(f, E, ctx.q)
                if rem:
                    break
                new.append(quot)
            else:
                divided.append(new)
                continue
            break
        else:
            P, s = divided, s - 1
            continue
        break
    return make_kisin(ctx, m.rank, from_polys(ctx, P), s)


def twist(m: KisinModule, s: int) -> KisinModule:
    """m tensor S_frak{s}, with the E-denominator cleared where possible."""
    return clear_denominator(tensor(m, bk_twist(m.ctx, s)))


# ---------------------------------------------------------------------------
# morphisms


@dataclass(frozen=True, eq=False)
class KisinMorphism:
    source: KisinModule
    target: KisinModule
    matrix: np.ndarray

    @property
    def ctx(self) -> RingContext:
        return self.source.ctx

    def flat(self) -> np.ndarray:
        return flatten_map(self.ctx, SIGMA, self.matrix)


def make_morphism(source: KisinModule, target: KisinModule, matrix, validate: bool = True) -> KisinMorphism:
    _same_ctx(source, target)
    F = as_matrix(source.ctx, matrix)
    if F.shape[:2] != (target.rank, source.rank):
        raise DimensionMismatch(f"morphism matrix must be {target.rank} x {source.rank}")
    F.setflags(write=False)
    f = KisinMorphism(source, target, F)
    if validate:
        rep = check_morphism(f)
        if not rep.passed:
            raise NotAMorphism(f"Frobenius compatibility fails at entry {rep.checks[0].witness}")
    return f


def check_morphism(f: KisinMorphism) -> CheckReport:
    """F Phi_src = Phi_tgt phi(F), with E-denominators cross-multiplied."""
    ctx = f.ctx
    rep = CheckReport("Kisin morphism")
    phiF = frobenius_matrix(ctx, f.matrix)
    lhs = mat_product(ctx, SIGMA, f.matrix, f.source.frobenius)
    rhs = mat_product(ctx, SIGMA, f.target.frobenius, phiF)
    s_src, s_tgt = f.source.denom_exp, f.target.denom_exp
    if s_tgt:
        lhs = mat_product(ctx, SIGMA, scalar_block(ctx, e_power(ctx, s_tgt), lhs.shape[0]), lhs)
    if s_src:
        rhs = mat_product(ctx, SIGMA, scalar_block(ctx, e_power(ctx, s_src), rhs.shape[0]), rhs)
    bad = np.argwhere(np.any(lhs != rhs, axis=2))
    witness = None if not len(bad) else {"entry": [int(x) for x in bad[0]]}
    rep.add("frobenius compatibility", not len(bad), witness)
    return rep


def is_morphism(f: KisinMorphism) -> bool:
    return check_morphism(f).passed


def identity_morphism(m: KisinModule) -> KisinMorphism:
    return make_morphism(m, m, identity_matrix(m.ctx, m.rank))


def compose(f: KisinMorphism, g: KisinMorphism) -> KisinMorphism:
    """g after f."""
    if f.target != g.source:
        raise NotComposable("target of the first map is not the source of the second")
    return KisinMorphism(f.source, g.target, exact_product(f.ctx, g.matrix, f.matrix))


def tensor_morphism(f: KisinMorphism, g: KisinMorphism) -> KisinMorphism:
    return KisinMorphism(tensor(f.source, g.source), tensor(f.target, g.target), kron(f.ctx, f.matrix, g.matrix))


@dataclass
class KisinKernel:
    span: HowellForm
    phi_stable: Verdict


def kernel_module(f: KisinMorphism) -> KisinKernel:
    """Flattened kernel of F together with a check that phi preserves it."""
    ctx = f.ctx
    K = kernel_array(ctx.ring, f.flat())
    d = f.source.rank
    if K.is_zero():
        return KisinKernel(K, Verdict.PASS)
    vecs = K.matrix.reshape(K.rank, d, ctx.M)
    phis = frobenius_matrix(ctx, vecs, guard=False)
    images = np.stack([mat_product(ctx, SIGMA, f.source.frobenius, v[:, None, :])[:, 0, :] for v in phis])
    images = images.reshape(K.rank, d * ctx.M)
    if np.all(members(images, K)):
        return KisinKernel(K, Verdict.PASS)
    cols = _coarse_columns(ctx, d, ctx.e)
    coarse = project_span(K, columns=cols)
    if np.all(members(images[:, cols], coarse)):
        return KisinKernel(K, Verdict.INDETERMINATE)
    return KisinKernel(K, Verdict.FAIL)


@dataclass
class Cokernel:
    module: FPModule
    p_action: ChainMatrix
    u_action: ChainMatrix

    @property
    def cardinality(self) -> int:
        return self.module.cardinality


def cokernel_presentation(f: KisinMorphism) -> Cokernel:
    ctx = f.ctx
    d, M = f.target.rank, ctx.M
    im = howell_array(ctx.ring, f.flat(), d * M)
    mod = quotient_presentation(im, d * M)
    p_act = ChainMatrix(ctx.ring, np.mod(ctx.ring.identity(d * M) * ctx.p, ctx.q))
    u_act = ChainMatrix(ctx.ring, np.kron(np.eye(d, dtype=np.int64), np.eye(M, k=1, dtype=np.int64)))
    return Cokernel(mod, p_act, u_act)


# ---------------------------------------------------------------------------
# ideals and the key lemma


PRINCIPAL = "PrincipalPPower"
FAILS_HYPOTHESIS = "FailsHypothesis"
INDETERMINATE = "Indeterminate"


@dataclass
class IdealWitness:
    generators: list[SigmaElem]
    verdict: str
    n: int | None = None
    witness: object = None

    def __str__(self):
        if self.verdict == PRINCIPAL:
            return f"PrincipalPPower({self.n})"
        return self.verdict

    def as_dict(self) -> dict:
        return {
            "verdict": str(self),
            "generators": [g.tolist() for g in self.generators],
            "witness": self.witness,
        }


def ideal_span(ctx: RingContext, gens: Sequence[np.ndarray], N: int | None = None) -> HowellForm:
    if not len(gens):
        return zero_span(ctx.chain(N), ctx.M)
    return vectors_span(ctx, SIGMA, np.stack([np.asarray(g) for g in gens])[:, None, :], N)


def same_ideal(ctx: RingContext, gens_a, gens_b) -> bool:
    return ideal_span(ctx, gens_a) == ideal_span(ctx, gens_b)


def key_lemma_check(gens: Sequence[SigmaElem]) -> IdealWitness:
    """Test I contained in S_frak phi(I) and, if so, whether I = (p^n)."""
    gens = list(gens)
    if not gens:
        raise ValueError("an ideal needs at least one generator")
    ctx = gens[0].ctx
    arr = [g.coeffs for g in gens]
    phi_span = ideal_span(ctx, [frobenius_array(ctx, SIGMA, a) for a in arr])
    inside = members(np.stack(arr), phi_span)
    if not np.all(inside):
        k = int(np.argmin(inside))
        return IdealWitness(gens, FAILS_HYPOTHESIS, witness={"generator": k, "value": gens[k].tolist()})
    span = ideal_span(ctx, arr)
    for n in range(ctx.N):
        pn = ctx.ring.zeros(ctx.M)
        pn[0] = ctx.p ** n
        if members(pn.reshape(1, -1), span)[0]:
            if all(not np.any(np.mod(a, ctx.p ** n)) for a in arr):
                return IdealWitness(gens, PRINCIPAL, n)
            return IdealWitness(gens, INDETERMINATE, witness={"reason": f"p^{n} in I but I is not inside (p^{n})"})
    return IdealWitness(gens, INDETERMINATE, witness={"reason": "I vanishes modulo p^N"})


# ---------------------------------------------------------------------------
# exactness


def _coarse_columns(ctx: RingContext, d: int, dM: int) -> list[int]:
    keep = max(ctx.M - dM, 0)
    return [j * ctx.M + n for j in range(d) for n in range(keep)]


@dataclass(frozen=True)
class Margins:
    """Loss allowed when comparing kernels with images: spurious kernel
    vectors created by the truncation live in the last dN p-adic digits and
    the last dM u-adic degrees."""

    dN: int = 1
    dM: int | None = None

    def resolve(self, ctx: RingContext) -> tuple[int, int]:
        return ctx.N - self.dN, ctx.M - (ctx.e if self.dM is None else self.dM)


def _project(ctx: RingContext, span: HowellForm, d: int, margins: Margins) -> HowellForm:
    N2, M2 = margins.resolve(ctx)
    return project_span(span, N2, _coarse_columns(ctx, d, ctx.M - M2))


def check_exact_sequence(seq: Sequence[KisinMorphism], margins: Margins = Margins()) -> CheckReport:
    """Exactness of 0 -> X_0 -> ... -> X_n -> 0 given the maps X_k -> X_{k+1}.

    Head injectivity and kernel-in-image are tested after projecting the fine
    kernels to the coarse precision of ``margins``; composites and the tail
    surjectivity are tested at full precision (surjectivity modulo (p, u)
    already lifts by Nakayama)."""
    seq = list(seq)
    if not seq:
        raise ValueError("empty sequence")
    for a, b in zip(seq, seq[1:]):
        if a.target != b.source:
            raise NotComposable("consecutive maps do not compose")
    ctx = seq[0].ctx
    N2, M2 = margins.resolve(ctx)
    rep = CheckReport("Kisin exact sequence", notes={"fine": [ctx.N, ctx.M], "coarse": [N2, M2]})
    head = seq[0]
    ker = kernel_array(ctx.ring, head.flat())
    pk = _project(ctx, ker, head.source.rank, margins)
    rep.add("head injective", pk.is_zero(), None if pk.is_zero() else {"kernel_rank": pk.rank})
    for k, (f, g) in enumerate(zip(seq, seq[1:]), start=1):
        comp = mat_product(ctx, SIGMA, g.matrix, f.matrix)
        rep.add(f"junction {k}: composite zero", not np.any(comp))
        d = f.target.rank
        kg = _project(ctx, kernel_array(ctx.ring, g.flat()), d, margins)
        im = _project(ctx, howell_array(ctx.ring, f.flat(), d * ctx.M), d, margins)
        ok = contains(im, kg)
        rep.add(f"junction {k}: kernel = image", ok, None if ok else {"kernel_size_log": kg.log_size, "image_size_log": im.log_size})
    tail = seq[-1]
    d = tail.target.rank
    im = howell_array(ctx.ring, tail.flat(), d * ctx.M)
    surj = im.is_full()
    witness = None
    if not surj:
        witness = {"cokernel_log_p_size": d * ctx.M * ctx.N - im.log_size}
        if d == 1:
            iw = key_lemma_check([SigmaElem(ctx, tail.matrix[0, j]) for j in range(tail.source.rank)])
            rep.notes["image_ideal"] = iw
            witness["image_ideal"] = str(iw)
    rep.add("tail surjective", surj, witness)
    return rep


def image_ideal(f: KisinMorphism) -> list[SigmaElem]:
    if f.target.rank != 1:
        raise DimensionMismatch("image ideals are defined for maps into rank-1 modules")
    return [SigmaElem(f.ctx, f.matrix[0, j]) for j in range(f.source.rank)]


# ---------------------------------------------------------------------------
# random constructions for property suites


@dataclass
class Unimodular:
    matrix: np.ndarray
    inverse: np.ndarray


def random_poly(ctx: RingContext, rng: np.random.Generator, max_deg: int) -> np.ndarray:
    out = ctx.ring.zeros(ctx.M)
    out[: max_deg + 1] = [int(x) for x in rng.integers(0, ctx.q, max_deg + 1)]
    return out


def random_poly_matrix(ctx: RingContext, rng: np.random.Generator, rows: int, cols: int, max_deg: int) -> np.ndarray:
    out = ctx.ring.zeros((rows, cols, ctx.M))
    for i in range(rows):
        for j in range(cols):
            out[i, j] = random_poly(ctx, rng, max_deg)
    return out


def random_unimodular(ctx: RingContext, d: int, rng: np.random.Generator, steps: int = 2, max_deg: int = 1) -> Unimodular:
    """Product of constant unit diagonals and elementary matrices with
    polynomial entries; the inverse is tracked alongside."""
    U = identity_matrix(ctx, d)
    V = identity_matrix(ctx, d)
    units = []
    for _ in range(d):
        c = int(rng.integers(1, ctx.q))
        while c % ctx.p == 0:
            c = int(rng.integers(1, ctx.q))
        units.append(c)
    D = ctx.ring.zeros((d, d, ctx.M))
    Dinv = ctx.ring.zeros((d, d, ctx.M))
    for i, c in enumerate(units):
        D[i, i, 0] = c
        Dinv[i, i, 0] = pow(c, -1, ctx.q)
    U, V = D, Dinv
    if d > 1:
        for _ in range(steps):
            i, j = (int(x) for x in rng.choice(d, 2, replace=False))
            c = random_poly(ctx, rng, max_deg)
            El = identity_matrix(ctx, d)
            El[i, j] = c
            Einv = identity_matrix(ctx, d)
            Einv[i, j] = np.mod(-c, ctx.q)
            U = exact_product(ctx, U, El)
            V = exact_product(ctx, Einv, V)
    return Unimodular(U, V)


def random_kisin(ctx: RingContext, d: int, r: int, rng: np.random.Generator, exponents: Sequence[int] | None = None,
                 steps: int = 2, max_deg: int = 1) -> KisinModule:
    """Phi = U diag(E^t_1, ..., E^t_d) V with t_i <= r; height <= r by construction."""
    t = list(exponents) if exponents is not None else [int(x) for x in rng.integers(0, r + 1, d)]
    diag = ctx.ring.zeros((d, d, ctx.M))
    for i, ti in enumerate(t):
        diag[i, i] = e_power(ctx, ti)
    U = random_unimodular(ctx, d, rng, steps, max_deg).matrix
    V = random_unimodular(ctx, d, rng, steps, max_deg).matrix
    return make_kisin(ctx, d, exact_product(ctx, exact_product(ctx, U, diag), V))


@dataclass
class Extension:
    middle: KisinModule
    inclusion: KisinMorphism
    projection: KisinMorphism


ARBITRARY = "arbitrary"
COMPATIBLE = "compatible"


def random_extension(m1: KisinModule, m2: KisinModule, rng: np.random.Generator, offblock: str = COMPATIBLE,
                     basis_change: bool = True, max_deg: int = 1) -> Extension:
    """Block upper-triangular extension 0 -> m1 -> X -> m2 -> 0.

    ``arbitrary`` draws the off-diagonal block C freely; ``compatible`` draws
    C = Phi1 A + B Phi2, which keeps X of height <= r whenever m1 and m2 are.
    A random change of basis P then replaces Phi_X by P^{-1} Phi_X phi(P)."""
    _same_ctx(m1, m2)
    ctx = m1.ctx
    d1, d2 = m1.rank, m2.rank
    if offblock == ARBITRARY:
        C = random_poly_matrix(ctx, rng, d1, d2, max_deg + 1)
    elif offblock == COMPATIBLE:
        A = random_poly_matrix(ctx, rng, d1, d2, max_deg)
        B = random_poly_matrix(ctx, rng, d1, d2, max_deg)
        C = np.mod(exact_product(ctx, m1.frobenius, A) + exact_product(ctx, B, m2.frobenius), ctx.q)
    else:
        raise ValueError(f"unknown off-block kind {offblock!r}")
    d = d1 + d2
    phi = ctx.ring.zeros((d, d, ctx.M))
    phi[:d1, :d1] = m1.frobenius
    phi[:d1, d1:] = C
    phi[d1:, d1:] = m2.frobenius
    inc = ctx.ring.zeros((d, d1, ctx.M))
    inc[:d1] = identity_matrix(ctx, d1)
    proj = ctx.ring.zeros((d2, d, ctx.M))
    proj[:, d1:] = identity_matrix(ctx, d2)
    if basis_change:
        P = random_unimodular(ctx, d, rng, steps=2, max_deg=1)
        phi = exact_product(ctx, exact_product(ctx, P.inverse, phi), frobenius_matrix(ctx, P.matrix))
        inc = exact_product(ctx, P.inverse, inc)
        proj = exact_product(ctx, proj, P.matrix)
    X = make_kisin(ctx, d, phi)
    return Extension(X, make_morphism(m1, X, inc), make_morphism(X, m2, proj))
