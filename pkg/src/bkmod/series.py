"""Truncated arithmetic in S_frak = Z_p[[u]] and in the divided-power ring S.

Elements are coefficient vectors of length M over Z/p^N.  For S the basis is
b_n = u^n / floor(n/e)!, so products are governed by the integer structure
constants kappa(a, b) = floor((a+b)/e)! / (floor(a/e)! floor(b/e)!).

Both truncations are quotients by ideals stable under Frobenius and under the
derivation N, so the induced operators on coefficient vectors are exact.  The
public Frobenius functions still refuse inputs whose image would leave the
window (the ``guard``); internal callers that only need the induced operator on
the quotient ring pass ``guard=False``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar, Sequence

import numpy as np

from .chainring import ChainMatrix, ChainRing, HowellForm, howell_array, members, project_span
from .errors import (
    ContextMismatch,
    DimensionMismatch,
    ExactDivisionError,
    FilMembershipError,
    InsufficientPrecision,
    NotEisenstein,
)
from .report import Verdict

SIGMA = "sigma"
S_RING = "s"


def _vp(x: int, p: int) -> int:
    if x == 0:
        raise ValueError("valuation of zero")
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % d for d in range(2, math.isqrt(p) + 1))


@dataclass(frozen=True)
class EisensteinPoly:
    """E(u) = u^e + a_{e-1} u^{e-1} + ... + a_0, coefficients little-endian.

    The stored residues in [0, p^N) are taken as the integer lift of E, so
    c_0 = a_0 / p and c_1 are computed exactly from them."""

    p: int
    N: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if not _is_prime(self.p):
            raise ValueError(f"p = {self.p} is not prime")
        q = self.p ** self.N
        cs = tuple(int(c) % q for c in self.coeffs)
        object.__setattr__(self, "coeffs", cs)
        if len(cs) < 2:
            raise NotEisenstein("E must have degree at least 1")
        if cs[-1] != 1:
            raise NotEisenstein(f"E must be monic, leading coefficient is {cs[-1]}")
        if self.N < 2:
            raise NotEisenstein("p-adic precision N >= 2 is needed to certify v_p(a_0) = 1")
        for i, a in enumerate(cs[:-1]):
            if a % self.p:
                raise NotEisenstein(f"coefficient a_{i} = {a} is not divisible by p = {self.p}")
        if cs[0] % (self.p * self.p) == 0:
            raise NotEisenstein(f"v_p(a_0) must be exactly 1, got a_0 = {cs[0]}")

    @property
    def e(self) -> int:
        return len(self.coeffs) - 1

    @property
    def c0(self) -> int:
        return self.coeffs[0] // self.p


@dataclass(frozen=True)
class RingContext:
    p: int
    N: int
    M: int
    E: EisensteinPoly
    _cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if not _is_prime(self.p):
            raise ValueError(f"p = {self.p} is not prime")
        if self.N < 1 or self.M < 1:
            raise ValueError("N and M must be positive")
        if self.E.p != self.p or self.E.N != self.N:
            raise ContextMismatch("Eisenstein polynomial built for a different (p, N)")
        self._kappa_exact  # integrality of the structure constants is asserted here

    @classmethod
    def create(cls, p: int, N: int, M: int, E: Sequence[int]) -> "RingContext":
        return cls(p, N, M, EisensteinPoly(p, N, tuple(E)))

    @classmethod
    def counterexample(cls, p: int, N: int, M: int) -> "RingContext":
        """The context with E = u^{p-1} + p."""
        return cls.create(p, N, M, [p] + [0] * (p - 2) + [1])

    @property
    def e(self) -> int:
        return self.E.e

    @property
    def q(self) -> int:
        return self.p ** self.N

    @property
    def ring(self) -> ChainRing:
        return ChainRing(self.p, self.N)

    def chain(self, N: int | None = None) -> ChainRing:
        return ChainRing(self.p, self.N if N is None else N)

    @property
    def frobenius_bound(self) -> int:
        """Inputs to the guarded Frobenius must have support below this degree."""
        return -(-self.M // self.p)

    def echo(self) -> dict:
        return {"p": self.p, "N": self.N, "M": self.M, "E": list(self.E.coeffs)}

    # exact integer tables --------------------------------------------------

    @cached_property
    def qfact(self) -> list[int]:
        """floor(n/e)! for 0 <= n < p*M."""
        return [math.factorial(n // self.e) for n in range(self.p * self.M + 1)]

    @cached_property
    def _kappa_exact(self) -> list[list[int]]:
        f = self.qfact
        M = self.M
        out = [[0] * M for _ in range(M)]
        for i in range(M):
            for n in range(i, M):
                num, den = f[n], f[i] * f[n - i]
                if num % den:
                    raise ExactDivisionError(f"kappa({i},{n - i}) is not an integer")
                out[i][n] = num // den
        return out

    @cached_property
    def phi_weights(self) -> list[int]:
        """phi(b_n) = w_n b_{pn}, w_n = floor(pn/e)! / floor(n/e)!, for pn < M."""
        f = self.qfact
        return [f[self.p * n] // f[n] for n in range(self.frobenius_bound)]

    def _cached(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def kappa(self, kind: str, N: int | None = None) -> np.ndarray:
        """K[i, n] = kappa(i, n - i) for n >= i, else 0, reduced mod p^N."""
        N = self.N if N is None else N

        def build():
            ring = self.chain(N)
            if kind == SIGMA:
                return np.triu(np.ones((self.M, self.M), dtype=np.int64)).astype(ring.dtype)
            return ring.array(np.array(self._kappa_exact, dtype=object))

        return self._cached(("kappa", kind, N), build)

    # distinguished elements ------------------------------------------------

    @property
    def c0(self) -> int:
        return self.E.c0 % self.q

    @property
    def c0_inv(self) -> int:
        return pow(self.E.c0, -1, self.q)

    @cached_property
    def E_sigma(self) -> "SigmaElem":
        return SigmaElem.from_list(self, list(self.E.coeffs))

    @cached_property
    def E_s(self) -> "SElem":
        return embed_sigma(self.E_sigma)

    @cached_property
    def c1(self) -> "SElem":
        """phi_1(E) = phi(E)/p, computed exactly from the integer lift of E."""
        coeffs = [0] * self.M
        for k, a in enumerate(self.E.coeffs):
            n = self.p * k
            if n < self.M:
                coeffs[n] = (a * self.qfact[n]) // self.p
        return SElem.from_list(self, coeffs)

    def one(self, kind: str = S_RING):
        cls = SElem if kind == S_RING else SigmaElem
        return cls.from_list(self, [1])

    def u(self, kind: str = SIGMA):
        cls = SElem if kind == S_RING else SigmaElem
        if kind == SIGMA:
            return cls.from_list(self, [0, 1])
        return embed_sigma(SigmaElem.from_list(self, [0, 1]))


# ---------------------------------------------------------------------------
# elements


@dataclass(frozen=True, eq=False)
class _Elem:
    ctx: RingContext
    coeffs: np.ndarray
    prec: int = -1

    kind: ClassVar[str] = ""

    def __post_init__(self):
        prec = self.ctx.N if self.prec < 0 else self.prec
        if prec > self.ctx.N:
            raise ValueError("precision cannot exceed the context precision")
        object.__setattr__(self, "prec", prec)
        ring = self.ctx.chain(max(prec, 1))
        arr = ring.array(self.coeffs) if prec > 0 else np.zeros(self.ctx.M, dtype=np.int64)
        if arr.shape != (self.ctx.M,):
            raise DimensionMismatch(f"expected {self.ctx.M} coefficients, got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def from_list(cls, ctx: RingContext, values: Sequence[int], prec: int = -1):
        values = list(values)
        if len(values) > ctx.M:
            if any(int(v) for v in values[ctx.M:]):
                raise InsufficientPrecision("coefficients beyond the truncation order M")
            values = values[: ctx.M]
        arr = np.array(values + [0] * (ctx.M - len(values)), dtype=object)
        return cls(ctx, arr, prec)

    @classmethod
    def zero(cls, ctx: RingContext):
        return cls.from_list(ctx, [])

    def _check(self, other) -> "_Elem":
        if isinstance(other, int):
            return type(self).from_list(self.ctx, [other])
        if type(other) is not type(self):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.ctx != self.ctx:
            raise ContextMismatch("elements from different ring contexts")
        return other

    def _q(self, prec: int) -> int:
        return self.ctx.p ** prec

    def __add__(self, other):
        other = self._check(other)
        prec = min(self.prec, other.prec)
        return type(self)(self.ctx, np.mod(self.coeffs + other.coeffs, self._q(prec)), prec)

    __radd__ = __add__

    def __neg__(self):
        return type(self)(self.ctx, np.mod(-self.coeffs, self._q(self.prec)), self.prec)

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        other = self._check(other)
        prec = min(self.prec, other.prec)
        out = mul_arrays(self.ctx, self.kind, self.coeffs, other.coeffs, prec)
        return type(self)(self.ctx, out, prec)

    __rmul__ = __mul__

    def scale(self, c: int):
        return type(self)(self.ctx, np.mod(self.coeffs * int(c), self._q(self.prec)), self.prec)

    def reduce(self, prec: int):
        return type(self)(self.ctx, self.coeffs, min(prec, self.prec))

    def __eq__(self, other):
        if isinstance(other, int):
            other = self._check(other)
        if type(other) is not type(self) or other.ctx != self.ctx:
            return NotImplemented
        q = self._q(min(self.prec, other.prec))
        return bool(np.all(np.mod(self.coeffs, q) == np.mod(other.coeffs, q)))

    def __hash__(self):
        return hash((self.kind, self.ctx, tuple(int(x) for x in self.coeffs)))

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def support(self) -> int:
        """One more than the highest degree with a nonzero coefficient."""
        nz = np.nonzero(self.coeffs)[0]
        return int(nz[-1]) + 1 if nz.size else 0

    def tolist(self) -> list[int]:
        return [int(x) for x in self.coeffs]

    def __repr__(self):
        return f"{type(self).__name__}({render_coeffs(self.tolist(), self.kind)}; prec={self.prec})"


class SigmaElem(_Elem):
    kind: ClassVar[str] = SIGMA


class SElem(_Elem):
    kind: ClassVar[str] = S_RING


def render_coeffs(coeffs: Sequence[int], kind: str) -> str:
    """Canonical rendering: ``c0 + c1*u - c2*u^2`` or ``a0*b0 + a1*b1``.

    Zero coefficients are omitted and the zero element renders as ``0``."""
    out = ""
    for n, c in enumerate(coeffs):
        c = int(c)
        if not c:
            continue
        if kind == S_RING:
            t = f"{abs(c)}*b{n}"
        elif n == 0:
            t = f"{abs(c)}"
        elif n == 1:
            t = f"{abs(c)}*u"
        else:
            t = f"{abs(c)}*u^{n}"
        if not out:
            out = t if c > 0 else "-" + t
        else:
            out += (" + " if c > 0 else " - ") + t
    return out or "0"


# ---------------------------------------------------------------------------
# array level arithmetic (shared by the module layers)


def mult_matrix(ctx: RingContext, kind: str, x: np.ndarray, N: int | None = None) -> np.ndarray:
    """Matrix T of multiplication by x in the row convention: (y*x) = y @ T."""
    N = ctx.N if N is None else N
    ring = ctx.chain(N)
    M = ctx.M
    idx = np.arange(M)
    diff = idx[None, :] - idx[:, None]
    mask = diff >= 0
    x = ring.array(x)
    gathered = x[np.where(mask, diff, 0)]
    t = np.where(mask, gathered, 0)
    k = ctx.kappa(kind, N)
    if kind == SIGMA:
        return ring.array(t)
    return np.mod(t * k, ring.q)


def mul_arrays(ctx: RingContext, kind: str, a: np.ndarray, b: np.ndarray, N: int | None = None) -> np.ndarray:
    N = ctx.N if N is None else N
    ring = ctx.chain(N)
    return ring.matmul(ring.array(a).reshape(1, -1), mult_matrix(ctx, kind, b, N))[0]


def mat_product(ctx: RingContext, kind: str, A: np.ndarray, B: np.ndarray, N: int | None = None) -> np.ndarray:
    """Product of matrices over the ring; A has shape (r, k, M), B (k, c, M)."""
    N = ctx.N if N is None else N
    ring = ctx.chain(N)
    A = ring.array(A)
    B = ring.array(B)
    r, k, M = A.shape
    k2, c, _ = B.shape
    if k != k2:
        raise DimensionMismatch(f"inner dimensions {k} and {k2} differ")
    out = ring.zeros((r, c, M))
    for l in range(k):
        for j in range(c):
            if not np.any(B[l, j]):
                continue
            t = mult_matrix(ctx, kind, B[l, j], N)
            out[:, j, :] = np.mod(out[:, j, :] + ring.matmul(A[:, l, :], t), ring.q)
    return out


def mat_vec(ctx: RingContext, kind: str, A: np.ndarray, x: np.ndarray, N: int | None = None) -> np.ndarray:
    """A (r, k, M) applied to a column vector x (k, M)."""
    return mat_product(ctx, kind, A, np.asarray(x)[:, None, :], N)[:, 0, :]


def scalar_matrix(ctx: RingContext, d: int, value: np.ndarray | int, N: int | None = None) -> np.ndarray:
    ring = ctx.chain(N)
    out = ring.zeros((d, d, ctx.M))
    for i in range(d):
        if isinstance(value, (int, np.integer)):
            out[i, i, 0] = int(value) % ring.q
        else:
            out[i, i] = ring.array(value)
    return out


def identity_matrix(ctx: RingContext, d: int, N: int | None = None) -> np.ndarray:
    return scalar_matrix(ctx, d, 1, N)


def flatten_map(ctx: RingContext, kind: str, A: np.ndarray, N: int | None = None) -> np.ndarray:
    """Z/p^N matrix of the ring-linear map x -> A x (A of shape (rows, cols, M)),
    in the row convention on flattened coordinates index = coord * M + degree."""
    N = ctx.N if N is None else N
    ring = ctx.chain(N)
    rows, cols, M = np.asarray(A).shape
    out = ring.zeros((cols * M, rows * M))
    for i in range(rows):
        for j in range(cols):
            if np.any(A[i, j]):
                out[j * M:(j + 1) * M, i * M:(i + 1) * M] = mult_matrix(ctx, kind, A[i, j], N)
    return out


def vectors_span(ctx: RingContext, kind: str, V: np.ndarray, N: int | None = None) -> HowellForm:
    """Flattened span of the ring-submodule of R^d generated by vectors V (k, d, M)."""
    N = ctx.N if N is None else N
    ring = ctx.chain(N)
    V = np.asarray(V)
    if V.ndim == 2:
        V = V[None]
    k, d, M = V.shape
    if k == 0:
        return howell_array(ring, ring.zeros((0, d * M)), d * M)
    blocks = []
    for g in V:
        blocks.append(np.hstack([mult_matrix(ctx, kind, g[i], N) for i in range(d)]))
    return howell_array(ring, np.vstack(blocks), d * M)


def flat(v: np.ndarray) -> np.ndarray:
    """Flatten a vector of shape (d, M) into coordinates of length d*M."""
    return np.asarray(v).reshape(-1)


def unflat(x: np.ndarray, d: int, M: int) -> np.ndarray:
    return np.asarray(x).reshape(d, M)


def frobenius_array(ctx: RingContext, kind: str, a: np.ndarray, guard: bool = True, N: int | None = None) -> np.ndarray:
    """Coefficientwise Frobenius on the last axis of ``a``."""
    N = ctx.N if N is None else N
    ring = ctx.chain(N)
    a = ring.array(a)
    bound = ctx.frobenius_bound
    if guard and np.any(a[..., bound:]):
        raise InsufficientPrecision(
            f"Frobenius input has support at degree >= M/p = {ctx.M}/{ctx.p}; enlarge M"
        )
    out = ring.zeros(a.shape)
    src = a[..., :bound]
    if kind == SIGMA:
        out[..., 0:bound * ctx.p:ctx.p] = src
    else:
        w = ring.array(np.array(ctx.phi_weights, dtype=object))
        out[..., 0:bound * ctx.p:ctx.p] = np.mod(src * w, ring.q)
    return out


def embed_array(ctx: RingContext, a: np.ndarray, N: int | None = None) -> np.ndarray:
    """u^n -> floor(n/e)! b_n on the last axis."""
    ring = ctx.chain(N)
    f = ring.array(np.array(ctx.qfact[: ctx.M], dtype=object))
    return np.mod(ring.array(a) * f, ring.q)


def derivation_array(ctx: RingContext, a: np.ndarray, N: int | None = None) -> np.ndarray:
    """N(sum a_n b_n) = sum (-n) a_n b_n; the same formula holds on S_frak."""
    ring = ctx.chain(N)
    n = ring.array(-np.arange(ctx.M))
    return np.mod(ring.array(a) * n, ring.q)


def divide_exact(ctx: RingContext, a: np.ndarray, i: int, prec: int) -> np.ndarray:
    """a / p^i where a is known mod p^prec; result known mod p^(prec - i)."""
    ring = ctx.chain(prec)
    a = ring.array(a)
    pi = ctx.p ** i
    if np.any(np.mod(a, pi)):
        raise ExactDivisionError(f"division by p^{i} is not exact")
    if prec - i <= 0:
        return np.zeros(a.shape, dtype=np.int64)
    return ctx.chain(prec - i).array(a // pi)


# ---------------------------------------------------------------------------
# public element operations


def _same_ctx(a: _Elem, b: _Elem):
    if a.ctx != b.ctx:
        raise ContextMismatch("elements from different ring contexts")


def sigma_mul(a: SigmaElem, b: SigmaElem) -> SigmaElem:
    _same_ctx(a, b)
    return a * b


def s_mul(a: SElem, b: SElem) -> SElem:
    _same_ctx(a, b)
    return a * b


def embed_sigma(a: SigmaElem) -> SElem:
    return SElem(a.ctx, embed_array(a.ctx, a.coeffs), a.prec)


def frobenius_sigma(a: SigmaElem, guard: bool = True) -> SigmaElem:
    return SigmaElem(a.ctx, frobenius_array(a.ctx, SIGMA, a.coeffs, guard), a.prec)


def frobenius_s(a: SElem, guard: bool = True) -> SElem:
    return SElem(a.ctx, frobenius_array(a.ctx, S_RING, a.coeffs, guard), a.prec)


def derivation_n(a: SElem) -> SElem:
    return SElem(a.ctx, derivation_array(a.ctx, a.coeffs), a.prec)


def derivation_n_sigma(a: SigmaElem) -> SigmaElem:
    return SigmaElem(a.ctx, derivation_array(a.ctx, a.coeffs), a.prec)


# ---------------------------------------------------------------------------
# the filtration Fil^i S


@dataclass(frozen=True)
class FilSGenerators:
    ctx: RingContext
    level: int
    generators: tuple[SElem, ...]
    j_max: int

    def span(self, N: int | None = None) -> HowellForm:
        return fil_span(self.ctx, self.level, N)


def _m0(p: int, N: int) -> int:
    m = 0
    while m - _vp_fact(m, p) < N:
        m += 1
    return m


def _vp_fact(m: int, p: int) -> int:
    v, pk = 0, p
    while pk <= m:
        v += m // pk
        pk *= p
    return v


def j_max(ctx: RingContext) -> int:
    """Beyond this index every E^j/j! vanishes modulo (p^N, b_{>=M})."""
    return -(-ctx.M // ctx.e) + _m0(ctx.p, ctx.N) - 2


def _gammas(ctx: RingContext) -> list[np.ndarray]:
    """E^j/j! in divided-power coordinates for 0 <= j <= j_max + 1."""

    def build():
        jm = j_max(ctx) + 1
        p, M = ctx.p, ctx.M
        extra = _vp_fact(jm, p)
        exp = ctx.N + extra
        f = ctx.qfact
        # u * b_n = (f[n+1] / f[n]) b_{n+1}
        shift_w = [f[n + 1] // f[n] for n in range(M)]
        coeffs = list(ctx.E.coeffs)
        cur = [1] + [0] * (M - 1)
        out = [cur]
        for j in range(1, jm + 1):
            mod = p ** exp
            acc = [0] * M
            term = list(cur)
            for k, a in enumerate(coeffs):
                if k:
                    term = [0] + [(term[n] * shift_w[n]) % mod for n in range(M - 1)]
                if a:
                    acc = [(x + a * t) % mod for x, t in zip(acc, term)]
            v = _vp(j, p) if j % p == 0 else 0
            pv = p ** v
            if any(x % pv for x in acc):
                raise ExactDivisionError(f"E^{j}/{j}! is not integral in divided-power coordinates")
            exp -= v
            mod = p ** exp
            inv = pow(j // pv, -1, mod)
            cur = [((x // pv) * inv) % mod for x in acc]
            out.append(cur)
        q = ctx.q
        return [ctx.ring.array(np.array([x % q for x in g], dtype=object)) for g in out]

    return ctx._cached(("gammas",), build)


def fil_s(ctx: RingContext, i: int) -> FilSGenerators:
    """Generators E^j/j!, i <= j <= j_max, of Fil^i S at the working precision."""
    if i < 0:
        raise ValueError("filtration level must be nonnegative")
    g = _gammas(ctx)
    jm = j_max(ctx)
    gens = tuple(SElem(ctx, g[j]) for j in range(i, jm + 1))
    if i > jm:
        gens = ()
    return FilSGenerators(ctx, i, gens, jm)


def gamma(ctx: RingContext, j: int) -> SElem:
    g = _gammas(ctx)
    if j < len(g):
        return SElem(ctx, g[j])
    return SElem.zero(ctx)


def fil_span(ctx: RingContext, i: int, N: int | None = None) -> HowellForm:
    """Flattened (Z/p^N)-span of Fil^i S inside S / (p^N, b_{>=M})."""
    N = ctx.N if N is None else N

    def build():
        ring = ctx.chain(N)
        gens = fil_s(ctx, i).generators
        if not gens:
            return howell_array(ring, ring.zeros((0, ctx.M)), ctx.M)
        rows = np.vstack([mult_matrix(ctx, S_RING, g.coeffs, N) for g in gens])
        return howell_array(ring, rows, ctx.M)

    return ctx._cached(("fil_span", i, N), build)


def fil_module_span(ctx: RingContext, i: int, d: int, N: int | None = None) -> HowellForm:
    """Flattened span of Fil^i S * S^d."""
    N = ctx.N if N is None else N

    def build():
        ring = ctx.chain(N)
        h = fil_span(ctx, i, N)
        M = ctx.M
        blocks = []
        for k in range(d):
            b = ring.zeros((h.rank, d * M))
            b[:, k * M:(k + 1) * M] = h.matrix
            blocks.append(b)
        rows = np.vstack(blocks) if blocks else ring.zeros((0, d * M))
        return howell_array(ring, rows, d * M)

    return ctx._cached(("fil_module_span", i, d, N), build)


def boundary_margin(ctx: RingContext) -> int:
    return ctx.e * (ctx.p - 1)


def fil_s_membership(a: SElem, i: int) -> Verdict:
    """PASS if a lies in Fil^i S at the working precision, FAIL if it does not
    even modulo degrees >= M - e(p-1), INDETERMINATE otherwise."""
    ctx = a.ctx
    h = fil_span(ctx, i, a.prec)
    if members(a.coeffs.reshape(1, -1), h)[0]:
        return Verdict.PASS
    cut = ctx.M - boundary_margin(ctx)
    if cut <= 0:
        return Verdict.INDETERMINATE
    coarse = project_span(h, columns=range(cut))
    if not members(a.coeffs[:cut].reshape(1, -1), coarse)[0]:
        return Verdict.FAIL
    return Verdict.INDETERMINATE


def phi_div(a: SElem, i: int, check: bool = True, guard: bool = True) -> SElem:
    """phi_i(a) = phi(a)/p^i for a in Fil^i S, at p-precision prec(a) - i."""
    ctx = a.ctx
    if i < 0 or i > ctx.p - 1:
        raise ValueError(f"phi_i is only defined for 0 <= i <= p-1, got i = {i}")
    if i > a.prec:
        raise InsufficientPrecision(f"phi_{i} needs p-precision above {i}")
    if check:
        v = fil_s_membership(a, i)
        if v is Verdict.FAIL:
            raise FilMembershipError(f"element is not in Fil^{i} S")
        if v is Verdict.INDETERMINATE:
            raise InsufficientPrecision(f"Fil^{i} S membership is undecided at this precision")
    phi = frobenius_array(ctx, S_RING, a.coeffs, guard, a.prec)
    return SElem(ctx, divide_exact(ctx, phi, i, a.prec), a.prec - i)


@dataclass(frozen=True)
class StructureMatrices:
    ctx: RingContext

    @property
    def mult_u_sigma(self) -> ChainMatrix:
        return self.mult_sigma(self.ctx.u(SIGMA))

    @property
    def mult_u_s(self) -> ChainMatrix:
        return self.mult_s(self.ctx.u(S_RING))

    def mult_sigma(self, x: SigmaElem) -> ChainMatrix:
        return ChainMatrix(self.ctx.chain(x.prec), mult_matrix(self.ctx, SIGMA, x.coeffs, x.prec))

    def mult_s(self, x: SElem) -> ChainMatrix:
        return ChainMatrix(self.ctx.chain(x.prec), mult_matrix(self.ctx, S_RING, x.coeffs, x.prec))


def flatten(ctx: RingContext) -> StructureMatrices:
    """Restriction of scalars to Z/p^N: basis u^n (resp. b_n), row convention."""
    return StructureMatrices(ctx)
