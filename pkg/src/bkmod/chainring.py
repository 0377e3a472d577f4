"""Linear algebra over the finite chain ring Z/p^N.

Everything module-theoretic in the package is reduced to row spans of
integer matrices modulo p^N.  Row spans are represented canonically by
their Howell form, which makes membership, equality, kernels, intersections
and preimages decidable by elimination alone.

Conventions: vectors are rows, a matrix ``m`` acts by ``x -> x @ m``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import ContextMismatch, DimensionMismatch, NotAMorphism

# q*q must fit comfortably in a signed 64-bit word for in-place row operations.
_WORD_LIMIT = 1 << 31


@dataclass(frozen=True)
class ChainRing:
    """The ring Z/p^N.  Residues live in numpy int64 arrays when p^N is
    small enough for exact word arithmetic and in object arrays otherwise."""

    p: int
    N: int

    def __post_init__(self):
        if self.p < 2 or self.N < 1:
            raise ValueError(f"bad chain ring parameters p={self.p}, N={self.N}")

    @cached_property
    def q(self) -> int:
        return self.p ** self.N

    @cached_property
    def machine_words(self) -> bool:
        return self.q < _WORD_LIMIT

    @property
    def dtype(self):
        return np.int64 if self.machine_words else object

    def array(self, data) -> np.ndarray:
        """Reduce arbitrary integer data into a residue array of this ring."""
        if isinstance(data, np.ndarray) and data.dtype != object and self.machine_words:
            return np.mod(data.astype(np.int64, copy=False), self.q)
        arr = np.array(data, dtype=object)
        arr = np.mod(arr, self.q)
        if self.machine_words:
            return arr.astype(np.int64)
        return arr

    def zeros(self, shape) -> np.ndarray:
        if self.machine_words:
            return np.zeros(shape, dtype=np.int64)
        out = np.empty(shape, dtype=object)
        out.fill(0)
        return out

    def identity(self, n: int) -> np.ndarray:
        out = self.zeros((n, n))
        for i in range(n):
            out[i, i] = 1
        return out

    def valuation(self, x: int) -> int:
        x = int(x) % self.q
        if x == 0:
            return self.N
        v = 0
        while x % self.p == 0:
            x //= self.p
            v += 1
        return v

    def valuations(self, arr: np.ndarray) -> np.ndarray:
        """Elementwise p-adic valuation, with v(0) = N."""
        arr = np.asarray(arr)
        v = np.zeros(arr.shape, dtype=np.int64)
        pk = 1
        for _ in range(self.N):
            pk *= self.p
            v += (np.mod(arr, pk) == 0).astype(np.int64)
        return v

    def inverse(self, x: int) -> int:
        return pow(int(x) % self.q, -1, self.q)

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.asarray(a)
        b = np.asarray(b)
        if a.shape[-1] != b.shape[0]:
            raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
        if not self.machine_words:
            return np.mod(a.astype(object) @ b.astype(object), self.q)
        inner = max(1, a.shape[-1])
        chunk = max(1, ((1 << 62) // (self.q * self.q)))
        if inner <= chunk:
            return np.mod(a.astype(np.int64) @ b.astype(np.int64), self.q)
        out = np.zeros(a.shape[:-1] + b.shape[1:], dtype=np.int64)
        for s in range(0, inner, chunk):
            out = np.mod(out + a[..., s:s + chunk] @ b[s:s + chunk], self.q)
        return out

    def restrict(self, N: int) -> "ChainRing":
        return ChainRing(self.p, N)


@dataclass(frozen=True)
class ChainScalar:
    value: int
    ring: ChainRing

    def __post_init__(self):
        object.__setattr__(self, "value", int(self.value) % self.ring.q)

    @property
    def valuation(self) -> int:
        return self.ring.valuation(self.value)

    def _coerce(self, other) -> int:
        if isinstance(other, ChainScalar):
            if other.ring != self.ring:
                raise ContextMismatch("scalars from different chain rings")
            return other.value
        return int(other)

    def __add__(self, other):
        return ChainScalar(self.value + self._coerce(other), self.ring)

    def __sub__(self, other):
        return ChainScalar(self.value - self._coerce(other), self.ring)

    def __mul__(self, other):
        return ChainScalar(self.value * self._coerce(other), self.ring)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return ChainScalar(-self.value, self.ring)

    def __int__(self):
        return self.value


@dataclass(frozen=True, eq=False)
class ChainMatrix:
    ring: ChainRing
    entries: np.ndarray

    def __post_init__(self):
        arr = self.ring.array(self.entries)
        if arr.ndim != 2:
            raise DimensionMismatch("a chain matrix must be two-dimensional")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @classmethod
    def from_rows(cls, ring: ChainRing, rows: Sequence[Sequence[int]], cols: int | None = None):
        rows = [list(r) for r in rows]
        if not rows:
            return cls(ring, ring.zeros((0, cols or 0)))
        return cls(ring, np.array(rows, dtype=object))

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    def __matmul__(self, other: "ChainMatrix") -> "ChainMatrix":
        if other.ring != self.ring:
            raise ContextMismatch("matrices from different chain rings")
        return ChainMatrix(self.ring, self.ring.matmul(self.entries, other.entries))

    def __eq__(self, other):
        return (
            isinstance(other, ChainMatrix)
            and other.ring == self.ring
            and other.entries.shape == self.entries.shape
            and bool(np.all(other.entries == self.entries))
        )

    def __hash__(self):
        return hash((self.ring, self.entries.shape, tuple(int(x) for x in self.entries.flat)))

    def tolist(self) -> list[list[int]]:
        return [[int(x) for x in row] for row in self.entries]


@dataclass(frozen=True, eq=False)
class HowellForm:
    """Canonical echelon representative of a row span in (Z/p^N)^ncols."""

    ring: ChainRing
    matrix: np.ndarray
    pivots: tuple[tuple[int, int, int], ...]
    ncols: int

    @property
    def rank(self) -> int:
        return len(self.pivots)

    @property
    def log_size(self) -> int:
        """log_p of the number of elements of the span."""
        return sum(self.ring.N - v for _, _, v in self.pivots)

    @property
    def cardinality(self) -> int:
        return self.ring.p ** self.log_size

    def is_zero(self) -> bool:
        return not self.pivots

    def is_full(self) -> bool:
        return len(self.pivots) == self.ncols and all(v == 0 for _, _, v in self.pivots)

    def as_matrix(self) -> ChainMatrix:
        return ChainMatrix(self.ring, self.matrix)

    def __eq__(self, other):
        return (
            isinstance(other, HowellForm)
            and other.ring == self.ring
            and other.ncols == self.ncols
            and other.pivots == self.pivots
            and bool(np.all(other.matrix == self.matrix))
        )

    def __hash__(self):
        return hash((self.ring, self.ncols, self.pivots))

    def __contains__(self, v) -> bool:
        return membership(v, self)


class _NotNilpotent:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NotNilpotent"


NotNilpotent = _NotNilpotent()


@dataclass(frozen=True, eq=False)
class FPModule:
    """The finitely presented module (Z/p^N)^ambient_rank / relations."""

    ring: ChainRing
    ambient_rank: int
    relations: HowellForm

    @property
    def log_cardinality(self) -> int:
        # Each column contributes the valuation of its pivot, or N if it has none.
        pivot_val = {c: v for _, c, v in self.relations.pivots}
        return sum(pivot_val.get(c, self.ring.N) for c in range(self.ambient_rank))

    @property
    def cardinality(self) -> int:
        return self.ring.p ** self.log_cardinality

    def is_zero(self) -> bool:
        return self.log_cardinality == 0


def _as_array(ring: ChainRing, m) -> np.ndarray:
    if isinstance(m, ChainMatrix):
        if m.ring != ring:
            raise ContextMismatch("matrix belongs to a different chain ring")
        return m.entries
    if isinstance(m, HowellForm):
        if m.ring != ring:
            raise ContextMismatch("span belongs to a different chain ring")
        return m.matrix
    return ring.array(m)


def howell_array(ring: ChainRing, a: np.ndarray, ncols: int | None = None) -> HowellForm:
    """Howell form of the row span of a residue array."""
    a = np.asarray(a)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    m = a.shape[0]
    n = a.shape[1] if ncols is None else ncols
    if a.shape[1] != n:
        raise DimensionMismatch(f"expected {n} columns, got {a.shape[1]}")
    p, q, N = ring.p, ring.q, ring.N
    # Room for one extra row per pivot, needed for the Howell property.
    work = ring.zeros((m + n, n))
    if m:
        work[:m] = ring.array(a)
    nrows = m
    r = 0
    pivots: list[tuple[int, int, int]] = []
    for c in range(n):
        if r >= nrows:
            break
        col = work[r:nrows, c]
        nz = np.nonzero(col)[0]
        if nz.size == 0:
            continue
        vals = ring.valuations(col[nz])
        k = int(np.argmin(vals))
        v = int(vals[k])
        i = r + int(nz[k])
        if i != r:
            work[[r, i]] = work[[i, r]]
        pv = p ** v
        unit = int(work[r, c]) // pv
        if unit != 1:
            work[r] = np.mod(work[r] * ring.inverse(unit), q)
        below = r + 1 + np.nonzero(work[r + 1:nrows, c])[0]
        if below.size:
            f = work[below, c] // pv
            work[below] = np.mod(work[below] - np.outer(f, work[r]), q)
        if v > 0:
            extra = np.mod(work[r] * (p ** (N - v)), q)
            if np.any(extra):
                work[nrows] = extra
                nrows += 1
        pivots.append((r, c, v))
        r += 1
    for k, c, v in pivots:
        if k == 0:
            continue
        pv = p ** v
        f = work[:k, c] // pv
        if np.any(f):
            work[:k] = np.mod(work[:k] - np.outer(f, work[k]), q)
    out = work[:r].copy()
    out.setflags(write=False)
    return HowellForm(ring, out, tuple(pivots), n)


def howell(m: ChainMatrix) -> HowellForm:
    """Canonical Howell form of the row span of ``m``."""
    return howell_array(m.ring, m.entries, m.cols)


def reduce_rows(vectors: np.ndarray, span: HowellForm) -> np.ndarray:
    """Reduce each row of ``vectors`` against ``span``; rows reduce to zero iff they
    are members.  Rows that are not members keep a nonzero residue."""
    ring = span.ring
    v = ring.array(vectors)
    if v.ndim == 1:
        v = v.reshape(1, -1)
    if v.shape[1] != span.ncols:
        raise DimensionMismatch(f"vector length {v.shape[1]} against span of width {span.ncols}")
    v = v.copy()
    for k, c, val in span.pivots:
        pv = ring.p ** val
        col = v[:, c]
        ok = np.mod(col, pv) == 0
        f = np.where(ok, col // pv, 0)
        if np.any(f):
            v = np.mod(v - np.outer(f, span.matrix[k]), ring.q)
    return v


def membership(v, span: HowellForm) -> bool:
    res = reduce_rows(np.asarray(v).reshape(1, -1), span)
    return not np.any(res)


def members(vectors: np.ndarray, span: HowellForm) -> np.ndarray:
    """Boolean mask of which rows of ``vectors`` lie in ``span``."""
    vectors = np.asarray(vectors)
    if vectors.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    res = reduce_rows(vectors, span)
    return ~np.any(res != 0, axis=1)


def contains(big: HowellForm, small: HowellForm) -> bool:
    """True iff span(small) is a subset of span(big)."""
    if small.is_zero():
        return True
    return bool(np.all(members(small.matrix, big)))


def zero_span(ring: ChainRing, ncols: int) -> HowellForm:
    return howell_array(ring, ring.zeros((0, ncols)), ncols)


def full_span(ring: ChainRing, ncols: int) -> HowellForm:
    return howell_array(ring, ring.identity(ncols), ncols)


def span_sum(*spans: HowellForm) -> HowellForm:
    ring = spans[0].ring
    n = spans[0].ncols
    for s in spans:
        if s.ncols != n:
            raise DimensionMismatch("spans of different width")
        if s.ring != ring:
            raise ContextMismatch("spans over different chain rings")
    rows = [s.matrix for s in spans if s.rank]
    if not rows:
        return zero_span(ring, n)
    return howell_array(ring, np.vstack(rows), n)


def scale_span(span: HowellForm, c: int) -> HowellForm:
    return howell_array(span.ring, np.mod(span.matrix * int(c), span.ring.q), span.ncols)


def image(m) -> HowellForm:
    if isinstance(m, ChainMatrix):
        return howell(m)
    raise TypeError("image expects a ChainMatrix")


def image_of_span(span: HowellForm, m: np.ndarray, ncols: int) -> HowellForm:
    """Span of {x @ m : x in span}."""
    if span.is_zero():
        return zero_span(span.ring, ncols)
    return howell_array(span.ring, span.ring.matmul(span.matrix, m), ncols)


def _split_trailing(h: HowellForm, split: int, width: int) -> HowellForm:
    rows = [k for k, c, _ in h.pivots if c >= split]
    if not rows:
        return zero_span(h.ring, width)
    return howell_array(h.ring, h.matrix[rows, split:], width)


def kernel_array(ring: ChainRing, m: np.ndarray) -> HowellForm:
    m = ring.array(m)
    nr, nc = m.shape
    aug = np.hstack([m, ring.identity(nr)])
    h = howell_array(ring, aug, nc + nr)
    return _split_trailing(h, nc, nr)


def kernel(m: ChainMatrix) -> HowellForm:
    """Howell form of {x : x @ m = 0}."""
    return kernel_array(m.ring, m.entries)


def intersect(a: HowellForm, b: HowellForm) -> HowellForm:
    """Intersection of two spans, by the Zassenhaus block construction."""
    if a.ring != b.ring:
        raise ContextMismatch("spans over different chain rings")
    if a.ncols != b.ncols:
        raise DimensionMismatch("spans of different width")
    ring, n = a.ring, a.ncols
    if a.is_zero() or b.is_zero():
        return zero_span(ring, n)
    top = np.hstack([a.matrix, a.matrix])
    bottom = np.hstack([b.matrix, ring.zeros(b.matrix.shape)])
    h = howell_array(ring, np.vstack([top, bottom]), 2 * n)
    return _split_trailing(h, n, n)


def preimage_array(ring: ChainRing, m: np.ndarray, target: HowellForm) -> HowellForm:
    m = ring.array(m)
    nr, nc = m.shape
    if nc != target.ncols:
        raise DimensionMismatch(f"map lands in width {nc}, target has width {target.ncols}")
    top = np.hstack([m, ring.identity(nr)])
    blocks = [top]
    if target.rank:
        blocks.append(np.hstack([target.matrix, ring.zeros((target.rank, nr))]))
    h = howell_array(ring, np.vstack(blocks), nc + nr)
    return _split_trailing(h, nc, nr)


def preimage(m: ChainMatrix, target: HowellForm) -> HowellForm:
    """Howell form of {x : x @ m in span(target)}."""
    if m.ring != target.ring:
        raise ContextMismatch("map and target over different chain rings")
    return preimage_array(m.ring, m.entries, target)


def solver(ring: ChainRing, generators: np.ndarray):
    """Prepare repeated solves of c @ generators = v.  Returns a function mapping
    a batch of vectors to (coefficients, ok-mask)."""
    g = ring.array(generators)
    k, n = g.shape
    aug = np.hstack([g, ring.identity(k)])
    h = howell_array(ring, aug, n + k)
    lead = [(row, c, v) for row, c, v in h.pivots if c < n]

    def run(vectors: np.ndarray):
        v = ring.array(vectors)
        if v.ndim == 1:
            v = v.reshape(1, -1)
        work = np.hstack([v, ring.zeros((v.shape[0], k))])
        for row, c, val in lead:
            pv = ring.p ** val
            col = work[:, c]
            okc = np.mod(col, pv) == 0
            f = np.where(okc, col // pv, 0)
            if np.any(f):
                work = np.mod(work - np.outer(f, h.matrix[row]), ring.q)
        ok = ~np.any(work[:, :n] != 0, axis=1)
        coeffs = np.mod(-work[:, n:], ring.q)
        return coeffs, ok

    return run


def solve(v, generators: ChainMatrix) -> np.ndarray | None:
    """Coefficients c with c @ generators = v, or None if v is not in the span."""
    gens = generators.entries if isinstance(generators, ChainMatrix) else generators
    ring = generators.ring if isinstance(generators, ChainMatrix) else None
    if ring is None:
        raise TypeError("solve expects a ChainMatrix of generators")
    coeffs, ok = solver(ring, gens)(np.asarray(v).reshape(1, -1))
    if not ok[0]:
        return None
    return coeffs[0]


def quotient_presentation(sub: HowellForm, ambient_rank: int) -> FPModule:
    if sub.ncols != ambient_rank:
        raise DimensionMismatch("submodule does not live in the stated ambient rank")
    return FPModule(sub.ring, ambient_rank, sub)


def nilpotency_degree(action: ChainMatrix, module: FPModule):
    """Least k with action^k acting as zero on the module, else NotNilpotent.

    The action is x -> x @ action on the ambient free module and must map the
    relations into themselves."""
    ring = module.ring
    n = module.ambient_rank
    if action.rows != n or action.cols != n:
        raise DimensionMismatch("action must be square of the ambient rank")
    rel = module.relations
    if rel.rank and not np.all(members(ring.matmul(rel.matrix, action.entries), rel)):
        raise NotAMorphism("action does not preserve the relations")
    power = ring.identity(n)
    for k in range(1, ring.N * max(n, 1) + 1):
        power = ring.matmul(power, action.entries)
        if np.all(members(power, rel)):
            return k
    return NotNilpotent


def project_span(span: HowellForm, N: int | None = None, columns: Iterable[int] | None = None) -> HowellForm:
    """Image of a span under reduction to Z/p^N' and a coordinate projection."""
    ring = span.ring if N is None else span.ring.restrict(N)
    cols = list(range(span.ncols)) if columns is None else list(columns)
    if span.is_zero():
        return zero_span(ring, len(cols))
    return howell_array(ring, span.matrix[:, cols], len(cols))
