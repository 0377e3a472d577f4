"""Dense polynomial arithmetic over Z/q with unbounded degree.

Frobenius matrices of Kisin modules have polynomial entries, so determinants,
minors and E-adic valuations can be computed without truncating in u.
Polynomials are little-endian tuples of residues with no trailing zeros.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

Poly = tuple

_SAFE = 1 << 62


def trim(a) -> Poly:
    a = [int(x) for x in a]
    while a and a[-1] == 0:
        a.pop()
    return tuple(a)


def reduce(a, q: int) -> Poly:
    return trim(int(x) % q for x in a)


def add(a: Poly, b: Poly, q: int) -> Poly:
    n = max(len(a), len(b))
    return trim(((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0)) % q for i in range(n))


def neg(a: Poly, q: int) -> Poly:
    return trim((-x) % q for x in a)


def scale(a: Poly, c: int, q: int) -> Poly:
    return trim((x * c) % q for x in a)


def mul(a: Poly, b: Poly, q: int) -> Poly:
    if not a or not b:
        return ()
    if q * q * min(len(a), len(b)) < _SAFE:
        out = np.convolve(np.array(a, dtype=np.int64), np.array(b, dtype=np.int64))
        return trim(np.mod(out, q).tolist())
    out = np.convolve(np.array(a, dtype=object), np.array(b, dtype=object))
    return trim(x % q for x in out)


def power(a: Poly, k: int, q: int) -> Poly:
    out: Poly = (1 % q,) if q > 1 else ()
    for _ in range(k):
        out = mul(out, a, q)
    return out


def divmod_monic(a: Poly, m: Poly, q: int) -> tuple[Poly, Poly]:
    """Division by a monic polynomial, exact over Z/q."""
    if not m or m[-1] != 1:
        raise ValueError("divisor must be monic")
    a = list(a)
    dm = len(m) - 1
    if len(a) <= dm:
        return (), trim(a)
    quot = [0] * (len(a) - dm)
    for k in range(len(a) - 1, dm - 1, -1):
        c = a[k] % q
        if c:
            quot[k - dm] = c
            for i, mi in enumerate(m):
                a[k - dm + i] = (a[k - dm + i] - c * mi) % q
    return trim(quot), trim(x % q for x in a[:dm])


def e_valuation(a: Poly, E: Poly, q: int, cap: int | None = None) -> tuple[int | None, Poly]:
    """Largest h with E^h | a (None for a = 0), and the cofactor a / E^h."""
    if not a:
        return None, ()
    h = 0
    while cap is None or h < cap:
        quot, rem = divmod_monic(a, E, q)
        if rem:
            break
        a = quot
        h += 1
        if not a:
            return None, ()
    return h, a


def det(mat: list[list[Poly]], q: int) -> Poly:
    """Determinant by Laplace expansion along rows, memoized on column sets."""
    n = len(mat)
    if n == 0:
        return (1 % q,)
    memo: dict[tuple[int, int], Poly] = {}

    def rec(row: int, cols: int) -> Poly:
        if row == n:
            return (1 % q,)
        key = (row, cols)
        if key in memo:
            return memo[key]
        acc: Poly = ()
        sign = 1
        for c in range(n):
            if cols >> c & 1:
                continue
            entry = mat[row][c]
            if entry:
                term = mul(entry, rec(row + 1, cols | (1 << c)), q)
                acc = add(acc, term if sign > 0 else neg(term, q), q)
            sign = -sign
        memo[key] = acc
        return acc

    return rec(0, 0)


def minors(mat: list[list[Poly]], k: int, q: int):
    """All k x k minors, as (rows, cols, value)."""
    n, m = len(mat), len(mat[0]) if mat else 0
    for rows in combinations(range(n), k):
        for cols in combinations(range(m), k):
            sub = [[mat[i][j] for j in cols] for i in rows]
            yield rows, cols, det(sub, q)


def adjugate(mat: list[list[Poly]], q: int) -> list[list[Poly]]:
    """adj[i][j] = (-1)^(i+j) det(mat without row j and column i)."""
    n = len(mat)
    if n == 1:
        return [[(1 % q,)]]
    out = [[() for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            sub = [[mat[r][c] for c in range(n) if c != i] for r in range(n) if r != j]
            d = det(sub, q)
            out[i][j] = d if (i + j) % 2 == 0 else neg(d, q)
    return out
