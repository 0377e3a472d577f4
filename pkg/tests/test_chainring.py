import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bkmod.chainring import (
    ChainMatrix,
    ChainRing,
    NotNilpotent,
    contains,
    full_span,
    howell,
    howell_array,
    intersect,
    kernel,
    membership,
    members,
    nilpotency_degree,
    preimage,
    quotient_presentation,
    solve,
    zero_span,
)
from bkmod.errors import DimensionMismatch, NotAMorphism

from oracles import all_matrices, kernel_set, span_set

Z9 = ChainRing(3, 2)


def cm(ring, rows):
    return ChainMatrix.from_rows(ring, rows)


def test_identity_is_its_own_howell_form():
    h = howell(cm(Z9, [[1, 0], [0, 1]]))
    assert h.matrix.tolist() == [[1, 0], [0, 1]]


def test_row_order_does_not_matter():
    assert howell(cm(Z9, [[3, 0], [0, 1]])) == howell(cm(Z9, [[0, 1], [3, 0]]))
    h = howell(cm(Z9, [[3, 0], [0, 1]]))
    assert [v for _, _, v in h.pivots] == [1, 0]


def test_howell_property_row_appears():
    # (3,0) = (3,3) - (0,3) lies in the span; it must be visible in the form.
    h = howell(cm(Z9, [[3, 3], [0, 3]]))
    assert h.matrix.tolist() == [[3, 0], [0, 3]]
    assert span_set(h.matrix.tolist(), 9, 2) == span_set([[3, 3], [0, 3]], 9, 2)


def test_membership_examples():
    span = howell(cm(Z9, [[3, 0], [0, 1]]))
    assert membership([0, 0], span)
    assert not membership([1, 0], span)
    assert membership([3, 1], span)
    assert len(span_set([[3, 0], [0, 1]], 9, 2)) == 27


def test_kernel_examples():
    assert kernel(cm(Z9, [[0, 0], [0, 0]])).is_full()
    assert kernel(cm(Z9, [[1, 0], [0, 1]])).is_zero()
    assert kernel(cm(Z9, [[3]])).matrix.tolist() == [[3]]


def test_intersect_examples():
    a = howell(cm(Z9, [[1, 0]]))
    b = howell(cm(Z9, [[0, 1]]))
    assert intersect(a, b).is_zero()
    three = howell(cm(Z9, [[3]]))
    assert intersect(three, full_span(Z9, 1)) == three
    assert intersect(three, howell(cm(Z9, [[1]]))) == three


def test_preimage_examples():
    target = howell(cm(Z9, [[3]]))
    assert preimage(cm(Z9, [[3]]), target).is_full()
    assert preimage(cm(Z9, [[1]]), target) == target
    assert preimage(cm(Z9, [[2]]), full_span(Z9, 1)).is_full()


def test_quotient_cardinalities():
    assert quotient_presentation(full_span(Z9, 2), 2).cardinality == 1
    assert quotient_presentation(zero_span(Z9, 2), 2).cardinality == 81
    assert quotient_presentation(howell(cm(Z9, [[3]])), 1).cardinality == 3


def test_nilpotency_examples():
    free = quotient_presentation(zero_span(Z9, 1), 1)
    assert nilpotency_degree(cm(Z9, [[0]]), free) == 1
    assert nilpotency_degree(cm(Z9, [[1]]), free) is NotNilpotent
    assert nilpotency_degree(cm(Z9, [[3]]), free) == 2


def test_nilpotency_rejects_non_endomorphism():
    # relations span{(1,0)}; the swap sends it outside.
    mod = quotient_presentation(howell(cm(Z9, [[1, 0]])), 2)
    with pytest.raises(NotAMorphism):
        nilpotency_degree(cm(Z9, [[0, 1], [1, 0]]), mod)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        membership([1, 2, 3], howell(cm(Z9, [[1, 0]])))


def test_solve_returns_coefficients():
    gens = cm(Z9, [[3, 0], [0, 1], [3, 1]])
    c = solve([6, 2], gens)
    assert c is not None
    assert (np.array(c) @ gens.entries % 9).tolist() == [6, 2]
    assert solve([1, 0], gens) is None


def test_large_modulus_uses_object_arithmetic():
    ring = ChainRing(7, 12)
    assert not ring.machine_words
    m = cm(ring, [[7, 49], [1, 2]])
    h = howell(m)
    assert membership([8, 51], h)
    assert kernel(m).log_size + h.log_size == ring.N * 2


@pytest.mark.parametrize("p", [2, 3])
def test_exhaustive_spans_over_p_squared(p):
    """Every matrix of shape at most 2x2 over Z/p^2: Howell forms are canonical
    for their spans and membership/kernel agree with enumeration."""
    ring = ChainRing(p, 2)
    q = p * p
    vectors = {n: np.array(list(itertools.product(range(q), repeat=n))) for n in (1, 2)}
    forms: dict = {}
    for nrows, ncols in itertools.product((1, 2), repeat=2):
        for m in all_matrices(q, nrows, ncols):
            h = howell(cm(ring, m))
            brute = span_set(m, q, ncols)
            assert h.cardinality == len(brute)
            mask = members(vectors[ncols], h)
            got = frozenset(tuple(int(x) for x in v) for v, ok in zip(vectors[ncols], mask) if ok)
            assert got == brute
            forms.setdefault((ncols, brute), set()).add((h.matrix.tobytes(), h.pivots))
            k = kernel(cm(ring, m))
            assert span_set(k.matrix.tolist(), q, nrows) == kernel_set(m, q)
    # canonicity: one form per span
    assert all(len(v) == 1 for v in forms.values())
    # number of submodules of (Z/p^2)^2 is p^2 + 3p + 5 (15 for p=2, 23 for p=3)
    n_sub = sum(1 for (ncols, _) in forms if ncols == 2)
    assert n_sub == {2: 15, 3: 23}[p]


@pytest.mark.parametrize("p", [2, 3])
def test_exhaustive_intersections(p):
    ring = ChainRing(p, 2)
    q = p * p
    spans = {}
    for m in all_matrices(q, 2, 2):
        spans.setdefault(span_set(m, q, 2), m)
    for (sa, ma), (sb, mb) in itertools.product(spans.items(), repeat=2):
        h = intersect(howell(cm(ring, ma)), howell(cm(ring, mb)))
        assert span_set(h.matrix.tolist(), q, 2) == sa & sb


small_ring = st.sampled_from([ChainRing(2, 3), ChainRing(3, 2), ChainRing(5, 2), ChainRing(3, 4)])


@st.composite
def ring_and_matrix(draw, max_rows=5, max_cols=5):
    ring = draw(small_ring)
    r = draw(st.integers(1, max_rows))
    c = draw(st.integers(1, max_cols))
    vals = draw(st.lists(st.integers(0, ring.q - 1), min_size=r * c, max_size=r * c))
    return ring, np.array(vals, dtype=np.int64).reshape(r, c)


@settings(max_examples=1000, deadline=None)
@given(data=ring_and_matrix(), seed=st.integers(0, 2**32 - 1))
def test_canonical_under_invertible_row_operations(data, seed):
    ring, m = data
    rng = np.random.default_rng(seed)
    r = m.shape[0]
    # random unimodular matrix: product of a unit-diagonal upper and lower triangle
    # and a permutation, times a diagonal of units
    upper = np.triu(rng.integers(0, ring.q, (r, r)), 1) + np.eye(r, dtype=np.int64)
    lower = np.tril(rng.integers(0, ring.q, (r, r)), -1) + np.eye(r, dtype=np.int64)
    units = [u for u in rng.integers(1, ring.q, r) if u % ring.p] + [1] * r
    diag = np.diag(units[:r])
    perm = np.eye(r, dtype=np.int64)[rng.permutation(r)]
    u = ring.matmul(ring.matmul(ring.matmul(perm, upper), lower), diag)
    assert howell_array(ring, ring.matmul(u, m)) == howell_array(ring, m)


@settings(max_examples=300, deadline=None)
@given(data=ring_and_matrix())
def test_idempotent_and_duality_count(data):
    ring, m = data
    h = howell_array(ring, m)
    assert howell_array(ring, h.matrix, m.shape[1]) == h
    k = kernel(ChainMatrix(ring, m))
    assert k.log_size + h.log_size == ring.N * m.shape[0]
    if k.rank:
        assert not np.any(ring.matmul(k.matrix, m))


@settings(max_examples=200, deadline=None)
@given(data=ring_and_matrix(max_rows=4, max_cols=3), seed=st.integers(0, 2**32 - 1))
def test_preimage_is_largest(data, seed):
    ring, m = data
    rng = np.random.default_rng(seed)
    t = howell_array(ring, rng.integers(0, ring.q, (2, m.shape[1])))
    pre = preimage(ChainMatrix(ring, m), t)
    if pre.rank:
        assert np.all(members(ring.matmul(pre.matrix, m), t))
    samples = rng.integers(0, ring.q, (20, m.shape[0]))
    inside = members(samples, pre)
    images_ok = members(ring.matmul(samples, m), t)
    assert np.array_equal(inside, images_ok)


@settings(max_examples=200, deadline=None)
@given(a=ring_and_matrix(max_rows=3, max_cols=3), seed=st.integers(0, 2**32 - 1))
def test_intersection_is_contained_in_both(a, seed):
    ring, m = a
    rng = np.random.default_rng(seed)
    other = rng.integers(0, ring.q, (3, m.shape[1]))
    ha, hb = howell_array(ring, m), howell_array(ring, other)
    both = intersect(ha, hb)
    assert contains(ha, both) and contains(hb, both)
    sample = rng.integers(0, ring.q, (30, 3))
    vecs = ring.matmul(sample[:, : m.shape[0]], m)
    in_b = members(vecs, hb)
    assert np.array_equal(members(vecs, both), in_b)
