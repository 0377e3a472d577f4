import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bkmod import _poly
from bkmod.errors import DegenerateFrobenius, HeightError, NotAMorphism, NotComposable
from bkmod.kisin import (
    ARBITRARY,
    COMPATIBLE,
    FAILS_HYPOTHESIS,
    PRINCIPAL,
    bk_twist,
    check_exact_sequence,
    check_height,
    check_morphism,
    clear_denominator,
    cokernel_presentation,
    compose,
    counterexample_module,
    dual,
    e_power,
    height_result,
    hodge_tate_weights,
    identity_morphism,
    ideal_span,
    kernel_module,
    key_lemma_check,
    make_kisin,
    make_morphism,
    random_extension,
    random_kisin,
    same_ideal,
    tensor,
    twist,
    unit_module,
)
from bkmod.chainring import nilpotency_degree
from bkmod.report import Verdict
from bkmod.series import RingContext, SigmaElem

CTX = RingContext.counterexample(3, 6, 54)
CTX5 = RingContext.create(5, 4, 40, [10, 0, 1])


def sig(ctx, *c):
    return SigmaElem.from_list(ctx, list(c))


def alpha_beta(ctx):
    p = ctx.p
    M, S1, S0 = counterexample_module(ctx), bk_twist(ctx, -1), unit_module(ctx)
    a = make_morphism(S1, M, [[[0, -1]], [[p]]])
    b = make_morphism(M, S0, [[p, [0, 1]]])
    return M, a, b


def test_constructors():
    assert unit_module(CTX).det_exp == 0
    s1 = bk_twist(CTX5, -1)
    assert s1.frobenius[0, 0, :3].tolist() == [5, 0, pow(2, -1, 625)]
    m = counterexample_module(CTX)
    assert m.det_exp == 1 and m.rank == 2
    with pytest.raises(DegenerateFrobenius):
        make_kisin(CTX, 1, [[3]])
    with pytest.raises(DegenerateFrobenius):
        make_kisin(CTX, 2, [[1, 1], [1, 1]])


def test_height_examples():
    assert check_height(unit_module(CTX), 0)
    s1 = bk_twist(CTX5, -1)
    assert check_height(s1, 1) and not check_height(s1, 0)
    res = height_result(counterexample_module(CTX), 1)
    assert res.verdict is Verdict.PASS
    X = res.witness
    E = list(CTX.E.coeffs)
    assert X[0, 0, :3].tolist() == E and X[0, 1, :2].tolist() == [0, 1]
    assert not X[1, 0].any() and X[1, 1, 0] == 1
    assert not check_height(counterexample_module(CTX), 0)
    with pytest.raises(HeightError):
        check_height(bk_twist(CTX, 1), 1)


def test_tensor_examples():
    m = counterexample_module(CTX5)
    assert tensor(m, unit_module(CTX5)) == m
    assert tensor(bk_twist(CTX5, -1), bk_twist(CTX5, -1)) == bk_twist(CTX5, -2)
    mt = tensor(m, bk_twist(CTX5, -1))
    assert mt.rank == 2 and check_height(mt, 2) and not check_height(mt, 1)


def test_dual_examples():
    assert dual(unit_module(CTX5)) == unit_module(CTX5)
    d = dual(bk_twist(CTX5, -1))
    assert d == bk_twist(CTX5, 1)
    assert d.denom_exp == 1 and d.frobenius[0, 0, 0] == CTX5.c0


def test_twist_examples():
    m = counterexample_module(CTX5)
    assert twist(m, 0) == m
    for r in range(4):
        assert twist(unit_module(CTX5), -r) == bk_twist(CTX5, -r)
    assert twist(twist(m, -1), 1) == m
    assert clear_denominator(tensor(dual(bk_twist(CTX5, -2)), bk_twist(CTX5, -2))) == unit_module(CTX5)


def test_weights_examples():
    assert hodge_tate_weights(unit_module(CTX)) == [0]
    for r in range(4):
        assert hodge_tate_weights(bk_twist(CTX5, -r)) == [r]
    assert hodge_tate_weights(counterexample_module(CTX)) == [0, 1]


def test_morphism_examples():
    M, a, b = alpha_beta(CTX)
    assert check_morphism(identity_morphism(M)).passed
    assert check_morphism(a).passed and check_morphism(b).passed
    coker = cokernel_presentation(b)
    assert coker.cardinality == 3
    assert nilpotency_degree(coker.u_action, coker.module) == 1
    assert nilpotency_degree(coker.p_action, coker.module) == 1
    with pytest.raises(NotAMorphism):
        make_morphism(M, unit_module(CTX), [[3, [0, 0, 1]]])
    with pytest.raises(NotComposable):
        compose(b, a)
    assert not np.any(compose(a, b).matrix)


def test_kernel_of_beta_is_phi_stable():
    _, a, b = alpha_beta(CTX)
    k = kernel_module(b)
    assert k.phi_stable is Verdict.PASS
    assert kernel_module(a).phi_stable is Verdict.PASS


def test_exact_sequence_examples():
    M, a, b = alpha_beta(CTX)
    rep = check_exact_sequence([identity_morphism(M)])
    assert rep.passed
    rep = check_exact_sequence([a, b])
    assert rep["head injective"].verdict is Verdict.PASS
    assert rep["junction 1: kernel = image"].verdict is Verdict.PASS
    assert rep["tail surjective"].verdict is Verdict.FAIL
    iw = rep.notes["image_ideal"]
    assert same_ideal(CTX, [g.coeffs for g in iw.generators], [sig(CTX, 3).coeffs, sig(CTX, 0, 1).coeffs])
    assert iw.verdict == FAILS_HYPOTHESIS


def test_twist_extension_is_short_exact():
    c0i = CTX5.c0_inv
    ce = np.mod(e_power(CTX5, 1) * c0i, CTX5.q)
    phi = np.zeros((2, 2, CTX5.M), dtype=np.int64)
    phi[0, 0] = phi[1, 1] = ce
    phi[0, 1, 0] = 1
    X = make_kisin(CTX5, 2, phi)
    s1 = bk_twist(CTX5, -1)
    inc = make_morphism(s1, X, [[1], [0]])
    proj = make_morphism(X, s1, [[0, 1]])
    assert check_exact_sequence([inc, proj]).passed
    # the middle term has weights {0, 2}, so it is not of height <= 1
    assert hodge_tate_weights(X) == [0, 2]
    assert not check_height(X, 1)


def test_key_lemma_examples():
    assert str(key_lemma_check([sig(CTX, 9)])) == "PrincipalPPower(2)"
    assert str(key_lemma_check([sig(CTX, 1)])) == "PrincipalPPower(0)"
    w = key_lemma_check([sig(CTX, 0, 1)])
    assert w.verdict == FAILS_HYPOTHESIS and w.witness["generator"] == 0
    assert key_lemma_check([sig(CTX, 3), sig(CTX, 0, 1)]).verdict == FAILS_HYPOTHESIS
    assert key_lemma_check([CTX.E_sigma]).verdict == FAILS_HYPOTHESIS


def test_polynomial_helpers():
    q = 27
    E = (3, 0, 1)
    f = _poly.mul(_poly.mul(E, E, q), (1, 1), q)
    h, unit = _poly.e_valuation(f, E, q)
    assert h == 2 and unit == (1, 1)
    quot, rem = _poly.divmod_monic((5, 0, 0, 1), E, q)
    assert _poly.add(_poly.mul(quot, E, q), rem, q) == (5, 0, 0, 1)
    m = [[(1,), (0, 1)], [(2,), (3,)]]
    assert _poly.det(m, q) == _poly.reduce((3, -2), q)
    adj = _poly.adjugate(m, q)
    prod = [[_poly.trim([0]) for _ in range(2)] for _ in range(2)]
    for i in range(2):
        for j in range(2):
            acc = ()
            for k in range(2):
                acc = _poly.add(acc, _poly.mul(m[i][k], adj[k][j], q), q)
            prod[i][j] = acc
    d = _poly.det(m, q)
    assert prod == [[d, ()], [(), d]]


# --- properties -----------------------------------------------------------

PROP_CTX = {3: RingContext.counterexample(3, 4, 48), 5: RingContext.create(5, 3, 45, [5, 5, 1])}


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 2))
def test_dual_dual_is_identity(seed, d):
    rng = np.random.default_rng(seed)
    m = random_kisin(CTX5, d, 2, rng)
    dd = clear_denominator(dual(dual(m)))
    assert dd == m


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=st.sampled_from([3, 5]))
def test_weight_additivity_and_det_consistency(seed, p):
    ctx = PROP_CTX[p]
    rng = np.random.default_rng(seed)
    m1 = random_kisin(ctx, int(rng.integers(1, 3)), 1, rng)
    m2 = random_kisin(ctx, int(rng.integers(1, 3)), 1, rng)
    w1, w2 = hodge_tate_weights(m1), hodge_tate_weights(m2)
    assert sum(w1) == m1.det_exp
    wt = hodge_tate_weights(tensor(m1, m2))
    assert wt == sorted(a + b for a in w1 for b in w2)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=st.sampled_from([3, 5]), r=st.sampled_from([1, 2]))
def test_random_modules_have_claimed_height(seed, p, r):
    ctx = PROP_CTX[p]
    rng = np.random.default_rng(seed)
    t = [int(x) for x in rng.integers(0, r + 1, 2)]
    m = random_kisin(ctx, 2, r, rng, exponents=t)
    assert check_height(m, r)
    assert hodge_tate_weights(m) == sorted(t)
    if max(t) > 0:
        assert not check_height(m, max(t) - 1)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), r=st.sampled_from([1, 2]))
def test_compatible_extensions_stay_in_height(seed, r):
    ctx = PROP_CTX[5]
    rng = np.random.default_rng(seed)
    m1, m2 = random_kisin(ctx, 1, r, rng), random_kisin(ctx, 1, r, rng)
    ext = random_extension(m1, m2, rng, COMPATIBLE)
    assert check_height(ext.middle, r)
    rep = check_exact_sequence([ext.inclusion, ext.projection])
    assert rep.passed
    k = kernel_module(ext.projection)
    assert k.phi_stable is Verdict.PASS


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_arbitrary_extensions_have_height_at_most_twice(seed):
    """Extensions with a free off-diagonal block always have weights in [0, 2r]."""
    ctx = PROP_CTX[3]
    rng = np.random.default_rng(seed)
    r = 1
    m1, m2 = bk_twist(ctx, -r), bk_twist(ctx, -r)
    ext = random_extension(m1, m2, rng, ARBITRARY)
    w = hodge_tate_weights(ext.middle)
    assert check_height(ext.middle, 2 * r)
    assert check_height(ext.middle, r) == (max(w) <= r)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_key_lemma_never_misclassifies(seed):
    rng = np.random.default_rng(seed)
    ctx = PROP_CTX[3]
    k = int(rng.integers(1, 3))
    gens = []
    for _ in range(k):
        v = int(rng.integers(0, 3))
        g = np.zeros(ctx.M, dtype=np.int64)
        g[: ctx.frobenius_bound] = rng.integers(0, ctx.q, ctx.frobenius_bound) * ctx.p ** v
        gens.append(SigmaElem(ctx, g))
    w = key_lemma_check(gens)
    if w.verdict == PRINCIPAL:
        pn = np.zeros(ctx.M, dtype=np.int64)
        pn[0] = ctx.p ** w.n
        assert ideal_span(ctx, [g.coeffs for g in gens]) == ideal_span(ctx, [pn])
