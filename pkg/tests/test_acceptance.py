"""Acceptance suite: eight criteria at their stated sizes, tolerances and time
budgets. Each test records a one-line verdict that ``conftest.py`` prints at
the end of the session (``pytest tests/test_acceptance.py`` shows them)."""

import itertools
import time

import numpy as np
import pytest

from bkmod.breuil import from_kisin_sequence, middle_cohomology, tail_cokernel
from bkmod.chainring import ChainMatrix, ChainRing, howell, intersect, kernel, members
from bkmod.kisin import ARBITRARY, COMPATIBLE, check_height, cokernel_presentation, hodge_tate_weights, make_kisin
from bkmod.report import Verdict
from bkmod.scenarios import (
    counterexample_data,
    run_axiom_suite,
    run_counterexample,
    run_exactness_suite,
    run_height_suite,
    run_key_lemma_suite,
    run_tor,
    run_twist_suite,
)
from bkmod.series import RingContext
from oracles import all_matrices, kernel_set, span_set

RESULTS: dict[str, str] = {}


class Budget:
    def __init__(self, key, label, seconds):
        self.key, self.label, self.seconds = key, label, seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        dt = time.perf_counter() - self.t0
        ok = exc_type is None and dt < self.seconds
        RESULTS[self.key] = f"{'PASS' if ok else 'FAIL'}  {self.label}  ({dt:.1f} s, budget {self.seconds} s)"
        if exc_type is None:
            assert dt < self.seconds, f"{self.label}: {dt:.1f} s exceeds {self.seconds} s"
        return False


def failing(report):
    return [(c.claim, c.verdict.value) for c in report.claims if c.verdict is not Verdict.PASS]


def test_criterion_1_counterexample():
    with Budget("1", "counterexample reproduction at p=3, N=6, M=54", 30):
        rep = run_counterexample(3, 6, 54)
        assert rep.verdict is Verdict.PASS, failing(rep)
        ctx = RingContext.counterexample(3, 6, 54)
        _, alpha, beta = counterexample_data(ctx)
        coker = cokernel_presentation(beta)
        assert coker.cardinality == 3
        maps = from_kisin_sequence([alpha, beta], 1)
        assert not middle_cohomology(*maps).is_zero()
        assert not tail_cokernel(maps[1]).is_zero()


def test_criterion_2_tor():
    with Budget("2", "Tor_1(S, S_frak/(p, u^p)) nonzero with the u^p class", 30):
        rep = run_tor(3, 4, 54)
        assert rep.verdict is Verdict.PASS, failing(rep)
        assert rep["Tor_1(S, S_frak/(p, u^p)) is nonzero"].witness["log_p_size"] > 0


def test_criterion_3_key_lemma():
    with Budget("3", "key lemma: fixed ideals and 200 random ideals at p=3", 60):
        rep = run_key_lemma_suite(p=3, trials=200)
        assert rep.verdict is Verdict.PASS, failing(rep)
        names = {c.claim for c in rep.claims}
        for n in (0, 1, 2):
            assert f"(p^{n}) classifies as PrincipalPPower({n})" in names
        for name in ("(u)", "(E)", "(p, u)"):
            assert f"{name} fails the hypothesis" in names
        w = rep["200 random hypothesis-satisfying ideals: no counterexample"].witness
        assert w["counterexamples"] == 0


def test_criterion_4_twists():
    with Budget("4", "twist identities at p=5, r in {1, 2, 3}", 60):
        rep = run_twist_suite(p=5, r_max=3)
        assert rep.verdict is Verdict.PASS, failing(rep)
        assert hodge_tate_weights(counterexample_data(RingContext.counterexample(3, 6, 54))[0]) == [0, 1]


def test_criterion_5_counterexample_heights():
    with Budget("5a", "counterexample passes height <= 1 and fails height <= 0", 120):
        rep = run_height_suite(trials=1)
        assert rep["counterexample passes height <= 1"].verdict is Verdict.PASS
        assert rep["counterexample fails height <= 0"].verdict is Verdict.PASS


@pytest.mark.xfail(strict=True, reason="arbitrary off-diagonal blocks can raise the height: "
                   "[[E, 1], [0, E]] extends S{-1} by S{-1} and has weights {0, 2}")
def test_criterion_5_arbitrary_extensions_height_r():
    t0 = time.perf_counter()
    rep = run_height_suite(trials=100, offblock=ARBITRARY)
    claim = rep["100 random arbitrary extensions pass height <= r"]
    dt = time.perf_counter() - t0
    RESULTS["5b"] = (f"{'PASS' if claim.verdict is Verdict.PASS else 'FAIL'}  100 random block-triangular "
                     f"extensions pass height <= r  ({claim.witness['passing']}/100, {dt:.1f} s, budget 120 s)")
    assert claim.verdict is Verdict.PASS, claim.witness


def test_criterion_5_known_obstruction():
    ctx = RingContext.create(5, 4, 40, [10, 0, 1])
    E = ctx.E_sigma.coeffs
    one = np.zeros(ctx.M, dtype=np.int64)
    one[0] = 1
    phi = np.zeros((2, 2, ctx.M), dtype=np.int64)
    phi[0, 0] = phi[1, 1] = E
    phi[0, 1] = one
    m = make_kisin(ctx, 2, phi)
    assert hodge_tate_weights(m) == [0, 2]
    assert not check_height(m, 1) and check_height(m, 2)


def test_criterion_5_supporting_suites():
    with Budget("5c", "100 arbitrary extensions within 2r; 100 compatible extensions within r", 120):
        arb = run_height_suite(trials=100, offblock=ARBITRARY)
        assert arb["100 random arbitrary extensions pass height <= 2r"].verdict is Verdict.PASS
        comp = run_height_suite(trials=100, offblock=COMPATIBLE)
        assert comp.verdict is Verdict.PASS, failing(comp)


def test_criterion_6_axioms():
    with Budget("6", "30 random modules give strongly divisible modules; controls fail", 300):
        rep = run_axiom_suite(p=5, trials=30)
        assert rep.verdict is Verdict.PASS, failing(rep)


def test_criterion_7_exactness():
    with Budget("7", "exactness transport, tensor trials, cup product, counterexample control", 600):
        rep = run_exactness_suite(p=5, trials=30, tensor_trials=10)
        assert rep.verdict is Verdict.PASS, failing(rep)


def test_criterion_8_kernel_oracle():
    with Budget("8", "membership/kernel/intersection against enumeration over Z/p^2, p in {2, 3}", 60):
        for p in (2, 3):
            ring = ChainRing(p, 2)
            q = p * p
            vectors = {n: np.array(list(itertools.product(range(q), repeat=n))) for n in (1, 2)}
            spans = {}
            for nrows, ncols in itertools.product((1, 2), repeat=2):
                for m in all_matrices(q, nrows, ncols):
                    a = ChainMatrix.from_rows(ring, m)
                    h = howell(a)
                    brute = span_set(m, q, ncols)
                    mask = members(vectors[ncols], h)
                    got = frozenset(tuple(int(x) for x in v) for v, ok in zip(vectors[ncols], mask) if ok)
                    assert got == brute
                    assert span_set(kernel(a).matrix.tolist(), q, nrows) == kernel_set(m, q)
                    if ncols == 2:
                        spans.setdefault(brute, h)
            for (sa, ha), (sb, hb) in itertools.product(spans.items(), repeat=2):
                assert span_set(intersect(ha, hb).matrix.tolist(), q, 2) == sa & sb
