from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bkmod.errors import ParseError
from bkmod.fileformat import (
    parse_module_file,
    parse_poly,
    parse_s_element,
    render_module_file,
    render_poly,
    render_s,
)
from bkmod.kisin import check_exact_sequence, cokernel_presentation, counterexample_module
from bkmod.report import Verdict
from bkmod.scenarios import counterexample_data
from bkmod.series import RingContext

FIXTURE = Path(__file__).resolve().parents[1] / "demos" / "data" / "counterexample.kmod"
HEAD = "bkmod-modules 1\nctx p=3 N=4 M=12 E=u^2 + 3\n"


def test_minimal_file_has_no_modules():
    mf = parse_module_file(HEAD)
    assert mf.kisin == {} and mf.morphisms == {} and mf.breuil == {}
    assert mf.ctx.p == 3 and mf.ctx.e == 2


def test_counterexample_fixture_is_reconstructed():
    mf = parse_module_file(FIXTURE.read_text())
    ctx = RingContext.counterexample(3, 6, 54)
    m, alpha, beta = counterexample_data(ctx)
    assert mf.module("M") == counterexample_module(ctx) == m
    a, b = mf.sequence("cx")
    assert np.array_equal(a.matrix, alpha.matrix) and np.array_equal(b.matrix, beta.matrix)
    assert check_exact_sequence([a])["head injective"].verdict is Verdict.PASS
    assert cokernel_presentation(b).cardinality == 3
    assert mf.breuil["B"].module.rank == 2
    assert mf.breuil["B0"].monodromy is not None


def test_round_trip():
    mf = parse_module_file(FIXTURE.read_text())
    text = render_module_file(mf)
    again = parse_module_file(text)
    assert again == mf
    assert render_module_file(again) == text


def test_non_eisenstein_rejected():
    with pytest.raises(ParseError) as exc:
        parse_module_file("bkmod-modules 1\nctx p=3 N=4 M=12 E=u^2 + 1\n")
    assert exc.value.line == 2
    assert "Eisenstein" in str(exc.value)


@pytest.mark.parametrize(
    "body, line, column",
    [
        ("kisin A rank=1 colour=red\n  row 1\nend\n", 3, 16),
        ("kisin A rank=1\n  row 1 +\nend\n", 4, None),
        ("frobnicate X\n", 3, 1),
        ("kisin A rank=1\n  row 1\nend\nkisin A rank=1\n  row 1\nend\n", 6, 7),
        ("morphism f A -> B\n  row 1\nend\n", 3, 12),
        ("kisin A rank=1\n  row 1\nend\nsequence s f\n", 6, 12),
        ("kisin A rank=1\n  row 1\nend\nkisin B rank=1\n  row 1\nend\n"
         "morphism f A -> B\n  row 1\nend\nsequence s f, f\n", 12, 15),
    ],
)
def test_errors_carry_positions(body, line, column):
    with pytest.raises(ParseError) as exc:
        parse_module_file(HEAD + body)
    assert exc.value.line == line
    if column is not None:
        assert exc.value.column == column


def test_bad_header_and_missing_ctx():
    with pytest.raises(ParseError) as exc:
        parse_module_file("bkmod-modules 2\n")
    assert (exc.value.line, exc.value.column) == (1, 15)
    with pytest.raises(ParseError):
        parse_module_file("bkmod-modules 1\n# nothing\n")
    with pytest.raises(ParseError):
        parse_module_file("")


def test_non_morphism_rejected():
    body = "kisin A rank=1\n  row 3 + u^2\nend\nkisin B rank=1\n  row 1\nend\nmorphism f A -> B\n  row 1\nend\n"
    with pytest.raises(ParseError) as exc:
        parse_module_file(HEAD + body)
    assert exc.value.line == 9
    assert "NotAMorphism" in str(exc.value)


def test_element_parsers():
    assert parse_poly("3 + u^2") == [3, 0, 1]
    assert parse_poly("-u") == [0, -1]
    assert parse_s_element("2*b3 - b0") == [-1, 0, 0, 2]
    with pytest.raises(ParseError):
        parse_poly("u^")


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-100, 100), max_size=12))
def test_render_parse_closure(coeffs):
    def trim(a):
        a = list(a)
        while a and a[-1] == 0:
            a.pop()
        return a

    assert trim(parse_poly(render_poly(coeffs))) == trim(coeffs)
    assert trim(parse_s_element(render_s(coeffs))) == trim(coeffs)
