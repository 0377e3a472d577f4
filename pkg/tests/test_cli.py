import json
import re
from pathlib import Path

import pytest

from bkmod.cli import main

FIXTURE = str(Path(__file__).resolve().parents[1] / "demos" / "data" / "counterexample.kmod")

NON_COMPOSABLE = """bkmod-modules 1
ctx p=3 N=4 M=18 E=u^2 + 3
kisin A rank=1
  row 1
end
kisin B rank=1
  row 1
end
kisin C rank=1
  row 1
end
morphism f A -> B
  row 1
end
morphism g C -> A
  row 1
end
sequence bad f, g
"""


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def verdicts_text(out):
    return sorted(re.findall(r"^(PASS|FAIL|INDETERMINATE)\s+(.+?)  \[", out, re.M))


def verdicts_json(out):
    return sorted((c["verdict"].upper(), c["claim"]) for c in json.loads(out)["claims"])


def test_counterexample_scenario_six_claims(capsys):
    code, out, _ = run(capsys, "paper", "counterexample", "--p", "3", "--N", "6", "--M", "54")
    assert code == 0
    assert len(verdicts_text(out)) == 6
    assert all(v == "PASS" for v, _ in verdicts_text(out))


def test_text_and_json_agree(capsys):
    _, text, _ = run(capsys, "paper", "twists", "--r-max", "1")
    _, js, _ = run(capsys, "--format", "json", "paper", "twists", "--r-max", "1")
    assert verdicts_text(text) == verdicts_json(js)


def test_kisin_height_failure_exit_1(capsys):
    code, out, _ = run(capsys, "kisin", "height", "--file", FIXTURE, "--name", "S1", "--r", "0")
    assert code == 1
    assert "witness" in out
    assert run(capsys, "kisin", "height", "--file", FIXTURE, "--name", "S1", "--r", "1")[0] == 0


def test_non_composable_sequence_exit_3(capsys, tmp_path):
    f = tmp_path / "bad.kmod"
    f.write_text(NON_COMPOSABLE)
    code, out, err = run(capsys, "seq", "check", "--file", str(f))
    assert code == 3
    assert out == "" and "error" in err


def test_indeterminate_exit_2(capsys):
    code, out, _ = run(capsys, "paper", "key-lemma", "--N", "2", "--M", "12", "--trials", "5")
    assert code == 2
    assert "INDETERMINATE" in out


def test_input_errors_exit_3(capsys, tmp_path):
    assert run(capsys, "kisin", "height", "--file", str(tmp_path / "missing.kmod"), "--name", "M", "--r", "1")[0] == 3
    assert run(capsys, "kisin", "height", "--file", FIXTURE, "--name", "nope", "--r", "1")[0] == 3
    assert run(capsys, "ctx", "new", "--p", "3", "--N", "4", "--M", "12", "--E", "u^2 + 1")[0] == 3
    assert run(capsys, "paper", "no-such-scenario")[0] == 3
    # monodromy needs a monodromy line
    assert run(capsys, "breuil", "monodromy", "--file", FIXTURE, "--name", "B")[0] == 3


def test_ctx_new_output_parses(capsys, tmp_path):
    code, out, _ = run(capsys, "ctx", "new", "--p", "5", "--N", "3", "--M", "20", "--E", "u + 5")
    assert code == 0
    (tmp_path / "c.kmod").write_text(out)
    from bkmod.fileformat import parse_module_file

    assert parse_module_file(out).ctx.p == 5


def test_seq_and_breuil_commands(capsys):
    assert run(capsys, "seq", "check", "--file", FIXTURE, "--name", "cx")[0] == 1
    assert run(capsys, "breuil", "exact", "--file", FIXTURE, "--name", "cx", "--r", "1")[0] == 1
    assert run(capsys, "breuil", "axioms", "--file", FIXTURE, "--name", "B")[0] == 0
    assert run(capsys, "breuil", "monodromy", "--file", FIXTURE, "--name", "B0")[0] == 0
    code, out, _ = run(capsys, "kisin", "weights", "--file", FIXTURE, "--name", "M")
    assert code == 0 and "[0, 1]" in out
    code, out, _ = run(capsys, "kisin", "twist", "--file", FIXTURE, "--name", "S0", "--s", "-2", "--out", "T")
    assert code == 0 and "kisin T rank=1" in out


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("BKMOD_SEED", "5")
    _, out, _ = run(capsys, "paper", "key-lemma", "--trials", "3")
    assert "# seed: 5" in out


def test_reports_are_deterministic(capsys):
    a = run(capsys, "--format", "json", "paper", "key-lemma", "--trials", "10", "--seed", "7")[1]
    b = run(capsys, "--format", "json", "paper", "key-lemma", "--trials", "10", "--seed", "7")[1]
    assert a == b


@pytest.mark.parametrize("scenario", ["counterexample", "tor", "twists"])
def test_timings_flag(capsys, scenario):
    code, out, _ = run(capsys, "paper", scenario, "--format", "json", "--timings")
    assert code == 0
    assert all("wall_time" in c for c in json.loads(out)["claims"])


SCHEMA = Path(__file__).resolve().parents[1] / "docs" / "report.schema.json"


@pytest.mark.parametrize(
    "argv",
    [
        ["paper", "counterexample", "--timings"],
        ["paper", "key-lemma", "--trials", "5"],
        ["paper", "key-lemma", "--N", "2", "--M", "12", "--trials", "5"],
        ["paper", "heights", "--trials", "4"],
        ["paper", "axioms", "--trials", "2"],
        ["paper", "exactness", "--trials", "2", "--tensor-trials", "1"],
        ["seq", "check", "--file", FIXTURE],
        ["kisin", "height", "--file", FIXTURE, "--name", "S1", "--r", "0"],
        ["breuil", "axioms", "--file", FIXTURE, "--name", "B"],
    ],
)
def test_json_reports_match_schema(capsys, argv):
    jsonschema = pytest.importorskip("jsonschema")
    schema = json.loads(SCHEMA.read_text())
    code, out, _ = run(capsys, "--format", "json", *argv)
    doc = json.loads(out)
    jsonschema.validate(doc, schema)
    assert code == {"pass": 0, "fail": 1, "indeterminate": 2}[doc["verdict"]]


def test_text_reports_are_deterministic(capsys):
    a = run(capsys, "paper", "exactness", "--trials", "2", "--tensor-trials", "1", "--seed", "3")[1]
    b = run(capsys, "paper", "exactness", "--trials", "2", "--tensor-trials", "1", "--seed", "3")[1]
    assert a == b


def test_demo_script_runs(capsys):
    import runpy

    runpy.run_path(str(Path(FIXTURE).parents[1] / "counterexample.py"), run_name="__main__")
    assert "|coker beta| = 3" in capsys.readouterr().out
