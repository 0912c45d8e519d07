import json
from fractions import Fraction

import pandas as pd
import pytest

from cli import RunConfig, main
from utils import UsageError, print_header, print_table


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_classify_text(capsys):
    code, out = run(capsys, "classify", "R S^-1 R^2")
    assert code == 0
    assert "音节形式" in out


def test_classify_json(capsys):
    code, out = run(capsys, "classify", "R^3", "--format", "json")
    report = json.loads(out)
    assert code == 0
    assert report["schema_version"] == 1
    assert report["command"] == "classify"
    record = report["results"][0]
    assert record["type"] == "parabolic"
    assert record["normal_form"] == {"sign": 1, "translation": 3}


def test_bad_word_reports_position(capsys):
    code, out = run(capsys, "classify", "R T", "--format", "json")
    assert code == 2
    error = json.loads(out)["error"]
    assert error["type"] == "WordParseError"
    assert error["position"] == 2


def test_list(capsys):
    code, out = run(capsys, "list")
    assert code == 0
    assert "theta_eps" in out
    assert "M4-ii" in out


def test_no_action_prints_help(capsys):
    code, _ = run(capsys)
    assert code == 2


def test_degrees_csv(capsys):
    code, out = run(capsys, "degrees", "theta_s", "R", "--format", "csv", "--max-iterates", "3")
    lines = out.strip().splitlines()
    assert code == 0
    assert lines[0] == "n,degree,terms"
    assert len(lines) == 4


def test_degrees_p1p1_has_quadridegree(capsys):
    code, out = run(capsys, "degrees", "theta_eps", "R", "--eps", "2", "--format", "json",
                     "--max-iterates", "2")
    rows = json.loads(out)["results"]
    assert code == 0
    assert all("quadridegree" in r for r in rows)


def test_lambda_of_hyperbolic_word(capsys):
    code, out = run(capsys, "lambda", "theta_s", "R S^-1 R^-1 S", "--format", "json", "--max-iterates", "6")
    record = json.loads(out)["results"][0]
    assert code == 0
    assert record["growth"]["kind"] == "exponential"
    assert record["matrix_type"] == "hyperbolic"


def test_term_cap_is_a_resource_error(capsys):
    code, out = run(capsys, "degrees", "theta_k", "R^3", "--cap", "10")
    assert code == 1
    assert out.startswith("❌")


def test_unknown_verify_target(capsys):
    code, _ = run(capsys, "verify", "theta_x")
    assert code == 2


def test_invalid_family_parameter(capsys):
    code, out = run(capsys, "verify", "theta_k", "--k", "3", "--format", "json")
    assert code == 2
    assert json.loads(out)["error"]["type"] == "SpecError"


def test_verify_cayley(capsys):
    code, out = run(capsys, "verify", "cayley")
    assert code == 0
    assert "Cayley" in out


def test_verify_relations(capsys):
    code, out = run(capsys, "verify", "theta_s", "--format", "json")
    report = json.loads(out)
    assert code == 0
    assert report["summary"]["failed"] == 0
    assert report["results"][0]["kind"] == "relations"


def test_verify_picard_for_one_case(capsys):
    code, out = run(capsys, "verify", "picard", "--case", "j1", "--maxlen", "6", "--format", "json")
    report = json.loads(out)
    kinds = {r["kind"] for r in report["results"]}
    assert code == 0
    assert {"case", "fixed_subspace", "inequalities", "spectral_bound"} <= kinds


def test_verify_non_geometric_case_is_not_counted(capsys):
    code, out = run(capsys, "verify", "picard", "--case", "M4-ii", "--format", "json")
    report = json.loads(out)
    assert code == 0
    assert report["summary"]["checks"] == 0
    assert report["results"][0]["gated"] is False


def test_picard_word(capsys):
    code, out = run(capsys, "picard-word", "--case", "1", "--letters", "1,2,1", "--format", "json")
    record = json.loads(out)["results"][0]
    assert code == 0
    assert record["inequalities"]["passed"]
    assert len(record["table"]) == 4


def test_gram_derive(capsys):
    code, out = run(capsys, "gram-derive", "--case", "j23", "--format", "json")
    record = json.loads(out)["results"][0]
    assert code == 0
    assert record["outcome"] == "inconsistent"
    assert "w4² = 6" in record["violated_claims"]


def test_sweep_theta_s(capsys):
    code, out = run(capsys, "sweep", "theta_s", "--max-syllables", "1", "--format", "json")
    report = json.loads(out)
    assert code == 0
    assert report["summary"]["errors"] == 0
    assert all(r["agrees"] for r in report["results"])


def test_output_file(capsys, tmp_path):
    target = tmp_path / "reports" / "classify.json"
    code, _ = run(capsys, "classify", "S", "--output", str(target))
    assert code == 0
    assert json.loads(target.read_text(encoding="utf-8"))["results"][0]["type"] == "elliptic(order 4)"


def test_run_config_validation():
    with pytest.raises(UsageError):
        RunConfig(command="degrees", max_iterates=0)
    with pytest.raises(UsageError):
        RunConfig(command="classify", fmt="xml")
    with pytest.raises(UsageError):
        RunConfig(command="lambda", tol="0")


# ─── 控制台输出 ───

def test_print_table_keeps_exact_rationals(capsys):
    df = pd.DataFrame([{"n": 1, "ratio": Fraction(55, 21), "quadridegree": (1, 2, 0, 1)},
                       {"n": 2, "ratio": Fraction(4), "quadridegree": (Fraction(1, 2), 3)}])
    print_table(df)
    out = capsys.readouterr().out
    assert "55/21" in out
    assert "(1, 2, 0, 1)" in out
    assert "(1/2, 3)" in out
    assert "2.619" not in out
    assert all(line.startswith("    ") for line in out.splitlines())


def test_print_table_truncates(capsys):
    print_table(pd.DataFrame({"n": range(5)}), max_rows=2)
    assert "共 5 条" in capsys.readouterr().out


@pytest.mark.parametrize("status, mark", [(None, "📊"), (True, "✅"), (False, "❌")])
def test_header_marks_overall_status(capsys, status, mark):
    print_header("θ_s", status)
    assert capsys.readouterr().out.splitlines()[2] == f"  {mark} θ_s"


def test_verify_header_shows_result(capsys):
    code, out = run(capsys, "verify", "theta_s")
    assert code == 0
    assert out.splitlines()[2].startswith("  ✅")
    assert "（4 项）" in out
