import json

import pytest

from pervglue.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main
from pervglue.spacefile import DISK_SPACE


def run_json(capsys, *argv):
    code = main([*argv, "--json"])
    return code, json.loads(capsys.readouterr().out)


def test_check_space(capsys):
    code, doc = run_json(capsys, "check-space")
    assert code == EXIT_OK
    res = doc["report"]["result"]
    assert res["S"] == ["s"] and res["closed"]["good"]["kind"] == "closed"
    assert res["local_systems"] == {"L1": 1, "L2": 1, "Lm1": 1, "J2": 2}


def test_check_perverse_closed_all(capsys):
    code, doc = run_json(capsys, "check-perverse-closed", "--closed", "all")
    assert code == EXIT_OK
    verdicts = {tuple(c["candidate"]): c["verdict"] for c in doc["report"]["result"]["candidates"]}
    assert verdicts[("s", "a")] == "pass"
    assert verdicts[("s",)] == "fail"
    assert verdicts[()] == "fail"


def test_failing_candidate_exits_one(capsys):
    code, doc = run_json(capsys, "check-perverse-closed", "--closed", "s")
    assert code == EXIT_FAIL
    w = doc["report"]["result"]["candidates"][0]["witnesses"][0]
    assert (w["degree"], w["dims"]) == (0, {"s": 1})


def test_describe_fgt(capsys):
    code, doc = run_json(capsys, "describe-fgt", "--closed", "good")
    assert code == EXIT_OK
    rows = {r["test"]: r for r in doc["report"]["result"]["functors"]}
    assert rows["file L1"]["rank_T"] == {"s": 0}
    assert rows["file L2"]["rank_T"] == {"s": 1}
    assert rows["file J2"]["dim_F"] == {"s": 2} and rows["file J2"]["rank_T"] == {"s": 1}


@pytest.mark.parametrize("spec,code", [("ic:L1", EXIT_OK), ("rj:L2", EXIT_OK), ("shriek:L1", EXIT_OK),
                                       ("sky", EXIT_OK), ("rj:nope", EXIT_USAGE), ("bogus:L1", EXIT_USAGE)])
def test_perverse_check(capsys, spec, code):
    assert main(["perverse-check", "--complex", spec]) == code


def test_glue_and_roundtrip(capsys):
    code, doc = run_json(capsys, "glue", "--trials", "3")
    assert code == EXIT_OK and all(r["ok"] for r in doc["report"]["result"]["trials"])
    code, doc = run_json(capsys, "roundtrip", "--trials", "2")
    assert code == EXIT_OK
    res = doc["report"]["result"]
    assert all(r["CP"] and r["PC"] for r in res["objects"])
    assert all(f["PC"] for f in res["fixtures"] if f["perverse"])


def test_selftest(capsys):
    assert main(["selftest"]) == EXIT_OK
    assert "verdict: pass" in capsys.readouterr().out


def test_reports_are_reproducible(tmp_path, monkeypatch, capsys):
    out = []
    for i in range(2):
        monkeypatch.setenv("PERVGLUE_REPORT_DIR", str(tmp_path / str(i)))
        assert main(["glue", "--trials", "2", "--seed", "3"]) == EXIT_OK
        doc = json.loads((tmp_path / str(i) / "glue.json").read_text())
        assert "total_seconds" in doc["timing"]
        out.append(json.dumps(doc["report"], sort_keys=True))
    assert out[0] == out[1]


def test_explicit_report_path_and_space_file(tmp_path, capsys):
    space = tmp_path / "disk.ini"
    space.write_text(DISK_SPACE)
    report = tmp_path / "r" / "out.json"
    assert main(["check-space", "--space", str(space), "--report", str(report)]) == EXIT_OK
    doc = json.loads(report.read_text())
    assert doc["report"]["inputs"]["space"] == str(space)
    assert len(doc["report"]["inputs"]["space_sha256"]) == 64


@pytest.mark.parametrize("argv", [
    ["nonsense"],
    ["check-space", "--space", "/no/such/file"],
    ["describe-fgt", "--closed", "a"],
    ["describe-fgt", "--closed", "q"],
    ["glue", "--max-rank", "0"],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE


def test_bad_space_file(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[poset]\nelements = x, y\nrelations = x<y\n[strata]\nS = y\nd = 0\n")
    assert main(["check-space", "--space", str(p)]) == EXIT_USAGE
    assert "not closed" in capsys.readouterr().err


def test_not_perverse_closed_exits_one(capsys):
    assert main(["roundtrip", "--closed", "s", "--trials", "1"]) == EXIT_FAIL
