import csv
import io
import json
import subprocess
import sys

import pytest

from unimoment.cli import run

I_HALF_UNIFORM_VS_91 = 0.41503749927884382  # 50-digit oracle


def write(tmp_path, name, text):
    f = tmp_path / name
    f.write_text(text)
    return str(f)


@pytest.fixture
def files(tmp_path):
    return {
        "dyadic": write(tmp_path, "dyadic.csv", "a,0.5\nb,0.25\nc,0.125\nd,0.125\n"),
        "p91": write(tmp_path, "p91.csv", "a,0.9\nb,0.1\n"),
        "half": write(tmp_path, "half.csv", "a,0.5\nb,0.5\n"),
        "p721": write(tmp_path, "p721.json", '{"a": 0.7, "b": 0.2, "c": 0.1}'),
        "three": write(tmp_path, "three.csv", "x,0.5\ny,0.3\nz,0.2\n"),
        "bad": write(tmp_path, "bad.csv", "a,0.5\nb,oops\n"),
        "zeros": write(tmp_path, "zeros.csv", "a,0.5\nb,0\nc,0.5\n"),
        "lengths": write(tmp_path, "lengths.csv", "a,2\nb,2\nc,3\nd,3\n"),
        "bad_lengths": write(tmp_path, "bl.csv", "a,1\nb,1\nc,1\nd,1\n"),
        "dir": str(tmp_path),
    }


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def call_json(*argv):
    code, out, err = call(*argv)
    return code, (json.loads(out) if out else None), err


class TestSubcommands:
    def test_measures(self, files):
        code, out, _ = call_json("measures", "--dist", files["dyadic"], "--alpha", "0.5")
        assert code == 0
        assert out["shannon_entropy"] == 1.75
        assert set(out) >= {"renyi_entropy", "normalizer", "escort"}
        assert out["order"] == {"rho": 1.0, "alpha": 0.5}

    def test_measures_with_q(self, files):
        code, out, _ = call_json("measures", "--dist", files["half"], "--q-dist", files["p91"], "--rho", "1")
        assert code == 0
        assert out["sundaresan_divergence"] == pytest.approx(I_HALF_UNIFORM_VS_91, abs=1e-12)

    def test_code(self, files):
        code, out, _ = call_json("code", "--dist", files["dyadic"], "--alpha", "0.5")
        assert code == 0 and out["source"] == "campbell"
        assert out["lengths"] == {"a": 2, "b": 2, "c": 3, "d": 3} and out["kraft_exact"] == "3/4"
        code, out, _ = call_json("code", "--dist", files["dyadic"], "--rho", "0")
        assert out["source"] == "shannon" and out["cumulant"] == 1.75 and out["checks"] == []

    def test_code_with_lengths_file(self, files):
        code, out, _ = call_json("code", "--dist", files["dyadic"], "--rho", "1", "--lengths", files["lengths"])
        assert code == 0 and out["source"] == "file"
        assert {c["claim_id"] for c in out["checks"]} == {"campbell.ql-identity", "campbell.rc-bracket"}
        code, out, _ = call_json("code", "--dist", files["dyadic"], "--rho", "1", "--lengths", files["bad_lengths"])
        assert code == 0 and out["kraft_exact"] == "2/1" and out["checks"] == []

    def test_guess(self, files):
        code, out, _ = call_json("guess", "--dist", files["p721"], "--q-dist", files["p721"], "--rho", "1")
        assert code == 0
        ids = [c["claim_id"] for c in out["checks"]]
        assert ids == ["guess.lower", "guess.upper", "guess.qg-identity", "guess.rg-bracket",
                       "guess.mismatch-upper"]
        assert out["optimal_order"] == ["a", "b", "c"]

    def test_guess_simulate(self, files):
        code, out, _ = call_json("guess", "--dist", files["half"], "--rho", "1", "--simulate",
                                 "--trials", "20000", "--seed", "3")
        assert code == 0
        assert out["memoryless"]["closed_form"] == pytest.approx(2.0, abs=1e-14)
        assert out["checks"][-1]["claim_id"] == "memoryless.monte-carlo"
        code, _, err = call("guess", "--dist", files["half"], "--rho", "0.5", "--simulate")
        assert code == 2 and "integer" in err

    def test_tasks(self, files):
        code, out, _ = call_json("tasks", "--dist", files["dyadic"], "--alpha", "0.5", "--keys", "8")
        assert code == 0
        assert out["partition"] == [["a", "b"], ["c", "d"]] and out["moment"] == pytest.approx(2.0)
        ids = [c["claim_id"] for c in out["checks"]]
        assert ids == ["tasks.lower", "tasks.construction-upper", "tasks.construction-unit", "tasks.qa-identity"]

    def test_tasks_needs_keys(self, files):
        code, _, err = call("tasks", "--dist", files["dyadic"], "--rho", "1", "--keys", "4")
        assert code == 2 and "keys" in err

    def test_seq(self, files):
        code, out, _ = call_json("seq", "--dist", files["p91"], "--rho", "1", "--rule", "campbell-code",
                                 "--n-max", "8")
        assert code == 0 and len(out["rows"]) == 8
        assert all(r["verdict"] == "pass" for r in out["rows"])
        code, out, _ = call("seq", "--dist", files["p91"], "--rho", "1", "--rule", "task-partition",
                            "--n", "6", "--keys", "2", "--format", "csv")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and [r["verdict"] for r in rows[:3]] == ["skip", "skip", "pass"]

    def test_verify_dyadic(self, files):
        code, out, _ = call_json("verify", "--dist", files["dyadic"], "--rho", "1", "--seed", "7")
        assert code == 0 and out["summary"]["verdict"] == "pass"
        shannon = [e for e in out["entries"] if e["claim_id"] == "source.shannon-lower"]
        assert shannon and shannon[0]["slack"] == 0.0
        assert out["metadata"]["seed"] == 7 and "sha256" in out["metadata"]["inputs"]["dist"]

    def test_verify_sequences(self, files):
        code, out, _ = call_json("verify", "--dist", files["p91"], "--rho", "1", "--n-max", "12")
        seq = [e for e in out["entries"] if e["claim_id"].startswith("seq.campbell")]
        assert code == 0 and len(seq) == 12 and all(e["verdict"] == "pass" for e in seq)

    def test_verify_mismatch_consistency(self, files):
        code, out, _ = call_json("verify", "--dist", files["half"], "--q-dist", files["p91"], "--rho", "1",
                                 "--keys", "4", "--trials", "20000", "--exhaustive")
        assert code == 0
        assert out["metadata"]["divergence"] == pytest.approx(I_HALF_UNIFORM_VS_91, abs=1e-12)
        ids = {e["claim_id"] for e in out["entries"]}
        for prefix in ("campbell.mismatch", "guess.mismatch", "memoryless.mismatch", "tasks.mismatch"):
            assert any(i.startswith(prefix) for i in ids), prefix

    def test_formats(self, files):
        code, out, _ = call("verify", "--dist", files["dyadic"], "--rho", "1", "--format", "table")
        assert code == 0 and out.rstrip().endswith("passed: pass")
        code, out, _ = call("measures", "--dist", files["dyadic"], "--rho", "1", "--format", "csv")
        assert out.startswith("key,value\n")

    def test_determinism(self, files):
        argv = ["verify", "--dist", files["p721"], "--rho", "1", "--seed", "11", "--trials", "5000",
                "--n-max", "4", "--keys", "5"]
        assert call(*argv)[1] == call(*argv)[1]

    def test_module_entry_point(self, files):
        res = subprocess.run([sys.executable, "-m", "unimoment", "measures", "--dist", files["half"],
                              "--rho", "1"], capture_output=True, text=True)
        assert res.returncode == 0 and json.loads(res.stdout)["shannon_entropy"] == 1.0


class TestExitCodes:
    def test_malformed_file(self, files):
        code, out, err = call("measures", "--dist", files["bad"], "--rho", "1")
        assert code == 2 and out == "" and "bad.csv" in err

    def test_missing_file(self, files):
        code, _, err = call("measures", "--dist", files["dir"] + "/nope.csv", "--rho", "1")
        assert code == 2 and "nope.csv" in err

    def test_zero_probability(self, files):
        assert call("measures", "--dist", files["zeros"], "--rho", "1")[0] == 2
        assert call("measures", "--dist", files["zeros"], "--rho", "1", "--strip-zeros")[0] == 0

    def test_alphabet_mismatch(self, files):
        code, _, err = call("guess", "--dist", files["p721"], "--q-dist", files["three"], "--rho", "1")
        assert code == 2 and err.startswith("error:")

    @pytest.mark.parametrize("flag,value", [("--rho", "-1"), ("--rho", "-3"), ("--alpha", "0"),
                                            ("--alpha", "-2"), ("--rho", "nan")])
    def test_order_out_of_range(self, files, flag, value):
        code, _, err = call("measures", "--dist", files["half"], flag, value)
        assert code == 2 and err

    def test_rho_and_alpha_conflict(self, files):
        code, _, err = call("measures", "--dist", files["half"], "--rho", "1", "--alpha", "0.5")
        assert code == 2 and "not allowed" in err

    def test_size_cap(self, files):
        code, _, err = call("seq", "--dist", files["p91"], "--rho", "1", "--rule", "campbell-code", "--n-max", "21")
        assert code == 2 and "cap" in err
        code, _, err = call("verify", "--dist", files["p91"], "--rho", "1", "--n-max", "21")
        assert code == 2 and "cap" in err

    def test_usage_errors(self, files):
        assert call()[0] == 2
        assert call("frobnicate")[0] == 2
        assert call("tasks", "--dist", files["half"], "--rho", "1")[0] == 2
        assert call("verify", "--dist", files["half"], "--rho", "1", "--trials", "-1")[0] == 2
        assert call("--version")[0] == 0

    def test_verification_failure_exits_one(self, files):
        # a tolerance below float resolution fails the identity checks, and only those
        code, out, _ = call_json("guess", "--dist", files["p721"], "--rho", "1", "--tol", "1e-300")
        failing = [c["claim_id"] for c in out["checks"] if c["verdict"] == "fail"]
        assert code == 1 and failing == ["guess.qg-identity"]
