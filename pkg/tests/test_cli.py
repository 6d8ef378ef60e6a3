import hashlib
import io
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from finite_dirichlet.cli import canonical_bytes, demo_document, main

import oracles

DATA = Path(__file__).parent / "data"
MALFORMED = sorted((DATA / "malformed").glob("*.json"))


def run(argv):
    out, err = io.BytesIO(), io.StringIO()
    code = main(argv, stdout=out, stderr=err)
    raw = out.getvalue()
    return code, raw, json.loads(raw) if raw else None


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def rec(report, name):
    return next(r for r in report["records"] if r["name"] == name)


TWO = {"ground_set": ["a", "b"], "jumps": [{"x": "a", "y": "b", "weight": 1}]}


class TestDecompose:
    def test_two_point(self, tmp_path):
        code, _, rep = run(["decompose", write(tmp_path, "f.json", TWO)])
        assert code == 0
        assert rep["data"]["jumps"] == [{"x": "a", "y": "b", "weight": 1.0}]
        assert rep["data"]["killing"] == {"a": 0.0, "b": 0.0} and rep["data"]["markovian"]

    def test_diagonal(self, tmp_path):
        code, _, rep = run(["decompose", write(tmp_path, "f.json", {"ground_set": ["a", "b"], "matrix": [[2, 0], [0, 3]]})])
        assert code == 0 and rep["data"]["jumps"] == [] and rep["data"]["killing"] == {"a": 2.0, "b": 3.0}

    def test_asymmetric(self, tmp_path):
        doc = {"ground_set": ["a", "b"], "matrix": [[1, -0.5], [-1.5, 1]]}
        code, _, rep = run(["decompose", write(tmp_path, "f.json", doc)])
        assert code == 0 and rec(rep, "input.symmetrized")["status"] == "info"
        assert rep["data"]["jumps"][0]["weight"] == 1.0


class TestVerify:
    def test_markovian_all_suites(self, tmp_path):
        p = tmp_path / "rm.json"
        p.write_bytes(canonical_bytes(demo_document("random-markovian", ["12", "0.4", "1.0", "3"])))
        code, _, rep = run(["verify", str(p), "--trials", "60"])
        assert code == 0, [r for r in rep["records"] if r["status"] == "fail"]
        names = {r["name"].split(".")[0] for r in rep["records"]}
        assert {"core", "lagrangian", "killing", "measures", "dirichlet"} <= names
        assert [r["name"] for r in rep["records"]] == sorted(r["name"] for r in rep["records"])

    def test_negative_jump(self, tmp_path):
        doc = {"ground_set": ["a", "b", "c"],
               "jumps": [{"x": "a", "y": "b", "weight": 2}, {"x": "b", "y": "c", "weight": -0.5}],
               "killing": {"b": 1, "c": 1}}
        code, _, rep = run(["verify", write(tmp_path, "f.json", doc), "--suite", "lagrangian"])
        assert code == 1
        r = rec(rep, "lagrangian.positivity")
        assert r["status"] == "fail" and r["witness"]["point"] in ("b", "c") and r["witness"]["density"] < 0
        assert all(x["witness"] is not None for x in rep["records"] if x["status"] == "fail")

    def test_empty_function_table(self, tmp_path):
        code, _, rep = run(["verify", write(tmp_path, "f.json", TWO), "--suite", "core", "--trials", "20"])
        assert code == 0 and rec(rep, "core.markovian")["status"] == "pass"

    def test_bad_trials(self, tmp_path):
        assert run(["verify", write(tmp_path, "f.json", TWO), "--trials", "0"])[0] == 2


class TestTimechange:
    DOC = dict(TWO, measures={"m": [1, 1], "z": [0, 1]})

    def test_closed_form(self, tmp_path):
        code, _, rep = run(["timechange", write(tmp_path, "f.json", self.DOC), "--measure", "m", "--t", "0", "1"])
        assert code == 0
        assert np.array_equal(rep["data"]["semigroup"]["0.0"], np.eye(2))
        assert np.max(np.abs(np.array(rep["data"]["semigroup"]["1.0"]) - oracles.semigroup_two_point(1.0))) <= 1e-10

    def test_null_set(self, tmp_path):
        code, _, rep = run(["timechange", write(tmp_path, "f.json", self.DOC), "--measure", "z"])
        assert code == 1 and rec(rep, "timechange.energy_on_null_set")["witness"] == "a"

    def test_unknown_measure(self, tmp_path):
        assert run(["timechange", write(tmp_path, "f.json", self.DOC), "--measure", "q"])[0] == 2

    def test_bad_time(self, tmp_path):
        assert run(["timechange", write(tmp_path, "f.json", self.DOC), "--measure", "m", "--t", "-1"])[0] == 2


class TestSpectrum:
    DOC = {"ground_set": ["a", "b", "c"], "matrix": [[2, -1, 0], [-1, 2, -1], [0, -1, 2]],
           "functions": {"g": [1, 1, 0], "s": [1, 2, 3]}}

    def test_one_class(self, tmp_path):
        code, _, rep = run(["spectrum", write(tmp_path, "f.json", self.DOC), "--generators", "g"])
        assert code == 0
        assert rep["data"]["classes"] == [["a", "b"]] and rep["data"]["dropped"] == ["c"]
        assert rep["data"]["transferred_matrix"] == [[2.0]]

    def test_separating(self, tmp_path):
        code, _, rep = run(["spectrum", write(tmp_path, "f.json", self.DOC), "--generators", "s"])
        assert code == 0 and rep["data"]["transferred_matrix"] == self.DOC["matrix"]

    def test_no_generators(self, tmp_path):
        code, _, rep = run(["spectrum", write(tmp_path, "f.json", self.DOC)])
        assert code == 0 and rep["data"]["classes"] == []

    def test_unknown(self, tmp_path):
        assert run(["spectrum", write(tmp_path, "f.json", self.DOC), "--generators", "nope"])[0] == 2


class TestDemoAndClosability:
    def test_round_trip(self, tmp_path):
        for kind, params in [("path", ["100"]), ("spikes", ["200", "10"]),
                             ("random-markovian", ["50", "0.2", "1.0", "7"])]:
            code, raw, _ = run(["demo", kind, *params])
            assert code == 0
            p = tmp_path / f"{kind}.json"
            p.write_bytes(raw)
            assert canonical_bytes(json.loads(raw)) == raw
            digests = {run([cmd, str(p)])[2]["input_digest"] for cmd in ("decompose", "spectrum")}
            assert digests == {hashlib.sha256(raw).hexdigest()}
            assert run(["demo", kind, *params])[1] == raw

    def test_fixed_digest_per_seed(self):
        a = run(["demo", "random-markovian", "50", "0.2", "1.0", "7"])[1]
        b = run(["demo", "random-markovian", "50", "0.2", "1.0", "8"])[1]
        assert a != b

    @pytest.mark.parametrize("params", [["path"], ["path", "1"], ["path", "x"], ["spikes", "10", "5"],
                                        ["random-markovian", "5", "2", "1", "0"], ["torus", "3"]])
    def test_bad_params(self, params):
        code, _, rep = run(["demo", *params])
        assert code == 2 and rep["records"][0]["status"] == "fail"

    def test_closability(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_bytes(run(["demo", "spikes", "400", "20"])[1])
        code, _, rep = run(["closability", str(p), "--sequence", "spikes", "--measure", "counting"])
        assert code == 0
        certs = [r for r in rep["records"] if r["name"].startswith("closability.certificate")]
        assert len(certs) == 10 and all(r["status"] == "pass" for r in certs)
        assert all(r["witness"]["bound8"] < 1 / r["witness"]["j"] for r in certs)
        code, _, rep = run(["closability", str(p), "--sequence", "zero", "--measure", "counting"])
        assert code == 0
        code, _, rep = run(["closability", str(p), "--sequence", "control", "--measure", "counting"])
        assert code == 1 and "energy_moduli" in rec(rep, "closability.selection")["witness"]
        assert run(["closability", str(p), "--sequence", "nothing", "--measure", "counting"])[0] == 2


@pytest.mark.parametrize("path", MALFORMED, ids=[p.name for p in MALFORMED])
def test_malformed_corpus(path):
    assert len(MALFORMED) >= 10
    for argv in (["decompose"], ["verify", "--trials", "5"], ["timechange", "--measure", "m"],
                 ["spectrum", "--generators", "g"], ["closability", "--sequence", "s", "--measure", "m"]):
        code, raw, rep = run([argv[0], str(path), *argv[1:]])
        assert code == 2, (argv, rep)
        assert raw.count(b"\n") == 1 and rep["records"][0]["status"] == "fail"


def test_missing_file_and_bad_command():
    assert run(["decompose", "/nonexistent/file.json"])[0] == 2
    assert run(["frobnicate"])[0] == 2


def test_console_script(tmp_path):
    env = dict(os.environ, NO_COLOR="1")
    p = tmp_path / "f.json"
    p.write_text(json.dumps(TWO))
    res = subprocess.run([sys.executable, "-m", "finite_dirichlet", "decompose", str(p)],
                         capture_output=True, env=env)
    assert res.returncode == 0 and json.loads(res.stdout)["data"]["markovian"]
    assert b"\x1b[" not in res.stderr
    res = subprocess.run([sys.executable, "-m", "finite_dirichlet", "verify", str(MALFORMED[0])],
                         capture_output=True, env=env)
    assert res.returncode == 2 and b"Traceback" not in res.stderr


def test_verify_large_demo(tmp_path):
    # more than 200 points: the dominant-measure family is trimmed to stay above the zero threshold
    p = tmp_path / "s.json"
    p.write_bytes(run(["demo", "spikes", "400", "20"])[1])
    code, _, rep = run(["verify", str(p), "--suite", "measures", "--trials", "20"])
    assert code == 0, [r for r in rep["records"] if r["status"] == "fail"]
