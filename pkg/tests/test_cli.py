import json
import math

import numpy as np
import pytest

from weaksim.cli import main
from weaksim.grover import p_success
from weaksim.stats import binomial_z


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def tsv(out):
    lines = out.splitlines()
    assert lines[0].startswith("# ")
    header = json.loads(lines[0][2:])
    rows = np.array([[int(v) for v in line.split("\t")] for line in lines[1:]], dtype=np.int64)
    return header, rows


@pytest.fixture
def bell_file(tmp_path):
    path = tmp_path / "bell.gates"
    path.write_text("H 0\nCNOT 0 1\n")
    return path


class TestExact:
    def test_shor_formula(self, capsys):
        code, out, _ = run(capsys, "exact", "--circuit", "shor", "--a", 2, "--N", 5, "--nx", 4, "--method", "formula")
        assert code == 0
        doc = json.loads(out)
        probs = dict((x, p) for x, p in doc["probs"])
        n_f = dict(doc["registers"])["f"]
        marginal = {}
        for x, p in probs.items():
            marginal[x >> n_f] = marginal.get(x >> n_f, 0) + p
        assert marginal == pytest.approx({0: 0.25, 4: 0.25, 8: 0.25, 12: 0.25})

    def test_formula_matches_oracle(self, capsys):
        _, a, _ = run(capsys, "exact", "--circuit", "shor", "--a", 2, "--N", 12, "--nx", 5, "--method", "formula")
        _, b, _ = run(capsys, "exact", "--circuit", "shor", "--a", 2, "--N", 12, "--nx", 5, "--method", "oracle")
        pa, pb = dict(map(tuple, json.loads(a)["probs"])), dict(map(tuple, json.loads(b)["probs"]))
        assert pa.keys() == pb.keys()
        assert all(math.isclose(pa[k], pb[k], abs_tol=1e-12) for k in pa)

    def test_bell(self, capsys, bell_file):
        code, out, _ = run(capsys, "exact", "--circuit", "gatelist", "--file", bell_file)
        assert code == 0
        assert dict(map(tuple, json.loads(out)["probs"])) == pytest.approx({0: 0.5, 3: 0.5})

    def test_grover_certain(self, capsys):
        code, out, _ = run(capsys, "exact", "--circuit", "grover", "--n", 2, "--t", 1)
        assert code == 0
        assert dict(map(tuple, json.loads(out)["probs"])) == pytest.approx({1: 1.0})

    def test_dense(self, capsys):
        _, out, _ = run(capsys, "exact", "--circuit", "grover", "--n", 2, "--t", 1, "--x0", 3, "--dense")
        assert len(json.loads(out)["probs"]) == 4

    def test_cap(self, capsys, monkeypatch):
        monkeypatch.setenv("QIS_ORACLE_CAP", "4")
        code, _, err = run(capsys, "exact", "--circuit", "shor", "--a", 2, "--N", 7, "--nx", 5, "--method", "oracle")
        assert code == 2 and "error" in err


class TestSample:
    def test_reproducible(self, capsys):
        argv = ("sample", "--circuit", "shor", "--a", 2, "--N", 7, "--nx", 5, "--count", 3, "--seed", 7)
        code, first, _ = run(capsys, *argv)
        _, second, _ = run(capsys, *argv)
        assert code == 0 and first == second
        header, rows = tsv(first)
        assert rows.shape == (3, 2)
        assert header["input"]["r"] == 3 and header["input"]["x_min"] == 0
        assert set(rows[:, 1]) <= {1, 2, 4}

    def test_superposed_range(self, capsys):
        code, out, _ = run(capsys, "sample", "--circuit", "shor-superposed", "--a", 2, "--nN", 5, "--nx", 6,
                           "--count", 10, "--seed", 1)
        assert code == 0
        _, rows = tsv(out)
        assert rows.shape == (10, 3)
        assert ((rows[:, 0] >= 1) & (rows[:, 0] <= 32)).all()

    def test_grover_frequency(self, capsys):
        code, out, _ = run(capsys, "sample", "--circuit", "grover", "--n", 8, "--t", 3, "--x0", 37,
                           "--count", 100_000, "--seed", 2)
        assert code == 0
        header, rows = tsv(out)
        assert header["input"]["x0"] == 37
        assert abs(binomial_z(int((rows[:, 0] == 37).sum()), 100_000, p_success(8, 3))) < 3

    def test_workers_identical(self, capsys):
        base = ("sample", "--circuit", "shor", "--a", 3, "--N", 10, "--nx", 6, "--count", 5000,
                "--seed", 11, "--chunk", 1000)
        _, serial, _ = run(capsys, *base)
        _, parallel, _ = run(capsys, *base, "--workers", 3)
        assert serial == parallel

    def test_json_and_file(self, capsys, tmp_path):
        out_path = tmp_path / "s.json"
        code, out, _ = run(capsys, "sample", "--circuit", "coset", "--orders", "4,6", "--generators", "2,0;0,3",
                           "--shift", "1,1", "--count", 50, "--seed", 3, "--format", "json", "--out", out_path)
        assert code == 0 and out == ""
        doc = json.loads(out_path.read_text())
        assert doc["header"]["input"]["K"] == [[2, 0], [0, 3]]
        assert {tuple(r) for r in doc["records"]} <= {(1, 1), (3, 1), (1, 4), (3, 4)}

    def test_seed_recorded_when_missing(self, capsys):
        _, out, _ = run(capsys, "sample", "--circuit", "grover", "--n", 3, "--t", 1, "--count", 2)
        header, _ = tsv(out)
        assert isinstance(header["seed"], int)

    def test_truth_table(self, capsys, tmp_path):
        path = tmp_path / "f.txt"
        path.write_text("00000100")
        code, out, _ = run(capsys, "sample", "--circuit", "grover-oracle", "--n", 3, "--t", 1,
                           "--truth-table", path, "--count", 200, "--seed", 4)
        assert code == 0
        _, rows = tsv(out)
        assert set(rows[:, 0]) <= {0, 5}

    def test_random_clifford(self, capsys):
        code, out, _ = run(capsys, "sample", "--circuit", "clifford", "--random", 4, "--count", 20, "--seed", 5)
        assert code == 0
        _, rows = tsv(out)
        assert ((rows >= 0) & (rows < 16)).all()


class TestCompare:
    def test_shor(self, capsys):
        code, out, _ = run(capsys, "compare", "--circuit", "shor", "--a", 2, "--N", 7, "--nx", 5,
                           "--count", 100_000, "--seed", 1)
        doc = json.loads(out)
        assert code == 0 and doc["pass"]
        assert doc["gof"]["p"] >= 1e-3
        assert doc["tvd_exact"] < 1e-12

    def test_clifford(self, capsys):
        code, out, _ = run(capsys, "compare", "--circuit", "clifford", "--random", 5, "--seed", 3)
        assert code == 0 and json.loads(out)["gof"]["p"] >= 1e-3

    def test_grover_two_samplers(self, capsys):
        code, out, _ = run(capsys, "compare", "--circuit", "grover", "--n", 4, "--t", 1, "--against", "paper",
                           "--count", 1000, "--seed", 1)
        assert code == 0 and json.loads(out)["tvd_exact"] < 1e-15

    def test_grover_oracle_discrepancy(self, capsys):
        code, out, _ = run(capsys, "compare", "--circuit", "grover", "--n", 3, "--t", 1, "--against", "oracle")
        doc = json.loads(out)
        assert code == 0 and doc["threshold"] is None
        assert 0 < doc["discrepancy"]["tvd"] < 1

    def test_suite_subset(self, capsys):
        code, out, _ = run(capsys, "compare", "--suite", "full", "--criteria", "8")
        assert code == 0
        assert out.splitlines()[0].startswith("PASS [8]")


class TestErrors:
    def test_missing_flag(self, capsys):
        code, _, err = run(capsys, "exact", "--circuit", "shor", "--a", 2, "--N", 7)
        assert code == 2 and "--nx" in err

    def test_bad_base(self, capsys):
        assert run(capsys, "exact", "--circuit", "shor", "--a", 9, "--N", 7, "--nx", 3)[0] == 2

    def test_unknown_circuit(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["exact", "--circuit", "nope"])
        assert exc.value.code == 2

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "exact", "--circuit", "gatelist", "--file", tmp_path / "none")[0] == 2

    def test_bad_count(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["sample", "--circuit", "grover", "--n", "2", "--t", "1", "--count", "-1"])
        assert exc.value.code == 2

    def test_non_ht_file(self, capsys, tmp_path):
        path = tmp_path / "g.gates"
        path.write_text("H 0\nS 0\n")
        assert run(capsys, "sample", "--circuit", "ht", "--file", path, "--count", 2, "--seed", 1)[0] == 2


class TestBenchAndKalai:
    def test_bench_grover(self, capsys):
        code, out, _ = run(capsys, "bench", "--target", "grover", "--t-max", 5, "--format", "json")
        rows = json.loads(out)
        assert code == 0 and len(rows) == 5
        assert all(r["max_N"] <= r["cap"] for r in rows)

    def test_bench_rho(self, capsys):
        code, out, _ = run(capsys, "bench", "--target", "rho", "--log-q-max", 5, "--count", 200)
        assert code == 0
        lines = out.splitlines()
        assert lines[0].split("\t")[:2] == ["q", "M"]
        assert len(lines) == 1 + 8

    def test_kalai(self, capsys):
        code, out, _ = run(capsys, "kalai", "--nmax", 1000, "--count", 5, "--seed", 1, "--deep")
        lines = out.splitlines()
        assert code == 0 and len(lines) == 6
        assert all(1 <= int(line.split("\t")[0]) <= 1000 for line in lines[1:])
