import json

import numpy as np
import pytest

from linsemid.cli import main
from linsemid.decomp import decomp_ht_id, estimate
from linsemid.fixtures import (
    bow_graph,
    decomposition_required_graph,
    iv_graph,
)
from linsemid.linalg import ModelInstance, implied_covariance
from linsemid.oracle import random_instance
from linsemid.report import build_report, dump_report, result_from_report


@pytest.fixture
def iv_files(tmp_path):
    g = iv_graph()
    graph_path = tmp_path / "iv.json"
    graph_path.write_text(json.dumps(g.to_dict()))
    lam = np.zeros((3, 3))
    lam[0, 1], lam[1, 2] = 0.8, 0.5
    omega = np.eye(3)
    omega[1, 2] = omega[2, 1] = 0.3
    sigma = implied_covariance(ModelInstance(g.names, lam, omega))
    cov_path = tmp_path / "iv.csv"
    cov_path.write_text(sigma.to_csv())
    return g, graph_path, cov_path


class TestIdentify:
    def test_full_identification_exits_zero(self, iv_files, tmp_path, capsys):
        _, graph_path, _ = iv_files
        out = tmp_path / "report.json"
        code = main(["identify", "--graph", str(graph_path), "--mode", "g-htc", "--out", str(out)])
        assert code == 0
        report = json.loads(out.read_text())
        assert report["edges"]["b"]["status"] == "identified"

    def test_partial_identification_exits_two(self, tmp_path):
        path = tmp_path / "bow.json"
        path.write_text(json.dumps(bow_graph().to_dict()))
        assert main(["identify", "--graph", str(path), "--out", str(tmp_path / "r.json")]) == 2
        report = json.loads((tmp_path / "r.json").read_text())
        assert report["edges"]["b"]["status"] == "undecided"

    def test_malformed_input_exits_one(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{"nodes": ["a"], "directed": [["a", "a", "x"]]}')
        assert main(["identify", "--graph", str(path)]) == 1
        err = capsys.readouterr().err
        assert err.startswith("error: ")
        assert "self-loop" in err and err.count("\n") == 1

    def test_missing_file_exits_one(self, tmp_path, capsys):
        assert main(["identify", "--graph", str(tmp_path / "nope.json")]) == 1
        assert capsys.readouterr().err.startswith("error: ")

    def test_byte_identical_reports(self, iv_files, tmp_path):
        _, graph_path, _ = iv_files
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        main(["identify", "--graph", str(graph_path), "--out", str(out1)])
        main(["identify", "--graph", str(graph_path), "--out", str(out2)])
        assert out1.read_bytes() == out2.read_bytes()


class TestEstimate:
    def test_direct(self, iv_files, tmp_path):
        _, graph_path, cov_path = iv_files
        out = tmp_path / "est.json"
        code = main(["estimate", "--graph", str(graph_path), "--cov", str(cov_path), "--out", str(out)])
        assert code == 0
        est = json.loads(out.read_text())["estimates"]
        assert est["a"] == pytest.approx(0.8)
        assert est["b"] == pytest.approx(0.5)

    def test_via_report_matches_direct(self, iv_files, tmp_path):
        _, graph_path, cov_path = iv_files
        report_path = tmp_path / "report.json"
        main(["identify", "--graph", str(graph_path), "--out", str(report_path)])
        out1, out2 = tmp_path / "e1.json", tmp_path / "e2.json"
        main(["estimate", "--graph", str(graph_path), "--cov", str(cov_path), "--out", str(out1)])
        main(["estimate", "--report", str(report_path), "--cov", str(cov_path), "--out", str(out2)])
        assert out1.read_bytes() == out2.read_bytes()

    def test_missing_node_column(self, iv_files, tmp_path, capsys):
        _, graph_path, _ = iv_files
        cov = tmp_path / "small.csv"
        cov.write_text("z,x\n1.0,0.1\n0.1,1.0\n")
        assert main(["estimate", "--graph", str(graph_path), "--cov", str(cov)]) == 1
        assert "missing nodes: y" in capsys.readouterr().err

    def test_report_graph_mismatch_rejected(self, iv_files, tmp_path, capsys):
        _, graph_path, cov_path = iv_files
        report_path = tmp_path / "report.json"
        main(["identify", "--graph", str(graph_path), "--out", str(report_path)])
        other = tmp_path / "other.json"
        other.write_text(json.dumps(bow_graph().to_dict()))
        code = main(["estimate", "--report", str(report_path), "--graph", str(other), "--cov", str(cov_path)])
        assert code == 1
        assert "does not match" in capsys.readouterr().err

    def test_asymmetric_covariance_rejected(self, iv_files, tmp_path, capsys):
        _, graph_path, _ = iv_files
        cov = tmp_path / "asym.csv"
        cov.write_text("z,x,y\n1.0,0.5,0.0\n0.2,1.0,0.0\n0.0,0.0,1.0\n")
        assert main(["estimate", "--graph", str(graph_path), "--cov", str(cov)]) == 1
        assert "asymmetry" in capsys.readouterr().err


class TestCompare:
    def test_fixture_table(self, tmp_path, capsys):
        path = tmp_path / "g.json"
        path.write_text(json.dumps(decomposition_required_graph().to_dict()))
        assert main(["compare", "--graph", str(path)]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "graph,mode,identified"
        table = {row.split(",")[1]: row.split(",")[2] for row in lines[1:]}
        assert table["g-htc"] == "a"
        assert table["decomp"] == "a;b;c;d;e;f;g;h"

    def test_ensemble_runs(self, tmp_path):
        out = tmp_path / "t.csv"
        assert main(["compare", "--ensemble", "n=4,draws=3,seed=5", "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 1 + 3 * 4

    def test_bad_ensemble_spec(self, capsys):
        assert main(["compare", "--ensemble", "bogus"]) == 1
        assert "key=value" in capsys.readouterr().err


class TestRandomCheck:
    def test_clean_run_exits_zero(self, tmp_path):
        out = tmp_path / "check.json"
        code = main(["random-check", "--ensemble", "n=4,draws=8", "--seed", "42", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["soundness"]["violations"] == []
        assert payload["config"]["seed"] == 42

    def test_corruption_hook_exits_three(self, tmp_path, monkeypatch):
        monkeypatch.setenv("LINSEMID_SELF_TEST_CORRUPT", "1")
        code = main(["random-check", "--ensemble", "n=4,p_bi=0.4,draws=8,seed=42", "--out", str(tmp_path / "c.json")])
        assert code == 3

    def test_byte_identical_output(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["random-check", "--ensemble", "n=4,draws=6,seed=9", "--out", str(a)])
        main(["random-check", "--ensemble", "n=4,draws=6,seed=9", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_env_seed_override(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("LINSEMID_SEED", "7")
        main(["random-check", "--ensemble", "n=3,draws=2"])
        payload = json.loads(capsys.readouterr().out)
        assert payload["config"]["seed"] == 7


class TestReportRoundTrip:
    def test_estimation_survives_serialization(self):
        g = decomposition_required_graph()
        m = random_instance(g, 53)
        sigma = implied_covariance(m)
        res = decomp_ht_id(g)
        direct, _ = estimate(res, g, sigma)
        text = dump_report(build_report(g, res, "decomp"))
        g2, res2 = result_from_report(json.loads(text))
        replayed, _ = estimate(res2, g2, sigma)
        assert replayed == direct
