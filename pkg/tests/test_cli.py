import json

import pytest

from main import main
from tests.conftest import slow


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


@pytest.fixture
def generated(tmp_path, capsys):
    ws = str(tmp_path / "ws")
    assert run_cli(capsys, "init", ws)[0] == 0
    code, result = run_cli(capsys, "generate", ws, "--seed", "3", "--instances", "120", "--nets", "100", "--layers", "4")
    assert code == 0
    assert result["data"]["instances"] == 120
    return ws


def test_unknown_verb_is_usage_error(capsys):
    assert main(["explode"]) == 2


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == 0


def test_missing_workspace_fails(tmp_path, capsys):
    code, result = run_cli(capsys, "vectorize", str(tmp_path / "missing"))
    assert code == 1
    assert result is None


def test_bad_thread_count(generated, capsys, monkeypatch):
    monkeypatch.setenv("CHIPVEC_THREADS", "zero")
    assert run_cli(capsys, "vectorize", generated)[0] == 1


def test_ingest_reports_counts(generated, capsys):
    code, result = run_cli(capsys, "ingest", generated)
    assert code == 0
    assert result["success"] is True
    assert result["data"]["instances"] == 120


def test_vectorize_single_level(generated, capsys, tmp_path):
    code, result = run_cli(capsys, "vectorize", generated, "--level", "net")
    assert code == 0
    assert result["data"]["levels"] == ["net"]
    assert list(result["data"]["counts"]) == ["net"]
    assert (tmp_path / "ws" / "vectors" / "nets" / "net_0.json").is_file()


def test_fidelity_needs_full_bundle(generated, capsys):
    run_cli(capsys, "vectorize", generated, "--level", "net")
    assert run_cli(capsys, "fidelity", generated)[0] == 1


def test_dse_sphere(generated, capsys, tmp_path):
    code, result = run_cli(capsys, "dse", generated, "--objective", "sphere", "--budget", "6", "--seed", "1")
    assert code == 0
    assert result["data"]["trials"] == 6
    assert (tmp_path / "ws" / "report" / "dse_history.csv").is_file()


@slow
def test_full_pipeline(generated, capsys, tmp_path):
    root = tmp_path / "ws"
    assert run_cli(capsys, "vectorize", generated, "--threads", "2")[0] == 0
    code, result = run_cli(capsys, "fidelity", generated)
    assert code == 0
    assert result["data"]["wirelength_ratio"] == 1.0
    assert (root / "result" / "reconstructed.def").is_file()
    assert run_cli(capsys, "report", generated)[0] == 0
    assert "## Fidelity" in (root / "report" / "report.md").read_text(encoding="utf-8")
    code, result = run_cli(capsys, "dataset", generated, "--task", "tabular", "--task", "graph")
    assert code == 0
    assert result["data"]["tasks"] == ["tabular", "graph"]
    assert (root / "feature" / "graph_nodes.npy").is_file()
