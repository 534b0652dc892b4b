import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from progo.cli import main
from progo.engine import read_analysis, write_analysis, AnalysisPolicy, AnalyzedGame
from progo.workspace import Workspace, file_sha256


def cli(ws, *args):
    return main(["-w", str(ws), *args])


@pytest.fixture(scope="module")
def pipeline_ws(tmp_path_factory):
    ws = tmp_path_factory.mktemp("pipeline")
    assert cli(ws, "synth", "--players", "8", "--games", "60", "--seed", "3") == 0
    assert cli(ws, "ingest") == 0
    assert cli(ws, "analyze") == 0
    assert cli(ws, "rate") == 0
    assert cli(ws, "features") == 0
    assert cli(ws, "train") == 0
    assert cli(ws, "evaluate") == 0
    assert cli(ws, "report") == 0
    return ws


def test_pipeline_artifacts_exist(pipeline_ws):
    ws = Workspace(pipeline_ws)
    assert (ws.dir("catalog") / "games.csv").exists()
    assert list(ws.dir("analysis").glob("*.jsonl"))
    assert (ws.dir("ratings") / "ratings.csv").exists()
    assert (ws.dir("features") / "features.csv").exists()
    assert (ws.dir("models") / "model.json").exists()
    assert (ws.dir("models") / "metrics.csv").exists()
    assert (ws.dir("models") / "predictions.csv").exists()
    assert (ws.dir("reports") / "manifest.json").exists()
    assert ws.fingerprint() is not None


def test_rerun_is_noop(pipeline_ws, caplog):
    ws = Workspace(pipeline_ws)
    before = ws.fingerprint()
    for stage in ("ingest", "analyze", "rate", "features", "train", "report"):
        assert cli(pipeline_ws, stage) == 0
    assert ws.fingerprint() == before


def test_stage_isolation_reports(pipeline_ws):
    ws = Workspace(pipeline_ws)
    upstream = {p: file_sha256(p)
                for d in ("catalog", "analysis", "features", "ratings", "models")
                for p in sorted(ws.dir(d).glob("*")) if p.is_file()}
    shutil.rmtree(ws.dir("reports"))
    assert cli(pipeline_ws, "report") == 0
    after = {p: file_sha256(p)
             for d in ("catalog", "analysis", "features", "ratings", "models")
             for p in sorted(ws.dir(d).glob("*")) if p.is_file()}
    assert upstream == after
    assert (ws.dir("reports") / "region_totals.csv").exists()


def test_usage_error_exit_code():
    proc = subprocess.run(
        [sys.executable, "-m", "progo.cli", "analyze", "--no-such-flag"],
        capture_output=True)
    assert proc.returncode == 2
    proc = subprocess.run([sys.executable, "-m", "progo.cli"], capture_output=True)
    assert proc.returncode == 2


def test_missing_dependency_exit_code(tmp_path, capsys):
    ws = tmp_path / "empty"
    ws.mkdir()
    (ws / "corpus").mkdir()
    code = cli(ws, "analyze", "--engine", "mock:seed=1")
    assert code == 3
    err = capsys.readouterr().err
    assert "games.csv" in err  # names the missing path


def test_data_error_exit_code(tmp_path, capsys):
    ws = tmp_path / "broken"
    (ws / "corpus").mkdir(parents=True)
    (ws / "catalog").mkdir()
    (ws / "corpus" / "a.sgf").write_text("(;SZ[19]DT[2015-01-01]PB[A]PW[B]RE[B+R])")
    (ws / "catalog" / "players.csv").write_text("bogus,header\n1,2\n")
    (ws / "catalog" / "tournaments.csv").write_text(
        "category,edition,region_scope,importance,kind\n")
    code = cli(ws, "ingest")
    assert code == 4


def test_synth_twice_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for root in (a, b):
        assert cli(root, "synth", "--players", "5", "--games", "20", "--seed", "11") == 0
    files_a = sorted((a / "corpus").glob("*.sgf"))
    files_b = sorted((b / "corpus").glob("*.sgf"))
    assert [p.name for p in files_a] == [p.name for p in files_b]
    assert all(x.read_bytes() == y.read_bytes() for x, y in zip(files_a, files_b))


def test_analyze_resumes_partial(tmp_path):
    ws_root = tmp_path / "resume"
    assert cli(ws_root, "synth", "--players", "5", "--games", "8", "--seed", "2") == 0
    assert cli(ws_root, "ingest") == 0
    assert cli(ws_root, "analyze") == 0
    ws = Workspace(ws_root)
    paths = sorted(ws.dir("analysis").glob("*.jsonl"))
    target = paths[0]
    reference = target.read_bytes()

    # simulate a crash: only the first five initial-pass evals survived
    analyzed, policy = read_analysis(target)
    partial = AnalyzedGame(analyzed.game_id, analyzed.komi, analyzed.rules_label,
                           [e for e in analyzed.evals[:5]
                            if e.visits_used == policy.initial_visits])
    target.unlink()
    write_analysis(Path(str(target) + ".partial"), partial, policy)

    assert cli(ws_root, "analyze") == 0
    assert target.read_bytes() == reference
    assert not Path(str(target) + ".partial").exists()


def test_workers_do_not_change_outputs(tmp_path):
    fingerprints = []
    for workers in ("1", "3"):
        root = tmp_path / f"w{workers}"
        assert cli(root, "synth", "--players", "6", "--games", "25", "--seed", "5") == 0
        assert cli(root, "ingest") == 0
        assert cli(root, "analyze", "--workers", workers) == 0
        fingerprints.append(Workspace(root).fingerprint())
    assert fingerprints[0] == fingerprints[1]


def test_config_file_supplies_engine_and_flags_override(tmp_path):
    root = tmp_path / "cfg"
    assert cli(root, "synth", "--players", "5", "--games", "10", "--seed", "4") == 0
    assert cli(root, "ingest") == 0
    # config written by synth points at the script mock; run with it
    assert cli(root, "analyze") == 0
    ws = Workspace(root)
    info = ws.read_manifest()["stages"]["analyze"]["info"]
    assert info["engine"].startswith("mock:script=")
    # a flag overrides the config engine
    assert cli(root, "analyze", "--engine", "mock:seed=9") == 0
    info = ws.read_manifest()["stages"]["analyze"]["info"]
    assert info["engine"] == "mock:seed=9"


def test_evaluate_without_model_uses_baselines(tmp_path):
    root = tmp_path / "nomodel"
    assert cli(root, "synth", "--players", "6", "--games", "40", "--seed", "6") == 0
    assert cli(root, "ingest") == 0
    assert cli(root, "rate") == 0
    assert cli(root, "features") == 0
    assert cli(root, "evaluate") == 0
    metrics = (Workspace(root).dir("models") / "metrics.csv").read_text()
    assert "rating:whr" in metrics


def test_features_before_rate_still_works(tmp_path):
    # in-game and rating columns fall back to missing flags
    root = tmp_path / "order"
    assert cli(root, "synth", "--players", "6", "--games", "40", "--seed", "6") == 0
    assert cli(root, "ingest") == 0
    assert cli(root, "features") == 0
    text = (Workspace(root).dir("features") / "features.csv").read_text()
    assert text.count("\n") == 41  # header + one row per kept game
