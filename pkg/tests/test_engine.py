import sys

import pytest

from progo.engine import (
    AnalysisPolicy,
    EngineCrashed,
    MockEngine,
    MoveEval,
    ProcessEngine,
    ScriptError,
    ScriptedEngine,
    TableEngine,
    evaluate_game,
    make_engine,
    needs_reeval,
    read_analysis,
    write_analysis,
)
from progo.sgf import parse_sgf

POLICY = AnalysisPolicy()


def ev(ordinal, w, s, visits=100):
    return MoveEval(ordinal, w, s, (), visits)


def table_for(winrates, scores=None, top=None):
    scores = scores or [0.0] * len(winrates)
    return {
        i: {"winrate_black": w, "score_black": s, "top_moves": top or []}
        for i, (w, s) in enumerate(zip(winrates, scores))
    }


def two_move_record():
    return parse_sgf("(;GM[1]FF[4]SZ[19]PB[A]PW[B]KM[6.5]RE[B+R];B[pd];W[dp])")


# -- needs_reeval --------------------------------------------------------------

def test_reeval_triggers_on_winrate_jump():
    assert needs_reeval(ev(1, 0.50, 0.0), ev(2, 0.62, 1.0), POLICY)


def test_reeval_boundary_is_strict():
    assert not needs_reeval(ev(1, 0.50, 0.0), ev(2, 0.60, 5.0), POLICY)


def test_reeval_triggers_on_score_jump():
    assert needs_reeval(ev(1, 0.50, 0.0), ev(2, 0.52, 5.5), POLICY)


# -- evaluate_game --------------------------------------------------------------

def test_flat_game_never_escalates():
    record = two_move_record()
    engine = TableEngine(table_for([0.5, 0.5, 0.5]))
    analyzed = evaluate_game(record, engine, POLICY)
    assert len(analyzed.evals) == 3
    assert all(e.visits_used == 100 for e in analyzed.evals)
    assert [e.ordinal for e in analyzed.evals] == [0, 1, 2]


def test_winrate_drop_escalates_that_position():
    record = two_move_record()
    engine = TableEngine(table_for([0.50, 0.50, 0.35]))
    analyzed = evaluate_game(record, engine, POLICY)
    assert analyzed.evals[2].visits_used == 1000
    assert analyzed.evals[1].visits_used == 100


def test_escalated_result_replaces_initial():
    record = two_move_record()
    table = table_for([0.50, 0.50, 0.30])
    table[(2, 1000)] = {"winrate_black": 0.41, "score_black": -2.0, "top_moves": []}
    analyzed = evaluate_game(record, TableEngine(table), POLICY)
    assert analyzed.evals[2].winrate_black == 0.41
    assert analyzed.evals[2].visits_used == 1000


def test_zero_move_game_gets_initial_position_only():
    record = parse_sgf("(;GM[1]FF[4]SZ[19]KM[6.5])")
    analyzed = evaluate_game(record, MockEngine(3), POLICY)
    assert len(analyzed.evals) == 1
    assert analyzed.evals[0].ordinal == 0


def test_explicit_table_reproduced_exactly():
    record = parse_sgf("(;SZ[19]KM[6.5];B[pd];W[dp];B[cc];W[qq])")
    winrates = [0.48, 0.52, 0.49, 0.55, 0.51]
    analyzed = evaluate_game(record, TableEngine(table_for(winrates)), POLICY)
    assert analyzed.winrates() == winrates


def test_escalation_soundness_invariant():
    record = parse_sgf("(;SZ[19]KM[6.5]" + "".join(
        f";{c}[{p}]" for c, p in
        [("B", "pd"), ("W", "dp"), ("B", "cc"), ("W", "qq"), ("B", "jj")]) + ")")
    winrates = [0.50, 0.62, 0.60, 0.45, 0.46, 0.58]
    analyzed = evaluate_game(record, TableEngine(table_for(winrates)), POLICY)
    for prev, cur in zip(analyzed.evals, analyzed.evals[1:]):
        if prev.visits_used == 100 and cur.visits_used == 100:
            assert not needs_reeval(prev, cur, POLICY)


def test_resume_skips_finished_ordinals():
    record = two_move_record()

    class CountingEngine(TableEngine):
        def __init__(self, table):
            super().__init__(table)
            self.calls = []

        def query(self, request):
            self.calls.append(len(request["moves"]))
            return super().query(request)

    engine = CountingEngine(table_for([0.5, 0.5, 0.5]))
    done = [ev(0, 0.5, 0.0), ev(1, 0.5, 0.0)]
    analyzed = evaluate_game(record, engine, POLICY, resume_from=done)
    assert engine.calls == [2]
    assert len(analyzed.evals) == 3


def test_crash_carries_partial_results():
    record = two_move_record()

    class DyingEngine(TableEngine):
        def query(self, request):
            if len(request["moves"]) >= 2:
                raise ScriptError("boom")
            return super().query(request)

    with pytest.raises(EngineCrashed) as exc:
        evaluate_game(record, DyingEngine(table_for([0.5, 0.5, 0.5])), POLICY)
    assert [e.ordinal for e in exc.value.completed] == [0, 1]
    assert exc.value.last_ordinal == 1


# -- mock engine ---------------------------------------------------------------

def test_mock_is_deterministic():
    a = MockEngine(42).query({"id": "x:0", "moves": [], "komi": 6.5, "visits": 100})
    b = MockEngine(42).query({"id": "x:0", "moves": [], "komi": 6.5, "visits": 100})
    assert a == b


def test_mock_value_independent_of_visits():
    req = {"id": "x:1", "moves": [["B", "pd"]], "komi": 6.5}
    low = MockEngine(7).query({**req, "visits": 100})
    high = MockEngine(7).query({**req, "visits": 1000})
    assert low["winrate_black"] == high["winrate_black"]
    assert low["score_black"] == high["score_black"]
    assert high["visits_used"] == 1000


def test_mock_corpus_fingerprint_stable(rng):
    import hashlib
    from .conftest import random_record
    digest = hashlib.sha256()
    engine = MockEngine(9)
    for _ in range(50):
        record = random_record(rng)
        analyzed = evaluate_game(record, engine, POLICY)
        for e in analyzed.evals:
            digest.update(f"{e.ordinal}:{e.winrate_black:.6f}:{e.score_black:.2f};".encode())
    assert digest.hexdigest() == (
        "32acc151e6c62b3f8bdc6e63cc4fd5416ce146b84703b41556af535e01ba0f49")


def test_scripted_engine_rejects_unknown_ordinals():
    engine = ScriptedEngine({"g1": table_for([0.5, 0.5])})
    with pytest.raises(ScriptError):
        engine.query({"id": "g1:5", "moves": [["B", "aa"]] * 5, "visits": 100})


# -- persistence ----------------------------------------------------------------

def test_analysis_roundtrip(tmp_path):
    record = two_move_record()
    top = [{"col": 15, "row": 3, "visits": 42}, {"col": None, "row": None, "visits": 3}]
    engine = TableEngine(table_for([0.5, 0.52, 0.51], top=top))
    analyzed = evaluate_game(record, engine, POLICY)
    path = tmp_path / f"{record.game_id}.jsonl"
    write_analysis(path, analyzed, POLICY)
    loaded, policy = read_analysis(path)
    assert loaded.game_id == record.game_id
    assert loaded.winrates() == analyzed.winrates()
    assert loaded.evals[0].top_moves == (((15, 3), 42), (None, 3))
    assert policy == POLICY


# -- wire protocol over a real subprocess ----------------------------------------

def test_process_engine_against_stdio_mock():
    engine = ProcessEngine([sys.executable, "-m", "progo.engine", "mock:seed=42"],
                           timeout=30.0)
    try:
        direct = MockEngine(42)
        req = {"id": "g:0", "moves": [], "komi": 7.5, "board_size": 19, "visits": 100}
        assert engine.query(dict(req)) == direct.query(dict(req))
        record = two_move_record()
        via_proc = evaluate_game(record, engine, POLICY)
        in_proc = evaluate_game(record, direct, POLICY)
        assert via_proc.winrates() == in_proc.winrates()
    finally:
        engine.close()


def test_make_engine_specs():
    assert isinstance(make_engine("mock:seed=5"), MockEngine)
    with pytest.raises(ValueError):
        make_engine("warp:drive")
