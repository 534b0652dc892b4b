"""Analysis-engine driver with a two-tier evaluation policy.

Every position (the initial one plus the position after each move) is
evaluated at a small visit budget; any move that swings the evaluation past
the configured win-rate or score thresholds gets its resulting position
re-evaluated at the escalated budget, and the escalated result replaces the
cheap one.  All stored statistics are from black's perspective.

Engines speak a line-delimited JSON protocol over stdin/stdout:

    request:  {"id": str, "moves": [["B","pd"], ...], "komi": float,
               "rules": str, "board_size": int, "visits": int}
    response: {"id": str, "winrate_black": float, "score_black": float,
               "visits_used": int,
               "top_moves": [{"col": int|null, "row": int|null, "visits": int}, ...]}
    error:    {"id": str, "error": str}

The mock engines implement the same message schema in-process and can also be
served over stdio (``python -m progo.engine mock:seed=7``), so the subprocess
transport is exercised against them in tests.
"""

from __future__ import annotations

import json
import queue
import subprocess
import sys
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .sgf import GameRecord, point_to_sgf

Point = tuple[int, int] | None


class EngineError(RuntimeError):
    pass


class EngineProtocolError(EngineError):
    pass


class EngineTimeout(EngineError):
    pass


class ScriptError(EngineError):
    """A scripted fixture was queried outside its script."""


class EngineCrashed(EngineError):
    def __init__(self, message: str, completed: list["MoveEval"] | None = None,
                 last_ordinal: int | None = None):
        super().__init__(message)
        self.completed = completed or []
        self.last_ordinal = last_ordinal


@dataclass(frozen=True)
class AnalysisPolicy:
    initial_visits: int = 100
    escalated_visits: int = 1000
    winrate_jump: float = 0.10
    score_jump: float = 5.0

    def __post_init__(self):
        if self.escalated_visits <= self.initial_visits:
            raise ValueError("escalated_visits must exceed initial_visits")
        if self.winrate_jump <= 0 or self.score_jump <= 0:
            raise ValueError("jump thresholds must be positive")

    def as_dict(self) -> dict:
        return {"initial_visits": self.initial_visits,
                "escalated_visits": self.escalated_visits,
                "winrate_jump": self.winrate_jump,
                "score_jump": self.score_jump}


@dataclass(frozen=True)
class MoveEval:
    ordinal: int
    winrate_black: float
    score_black: float
    top_moves: tuple[tuple[Point, int], ...] = ()
    visits_used: int = 0


@dataclass
class AnalyzedGame:
    game_id: str
    komi: float | None
    rules_label: str
    evals: list[MoveEval] = field(default_factory=list)

    def winrates(self) -> list[float]:
        return [e.winrate_black for e in self.evals]

    def scores(self) -> list[float]:
        return [e.score_black for e in self.evals]


def needs_reeval(prev: MoveEval, cur: MoveEval, policy: AnalysisPolicy) -> bool:
    """True when the move from prev to cur jumped past either threshold
    (strict inequalities: a change of exactly 10% / 5 points does not trigger)."""
    return (abs(cur.winrate_black - prev.winrate_black) > policy.winrate_jump
            or abs(cur.score_black - prev.score_black) > policy.score_jump)


# ---------------------------------------------------------------------------
# Engine clients
# ---------------------------------------------------------------------------


class EngineClient:
    """One engine connection; one in-flight query at a time."""

    def query(self, request: dict) -> dict:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _mix(h: int, value: int) -> int:
    # FNV-1a style 64-bit mixer; fast and platform-stable.
    h ^= value & 0xFFFFFFFFFFFFFFFF
    h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def _unit(h: int) -> float:
    return ((h >> 11) & 0xFFFFFFFF) / 0xFFFFFFFF


class MockEngine(EngineClient):
    """Deterministic stand-in for a real engine.

    Seed mode replays a hash-driven random walk over the move prefix, so the
    same position always gets byte-identical answers and the value does not
    depend on the visit budget.  Table mode replays explicit evaluations for
    a single game; script mode maps game ids to eval tables (see
    ``ScriptedEngine``).
    """

    def __init__(self, seed: int):
        self.seed = int(seed)

    def query(self, request: dict) -> dict:
        moves = request.get("moves", [])
        komi = float(request.get("komi") or 6.5)
        h = _mix(0xCBF29CE484222325, self.seed)
        h = _mix(h, int(komi * 2))
        # Slight first-move advantage shrinking with komi.
        w = 0.5 + (6.5 - komi) * 0.016
        for color, coord in moves:
            for ch in f"{color}{coord};":
                h = _mix(h, ord(ch))
            step = (_unit(h) - 0.5) * 0.06
            w = min(0.98, max(0.02, w + step + (0.5 - w) * 0.02))
        score = round((w - 0.5) * 25.0, 2)
        top = []
        th = h
        size = int(request.get("board_size") or 19)
        visits = int(request.get("visits") or 100)
        shares = (0.42, 0.26, 0.13)
        for i in range(3):
            th = _mix(th, 101 + i)
            col = int(_unit(th) * size) % size
            th = _mix(th, 202 + i)
            row = int(_unit(th) * size) % size
            top.append({"col": col, "row": row, "visits": max(1, int(visits * shares[i]))})
        return {
            "id": request.get("id", ""),
            "winrate_black": round(w, 6),
            "score_black": score,
            "visits_used": visits,
            "top_moves": top,
        }


class TableEngine(EngineClient):
    """Replays an explicit per-ordinal eval table for one game.

    Entries may be keyed by ordinal alone or by (ordinal, visits) when a
    fixture wants different answers at the two budgets.
    """

    def __init__(self, evals: dict):
        self.evals = dict(evals)

    def query(self, request: dict) -> dict:
        ordinal = len(request.get("moves", []))
        visits = int(request.get("visits") or 100)
        entry = self.evals.get((ordinal, visits), self.evals.get(ordinal))
        if entry is None:
            raise ScriptError(f"no scripted eval for ordinal {ordinal}")
        resp = {
            "id": request.get("id", ""),
            "winrate_black": entry["winrate_black"],
            "score_black": entry["score_black"],
            "visits_used": visits,
            "top_moves": entry.get("top_moves", []),
        }
        return resp


class ScriptedEngine(EngineClient):
    """Multi-game eval script keyed by game id (from the request id prefix)."""

    def __init__(self, script: dict[str, dict]):
        self.script = script

    @classmethod
    def from_file(cls, path) -> "ScriptedEngine":
        script: dict[str, dict] = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                if not line.strip():
                    continue
                row = json.loads(line)
                table = script.setdefault(row["game_id"], {})
                table[row["ordinal"]] = row
        return cls(script)

    def query(self, request: dict) -> dict:
        rid = str(request.get("id", ""))
        game_id = rid.rsplit(":", 1)[0]
        table = self.script.get(game_id)
        if table is None:
            raise ScriptError(f"no script for game {game_id!r}")
        return TableEngine(table).query(request)


class ProcessEngine(EngineClient):
    """Engine subprocess speaking the line-delimited JSON protocol."""

    def __init__(self, argv: list[str], timeout: float = 60.0):
        self.argv = argv
        self.timeout = timeout
        self.proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, bufsize=1)
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self):
        assert self.proc.stdout is not None
        for line in self.proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _query_once(self, request: dict) -> dict:
        if self.proc.poll() is not None:
            raise EngineCrashed(f"engine exited with code {self.proc.returncode}")
        try:
            assert self.proc.stdin is not None
            self.proc.stdin.write(json.dumps(request, sort_keys=True) + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise EngineCrashed(f"engine pipe closed: {exc}")
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise EngineTimeout(f"no response within {self.timeout}s")
        if line is None:
            raise EngineCrashed("engine closed its output stream")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise EngineProtocolError(f"bad response line: {exc}")
        if "error" in response:
            raise EngineProtocolError(f"engine error: {response['error']}")
        return response

    def query(self, request: dict) -> dict:
        # One retry on timeout, then give up.
        try:
            return self._query_once(request)
        except EngineTimeout:
            return self._query_once(request)

    def close(self) -> None:
        if self.proc.poll() is None:
            try:
                if self.proc.stdin:
                    self.proc.stdin.close()
                self.proc.wait(timeout=5)
            except Exception:
                self.proc.kill()


def make_engine(spec: str, timeout: float = 60.0) -> EngineClient:
    """Build an engine from a spec string.

    ``mock:seed=7`` for the hash-walk mock, ``mock:script=PATH`` for a
    scripted corpus, ``cmd:<command line>`` for an external process.
    """
    if spec.startswith("mock:"):
        arg = spec[len("mock:"):]
        if arg.startswith("seed="):
            return MockEngine(int(arg[len("seed="):]))
        if arg.startswith("script="):
            return ScriptedEngine.from_file(arg[len("script="):])
        raise ValueError(f"unknown mock spec {spec!r}")
    if spec.startswith("cmd:"):
        import shlex
        return ProcessEngine(shlex.split(spec[len("cmd:"):]), timeout=timeout)
    raise ValueError(f"unknown engine spec {spec!r} (expected mock:... or cmd:...)")


# ---------------------------------------------------------------------------
# Game evaluation
# ---------------------------------------------------------------------------


def _parse_top_moves(raw) -> tuple[tuple[Point, int], ...]:
    out = []
    for item in raw or []:
        if item.get("col") is None or item.get("row") is None:
            point: Point = None
        else:
            point = (int(item["col"]), int(item["row"]))
        out.append((point, int(item.get("visits", 0))))
    return tuple(out)


def _eval_from_response(ordinal: int, response: dict) -> MoveEval:
    try:
        w = float(response["winrate_black"])
        s = float(response["score_black"])
    except (KeyError, TypeError, ValueError) as exc:
        raise EngineProtocolError(f"malformed response for ordinal {ordinal}: {exc}")
    if not (0.0 <= w <= 1.0):
        raise EngineProtocolError(f"winrate {w} outside [0,1] at ordinal {ordinal}")
    return MoveEval(
        ordinal=ordinal,
        winrate_black=w,
        score_black=s,
        top_moves=_parse_top_moves(response.get("top_moves")),
        visits_used=int(response.get("visits_used", 0)),
    )


def _position_request(record: GameRecord, ordinal: int, visits: int,
                      rules_label: str) -> dict:
    moves = [[m.color.value, point_to_sgf(m.point)] for m in record.moves[:ordinal]]
    return {
        "id": f"{record.game_id}:{ordinal}",
        "moves": moves,
        "komi": record.komi,
        "rules": rules_label,
        "board_size": record.board_size,
        "visits": visits,
    }


def evaluate_game(
    record: GameRecord,
    engine: EngineClient,
    policy: AnalysisPolicy = AnalysisPolicy(),
    resume_from: list[MoveEval] | None = None,
) -> AnalyzedGame:
    """Evaluate every position of a game, escalating unstable moves.

    Escalation decisions are made from the complete initial-visit pass, then
    all replacements happen; an escalated evaluation is never re-checked.
    ``resume_from`` supplies already-computed initial-pass evaluations so a
    resumed run never re-queries finished ordinals.
    """
    rules_label = (record.raw_properties.get("RU") or ["unknown"])[0]
    n = len(record.moves)
    resumed: dict[int, MoveEval] = {e.ordinal: e for e in (resume_from or [])
                                    if 0 <= e.ordinal <= n}

    initial: list[MoveEval] = []
    for ordinal in range(n + 1):
        if ordinal in resumed:
            initial.append(resumed[ordinal])
            continue
        request = _position_request(record, ordinal, policy.initial_visits, rules_label)
        try:
            response = engine.query(request)
        except EngineError as exc:
            raise EngineCrashed(
                f"engine failed at ordinal {ordinal} of {record.game_id}: {exc}",
                completed=initial, last_ordinal=ordinal - 1)
        initial.append(_eval_from_response(ordinal, response))

    # Decide all escalations from the initial pass before replacing anything.
    to_escalate = [
        i for i in range(1, n + 1)
        if initial[i].visits_used == policy.initial_visits
        and initial[i - 1].visits_used == policy.initial_visits
        and needs_reeval(initial[i - 1], initial[i], policy)
    ]

    final = list(initial)
    for ordinal in to_escalate:
        request = _position_request(record, ordinal, policy.escalated_visits, rules_label)
        try:
            response = engine.query(request)
        except EngineError as exc:
            # Keep resumability clean: expose only the initial pass.
            raise EngineCrashed(
                f"engine failed escalating ordinal {ordinal} of {record.game_id}: {exc}",
                completed=initial, last_ordinal=n)
        final[ordinal] = _eval_from_response(ordinal, response)

    return AnalyzedGame(record.game_id, record.komi, rules_label, final)


# ---------------------------------------------------------------------------
# Analysis persistence: analysis/{game_id}.jsonl
# ---------------------------------------------------------------------------


def write_analysis(path, analyzed: AnalyzedGame, policy: AnalysisPolicy) -> None:
    """One header object then one line per evaluation, rounded for stability."""
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        header = {"game_id": analyzed.game_id, "komi": analyzed.komi,
                  "rules_label": analyzed.rules_label, "policy": policy.as_dict()}
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for e in analyzed.evals:
            row = {
                "ordinal": e.ordinal,
                "winrate_black": round(e.winrate_black, 6),
                "score_black": round(e.score_black, 2),
                "visits_used": e.visits_used,
                "top_moves": [
                    {"col": None if p is None else p[0],
                     "row": None if p is None else p[1],
                     "visits": v}
                    for p, v in e.top_moves
                ],
            }
            f.write(json.dumps(row, sort_keys=True) + "\n")
    tmp.replace(path)


def read_analysis(path) -> tuple[AnalyzedGame, AnalysisPolicy]:
    with open(path, encoding="utf-8") as f:
        lines = [line for line in f if line.strip()]
    if not lines:
        raise EngineProtocolError(f"{path}: empty analysis file")
    header = json.loads(lines[0])
    policy = AnalysisPolicy(**header.get("policy", {}))
    evals = []
    for line in lines[1:]:
        row = json.loads(line)
        evals.append(MoveEval(
            ordinal=row["ordinal"],
            winrate_black=row["winrate_black"],
            score_black=row["score_black"],
            top_moves=_parse_top_moves(row.get("top_moves")),
            visits_used=row["visits_used"],
        ))
    evals.sort(key=lambda e: e.ordinal)
    return (AnalyzedGame(header["game_id"], header.get("komi"),
                         header.get("rules_label", "unknown"), evals), policy)


# ---------------------------------------------------------------------------
# Stdio server so mocks can be driven through the wire protocol
# ---------------------------------------------------------------------------


def serve_stdio(engine: EngineClient, stdin=None, stdout=None) -> None:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
            response = engine.query(request)
        except Exception as exc:  # surface as protocol-level error object
            response = {"id": "", "error": str(exc)}
        stdout.write(json.dumps(response, sort_keys=True) + "\n")
        stdout.flush()


def _serve_main(argv: list[str]) -> int:
    if len(argv) != 1:
        print("usage: python -m progo.engine <engine-spec>", file=sys.stderr)
        return 2
    serve_stdio(make_engine(argv[0]))
    return 0


if __name__ == "__main__":
    sys.exit(_serve_main(sys.argv[1:]))
