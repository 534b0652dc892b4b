"""Seeded synthetic corpus with known ground truth.

Players get fixed Bradley-Terry strengths; outcomes are sampled from the
logistic model with a komi-dependent first-move advantage.  Alongside the
SGF corpus and metadata tables, the generator scripts per-move engine
evaluations that are consistent with each outcome: the winner's win rate
drifts upward, parameterized mistake events and paired unstable-round
spikes are injected at recorded ordinals, and some games end in a scripted
garbage tail.  truth.json carries every injected event for tests.
"""

from __future__ import annotations

import datetime
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import (
    Gender,
    Importance,
    PlayerProfile,
    Region,
    RegionScope,
    TournamentInfo,
    TournamentKind,
    write_players_csv,
    write_tournaments_csv,
)
from .sgf import (
    Color,
    GameRecord,
    GameResult,
    Move,
    PartialDate,
    ResultKind,
    compute_game_id,
    serialize_sgf,
)
from .workspace import Workspace

REGION_MIX = ((Region.CHN, 0.35), (Region.KOR, 0.30), (Region.JPN, 0.25),
              (Region.OTHER, 0.10))
KOMI_MIX = ((6.5, 0.6), (7.5, 0.3), (5.5, 0.1))

TOURNAMENTS = [
    TournamentInfo("Synth Cup", "", RegionScope.INTERNATIONAL,
                   Importance.WORLD_MAJOR, TournamentKind.ELIMINATION),
    TournamentInfo("Synth Open", "", RegionScope.NON_INTERNATIONAL,
                   Importance.REGIONAL_MAJOR, TournamentKind.ELIMINATION),
    TournamentInfo("Synth League", "", RegionScope.NON_INTERNATIONAL,
                   Importance.OTHER, TournamentKind.LEAGUE),
]


@dataclass(frozen=True)
class SyntheticSpec:
    n_players: int = 20
    n_games: int = 300
    seed: int = 7
    date_start: datetime.date = datetime.date(2010, 1, 2)
    date_end: datetime.date = datetime.date(2021, 12, 1)
    strength_spacing: float = 1.3  # natural units between adjacent players
    komi_advantage: float = 0.53   # p(black | equal strength) at komi 6.5
    komi_slope: float = 0.5        # log-odds of black advantage per komi point below 6.5
    match_window: int = 4          # opponents drawn this many strength ranks apart
    cr_target: float = 0.45        # chance a played move was the engine's pick
    mistake_rate: float = 1.2      # mean mistakes per game, strength-scaled
    ur_pair_rate: float = 0.6      # mean injected unstable pairs per game
    gm_tail_prob: float = 0.5
    resign_prob: float = 0.45


def _weighted_choice(rng: random.Random, pairs):
    roll = rng.random()
    acc = 0.0
    for value, weight in pairs:
        acc += weight
        if roll < acc:
            return value
    return pairs[-1][0]


def _sample_points(rng: random.Random, n: int) -> list[tuple[int, int]]:
    board = [(c, r) for c in range(19) for r in range(19)]
    rng.shuffle(board)
    return board[:n]


def _komi_prior(komi: float) -> float:
    # engine's empty-board black win rate falls with rising komi
    return min(0.95, max(0.05, 0.5 + (6.5 - komi) * 0.03))


def generate_players(spec: SyntheticSpec, rng: random.Random) -> list[PlayerProfile]:
    players = []
    for i in range(spec.n_players):
        pct = i / max(1, spec.n_players - 1)
        players.append(PlayerProfile(
            player_id=f"p{i:03d}",
            canonical_name=f"Synth Player {i:03d}",
            birth_date=datetime.date(1970 + rng.randrange(30), 1 + rng.randrange(12),
                                     1 + rng.randrange(28)),
            gender=Gender.FEMALE if rng.random() < 0.25 else Gender.MALE,
            region=_weighted_choice(rng, REGION_MIX),
            rank=max(1, min(9, 1 + int(pct * 8 + rng.random()))),
        ))
    return players


@dataclass
class SynthGame:
    record: GameRecord
    black: PlayerProfile
    white: PlayerProfile
    winner: Color
    trajectory: list[float]
    scores: list[float]
    top_moves: list[list[dict]]
    mistakes: list[dict] = field(default_factory=list)
    ur_pairs: list[dict] = field(default_factory=list)
    gm_tail_start: int | None = None


def _build_game(spec: SyntheticSpec, rng: random.Random,
                black: PlayerProfile, white: PlayerProfile,
                strengths: dict[str, float], day: datetime.date,
                event: str, round_label: str) -> SynthGame:
    komi = _weighted_choice(rng, KOMI_MIX)
    advantage = math.log(spec.komi_advantage / (1 - spec.komi_advantage))
    advantage += (6.5 - komi) * spec.komi_slope
    delta = strengths[black.player_id] - strengths[white.player_id] + advantage
    p_black = 1.0 / (1.0 + math.exp(-delta))
    winner = Color.BLACK if rng.random() < p_black else Color.WHITE

    resigned = rng.random() < spec.resign_prob
    n_moves = rng.randrange(90, 180) if resigned else rng.randrange(150, 260)
    points = _sample_points(rng, n_moves)
    moves = [Move(Color.BLACK if i % 2 == 1 else Color.WHITE, points[i - 1], i)
             for i in range(1, n_moves + 1)]

    if resigned:
        result = GameResult(ResultKind.RESIGNATION, winner)
    else:
        result = GameResult(ResultKind.POINTS, winner, rng.randrange(1, 30) / 2)

    record = GameRecord(
        black_name=black.canonical_name,
        white_name=white.canonical_name,
        result=result,
        komi=komi,
        date=PartialDate.from_date(day),
        event=event,
        round=round_label,
        moves=moves,
        raw_properties={"GM": ["1"], "FF": ["4"]},
    )
    record.game_id = compute_game_id(record)

    game = SynthGame(record, black, white, winner, [], [], [])
    _script_evaluations(spec, rng, game, strengths)
    return game


def _script_evaluations(spec: SyntheticSpec, rng: random.Random, game: SynthGame,
                        strengths: dict[str, float]) -> None:
    record = game.record
    n = len(record.moves)
    target = 0.97 if game.winner is Color.BLACK else 0.03
    start = _komi_prior(record.komi or 6.5)

    # mistake events: weaker players blunder more often
    def mistake_count(profile: PlayerProfile) -> int:
        pct = strengths[profile.player_id] / max(
            1e-9, max(strengths.values()) or 1.0)
        lam = spec.mistake_rate * (1.2 - 0.8 * pct)
        count, acc = 0, rng.random()
        # inverse CDF of a small Poisson via direct summation
        p = math.exp(-lam)
        cumulative = p
        while acc > cumulative and count < 6:
            count += 1
            p *= lam / count
            cumulative += p
        return count

    gm_tail = None
    if spec.gm_tail_prob > 0 and rng.random() < spec.gm_tail_prob and n > 60:
        gm_tail = n - rng.randrange(10, 30)
    game.gm_tail_start = gm_tail

    last_event = (gm_tail if gm_tail is not None else n) - 4
    events: list[tuple[int, float]] = []  # (ordinal, black-perspective step)
    used: set[int] = set()

    def pick_ordinal(parity: int | None = None) -> int | None:
        if last_event <= 6:
            return None
        for _ in range(30):
            m = rng.randrange(5, last_event)
            if parity is not None and m % 2 != parity:
                continue
            if all(abs(m - u) > 3 for u in used):
                used.add(m)
                return m
        return None

    for profile, color in ((game.black, Color.BLACK), (game.white, Color.WHITE)):
        for _ in range(mistake_count(profile)):
            m = pick_ordinal(parity=1 if color is Color.BLACK else 0)
            if m is None:
                continue
            delta = rng.uniform(0.06, 0.16)
            sign = -1.0 if color is Color.BLACK else 1.0
            events.append((m, sign * delta))
            game.mistakes.append({"ordinal": m, "mover": color.value,
                                  "delta": round(delta, 4)})

    ur_quota = 0
    expected_ur = spec.ur_pair_rate
    while rng.random() < expected_ur and ur_quota < 3:
        expected_ur /= 2
        ur_quota += 1

    w = [start]
    offset = 0.0
    decay = math.exp(-1.0 / 8.0)
    step_events: dict[int, list[float]] = {}
    for m, delta in events:
        step_events.setdefault(m, []).append(delta)
    for k in range(1, n + 1):
        offset *= decay
        for delta in step_events.get(k, ()):
            offset += delta
        base = start + (target - start) * (k / n) ** 1.6
        value = base + offset + rng.uniform(-0.008, 0.008)
        if gm_tail is not None and k >= gm_tail:
            value = max(value, 0.955) if game.winner is Color.BLACK else min(value, 0.045)
        w.append(min(0.98, max(0.02, value)))

    # Paired unstable-round spikes are written in exactly so detection has
    # noise-free ground truth: move m costs its mover d1, move m+1 costs the
    # opponent d2.  The pre-pair window must be balanced on both channels
    # (win rate near 0.5 keeps the scripted score inside the 3-point bar even
    # after smoothing across the spike), so the pair always survives
    # garbage-move removal.
    candidates = [m for m in range(5, last_event - 1)
                  if all(0.44 <= w[j] <= 0.56 for j in (m - 3, m - 2, m - 1))
                  and all(abs(m - u) > 3 for u in used)]
    for _ in range(ur_quota):
        if not candidates:
            break
        m = candidates[rng.randrange(len(candidates))]
        candidates = [c for c in candidates if abs(c - m) > 3]
        used.update((m, m + 1))
        d1 = round(rng.uniform(0.12, 0.16), 4)
        d2 = round(d1 + rng.uniform(-0.012, 0.012), 4)
        sign = -1.0 if record.moves[m - 1].color is Color.BLACK else 1.0
        w[m] = w[m - 1] + sign * d1
        w[m + 1] = w[m] - sign * d2
        game.ur_pairs.append({"ordinal": m, "delta1": d1, "delta2": d2})

    game.trajectory = [round(x, 6) for x in w]
    game.scores = [round((x - 0.5) * 25.0, 2) for x in w]

    top_moves = []
    for i in range(n + 1):
        candidates = []
        if i < n and rng.random() < spec.cr_target:
            first = record.moves[i].point
        else:
            first = (rng.randrange(19), rng.randrange(19))
        candidates.append({"col": first[0], "row": first[1], "visits": 44})
        for extra_visits in (27, 13):
            p = (rng.randrange(19), rng.randrange(19))
            candidates.append({"col": p[0], "row": p[1], "visits": extra_visits})
        top_moves.append(candidates)
    game.top_moves = top_moves


def generate_synthetic(spec: SyntheticSpec, root) -> dict:
    """Write a complete seeded workspace corpus; returns a summary.

    Outputs: corpus/*.sgf, catalog tables and blocklist, a scripted
    engine-evaluation file, truth.json with every injected event, and a
    config file pointing the analyze stage at the scripted mock engine.
    """
    ws = Workspace(root)
    ws.ensure("corpus", "catalog", "synth")
    rng = random.Random(spec.seed)

    players = generate_players(spec, rng)
    strengths = {p.player_id: i * spec.strength_spacing
                 for i, p in enumerate(players)}

    span = (spec.date_end - spec.date_start).days
    days = sorted(rng.randrange(span + 1) for _ in range(spec.n_games))

    games: list[SynthGame] = []
    for i in range(spec.n_games):
        if len(players) < 2:
            break
        day = spec.date_start + datetime.timedelta(days=days[i])
        # tournament-style pairing: opponents of comparable strength
        a = rng.randrange(len(players))
        window = max(1, min(spec.match_window, len(players) - 1))
        candidates = [j for j in range(max(0, a - window),
                                       min(len(players), a + window + 1)) if j != a]
        b = rng.choice(candidates)
        black, white = (players[a], players[b]) if rng.random() < 0.5 \
            else (players[b], players[a])
        tournament = TOURNAMENTS[i % len(TOURNAMENTS)]
        edition = f"{day.year - spec.date_start.year + 1}th"
        event = f"{edition} {tournament.category}"
        round_label = f"round {1 + i % 8}"
        games.append(_build_game(spec, rng, black, white, strengths, day,
                                 event, round_label))

    for i, game in enumerate(games):
        path = ws.dir("corpus") / f"g{i:05d}.sgf"
        path.write_text(serialize_sgf(game.record) + "\n", encoding="utf-8")

    write_players_csv(ws.dir("catalog") / "players.csv", players)
    write_tournaments_csv(ws.dir("catalog") / "tournaments.csv", TOURNAMENTS)
    (ws.dir("catalog") / "blocklist.txt").write_text(
        "AlphaGo*\nAmateur*\n", encoding="utf-8")

    script_path = ws.dir("synth") / "engine_script.jsonl"
    with open(script_path, "w", encoding="utf-8") as f:
        for game in games:
            for ordinal, (wr, sc, top) in enumerate(
                    zip(game.trajectory, game.scores, game.top_moves)):
                f.write(json.dumps({
                    "game_id": game.record.game_id, "ordinal": ordinal,
                    "winrate_black": wr, "score_black": sc, "top_moves": top,
                }, sort_keys=True) + "\n")

    truth = {
        "seed": spec.seed,
        "strengths": {p.player_id: strengths[p.player_id] for p in players},
        "komi_advantage": spec.komi_advantage,
        "games": [{
            "game_id": g.record.game_id,
            "winner": g.winner.value,
            "mistakes": g.mistakes,
            "ur_pairs": g.ur_pairs,
            "gm_tail_start": g.gm_tail_start,
        } for g in games],
    }
    (ws.dir("synth") / "truth.json").write_text(
        json.dumps(truth, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    config = ws.read_config()
    config.setdefault("engine", "mock:script=synth/engine_script.jsonl")
    ws.write_config(config)

    if not games:
        import logging
        logging.getLogger(__name__).warning("generated an empty corpus")
    return {"players": len(players), "games": len(games),
            "corpus_dir": str(ws.dir("corpus"))}
