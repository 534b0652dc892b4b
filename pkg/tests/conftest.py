import random
import string

import pytest

from progo.sgf import (
    Color,
    GameRecord,
    GameResult,
    Move,
    PartialDate,
    ResultKind,
    compute_game_id,
)

NAMES = [
    "Cho Chikun", "Lee Changho", "Gu Li", "Ke Jie", "Shin Jinseo",
    "Iyama Yuta", "Park Junghwan", "Takemiya Masaki", "Rin Kaiho",
]


def random_point(rng: random.Random, board_size: int = 19):
    return (rng.randrange(board_size), rng.randrange(board_size))


def random_moves(rng: random.Random, n: int, board_size: int = 19) -> list[Move]:
    moves = []
    color = Color.BLACK
    for i in range(1, n + 1):
        point = None if rng.random() < 0.02 else random_point(rng, board_size)
        moves.append(Move(color, point, i))
        color = color.opponent
    return moves


def random_result(rng: random.Random) -> GameResult:
    roll = rng.random()
    if roll < 0.45:
        return GameResult(ResultKind.POINTS, rng.choice([Color.BLACK, Color.WHITE]),
                          rng.randrange(1, 40) / 2)
    if roll < 0.85:
        return GameResult(ResultKind.RESIGNATION, rng.choice([Color.BLACK, Color.WHITE]))
    if roll < 0.90:
        return GameResult(ResultKind.TIMEOUT, rng.choice([Color.BLACK, Color.WHITE]))
    if roll < 0.93:
        return GameResult(ResultKind.FORFEIT, rng.choice([Color.BLACK, Color.WHITE]))
    if roll < 0.96:
        return GameResult(ResultKind.DRAW)
    return GameResult(ResultKind.UNKNOWN)


def random_record(rng: random.Random) -> GameRecord:
    record = GameRecord(
        black_name=rng.choice(NAMES),
        white_name=rng.choice(NAMES),
        result=random_result(rng),
        komi=rng.choice([4.5, 5.5, 6.5, 7.5, 8.0, None]),
        date=PartialDate(
            rng.randrange(1950, 2022),
            rng.choice([None, rng.randrange(1, 13)]),
        ),
        event=rng.choice(["", "1st Synth Cup", "23rd Open", "League A"]),
        round=rng.choice(["", "round 1", "final"]),
        board_size=19,
        handicap=0,
        moves=random_moves(rng, rng.randrange(0, 80)),
    )
    if record.date and record.date.month is not None and rng.random() < 0.7:
        record.date = PartialDate(record.date.year, record.date.month,
                                  rng.randrange(1, 29))
    if rng.random() < 0.4:
        record.raw_properties["GM"] = ["1"]
        record.raw_properties["FF"] = ["4"]
    if rng.random() < 0.3:
        junk = "".join(rng.choice(string.printable[:70]) for _ in range(rng.randrange(0, 12)))
        record.raw_properties["C"] = [junk]
    if rng.random() < 0.2:
        record.raw_properties["RU"] = [rng.choice(["Japanese", "Chinese"])]
    record.game_id = compute_game_id(record)
    return record


@pytest.fixture
def rng():
    return random.Random(20240811)
