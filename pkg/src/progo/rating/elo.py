"""Classic Elo with the logistic-400 expected score."""

from __future__ import annotations

from .history import ELO_SENTINEL_UNCERTAINTY, GameOutcome, RatingHistory, RatingPoint


def elo_expected(r_a: float, r_b: float) -> float:
    return 1.0 / (1.0 + 10.0 ** ((r_b - r_a) / 400.0))


def elo_update(r_a: float, r_b: float, outcome_a: float, k: float = 20.0
               ) -> tuple[float, float]:
    """Single-game update; rating mass is conserved (zero-sum with equal k)."""
    if k <= 0:
        raise ValueError("k must be positive")
    expected = elo_expected(r_a, r_b)
    delta = k * (outcome_a - expected)
    return r_a + delta, r_b - delta


def fit_elo(games: list[GameOutcome], k: float = 20.0, initial: float = 1500.0
            ) -> RatingHistory:
    """Sequential updates over games in chronological order."""
    history = RatingHistory("elo", {"k": k, "initial": initial})
    current: dict[str, float] = {}
    for game in sorted(games, key=lambda g: (g.date, g.black_id, g.white_id)):
        r_b = current.get(game.black_id, initial)
        r_w = current.get(game.white_id, initial)
        r_b, r_w = elo_update(r_b, r_w, game.black_score, k)
        current[game.black_id] = r_b
        current[game.white_id] = r_w
        history.add(game.black_id, RatingPoint(game.date, r_b, ELO_SENTINEL_UNCERTAINTY))
        history.add(game.white_id, RatingPoint(game.date, r_w, ELO_SENTINEL_UNCERTAINTY))
    return history
