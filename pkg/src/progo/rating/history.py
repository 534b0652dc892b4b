"""Time-indexed rating histories with as-of queries and win probabilities."""

from __future__ import annotations

import csv
import datetime
import json
import math
from bisect import bisect_right
from dataclasses import dataclass

ELO_SENTINEL_UNCERTAINTY = 0.0  # Elo carries no uncertainty estimate


class LeakageError(RuntimeError):
    pass


@dataclass(frozen=True)
class GameOutcome:
    """One finished game for rating purposes. winner_black: 1, 0, or 0.5."""

    black_id: str
    white_id: str
    date: datetime.date
    black_score: float  # 1 win, 0 loss, 0.5 draw


@dataclass(frozen=True)
class RatingPoint:
    date: datetime.date
    rating: float
    uncertainty: float


class RatingHistory:
    """Per-player ordered rating trajectories for one system."""

    def __init__(self, system: str, params: dict | None = None):
        if system not in ("elo", "trueskill", "whr"):
            raise ValueError(f"unknown rating system {system!r}")
        self.system = system
        self.params = dict(params or {})
        self._points: dict[str, list[RatingPoint]] = {}
        self.last_game_date: datetime.date | None = None

    def add(self, player_id: str, point: RatingPoint) -> None:
        points = self._points.setdefault(player_id, [])
        if points and point.date < points[-1].date:
            raise ValueError(f"{player_id}: rating dates must be nondecreasing")
        if point.uncertainty < 0:
            raise ValueError("uncertainty must be nonnegative")
        points.append(point)
        if self.last_game_date is None or point.date > self.last_game_date:
            self.last_game_date = point.date

    def players(self) -> list[str]:
        return sorted(self._points)

    def trajectory(self, player_id: str) -> list[RatingPoint]:
        return list(self._points.get(player_id, []))

    def latest(self, player_id: str, asof: datetime.date) -> RatingPoint | None:
        """Most recent point on or before asof; None for unknown players."""
        points = self._points.get(player_id)
        if not points:
            return None
        idx = bisect_right([p.date for p in points], asof)
        if idx == 0:
            return None
        return points[idx - 1]

    def predict(self, black_id: str, white_id: str, asof: datetime.date) -> float:
        """Probability that black wins, from ratings as of the given date.

        Guarded against leakage: the query date must be strictly later than
        the last game the history was fitted on.  Unknown players give 0.5.
        """
        if self.last_game_date is not None and asof <= self.last_game_date:
            raise LeakageError(
                f"prediction date {asof} not after last fitted game "
                f"{self.last_game_date}")
        b = self.latest(black_id, asof)
        w = self.latest(white_id, asof)
        if b is None or w is None:
            return 0.5
        if self.system == "elo":
            return 1.0 / (1.0 + 10.0 ** ((w.rating - b.rating) / 400.0))
        if self.system == "whr":
            return 1.0 / (1.0 + math.exp(-(b.rating - w.rating)))
        beta = float(self.params.get("beta", 25.0 / 6.0))
        denom = math.sqrt(2 * beta * beta + b.uncertainty ** 2 + w.uncertainty ** 2)
        return 0.5 * (1.0 + math.erf((b.rating - w.rating) / (denom * math.sqrt(2.0))))


# ---------------------------------------------------------------------------
# ratings.csv + params sidecar
# ---------------------------------------------------------------------------

RATINGS_HEADER = ["system", "player_id", "date", "rating", "uncertainty"]


def write_ratings_csv(path, histories: list[RatingHistory]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(RATINGS_HEADER)
        for history in sorted(histories, key=lambda h: h.system):
            for player_id in history.players():
                for p in history.trajectory(player_id):
                    writer.writerow([history.system, player_id, p.date.isoformat(),
                                     f"{p.rating:.6f}", f"{p.uncertainty:.6f}"])


def write_ratings_meta(path, histories: list[RatingHistory]) -> None:
    meta = {h.system: h.params for h in sorted(histories, key=lambda h: h.system)}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")


def read_ratings_csv(path) -> dict[str, RatingHistory]:
    histories: dict[str, RatingHistory] = {}
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            history = histories.setdefault(row["system"], RatingHistory(row["system"]))
            history.add(row["player_id"], RatingPoint(
                datetime.date.fromisoformat(row["date"]),
                float(row["rating"]), float(row["uncertainty"])))
    return histories
