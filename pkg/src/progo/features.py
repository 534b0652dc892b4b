"""In-game statistics from per-move engine evaluations.

The raw material is a black-perspective evaluation series with one entry per
position (initial position plus one per move).  From it we detect garbage
moves (the trailing phase where the outcome is already decided), unstable
rounds (paired opposite swings that are engine noise rather than play), and
distill the per-game numbers used as prediction features: mean win rate and
score, mean losses per move, advantage-round counts, and the coincidence
rate with the engine's recommended moves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import AnalyzedGame
from .sgf import Color, GameRecord

Point = tuple[int, int] | None


@dataclass(frozen=True)
class GmPolicy:
    """Garbage-move rule: window-smoothed leader stats past these bars."""

    window: int = 4
    winrate_bar: float = 0.90
    score_bar: float = 3.0

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be at least 1")


@dataclass(frozen=True)
class UrPolicy:
    """Unstable-round rule: two consecutive large, similar losses."""

    loss_winrate_bar: float = 0.10
    loss_score_bar: float = 5.0
    similarity_winrate: float = 0.02
    similarity_score: float = 1.0


AR_BARS = (0.05, 3.0)   # advantage: winrate 5% above parity, or 3 points
SAR_BARS = (0.10, 5.0)  # strong advantage: 10% above parity, or 5 points


@dataclass(frozen=True)
class InGameStats:
    """One game's statistics from a named player's perspective."""

    gm_ratio: float
    ur_count: int
    mwr: float
    ms: float
    mlwr: float
    mls: float
    ar: int
    sar: int
    cr: float
    cr_opening: float
    degenerate: bool = False

    FIELDS = ("gm_ratio", "ur_count", "mwr", "ms", "mlwr", "mls",
              "ar", "sar", "cr", "cr_opening")


@dataclass
class EvalSeries:
    """Black-perspective winrate/score per position, plus move metadata.

    ``winrate`` and ``score`` have one entry per position (length n+1 for an
    n-move game); ``colors`` and ``points`` describe moves 1..n; ``top_moves``
    carries the engine's recommendations at each position.
    """

    winrate: list[float]
    score: list[float]
    colors: list[Color] = field(default_factory=list)
    points: list[Point] = field(default_factory=list)
    top_moves: list[tuple[tuple[Point, int], ...]] = field(default_factory=list)

    def __post_init__(self):
        if len(self.winrate) != len(self.score):
            raise ValueError("winrate and score series must have equal length")
        if not self.colors:
            self.colors = [Color.BLACK if i % 2 == 1 else Color.WHITE
                           for i in range(1, len(self.winrate))]
        if len(self.colors) != self.n_moves:
            raise ValueError("colors must cover every move")

    @property
    def n_moves(self) -> int:
        return len(self.winrate) - 1

    @classmethod
    def from_analyzed(cls, analyzed: AnalyzedGame,
                      record: GameRecord | None = None) -> "EvalSeries":
        evals = sorted(analyzed.evals, key=lambda e: e.ordinal)
        if [e.ordinal for e in evals] != list(range(len(evals))):
            raise ValueError(f"{analyzed.game_id}: eval ordinals not contiguous")
        colors: list[Color] = []
        points: list[Point] = []
        if record is not None:
            if len(record.moves) + 1 != len(evals):
                raise ValueError(
                    f"{analyzed.game_id}: {len(record.moves)} moves but {len(evals)} evals")
            colors = [m.color for m in record.moves]
            points = [m.point for m in record.moves]
        return cls(
            winrate=[e.winrate_black for e in evals],
            score=[e.score_black for e in evals],
            colors=colors,
            points=points,
            top_moves=[e.top_moves for e in evals],
        )

    def truncate(self, keep_moves: int) -> "EvalSeries":
        k = max(0, min(keep_moves, self.n_moves))
        return EvalSeries(
            winrate=self.winrate[:k + 1],
            score=self.score[:k + 1],
            colors=self.colors[:k],
            points=self.points[:k] if self.points else [],
            top_moves=self.top_moves[:k + 1] if self.top_moves else [],
        )


def player_winrate(w_black: float, color: Color) -> float:
    return w_black if color is Color.BLACK else 1.0 - w_black

def player_score(s_black: float, color: Color) -> float:
    return s_black if color is Color.BLACK else -s_black


def trailing_mean(values, window: int) -> np.ndarray:
    """Moving average with a shortened window during warm-up."""
    arr = np.asarray(values, dtype=float)
    cs = np.concatenate([[0.0], np.cumsum(arr)])
    n = len(arr)
    idx = np.arange(n)
    lo = np.maximum(0, idx - window + 1)
    return (cs[idx + 1] - cs[lo]) / (idx - lo + 1)


def detect_garbage_moves(series: EvalSeries, policy: GmPolicy = GmPolicy()
                         ) -> tuple[int | None, float]:
    """Smallest move ordinal from which the game stays decided, and the
    fraction of moves at or past it.

    A position counts as decided when the window-smoothed leader (the side at
    or above 50% smoothed win rate) holds more than the win-rate bar or more
    than the score bar.  The flagged set is by construction a suffix.
    """
    n = series.n_moves
    if n == 0:
        return None, 0.0
    sw = trailing_mean(series.winrate, policy.window)
    ss = trailing_mean(series.score, policy.window)
    black_leads = sw >= 0.5
    leader_wr = np.where(black_leads, sw, 1.0 - sw)
    leader_score = np.where(black_leads, ss, -ss)
    decided = (leader_wr > policy.winrate_bar) | (leader_score > policy.score_bar)
    gm_start = None
    for x in range(n, 0, -1):
        if decided[x]:
            gm_start = x
        else:
            break
    if gm_start is None:
        return None, 0.0
    return gm_start, (n - gm_start + 1) / n


def detect_unstable_rounds(series: EvalSeries, policy: UrPolicy = UrPolicy()
                           ) -> set[int]:
    """Move ordinals in paired opposite swings (noise, not play).

    Expects the garbage-move suffix to be removed already.  Moves x and x+1
    are flagged together when each costs its mover more than the loss bar in
    win rate (or in score) and the two losses are within the similarity bar.
    Overlapping pairs union their ordinals.
    """
    flagged: set[int] = set()
    n = series.n_moves
    for x in range(1, n):
        a = series.colors[x - 1]
        b = series.colors[x]
        w1 = player_winrate(series.winrate[x - 1], a) - player_winrate(series.winrate[x], a)
        w2 = player_winrate(series.winrate[x], b) - player_winrate(series.winrate[x + 1], b)
        s1 = player_score(series.score[x - 1], a) - player_score(series.score[x], a)
        s2 = player_score(series.score[x], b) - player_score(series.score[x + 1], b)
        winrate_pair = (w1 > policy.loss_winrate_bar and w2 > policy.loss_winrate_bar
                        and abs(w1 - w2) < policy.similarity_winrate)
        score_pair = (s1 > policy.loss_score_bar and s2 > policy.loss_score_bar
                      and abs(s1 - s2) < policy.similarity_score)
        if winrate_pair or score_pair:
            flagged.add(x)
            flagged.add(x + 1)
    return flagged


def _top_k_points(top_moves: tuple[tuple[Point, int], ...], k: int) -> list[Point]:
    # Stable sort keeps the engine's own order among equal visit counts.
    ranked = sorted(top_moves, key=lambda pv: -pv[1])
    return [p for p, _ in ranked[:k]]


def per_game_stats(
    analyzed: AnalyzedGame,
    record: GameRecord,
    player_color: Color,
    gm: GmPolicy = GmPolicy(),
    ur: UrPolicy = UrPolicy(),
    recommend_k: int = 1,
    opening_len: int = 50,
) -> InGameStats:
    """All per-game in-game features for one player.

    Garbage moves are removed first, then unstable rounds; averages run over
    the surviving move positions.  If nothing survives, the numbers are
    computed over the unfiltered game and flagged as degenerate.
    """
    series = EvalSeries.from_analyzed(analyzed, record)
    n = series.n_moves
    if n < 1:
        raise ValueError(f"{analyzed.game_id}: needs at least one move")

    gm_start, gm_ratio = detect_garbage_moves(series, gm)
    kept = series.truncate(gm_start - 1) if gm_start is not None else series
    unstable = detect_unstable_rounds(kept, ur)
    remaining = [x for x in range(1, kept.n_moves + 1) if x not in unstable]

    degenerate = not remaining
    working = series if degenerate else kept
    if degenerate:
        remaining = list(range(1, n + 1))

    pw = [player_winrate(w, player_color) for w in working.winrate]
    ps = [player_score(s, player_color) for s in working.score]

    mwr = float(np.mean([pw[x] for x in remaining]))
    ms = float(np.mean([ps[x] for x in remaining]))

    own = [x for x in remaining if working.colors[x - 1] is player_color]
    if own:
        mlwr = float(np.mean([max(0.0, pw[x - 1] - pw[x]) for x in own]))
        mls = float(np.mean([max(0.0, ps[x - 1] - ps[x]) for x in own]))
    else:
        mlwr = mls = 0.0

    ar = sum(1 for x in remaining
             if pw[x] >= 0.5 + AR_BARS[0] or ps[x] >= AR_BARS[1])
    sar = sum(1 for x in remaining
              if pw[x] >= 0.5 + SAR_BARS[0] or ps[x] >= SAR_BARS[1])

    cr = _coincidence(working, own, recommend_k)
    opening_own = [x for x in own if x <= opening_len]
    cr_opening = _coincidence(working, opening_own, recommend_k)

    return InGameStats(
        gm_ratio=gm_ratio, ur_count=len(unstable),
        mwr=mwr, ms=ms, mlwr=mlwr, mls=mls, ar=ar, sar=sar,
        cr=cr, cr_opening=cr_opening, degenerate=degenerate,
    )


def _coincidence(series: EvalSeries, ordinals: list[int], k: int) -> float:
    """Fraction of the given moves matching the engine's top-k at the
    preceding position."""
    if not ordinals or not series.points or not series.top_moves:
        return 0.0
    hits = 0
    for x in ordinals:
        recommended = _top_k_points(series.top_moves[x - 1], k)
        if series.points[x - 1] in recommended:
            hits += 1
    return hits / len(ordinals)


def game_coincidence(analyzed: AnalyzedGame, record: GameRecord,
                     phase: str = "all", opening_len: int = 50,
                     recommend_k: int = 1) -> float | None:
    """Raw per-game coincidence rate over both players' moves, by phase
    ("opening", "nonopening", or "all").  None when the phase has no moves."""
    series = EvalSeries.from_analyzed(analyzed, record)
    n = series.n_moves
    if phase == "opening":
        ordinals = list(range(1, min(n, opening_len) + 1))
    elif phase == "nonopening":
        ordinals = list(range(opening_len + 1, n + 1))
    else:
        ordinals = list(range(1, n + 1))
    if not ordinals:
        return None
    return _coincidence(series, ordinals, recommend_k)
