"""Per-game feature vectors: meta, contextual, and in-game groups.

Every vector is assembled strictly from information available before the
game: contextual windows and in-game averages use games dated strictly
earlier, and an optional knowledge cutoff (normally the train/test boundary)
caps the history so test-period vectors never depend on other test-period
games.  Missing values travel as an empty value plus a companion
``_present`` flag column, never as a silent zero.
"""

from __future__ import annotations

import csv
import datetime
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

from .catalog import CatalogedGame, Gender, PlayerProfile, Region, age_at
from .engine import AnalyzedGame
from .features import GmPolicy, InGameStats, UrPolicy, per_game_stats
from .rating.history import RatingHistory
from .sgf import Color, GameRecord, ResultKind

GENDER_CODES = {Gender.MALE: 0.0, Gender.FEMALE: 1.0}
REGION_CODES = {Region.CHN: 0.0, Region.KOR: 1.0, Region.JPN: 2.0,
                Region.TWN: 3.0, Region.OTHER: 4.0}
SCOPE_CODES = {"international": 1.0, "non_international": 0.0}
IMPORTANCE_CODES = {"world_major": 2.0, "regional_major": 1.0, "other": 0.0}
KIND_CODES = {"elimination": 0.0, "league": 1.0, "team": 2.0, "friendly": 3.0}

NEUTRAL_FRACTION = 0.5  # empty history windows report this with count 0

CTX_FRACTIONS = ("mr10", "mr20", "mrr", "mur", "tr")
CTX_MEANS = ("opp_rank", "opp_age")


@dataclass(frozen=True)
class FeatureConfig:
    ctx_small: int = 10
    ctx_large: int = 20
    recent_window: int = 10  # in-game averaging window, in games
    gm: GmPolicy = GmPolicy()
    ur: UrPolicy = UrPolicy()
    recommend_k: int = 1
    opening_len: int = 50
    knowledge_cutoff: datetime.date | None = None


@dataclass(frozen=True)
class ContextFeatures:
    mr10: float
    mr10_n: int
    mr20: float
    mr20_n: int
    mrr: float
    mrr_n: int
    mur: float
    mur_n: int
    tr: float
    tr_n: int
    opp_rank: float | None
    opp_rank_n: int
    opp_age: float | None
    opp_age_n: int
    crc: int


@dataclass(frozen=True)
class _HistoryEntry:
    sort_key: datetime.date
    game_id: str
    won: float | None  # 1 / 0 / 0.5, None when the result has no winner info
    opponent_id: str
    opponent_region: Region
    opponent_rank: int | None
    opponent_age: float | None
    category: str
    cross_region: bool


class CorpusIndex:
    """Per-player chronological views over kept games."""

    def __init__(self):
        self._entries: dict[str, list[_HistoryEntry]] = {}
        self._keys: dict[str, list[datetime.date]] = {}

    @classmethod
    def build(cls, games: list[CatalogedGame]) -> "CorpusIndex":
        index = cls()
        dated = [g for g in games if g.kept and g.game.sort_key() is not None]
        dated.sort(key=lambda g: (g.game.sort_key(), g.game.game_id))
        for g in dated:
            key = g.game.sort_key()
            for me, opponent, my_color in ((g.black, g.white, Color.BLACK),
                                           (g.white, g.black, Color.WHITE)):
                won = _score_for(g.game.result.kind, g.game.result.winner, my_color)
                entry = _HistoryEntry(
                    sort_key=key,
                    game_id=g.game.game_id,
                    won=won,
                    opponent_id=opponent.player_id,
                    opponent_region=opponent.region,
                    opponent_rank=opponent.rank,
                    opponent_age=age_at(opponent, key),
                    category=g.category,
                    cross_region=g.black.region != g.white.region,
                )
                index._entries.setdefault(me.player_id, []).append(entry)
                index._keys.setdefault(me.player_id, []).append(key)
        return index

    def before(self, player_id: str, asof: datetime.date,
               cutoff: datetime.date | None = None) -> list[_HistoryEntry]:
        """Games strictly before asof (and not after the cutoff)."""
        keys = self._keys.get(player_id)
        if not keys:
            return []
        hi = bisect_left(keys, asof)
        if cutoff is not None:
            hi = min(hi, bisect_right(keys, cutoff))
        return self._entries[player_id][:hi]


def _score_for(kind: ResultKind, winner: Color | None, color: Color) -> float | None:
    if kind is ResultKind.DRAW:
        return 0.5
    if winner is None:
        return None
    return 1.0 if winner is color else 0.0


def _fraction(entries: list[_HistoryEntry]) -> tuple[float, int]:
    scores = [e.won for e in entries if e.won is not None]
    if not scores:
        return NEUTRAL_FRACTION, 0
    return sum(scores) / len(scores), len(scores)


def contextual_features(
    index: CorpusIndex,
    player: PlayerProfile,
    asof: datetime.date,
    opponent: PlayerProfile,
    category: str,
    cfg: FeatureConfig = FeatureConfig(),
) -> ContextFeatures:
    """Recent-form, head-to-head, tournament, and opponent-pool features.

    Only games strictly before ``asof`` (and within the knowledge cutoff)
    participate; empty windows give the 0.5 neutral fraction with count 0.
    """
    history = index.before(player.player_id, asof, cfg.knowledge_cutoff)

    mr10, mr10_n = _fraction(history[-cfg.ctx_small:])
    mr20, mr20_n = _fraction(history[-cfg.ctx_large:])

    vs_region = [e for e in history if e.opponent_region == opponent.region]
    mrr, mrr_n = _fraction(vs_region[-cfg.ctx_large:])

    head_to_head = [e for e in history if e.opponent_id == opponent.player_id]
    mur, mur_n = _fraction(head_to_head)

    at_tournament = [e for e in history if e.category == category]
    tr, tr_n = _fraction(at_tournament)

    window = history[-cfg.ctx_large:]
    ranks = [e.opponent_rank for e in window if e.opponent_rank is not None]
    ages = [e.opponent_age for e in window if e.opponent_age is not None]

    return ContextFeatures(
        mr10=mr10, mr10_n=mr10_n, mr20=mr20, mr20_n=mr20_n,
        mrr=mrr, mrr_n=mrr_n, mur=mur, mur_n=mur_n, tr=tr, tr_n=tr_n,
        opp_rank=sum(ranks) / len(ranks) if ranks else None,
        opp_rank_n=len(ranks),
        opp_age=sum(ages) / len(ages) if ages else None,
        opp_age_n=len(ages),
        crc=sum(1 for e in history if e.cross_region),
    )


class InGameIndex:
    """Per-player chronological in-game stats for analyzed games."""

    def __init__(self):
        self._stats: dict[str, list[InGameStats]] = {}
        self._keys: dict[str, list[datetime.date]] = {}

    @classmethod
    def build(cls, games: list[CatalogedGame],
              analyses: dict[str, AnalyzedGame],
              cfg: FeatureConfig = FeatureConfig(),
              workers: int = 1) -> "InGameIndex":
        index = cls()
        dated = [g for g in games
                 if g.kept and g.game.sort_key() is not None
                 and g.game.game_id in analyses and g.game.moves]
        dated.sort(key=lambda g: (g.game.sort_key(), g.game.game_id))

        def stats_pair(g: CatalogedGame) -> tuple[InGameStats, InGameStats]:
            analyzed = analyses[g.game.game_id]
            return tuple(per_game_stats(analyzed, g.game, color, cfg.gm, cfg.ur,
                                        cfg.recommend_k, cfg.opening_len)
                         for color in (Color.BLACK, Color.WHITE))

        if workers > 1:
            import concurrent.futures
            with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
                computed = list(pool.map(stats_pair, dated))
        else:
            computed = [stats_pair(g) for g in dated]

        # single-owner assembly keeps the index identical for any worker count
        for g, (black_stats, white_stats) in zip(dated, computed):
            for profile, stats in ((g.black, black_stats), (g.white, white_stats)):
                index._stats.setdefault(profile.player_id, []).append(stats)
                index._keys.setdefault(profile.player_id, []).append(g.game.sort_key())
        return index

    def recent_average(self, player_id: str, asof: datetime.date,
                       window: int, cutoff: datetime.date | None = None
                       ) -> tuple[dict[str, float] | None, int]:
        keys = self._keys.get(player_id)
        if not keys:
            return None, 0
        hi = bisect_left(keys, asof)
        if cutoff is not None:
            hi = min(hi, bisect_right(keys, cutoff))
        recent = self._stats[player_id][max(0, hi - window):hi]
        if not recent:
            return None, 0
        means = {name: sum(getattr(s, name) for s in recent) / len(recent)
                 for name in InGameStats.FIELDS}
        return means, len(recent)


# ---------------------------------------------------------------------------
# Column registry
# ---------------------------------------------------------------------------


def _triple(prefix: str, name: str) -> list[str]:
    return [f"{prefix}_black_{name}", f"{prefix}_white_{name}", f"{prefix}_{name}_diff"]


def feature_columns() -> list[str]:
    cols = ["meta_year", "meta_komi"]
    for name in ("age", "gender", "region", "rank", "ws", "wu"):
        cols += _triple("meta", name)
    cols += ["meta_tourn_scope", "meta_tourn_importance", "meta_tourn_kind"]
    for name in CTX_FRACTIONS + CTX_MEANS:
        cols += [f"ctx_black_{name}", f"ctx_black_{name}_n",
                 f"ctx_white_{name}", f"ctx_white_{name}_n",
                 f"ctx_{name}_diff"]
    cols += ["ctx_black_crc", "ctx_white_crc", "ctx_crc_diff"]
    cols += ["ingame_black_n", "ingame_white_n"]
    for name in InGameStats.FIELDS:
        cols += _triple("ingame", name)
    return cols


FEATURE_COLUMNS = feature_columns()
BOOKKEEPING_COLUMNS = ["game_id", "date", "category", "label"]


@dataclass
class FeatureVector:
    game_id: str
    date: str
    sort_key: datetime.date
    category: str
    label: int | None
    values: dict[str, float | None] = field(default_factory=dict)

    def csv_row(self) -> list[str]:
        row = [self.game_id, self.date, self.category,
               "" if self.label is None else str(self.label)]
        for col in FEATURE_COLUMNS:
            v = self.values.get(col)
            row.append("" if v is None else repr(float(v)))
            row.append("0" if v is None else "1")
        return row


def _diff(a: float | None, b: float | None) -> float | None:
    if a is None or b is None:
        return None
    return a - b


def assemble_feature_vector(
    game: CatalogedGame,
    index: CorpusIndex,
    ingame: InGameIndex | None,
    ratings: RatingHistory | None,
    cfg: FeatureConfig = FeatureConfig(),
) -> FeatureVector:
    """One game's full feature row.

    Symmetric player features are stored as (black, white, difference)
    triples, so color-swapping the inputs negates every difference column and
    flips the label.
    """
    record = game.game
    key = record.sort_key()
    if key is None:
        raise ValueError(f"{record.game_id}: feature vectors need a dated game")
    values: dict[str, float | None] = {}

    values["meta_year"] = key.year + (key.timetuple().tm_yday - 1) / 365.25
    values["meta_komi"] = record.komi

    def put_triple(prefix: str, name: str, black_v, white_v) -> None:
        values[f"{prefix}_black_{name}"] = black_v
        values[f"{prefix}_white_{name}"] = white_v
        values[f"{prefix}_{name}_diff"] = _diff(black_v, white_v)

    put_triple("meta", "age", age_at(game.black, key), age_at(game.white, key))
    put_triple("meta", "gender", GENDER_CODES.get(game.black.gender),
               GENDER_CODES.get(game.white.gender))
    put_triple("meta", "region", REGION_CODES.get(game.black.region),
               REGION_CODES.get(game.white.region))
    put_triple("meta", "rank",
               float(game.black.rank) if game.black.rank is not None else None,
               float(game.white.rank) if game.white.rank is not None else None)

    black_rating = ratings.latest(game.black.player_id, key) if ratings else None
    white_rating = ratings.latest(game.white.player_id, key) if ratings else None
    put_triple("meta", "ws",
               black_rating.rating if black_rating else None,
               white_rating.rating if white_rating else None)
    put_triple("meta", "wu",
               black_rating.uncertainty if black_rating else None,
               white_rating.uncertainty if white_rating else None)

    t = game.tournament
    values["meta_tourn_scope"] = SCOPE_CODES.get(t.region_scope.value) \
        if t and t.region_scope else None
    values["meta_tourn_importance"] = IMPORTANCE_CODES.get(t.importance.value) \
        if t and t.importance else None
    values["meta_tourn_kind"] = KIND_CODES.get(t.kind.value) \
        if t and t.kind else None

    category = game.category
    ctx_black = contextual_features(index, game.black, key, game.white, category, cfg)
    ctx_white = contextual_features(index, game.white, key, game.black, category, cfg)
    for name in CTX_FRACTIONS + CTX_MEANS:
        b, bn = getattr(ctx_black, name), getattr(ctx_black, f"{name}_n")
        w, wn = getattr(ctx_white, name), getattr(ctx_white, f"{name}_n")
        values[f"ctx_black_{name}"] = b
        values[f"ctx_black_{name}_n"] = float(bn)
        values[f"ctx_white_{name}"] = w
        values[f"ctx_white_{name}_n"] = float(wn)
        values[f"ctx_{name}_diff"] = _diff(b, w)
    values["ctx_black_crc"] = float(ctx_black.crc)
    values["ctx_white_crc"] = float(ctx_white.crc)
    values["ctx_crc_diff"] = float(ctx_black.crc - ctx_white.crc)

    black_means = white_means = None
    black_n = white_n = 0
    if ingame is not None:
        black_means, black_n = ingame.recent_average(
            game.black.player_id, key, cfg.recent_window, cfg.knowledge_cutoff)
        white_means, white_n = ingame.recent_average(
            game.white.player_id, key, cfg.recent_window, cfg.knowledge_cutoff)
    values["ingame_black_n"] = float(black_n)
    values["ingame_white_n"] = float(white_n)
    for name in InGameStats.FIELDS:
        b = black_means[name] if black_means else None
        w = white_means[name] if white_means else None
        put_triple("ingame", name, b, w)

    winner = game.game.result.winner_or_none()
    label = None if winner is None else (1 if winner is Color.BLACK else 0)
    return FeatureVector(
        game_id=record.game_id,
        date=str(record.date),
        sort_key=key,
        category=game.region_pair.value,
        label=label,
        values=values,
    )


def build_feature_vectors(
    games: list[CatalogedGame],
    analyses: dict[str, AnalyzedGame],
    ratings: RatingHistory | None,
    cfg: FeatureConfig = FeatureConfig(),
    workers: int = 1,
) -> list[FeatureVector]:
    kept = [g for g in games if g.kept and g.game.sort_key() is not None]
    kept.sort(key=lambda g: (g.game.sort_key(), g.game.game_id))
    index = CorpusIndex.build(kept)
    ingame = InGameIndex.build(kept, analyses, cfg, workers) if analyses else None
    return [assemble_feature_vector(g, index, ingame, ratings, cfg) for g in kept]


# ---------------------------------------------------------------------------
# features.csv
# ---------------------------------------------------------------------------


def csv_header() -> list[str]:
    header = list(BOOKKEEPING_COLUMNS)
    for col in FEATURE_COLUMNS:
        header.append(col)
        header.append(f"{col}_present")
    return header


def write_features_csv(path, vectors: list[FeatureVector]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(csv_header())
        for v in vectors:
            writer.writerow(v.csv_row())


def read_features_csv(path) -> list[FeatureVector]:
    vectors = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != csv_header():
            raise ValueError(f"{path}: unexpected feature column layout")
        for row in reader:
            game_id, date, category, label = row[:4]
            values: dict[str, float | None] = {}
            for i, col in enumerate(FEATURE_COLUMNS):
                raw, present = row[4 + 2 * i], row[5 + 2 * i]
                values[col] = float(raw) if present == "1" and raw != "" else None
            from .sgf import PartialDate
            parsed = PartialDate.parse(date)
            if parsed is None:
                raise ValueError(f"{path}: row {game_id} has no usable date")
            vectors.append(FeatureVector(
                game_id=game_id, date=date, sort_key=parsed.sort_key(),
                category=category,
                label=int(label) if label != "" else None,
                values=values,
            ))
    return vectors
