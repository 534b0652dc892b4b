"""Descriptive statistics over a cataloged (and optionally analyzed) corpus.

Each report is a pure fold producing a ReportTable that serializes to one
CSV; a manifest ties the set of tables to the corpus fingerprint that
produced them.  Covered: black win rate by komi, grouped game counts
(years, players, matchups, tournaments, rounds, genders, region pairs),
age distribution by decade, coincidence-rate trends, evaluation losses by
rating bucket, and game-length histograms.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

from .catalog import CatalogedGame, Gender, age_at, summarize_regions
from .engine import AnalyzedGame
from .features import game_coincidence, per_game_stats
from .rating.history import RatingHistory
from .sgf import Color, ResultKind


@dataclass
class ReportTable:
    title: str
    columns: list[str]
    rows: list[tuple[str, list]] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        keys = [k for k, _ in self.rows]
        if len(keys) != len(set(keys)):
            raise ValueError(f"{self.title}: duplicate row keys")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(self.columns)
            for key, values in self.rows:
                writer.writerow([key] + [_cell(v) for v in values])


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def _kept(games: list[CatalogedGame]) -> list[CatalogedGame]:
    return [g for g in games if g.kept]


def black_winrate_by_komi(games: list[CatalogedGame],
                          analyses: dict[str, AnalyzedGame] | None = None
                          ) -> ReportTable:
    """Per komi: game count, actual black win rate (draws held out in their
    own column), and the engine's mean initial-position black win rate when
    analysis is available."""
    buckets: dict[float, dict[str, float]] = {}
    for g in _kept(games):
        if g.game.komi is None:
            continue
        b = buckets.setdefault(g.game.komi, {"games": 0, "black": 0, "draws": 0,
                                             "prior_sum": 0.0, "prior_n": 0})
        b["games"] += 1
        winner = g.game.result.winner_or_none()
        if g.game.result.kind is ResultKind.DRAW:
            b["draws"] += 1
        elif winner is Color.BLACK:
            b["black"] += 1
        if analyses and g.game.game_id in analyses:
            evals = analyses[g.game.game_id].evals
            if evals:
                b["prior_sum"] += evals[0].winrate_black
                b["prior_n"] += 1
    rows = []
    for komi in sorted(buckets):
        b = buckets[komi]
        decided = b["games"] - b["draws"]
        actual = b["black"] / decided if decided else None
        prior = b["prior_sum"] / b["prior_n"] if b["prior_n"] else None
        rows.append((f"{komi:g}", [int(b["games"]), actual, prior, int(b["draws"])]))
    return ReportTable(
        "black_winrate_by_komi",
        ["komi", "games", "actual_bwr", "engine_initial_bwr", "draws"],
        rows)


DIMENSIONS = ("year", "tournament_kind", "round", "gender", "region_pair",
              "player", "matchup", "tournament_category")


def counts_by(games: list[CatalogedGame], dimension: str,
              top_n: int | None = None) -> ReportTable:
    """Grouped game counts, descending; matchup rows carry win/loss from the
    first-named (lexicographically smaller id) player's perspective."""
    if dimension not in DIMENSIONS:
        raise ValueError(f"unsupported dimension {dimension!r} "
                         f"(expected one of {', '.join(DIMENSIONS)})")
    kept = _kept(games)
    if dimension == "matchup":
        return _matchup_counts(kept, top_n)

    def keys_for(g: CatalogedGame) -> list[str]:
        if dimension == "year":
            return [str(g.game.date.year)] if g.game.date else ["?"]
        if dimension == "tournament_kind":
            return [g.tournament.kind.value
                    if g.tournament and g.tournament.kind else "?"]
        if dimension == "round":
            return [g.game.round or "?"]
        if dimension == "gender":
            pair = {g.black.gender, g.white.gender}
            if pair == {Gender.MALE}:
                return ["both_male"]
            if pair == {Gender.FEMALE}:
                return ["both_female"]
            if Gender.UNKNOWN in pair:
                return ["unknown"]
            return ["mixed"]
        if dimension == "region_pair":
            return [g.region_pair.value]
        if dimension == "player":
            return [g.black.canonical_name, g.white.canonical_name]
        return [g.category or "?"]  # tournament_category

    counts: dict[str, int] = {}
    for g in kept:
        for key in keys_for(g):
            counts[key] = counts.get(key, 0) + 1
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    if dimension == "year":
        ordered = sorted(counts.items(), key=lambda kv: kv[0])
    if top_n is not None:
        ordered = ordered[:top_n]
    return ReportTable(f"counts_by_{dimension}", [dimension, "games"],
                       [(k, [v]) for k, v in ordered])


def _matchup_counts(kept: list[CatalogedGame], top_n: int | None) -> ReportTable:
    stats: dict[tuple[str, str], dict[str, int]] = {}
    names: dict[str, str] = {}
    for g in kept:
        a, b = g.black, g.white
        names[a.player_id] = a.canonical_name
        names[b.player_id] = b.canonical_name
        first, second = sorted((a.player_id, b.player_id))
        entry = stats.setdefault((first, second), {"games": 0, "wins": 0, "losses": 0})
        entry["games"] += 1
        winner = g.game.result.winner_or_none()
        if winner is not None:
            winner_id = a.player_id if winner is Color.BLACK else b.player_id
            if winner_id == first:
                entry["wins"] += 1
            else:
                entry["losses"] += 1
    ordered = sorted(stats.items(), key=lambda kv: (-kv[1]["games"], kv[0]))
    if top_n is not None:
        ordered = ordered[:top_n]
    rows = [(f"{names[a]} vs {names[b]}", [e["games"], e["wins"], e["losses"]])
            for (a, b), e in ordered]
    return ReportTable("counts_by_matchup", ["matchup", "games", "wins", "losses"], rows)


def age_distribution(games: list[CatalogedGame], age_bin: int = 5) -> ReportTable:
    """Player-appearance counts by decade of play and age bucket."""
    counts: dict[tuple[int, int], int] = {}
    for g in _kept(games):
        key = g.game.sort_key()
        if key is None:
            continue
        decade = (key.year // 10) * 10
        for profile in (g.black, g.white):
            age = age_at(profile, key)
            if age is None:
                continue
            bucket = int(age // age_bin) * age_bin
            counts[(decade, bucket)] = counts.get((decade, bucket), 0) + 1
    rows = [(f"{decade}s:{bucket}-{bucket + age_bin - 1}", [n])
            for (decade, bucket), n in sorted(counts.items())]
    return ReportTable("age_distribution", ["decade_age", "appearances"], rows)


def coincidence_by_year(games: list[CatalogedGame],
                        analyses: dict[str, AnalyzedGame],
                        phase: str = "all", opening_len: int = 50) -> ReportTable:
    """Mean per-game coincidence rate with the engine's top move, by year."""
    sums: dict[int, list[float]] = {}
    for g in _kept(games):
        if g.game.date is None or g.game.game_id not in analyses:
            continue
        cr = game_coincidence(analyses[g.game.game_id], g.game, phase, opening_len)
        if cr is None:
            continue
        sums.setdefault(g.game.date.year, []).append(cr)
    rows = [(str(year), [len(values), sum(values) / len(values)])
            for year, values in sorted(sums.items())]
    return ReportTable(f"coincidence_by_year_{phase}",
                       ["year", "games", "mean_cr"], rows)


def loss_by_rating_bucket(games: list[CatalogedGame],
                          analyses: dict[str, AnalyzedGame],
                          ratings: RatingHistory,
                          n_buckets: int = 3,
                          stat: str = "mlwr") -> ReportTable:
    """Mean per-game loss statistic (mlwr or mls) by year and rating bucket.

    Buckets are rating quantiles over all (player, game) observations; a
    single bucket reduces to the plain yearly mean.
    """
    if stat not in ("mlwr", "mls"):
        raise ValueError("stat must be mlwr or mls")
    observations = []  # (year, rating, value)
    for g in _kept(games):
        key = g.game.sort_key()
        if key is None or g.game.game_id not in analyses or not g.game.moves:
            continue
        analyzed = analyses[g.game.game_id]
        for profile, color in ((g.black, Color.BLACK), (g.white, Color.WHITE)):
            point = ratings.latest(profile.player_id, key)
            if point is None:
                continue
            stats = per_game_stats(analyzed, g.game, color)
            observations.append((key.year, point.rating, getattr(stats, stat)))
    if not observations:
        return ReportTable(f"loss_by_rating_bucket_{stat}",
                           ["year_bucket", "n", f"mean_{stat}"], [])
    all_ratings = sorted(r for _, r, _ in observations)
    edges = [all_ratings[int(len(all_ratings) * i / n_buckets)]
             for i in range(1, n_buckets)]

    def bucket_of(rating: float) -> int:
        for i, edge in enumerate(edges):
            if rating < edge:
                return i
        return len(edges)

    groups: dict[tuple[int, int], list[float]] = {}
    for year, rating, value in observations:
        groups.setdefault((year, bucket_of(rating)), []).append(value)
    rows = [(f"{year}:b{bucket}", [len(vs), sum(vs) / len(vs)])
            for (year, bucket), vs in sorted(groups.items())]
    return ReportTable(f"loss_by_rating_bucket_{stat}",
                       ["year_bucket", "n", f"mean_{stat}"], rows)


def length_distribution(games: list[CatalogedGame], bin_width: int = 10,
                        by_result_kind: bool = False) -> ReportTable:
    """Histogram of game lengths, optionally split by counted vs resigned."""
    columns = ["length_bin", "games"]
    if by_result_kind:
        columns = ["length_bin", "points", "resignation", "other"]
    counts: dict[int, list[int]] = {}
    for g in _kept(games):
        n = len(g.game.moves)
        b = (n // bin_width) * bin_width
        entry = counts.setdefault(b, [0, 0, 0])
        kind = g.game.result.kind
        if kind is ResultKind.POINTS:
            entry[0] += 1
        elif kind is ResultKind.RESIGNATION:
            entry[1] += 1
        else:
            entry[2] += 1
    rows = []
    for b in sorted(counts):
        points, resign, other = counts[b]
        key = f"[{b},{b + bin_width})"
        if by_result_kind:
            rows.append((key, [points, resign, other]))
        else:
            rows.append((key, [points + resign + other]))
    return ReportTable("length_distribution", columns, rows)


def region_totals(games: list[CatalogedGame]) -> ReportTable:
    counts = summarize_regions(_kept(games))
    rows = [(k, [v]) for k, v in counts.as_dict().items()]
    return ReportTable("region_totals", ["bucket", "games"], rows)


def write_report_manifest(path, tables: list[ReportTable],
                          corpus_fingerprint: str, filters: dict | None = None) -> None:
    manifest = {
        "corpus_fingerprint": corpus_fingerprint,
        "filters": filters or {},
        "tables": [{"title": t.title, "columns": t.columns, "rows": len(t.rows)}
                   for t in tables],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
