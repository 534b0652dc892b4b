"""Join game records to player/tournament metadata and apply corpus cleaning.

Cleaning is driven by an explicit, serializable rule set (handicap games,
abnormal results, an event blocklist for AI/amateur competitions, nonstandard
boards, dateless games) so that a corpus can be rebuilt reproducibly.
"""

from __future__ import annotations

import csv
import datetime
import fnmatch
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .sgf import GameRecord, ResultKind

log = logging.getLogger(__name__)


class ConfigurationError(ValueError):
    pass


class Gender(str, Enum):
    MALE = "M"
    FEMALE = "F"
    UNKNOWN = "?"


class Region(str, Enum):
    CHN = "CHN"
    KOR = "KOR"
    JPN = "JPN"
    TWN = "TWN"
    OTHER = "Other"
    UNKNOWN = "?"


class RegionPair(str, Enum):
    CR = "CR"
    CHN = "CHN"
    KOR = "KOR"
    JPN = "JPN"
    OTHERS = "Others"


class RegionScope(str, Enum):
    INTERNATIONAL = "international"
    NON_INTERNATIONAL = "non_international"


class Importance(str, Enum):
    WORLD_MAJOR = "world_major"
    REGIONAL_MAJOR = "regional_major"
    OTHER = "other"


class TournamentKind(str, Enum):
    ELIMINATION = "elimination"
    LEAGUE = "league"
    TEAM = "team"
    FRIENDLY = "friendly"


class ExclusionReason(str, Enum):
    HANDICAP = "handicap"
    ABNORMAL_RESULT = "abnormal_result"
    BLOCKED_EVENT = "blocked_event"
    NONSTANDARD_BOARD = "nonstandard_board"
    NO_DATE = "no_date"
    DUPLICATE = "duplicate"


@dataclass(frozen=True)
class PlayerProfile:
    player_id: str
    canonical_name: str
    birth_date: datetime.date | None = None
    gender: Gender = Gender.UNKNOWN
    region: Region = Region.UNKNOWN
    rank: int | None = None  # dan grade, 1 (lowest) to 9


@dataclass(frozen=True)
class TournamentInfo:
    category: str
    edition: str = ""
    region_scope: RegionScope | None = None
    importance: Importance | None = None
    kind: TournamentKind | None = None
    round_label: str = ""


@dataclass
class CatalogedGame:
    game: GameRecord
    black: PlayerProfile
    white: PlayerProfile
    tournament: TournamentInfo | None
    kept: bool
    reason: ExclusionReason | None
    region_pair: RegionPair

    @property
    def category(self) -> str:
        if self.tournament is not None:
            return self.tournament.category
        return parse_event(self.game.event)[1]


@dataclass(frozen=True)
class CleaningRules:
    exclude_handicap: bool = True
    blocked_events: tuple[str, ...] = ()
    exclude_abnormal_results: frozenset[ResultKind] = frozenset(
        {ResultKind.FORFEIT, ResultKind.TIMEOUT, ResultKind.UNKNOWN}
    )
    exclude_nonstandard_board: bool = True
    exclude_dateless: bool = True

    def as_dict(self) -> dict:
        return {
            "exclude_handicap": self.exclude_handicap,
            "blocked_events": list(self.blocked_events),
            "exclude_abnormal_results": sorted(k.value for k in self.exclude_abnormal_results),
            "exclude_nonstandard_board": self.exclude_nonstandard_board,
            "exclude_dateless": self.exclude_dateless,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CleaningRules":
        return cls(
            exclude_handicap=bool(data.get("exclude_handicap", True)),
            blocked_events=tuple(data.get("blocked_events", ())),
            exclude_abnormal_results=frozenset(
                ResultKind(v) for v in data.get(
                    "exclude_abnormal_results", ["forfeit", "timeout", "unknown"])
            ),
            exclude_nonstandard_board=bool(data.get("exclude_nonstandard_board", True)),
            exclude_dateless=bool(data.get("exclude_dateless", True)),
        )


def normalize_name(name: str) -> str:
    return re.sub(r"\s+", " ", name.strip()).casefold()


_EDITION_RE = re.compile(r"^(\d+(?:st|nd|rd|th))\s+(.+)$", re.IGNORECASE)


def parse_event(event: str) -> tuple[str, str]:
    """Split an event string into (edition, category); edition may be empty."""
    event = event.strip()
    m = _EDITION_RE.match(event)
    if m:
        return m.group(1).lower(), m.group(2).strip()
    return "", event


def region_pair(black: Region, white: Region) -> RegionPair:
    """Cross-region when the two regions differ; shared regions outside
    CHN/KOR/JPN fold into Others."""
    if black != white:
        return RegionPair.CR
    if black is Region.CHN:
        return RegionPair.CHN
    if black is Region.KOR:
        return RegionPair.KOR
    if black is Region.JPN:
        return RegionPair.JPN
    return RegionPair.OTHERS


def event_is_blocked(event: str, patterns: tuple[str, ...]) -> bool:
    """Case-insensitive match; patterns may be plain substrings or globs."""
    needle = normalize_name(event)
    for pattern in patterns:
        p = pattern.strip().casefold()
        if not p:
            continue
        if any(ch in p for ch in "*?["):
            if fnmatch.fnmatchcase(needle, p):
                return True
        elif p in needle:
            return True
    return False


class PlayerTable:
    def __init__(self, profiles: list[PlayerProfile]):
        self.by_id = {p.player_id: p for p in profiles}
        self.by_name: dict[str, str] = {}
        for p in profiles:
            self.by_name.setdefault(normalize_name(p.canonical_name), p.player_id)

    def match(self, name: str) -> PlayerProfile:
        """Exact normalized-name match; unmatched names get a deterministic
        all-Unknown profile so the game is kept rather than dropped."""
        key = normalize_name(name)
        player_id = self.by_name.get(key)
        if player_id is not None:
            return self.by_id[player_id]
        return PlayerProfile(player_id=f"~{key}" if key else "~unknown",
                             canonical_name=name or "?")


class TournamentTable:
    def __init__(self, rows: list[TournamentInfo]):
        self._by_key: dict[tuple[str, str], TournamentInfo] = {}
        for row in rows:
            key = (normalize_name(row.category), row.edition.casefold())
            self._by_key.setdefault(key, row)

    def match(self, event: str, round_label: str = "") -> TournamentInfo | None:
        edition, category = parse_event(event)
        key = normalize_name(category)
        row = self._by_key.get((key, edition)) or self._by_key.get((key, ""))
        if row is None:
            return None
        return TournamentInfo(row.category, edition or row.edition, row.region_scope,
                              row.importance, row.kind, round_label)


def verdict_for(record: GameRecord, rules: CleaningRules) -> ExclusionReason | None:
    """First matching exclusion in a fixed precedence order, or None to keep."""
    if rules.exclude_handicap and record.handicap > 0:
        return ExclusionReason.HANDICAP
    if record.result.kind in rules.exclude_abnormal_results:
        return ExclusionReason.ABNORMAL_RESULT
    if event_is_blocked(record.event, rules.blocked_events):
        return ExclusionReason.BLOCKED_EVENT
    if rules.exclude_nonstandard_board and record.nonstandard_board:
        return ExclusionReason.NONSTANDARD_BOARD
    if rules.exclude_dateless and record.date is None:
        return ExclusionReason.NO_DATE
    return None


def ingest(
    records: list[GameRecord],
    players: PlayerTable,
    tournaments: TournamentTable,
    rules: CleaningRules,
) -> list[CatalogedGame]:
    """Catalog every record exactly once with a Kept/Excluded verdict.

    Duplicate game ids keep the first occurrence; later copies are logged and
    excluded with a duplicate reason so the input count is preserved.
    """
    if players is None or tournaments is None:
        raise ConfigurationError("player and tournament tables are required")
    seen: set[str] = set()
    out = []
    for record in records:
        black = players.match(record.black_name)
        white = players.match(record.white_name)
        tournament = tournaments.match(record.event, record.round)
        pair = region_pair(black.region, white.region)
        if record.game_id in seen:
            log.info("duplicate game_id %s, keeping first", record.game_id)
            reason: ExclusionReason | None = ExclusionReason.DUPLICATE
        else:
            seen.add(record.game_id)
            reason = verdict_for(record, rules)
        out.append(CatalogedGame(record, black, white, tournament,
                                 kept=reason is None, reason=reason, region_pair=pair))
    return out


@dataclass(frozen=True)
class RegionCounts:
    total: int
    cr: int
    chn: int
    kor: int
    jpn: int
    others: int

    def as_dict(self) -> dict[str, int]:
        return {"Total": self.total, "CR": self.cr, "CHN": self.chn,
                "KOR": self.kor, "JPN": self.jpn, "Others": self.others}


def summarize_regions(games: list[CatalogedGame]) -> RegionCounts:
    """Bucket counts over kept games; the five buckets partition the total."""
    counts = {pair: 0 for pair in RegionPair}
    for g in games:
        counts[g.region_pair] += 1
    return RegionCounts(
        total=len(games),
        cr=counts[RegionPair.CR],
        chn=counts[RegionPair.CHN],
        kor=counts[RegionPair.KOR],
        jpn=counts[RegionPair.JPN],
        others=counts[RegionPair.OTHERS],
    )


def age_at(profile: PlayerProfile, on: datetime.date) -> float | None:
    """Age in fractional years; None when unknown or inconsistent."""
    if profile.birth_date is None:
        return None
    days = (on - profile.birth_date).days
    if days < 0:
        log.debug("game date %s precedes %s's birth date", on, profile.player_id)
        return None
    return days / 365.25


# ---------------------------------------------------------------------------
# CSV interfaces (UTF-8, header row, RFC-4180 quoting via the csv module)
# ---------------------------------------------------------------------------

PLAYERS_HEADER = ["player_id", "canonical_name", "birth_date", "gender", "region", "rank"]
TOURNAMENTS_HEADER = ["category", "edition", "region_scope", "importance", "kind"]
GAMES_HEADER = ["game_id", "black_id", "white_id", "date", "komi", "result",
                "verdict", "reason", "region_pair"]


def load_players_csv(path) -> PlayerTable:
    profiles = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        _require_columns(reader.fieldnames, PLAYERS_HEADER, path)
        for row in reader:
            birth = None
            if row["birth_date"]:
                birth = datetime.date.fromisoformat(row["birth_date"])
            profiles.append(PlayerProfile(
                player_id=row["player_id"],
                canonical_name=row["canonical_name"],
                birth_date=birth,
                gender=Gender(row["gender"]) if row["gender"] else Gender.UNKNOWN,
                region=Region(row["region"]) if row["region"] else Region.UNKNOWN,
                rank=int(row["rank"]) if row["rank"] else None,
            ))
    return PlayerTable(profiles)


def write_players_csv(path, profiles: list[PlayerProfile]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(PLAYERS_HEADER)
        for p in sorted(profiles, key=lambda p: p.player_id):
            writer.writerow([
                p.player_id, p.canonical_name,
                p.birth_date.isoformat() if p.birth_date else "",
                p.gender.value if p.gender is not Gender.UNKNOWN else "",
                p.region.value if p.region is not Region.UNKNOWN else "",
                p.rank if p.rank is not None else "",
            ])


def load_tournaments_csv(path) -> TournamentTable:
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        _require_columns(reader.fieldnames, TOURNAMENTS_HEADER, path)
        for row in reader:
            rows.append(TournamentInfo(
                category=row["category"],
                edition=row["edition"],
                region_scope=RegionScope(row["region_scope"]) if row["region_scope"] else None,
                importance=Importance(row["importance"]) if row["importance"] else None,
                kind=TournamentKind(row["kind"]) if row["kind"] else None,
            ))
    return TournamentTable(rows)


def write_tournaments_csv(path, rows: list[TournamentInfo]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(TOURNAMENTS_HEADER)
        for t in rows:
            writer.writerow([
                t.category, t.edition,
                t.region_scope.value if t.region_scope else "",
                t.importance.value if t.importance else "",
                t.kind.value if t.kind else "",
            ])


def load_blocklist(path) -> tuple[str, ...]:
    p = Path(path)
    if not p.exists():
        return ()
    lines = p.read_text(encoding="utf-8").splitlines()
    return tuple(line.strip() for line in lines if line.strip() and not line.startswith("#"))


def write_games_csv(path, games: list[CatalogedGame]) -> None:
    from .sgf import format_result

    def key(g: CatalogedGame):
        sk = g.game.sort_key()
        return (sk is None, sk or datetime.date.min, g.game.game_id)

    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(GAMES_HEADER)
        for g in sorted(games, key=key):
            writer.writerow([
                g.game.game_id, g.black.player_id, g.white.player_id,
                str(g.game.date) if g.game.date else "",
                g.game.komi if g.game.komi is not None else "",
                format_result(g.game.result) or "unknown",
                "kept" if g.kept else "excluded",
                g.reason.value if g.reason else "",
                g.region_pair.value,
            ])


def _require_columns(fieldnames, expected, path) -> None:
    missing = set(expected) - set(fieldnames or [])
    if missing:
        raise ConfigurationError(f"{path}: missing columns {sorted(missing)}")
