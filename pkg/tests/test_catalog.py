import datetime

import pytest

from progo.catalog import (
    CleaningRules,
    ConfigurationError,
    ExclusionReason,
    Gender,
    Importance,
    PlayerProfile,
    PlayerTable,
    Region,
    RegionPair,
    RegionScope,
    TournamentInfo,
    TournamentKind,
    TournamentTable,
    age_at,
    event_is_blocked,
    ingest,
    parse_event,
    region_pair,
    summarize_regions,
)
from progo.sgf import parse_sgf


def make_profile(pid, name, region=Region.CHN, birth=None, rank=9):
    return PlayerProfile(pid, name, birth, Gender.MALE, region, rank)


PLAYERS = PlayerTable([
    make_profile("p1", "Hong Yi", Region.CHN, datetime.date(1990, 5, 1)),
    make_profile("p2", "Kang Min", Region.KOR, datetime.date(1992, 2, 2)),
    make_profile("p3", "Sato Ren", Region.JPN, datetime.date(1988, 8, 8)),
])

TOURNAMENTS = TournamentTable([
    TournamentInfo("Synth Cup", "", RegionScope.INTERNATIONAL,
                   Importance.WORLD_MAJOR, TournamentKind.ELIMINATION),
    TournamentInfo("League A", "", RegionScope.NON_INTERNATIONAL,
                   Importance.OTHER, TournamentKind.LEAGUE),
])


def sgf_game(black="Hong Yi", white="Kang Min", extra="", result="RE[B+R]",
             date="DT[2015-04-01]", event="EV[3rd Synth Cup]"):
    return parse_sgf(f"(;GM[1]FF[4]SZ[19]PB[{black}]PW[{white}]KM[6.5]"
                     f"{result}{date}{event}{extra})")


def test_ingest_keeps_well_formed_games():
    records = [
        sgf_game(),
        sgf_game(black="Hong Yi", white="Hong Yi"),
        sgf_game(black="Sato Ren", white="Kang Min"),
    ]
    cataloged = ingest(records, PLAYERS, TOURNAMENTS, CleaningRules())
    assert len(cataloged) == 3
    assert all(g.kept for g in cataloged)
    assert cataloged[0].region_pair is RegionPair.CR
    assert cataloged[0].tournament.importance is Importance.WORLD_MAJOR
    assert cataloged[0].tournament.edition == "3rd"


def test_handicap_games_excluded():
    record = sgf_game(extra="HA[2]AB[pd][dp]")
    [g] = ingest([record], PLAYERS, TOURNAMENTS, CleaningRules())
    assert not g.kept and g.reason is ExclusionReason.HANDICAP


def test_abnormal_results_excluded():
    for re_prop in ("RE[B+F]", "RE[W+T]", ""):
        [g] = ingest([sgf_game(result=re_prop)], PLAYERS, TOURNAMENTS, CleaningRules())
        assert not g.kept and g.reason is ExclusionReason.ABNORMAL_RESULT


def test_blocked_event_excluded():
    rules = CleaningRules(blocked_events=("AlphaGo*", "amateur"))
    [g] = ingest([sgf_game(event="EV[AlphaGo Challenge]")], PLAYERS, TOURNAMENTS, rules)
    assert not g.kept and g.reason is ExclusionReason.BLOCKED_EVENT
    [g] = ingest([sgf_game(event="EV[City Amateur Open]")], PLAYERS, TOURNAMENTS, rules)
    assert not g.kept and g.reason is ExclusionReason.BLOCKED_EVENT


def test_dateless_excluded_by_default_but_configurable():
    record = sgf_game(date="")
    [g] = ingest([record], PLAYERS, TOURNAMENTS, CleaningRules())
    assert not g.kept and g.reason is ExclusionReason.NO_DATE
    [g] = ingest([record], PLAYERS, TOURNAMENTS, CleaningRules(exclude_dateless=False))
    assert g.kept


def test_unmatched_player_gets_unknown_profile():
    [g] = ingest([sgf_game(black="Nobody Known")], PLAYERS, TOURNAMENTS, CleaningRules())
    assert g.kept
    assert g.black.region is Region.UNKNOWN
    assert g.black.player_id.startswith("~")


def test_duplicates_keep_first():
    record = sgf_game()
    out = ingest([record, record], PLAYERS, TOURNAMENTS, CleaningRules())
    assert out[0].kept
    assert not out[1].kept and out[1].reason is ExclusionReason.DUPLICATE


def test_missing_tables_is_configuration_error():
    with pytest.raises(ConfigurationError):
        ingest([sgf_game()], None, TOURNAMENTS, CleaningRules())


def test_cleaning_idempotent():
    records = [sgf_game(), sgf_game(black="Sato Ren"), sgf_game(extra="HA[3]")]
    rules = CleaningRules()
    kept = [g.game for g in ingest(records, PLAYERS, TOURNAMENTS, rules) if g.kept]
    again = ingest(kept, PLAYERS, TOURNAMENTS, rules)
    assert all(g.kept for g in again)


def test_verdicts_deterministic():
    records = [sgf_game(), sgf_game(result="RE[W+T]")]
    a = ingest(records, PLAYERS, TOURNAMENTS, CleaningRules())
    b = ingest(records, PLAYERS, TOURNAMENTS, CleaningRules())
    assert [(g.kept, g.reason) for g in a] == [(g.kept, g.reason) for g in b]


# -- region pairs -------------------------------------------------------------

def test_region_pair_buckets():
    assert region_pair(Region.CHN, Region.KOR) is RegionPair.CR
    assert region_pair(Region.CHN, Region.CHN) is RegionPair.CHN
    assert region_pair(Region.KOR, Region.KOR) is RegionPair.KOR
    assert region_pair(Region.JPN, Region.JPN) is RegionPair.JPN
    assert region_pair(Region.TWN, Region.TWN) is RegionPair.OTHERS
    assert region_pair(Region.UNKNOWN, Region.UNKNOWN) is RegionPair.OTHERS
    assert region_pair(Region.UNKNOWN, Region.CHN) is RegionPair.CR


def test_summarize_regions_fixture():
    records = [
        sgf_game(),  # CHN vs KOR -> CR
        sgf_game(white="Hong Yi"),  # CHN vs CHN
        sgf_game(white="Hong Yi", date="DT[2016-04-01]"),  # CHN vs CHN
    ]
    games = ingest(records, PLAYERS, TOURNAMENTS, CleaningRules())
    counts = summarize_regions([g for g in games if g.kept])
    assert counts.total == 3 and counts.chn == 2 and counts.cr == 1
    assert counts.kor == counts.jpn == counts.others == 0


def test_summarize_regions_partition_property():
    records = [sgf_game(black=b, white=w)
               for b in ("Hong Yi", "Kang Min", "Sato Ren", "Stranger")
               for w in ("Hong Yi", "Kang Min", "Sato Ren")]
    games = [g for g in ingest(records, PLAYERS, TOURNAMENTS, CleaningRules()) if g.kept]
    c = summarize_regions(games)
    assert c.cr + c.chn + c.kor + c.jpn + c.others == c.total == len(games)


def test_summarize_regions_empty():
    c = summarize_regions([])
    assert c.total == 0 and c.cr == 0 and c.others == 0


# -- ages ---------------------------------------------------------------------

def test_age_simple():
    profile = make_profile("x", "X", birth=datetime.date(1997, 8, 2))
    age = age_at(profile, datetime.date(2017, 8, 2))
    assert age == pytest.approx(20.0, abs=0.01)


def test_age_unknown_birth():
    assert age_at(PlayerProfile("x", "X"), datetime.date(2017, 1, 1)) is None


def test_age_zero_and_negative():
    profile = make_profile("x", "X", birth=datetime.date(2000, 1, 1))
    assert age_at(profile, datetime.date(2000, 1, 1)) == 0.0
    assert age_at(profile, datetime.date(1999, 12, 31)) is None


# -- helpers -------------------------------------------------------------------

def test_parse_event_editions():
    assert parse_event("21st Samsung Cup") == ("21st", "Samsung Cup")
    assert parse_event("3rd Synth Cup") == ("3rd", "Synth Cup")
    assert parse_event("League A") == ("", "League A")


def test_blocklist_matching_is_case_insensitive():
    assert event_is_blocked("ALPHAGO showcase", ("alphago*",))
    assert event_is_blocked("Some Amateur Cup", ("amateur",))
    assert not event_is_blocked("Pro League", ("amateur",))
