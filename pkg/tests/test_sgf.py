import random

import pytest

from progo.sgf import (
    Color,
    CoordinateError,
    GameResult,
    PartialDate,
    ResultKind,
    SgfError,
    compute_game_id,
    parse_result,
    parse_sgf,
    point_from_sgf,
    point_to_sgf,
    serialize_sgf,
    validate_record,
)
from .conftest import random_record

TWO_MOVE = "(;GM[1]FF[4]SZ[19]PB[A]PW[B]KM[6.5]RE[B+R];B[pd];W[dp])"


def test_parse_two_move_game():
    record = parse_sgf(TWO_MOVE)
    assert len(record.moves) == 2
    assert record.komi == 6.5
    assert record.result == GameResult(ResultKind.RESIGNATION, Color.BLACK)
    assert record.black_name == "A" and record.white_name == "B"
    assert record.moves[0].point == (15, 3)
    assert record.moves[1] .point == (3, 15)
    assert record.moves[0].color is Color.BLACK


def test_parse_header_only_tree():
    record = parse_sgf("(;GM[1]FF[4]SZ[19])")
    assert record.moves == []
    assert record.result.kind is ResultKind.UNKNOWN
    assert record.raw_properties["GM"] == ["1"]


def test_parse_handicap_game_with_setup_stones():
    record = parse_sgf("(;GM[1]FF[4]SZ[19]HA[2]AB[pd][dp]KM[0.5];W[dd])")
    assert record.handicap == 2
    assert record.raw_properties["AB"] == ["pd", "dp"]


def test_variations_are_dropped():
    text = "(;SZ[19];B[pd](;W[dp];B[cc])(;W[dd];B[qq];W[aa]))"
    record = parse_sgf(text)
    assert [point_to_sgf(m.point) for m in record.moves] == ["pd", "dp", "cc"]


def test_missing_re_is_unknown():
    assert parse_sgf("(;SZ[19])").result.kind is ResultKind.UNKNOWN


def test_nonstandard_board_is_flagged_not_rejected():
    record = parse_sgf("(;SZ[13];B[aa])")
    assert record.board_size == 13
    assert record.nonstandard_board


def test_parse_error_reports_offset():
    with pytest.raises(SgfError) as exc:
        parse_sgf("(;SZ[19];B[pd)")
    assert exc.value.offset is not None
    with pytest.raises(SgfError):
        parse_sgf(";SZ[19]")
    with pytest.raises(SgfError):
        parse_sgf("(;SZ[19];B[pd]")  # unclosed tree


def test_escaped_values_roundtrip():
    record = parse_sgf(r"(;SZ[19]C[bracket \] and backslash \\ here];B[pd])")
    assert record.raw_properties["C"] == ["bracket ] and backslash \\ here"]
    again = parse_sgf(serialize_sgf(record))
    assert again.raw_properties["C"] == record.raw_properties["C"]


# -- coordinates ------------------------------------------------------------

def test_point_origin():
    assert point_from_sgf("aa") == (0, 0)


def test_point_letter_arithmetic():
    assert point_from_sgf("pd") == (15, 3)


def test_pass_tokens():
    assert point_from_sgf("") is None
    assert point_from_sgf("tt") is None
    assert point_to_sgf(None) == ""


def test_bad_coordinates_rejected():
    for token in ("zz", "a", "a1", "pdq"):
        with pytest.raises(CoordinateError):
            point_from_sgf(token)


def test_coordinate_bijection_all_points():
    for col in range(19):
        for row in range(19):
            assert point_from_sgf(point_to_sgf((col, row))) == (col, row)


# -- results ----------------------------------------------------------------

@pytest.mark.parametrize("text,kind,winner", [
    ("B+R", ResultKind.RESIGNATION, Color.BLACK),
    ("W+Resign", ResultKind.RESIGNATION, Color.WHITE),
    ("B+T", ResultKind.TIMEOUT, Color.BLACK),
    ("W+F", ResultKind.FORFEIT, Color.WHITE),
    ("0", ResultKind.DRAW, None),
    ("Draw", ResultKind.DRAW, None),
    ("?", ResultKind.UNKNOWN, None),
    ("Void", ResultKind.UNKNOWN, None),
])
def test_result_parsing(text, kind, winner):
    result = parse_result(text)
    assert result.kind is kind
    assert result.winner == winner


def test_points_result_margin():
    result = parse_result("W+2.5")
    assert result == GameResult(ResultKind.POINTS, Color.WHITE, 2.5)


# -- serialization and identity ----------------------------------------------

def test_serialize_header_only():
    record = parse_sgf("(;GM[1]FF[4]SZ[19])")
    assert serialize_sgf(record) == "(;FF[4]GM[1]SZ[19])"


def test_roundtrip_two_move_example():
    record = parse_sgf(TWO_MOVE)
    assert parse_sgf(serialize_sgf(record)) == record


def test_roundtrip_100_random_records():
    rng = random.Random(7)
    for _ in range(100):
        record = random_record(rng)
        assert not validate_record(record)
        again = parse_sgf(serialize_sgf(record))
        assert again == record


def test_game_id_ignores_whitespace_layout():
    spaced = "(;GM[1]FF[4]\n  SZ[19] PB[A]PW[B]KM[6.5]RE[B+R]\n ;B[pd]\n ;W[dp]\n)"
    assert parse_sgf(spaced).game_id == parse_sgf(TWO_MOVE).game_id


def test_game_id_ignores_property_order():
    reordered = "(;RE[B+R]KM[6.5]PW[B]PB[A]SZ[19]FF[4]GM[1];B[pd];W[dp])"
    assert parse_sgf(reordered).game_id == parse_sgf(TWO_MOVE).game_id


def test_game_id_changes_with_content():
    record = parse_sgf(TWO_MOVE)
    other = parse_sgf(TWO_MOVE.replace("KM[6.5]", "KM[7.5]"))
    assert record.game_id != other.game_id


def test_parse_is_deterministic():
    assert parse_sgf(TWO_MOVE) == parse_sgf(TWO_MOVE)


# -- partial dates ------------------------------------------------------------

def test_partial_date_fill_rules():
    assert str(PartialDate.parse("2017")) == "2017"
    assert PartialDate.parse("2017").sort_key().isoformat() == "2017-07-01"
    assert PartialDate.parse("2017-03").sort_key().isoformat() == "2017-03-15"
    assert PartialDate.parse("2017-03-05").sort_key().isoformat() == "2017-03-05"


def test_partial_date_rejects_garbage():
    assert PartialDate.parse("March 2017") is None
    assert PartialDate.parse("2017-13") is None


def test_unparseable_dt_kept_raw():
    record = parse_sgf("(;SZ[19]DT[published 1846])")
    assert record.date is None
    assert record.raw_properties["DT"] == ["published 1846"]
    assert parse_sgf(serialize_sgf(record)) == record


def test_validate_flags_alternation_breaks():
    record = parse_sgf("(;SZ[19];B[aa];B[bb])")
    assert any("alternation" in p for p in validate_record(record))


def test_komi_granularity_validation():
    record = parse_sgf("(;SZ[19]KM[6.25])")
    assert any("granularity" in p for p in validate_record(record))
