"""SGF (Smart Game Format) game records: parsing, canonical serialization, coordinates.

Only the main line of play is kept; variations are treated as commentary and
dropped.  Records identify themselves by a content hash of their canonical
serialization, so whitespace or property-order differences in the source text
never change a game's identity.
"""

from __future__ import annotations

import datetime
import hashlib
import re
from dataclasses import dataclass, field
from enum import Enum

COORD_LETTERS = "abcdefghijklmnopqrs"
DEFAULT_BOARD_SIZE = 19

# Properties lifted into typed GameRecord fields; everything else stays raw.
RECOGNIZED_PROPERTIES = ("PB", "PW", "RE", "KM", "DT", "EV", "RO", "SZ", "HA")


class SgfError(ValueError):
    """Malformed SGF input. Carries the character offset of the failure."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


class CoordinateError(ValueError):
    pass


class Color(str, Enum):
    BLACK = "B"
    WHITE = "W"

    @property
    def opponent(self) -> "Color":
        return Color.WHITE if self is Color.BLACK else Color.BLACK


class ResultKind(str, Enum):
    POINTS = "points"
    RESIGNATION = "resignation"
    FORFEIT = "forfeit"
    TIMEOUT = "timeout"
    DRAW = "draw"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class GameResult:
    kind: ResultKind
    winner: Color | None = None
    margin: float | None = None

    def winner_or_none(self) -> Color | None:
        if self.kind in (ResultKind.DRAW, ResultKind.UNKNOWN):
            return None
        return self.winner


GameResult.UNKNOWN = GameResult(ResultKind.UNKNOWN)

_RESULT_SUFFIXES = {
    "R": ResultKind.RESIGNATION,
    "RESIGN": ResultKind.RESIGNATION,
    "F": ResultKind.FORFEIT,
    "FORFEIT": ResultKind.FORFEIT,
    "T": ResultKind.TIMEOUT,
    "TIME": ResultKind.TIMEOUT,
}


def parse_result(text: str) -> GameResult:
    """Interpret an SGF RE value ("B+R", "W+2.5", "0", "?", ...)."""
    token = text.strip()
    upper = token.upper()
    if upper in ("0", "DRAW", "JIGO"):
        return GameResult(ResultKind.DRAW)
    m = re.match(r"^([BW])\+(.*)$", upper)
    if not m:
        return GameResult.UNKNOWN
    winner = Color(m.group(1))
    tail = m.group(2).strip()
    if tail in _RESULT_SUFFIXES:
        return GameResult(_RESULT_SUFFIXES[tail], winner)
    try:
        margin = float(tail)
    except ValueError:
        return GameResult.UNKNOWN
    if margin <= 0:
        return GameResult.UNKNOWN
    return GameResult(ResultKind.POINTS, winner, margin)


def format_result(result: GameResult) -> str | None:
    """Canonical RE value, or None when there is nothing to record."""
    if result.kind is ResultKind.UNKNOWN:
        return None
    if result.kind is ResultKind.DRAW:
        return "0"
    w = result.winner.value if result.winner else "?"
    if result.kind is ResultKind.POINTS:
        return f"{w}+{_format_number(result.margin)}"
    suffix = {ResultKind.RESIGNATION: "R", ResultKind.FORFEIT: "F", ResultKind.TIMEOUT: "T"}
    return f"{w}+{suffix[result.kind]}"


@dataclass(frozen=True)
class PartialDate:
    """Calendar date with optional month/day, ordered by a mid-interval fill."""

    year: int
    month: int | None = None
    day: int | None = None

    def sort_key(self) -> datetime.date:
        # Year-only sorts at July 1, year-month at the 15th: a total order
        # for the chronological split without inventing precision.
        if self.month is None:
            return datetime.date(self.year, 7, 1)
        if self.day is None:
            return datetime.date(self.year, self.month, 15)
        return datetime.date(self.year, self.month, self.day)

    def __str__(self) -> str:
        if self.month is None:
            return f"{self.year:04d}"
        if self.day is None:
            return f"{self.year:04d}-{self.month:02d}"
        return f"{self.year:04d}-{self.month:02d}-{self.day:02d}"

    @classmethod
    def parse(cls, text: str) -> "PartialDate | None":
        m = re.match(r"^\s*(\d{4})(?:-(\d{1,2}))?(?:-(\d{1,2}))?\s*$", text)
        if not m:
            return None
        year = int(m.group(1))
        month = int(m.group(2)) if m.group(2) else None
        day = int(m.group(3)) if m.group(3) else None
        try:
            cls(year, month, day).sort_key()
        except ValueError:
            return None
        return cls(year, month, day)

    @classmethod
    def from_date(cls, d: datetime.date) -> "PartialDate":
        return cls(d.year, d.month, d.day)


@dataclass(frozen=True)
class Move:
    color: Color
    point: tuple[int, int] | None  # (column, row), None = pass
    ordinal: int  # 1-based move number


@dataclass
class GameRecord:
    game_id: str = ""
    black_name: str = ""
    white_name: str = ""
    result: GameResult = GameResult.UNKNOWN
    komi: float | None = None
    date: PartialDate | None = None
    event: str = ""
    round: str = ""
    board_size: int = DEFAULT_BOARD_SIZE
    handicap: int = 0
    moves: list[Move] = field(default_factory=list)
    raw_properties: dict[str, list[str]] = field(default_factory=dict)

    @property
    def nonstandard_board(self) -> bool:
        return self.board_size != DEFAULT_BOARD_SIZE

    def sort_key(self) -> datetime.date | None:
        return self.date.sort_key() if self.date else None


def point_from_sgf(token: str) -> tuple[int, int] | None:
    """Two-letter SGF coordinate -> (column, row); '' and 'tt' are a pass."""
    if token == "" or token == "tt":
        return None
    if len(token) != 2 or token[0] not in COORD_LETTERS or token[1] not in COORD_LETTERS:
        raise CoordinateError(f"bad SGF coordinate {token!r}")
    return (COORD_LETTERS.index(token[0]), COORD_LETTERS.index(token[1]))


def point_to_sgf(point: tuple[int, int] | None) -> str:
    if point is None:
        return ""
    col, row = point
    if not (0 <= col < len(COORD_LETTERS) and 0 <= row < len(COORD_LETTERS)):
        raise CoordinateError(f"point {point} off the board")
    return COORD_LETTERS[col] + COORD_LETTERS[row]


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


class _Node:
    __slots__ = ("properties", "children")

    def __init__(self):
        self.properties: dict[str, list[str]] = {}
        self.children: list["_Node"] = []


_IDENT_RE = re.compile(r"[A-Za-z]+")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.n = len(text)

    def error(self, message: str) -> SgfError:
        return SgfError(message, self.pos)

    def skip_ws(self) -> None:
        while self.pos < self.n and self.text[self.pos].isspace():
            self.pos += 1

    def parse_collection(self) -> _Node:
        self.skip_ws()
        if self.pos >= self.n or self.text[self.pos] != "(":
            raise self.error("expected '(' to open a game tree")
        tree = self.parse_game_tree()
        return tree

    def parse_game_tree(self) -> _Node:
        assert self.text[self.pos] == "("
        self.pos += 1
        self.skip_ws()
        if self.pos >= self.n or self.text[self.pos] != ";":
            raise self.error("expected ';' to start a node sequence")
        first: _Node | None = None
        current: _Node | None = None
        while True:
            self.skip_ws()
            if self.pos >= self.n:
                raise self.error("unexpected end of input inside game tree")
            ch = self.text[self.pos]
            if ch == ";":
                self.pos += 1
                node = self.parse_node()
                if first is None:
                    first = node
                else:
                    assert current is not None
                    current.children.append(node)
                current = node
            elif ch == "(":
                subtree = self.parse_game_tree()
                assert current is not None
                current.children.append(subtree)
            elif ch == ")":
                self.pos += 1
                assert first is not None
                return first
            else:
                raise self.error(f"unexpected character {ch!r} in game tree")

    def parse_node(self) -> _Node:
        node = _Node()
        while True:
            self.skip_ws()
            if self.pos >= self.n:
                return node
            ch = self.text[self.pos]
            if ch in ";()":
                return node
            m = _IDENT_RE.match(self.text, self.pos)
            if not m:
                raise self.error(f"expected property identifier, found {ch!r}")
            # FF[3] allowed lowercase hints in identifiers (e.g. CoPyright).
            ident = re.sub("[a-z]", "", m.group(0))
            if not ident:
                raise self.error(f"property identifier {m.group(0)!r} has no uppercase letters")
            self.pos = m.end()
            values = []
            self.skip_ws()
            if self.pos >= self.n or self.text[self.pos] != "[":
                raise self.error(f"property {ident} has no '[' value")
            while self.pos < self.n and self.text[self.pos] == "[":
                values.append(self.parse_value())
                self.skip_ws()
            node.properties.setdefault(ident, []).extend(values)

    def parse_value(self) -> str:
        assert self.text[self.pos] == "["
        self.pos += 1
        out = []
        while self.pos < self.n:
            ch = self.text[self.pos]
            if ch == "\\":
                if self.pos + 1 >= self.n:
                    raise self.error("escape at end of input")
                out.append(self.text[self.pos + 1])
                self.pos += 2
            elif ch == "]":
                self.pos += 1
                return "".join(out)
            else:
                out.append(ch)
                self.pos += 1
        raise self.error("unterminated property value")


def _main_line(root: _Node) -> list[_Node]:
    nodes = [root]
    node = root
    while node.children:
        node = node.children[0]
        nodes.append(node)
    return nodes


def parse_sgf(text: str) -> GameRecord:
    """Parse one SGF game tree into a GameRecord (main line only)."""
    root = _Parser(text).parse_collection()
    nodes = _main_line(root)

    props = dict(root.properties)
    record = GameRecord()
    record.black_name = _pop_scalar(props, "PB", "")
    record.white_name = _pop_scalar(props, "PW", "")

    re_value = _pop_scalar(props, "RE", None)
    record.result = parse_result(re_value) if re_value is not None else GameResult.UNKNOWN

    km = _pop_scalar(props, "KM", None)
    if km is not None:
        try:
            record.komi = float(km)
        except ValueError:
            props.setdefault("KM", []).insert(0, km)

    dt = _pop_scalar(props, "DT", None)
    if dt is not None:
        record.date = PartialDate.parse(dt)
        if record.date is None:
            props.setdefault("DT", []).insert(0, dt)

    record.event = _pop_scalar(props, "EV", "")
    record.round = _pop_scalar(props, "RO", "")

    sz = _pop_scalar(props, "SZ", None)
    if sz is not None:
        try:
            record.board_size = int(sz)
        except ValueError:
            raise SgfError(f"unparseable SZ value {sz!r}")

    ha = _pop_scalar(props, "HA", None)
    if ha is not None:
        try:
            record.handicap = int(ha)
        except ValueError:
            record.handicap = 0

    record.raw_properties = props

    ordinal = 0
    for node in nodes[1:]:
        for key in ("B", "W"):
            if key in node.properties:
                token = node.properties[key][0]
                try:
                    point = point_from_sgf(token)
                except CoordinateError as exc:
                    raise SgfError(str(exc))
                ordinal += 1
                record.moves.append(Move(Color(key), point, ordinal))

    record.game_id = compute_game_id(record)
    return record


def _pop_scalar(props: dict[str, list[str]], key: str, default):
    values = props.pop(key, None)
    if not values:
        return default
    if len(values) > 1:
        props[key] = values[1:]
    return values[0]


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _format_number(x: float | None) -> str:
    if x is None:
        return ""
    if x == int(x):
        return str(int(x))
    return repr(x)


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace("]", "\\]")


def serialize_sgf(record: GameRecord) -> str:
    """Canonical single-line FF[4] text.

    Properties are sorted lexicographically within each node so the output,
    and therefore the content hash derived from it, is stable regardless of
    how the source file was laid out.
    """
    props: dict[str, list[str]] = {k: list(v) for k, v in record.raw_properties.items()}

    def put(key: str, value: str) -> None:
        # Typed value first; stray extra values from the source stay behind it.
        props[key] = [value] + props.get(key, [])

    if record.black_name:
        put("PB", record.black_name)
    if record.white_name:
        put("PW", record.white_name)
    re_value = format_result(record.result)
    if re_value is not None:
        put("RE", re_value)
    if record.komi is not None:
        put("KM", _format_number(record.komi))
    if record.date is not None:
        put("DT", str(record.date))
    if record.event:
        put("EV", record.event)
    if record.round:
        put("RO", record.round)
    put("SZ", str(record.board_size))
    if record.handicap:
        put("HA", str(record.handicap))

    parts = ["(;"]
    for key in sorted(props):
        values = props[key]
        if not values:
            continue
        parts.append(key + "".join(f"[{_escape(v)}]" for v in values))
    for move in record.moves:
        parts.append(f";{move.color.value}[{point_to_sgf(move.point)}]")
    parts.append(")")
    return "".join(parts)


def compute_game_id(record: GameRecord) -> str:
    """Stable identifier: hash of the canonical serialization."""
    canonical = serialize_sgf(record)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def validate_record(record: GameRecord) -> list[str]:
    """Invariant check; returns a list of violations (empty when valid)."""
    problems = []
    if record.komi is not None and (record.komi * 2) != int(record.komi * 2):
        problems.append(f"komi {record.komi} not representable at 0.5 granularity")
    if record.result.kind is ResultKind.POINTS and not (record.result.margin or 0) > 0:
        problems.append("points result with non-positive margin")
    if record.handicap < 0:
        problems.append("negative handicap")
    expected = Color.BLACK
    for i, move in enumerate(record.moves, start=1):
        if move.ordinal != i:
            problems.append(f"move ordinal {move.ordinal} at position {i}")
            break
        if move.point is not None:
            col, row = move.point
            if not (0 <= col < record.board_size and 0 <= row < record.board_size):
                problems.append(f"move {i} point {move.point} outside board")
        if record.handicap == 0:
            if move.color is not expected:
                problems.append(f"move {i} breaks color alternation")
                break
            expected = expected.opponent
    return problems


def read_sgf_file(path) -> tuple[str, str | None]:
    """Read SGF text as UTF-8, falling back to Latin-1.

    Returns (text, warning); warning is set when the fallback was used.
    """
    raw = open(path, "rb").read()
    try:
        return raw.decode("utf-8"), None
    except UnicodeDecodeError:
        return raw.decode("latin-1"), f"{path}: not valid UTF-8, decoded as Latin-1"
