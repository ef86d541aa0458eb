"""Shot-event ingestion: parsing, coordinate normalization, player filtering.

Input files carry one row per field-goal attempt, with court coordinates
in feet. Parsing normalizes coordinates onto the unit square; attempts
landing outside it are removed by a separate exclusion pass, and players
are retained only when their attempt count exceeds a threshold.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

CSV_FIELDS = ("player_id", "player_name", "position", "x_ft", "y_ft", "made", "season")


class Position(enum.Enum):
    """Aggregated positional groups; hybrid labels are merged pairwise."""

    GUARD = "guard"
    FORWARD_GUARD = "forward-guard"
    FORWARD = "forward"
    FORWARD_CENTER = "forward-center"
    CENTER = "center"


#: Canonical category order used wherever positions become partition labels.
POSITION_ORDER: tuple[Position, ...] = tuple(Position)

_POSITION_ALIASES = {
    "guard": Position.GUARD,
    "guard-forward": Position.FORWARD_GUARD,
    "forward-guard": Position.FORWARD_GUARD,
    "forward": Position.FORWARD,
    "forward-center": Position.FORWARD_CENTER,
    "center-forward": Position.FORWARD_CENTER,
    "center": Position.CENTER,
}


class ParseError(ValueError):
    """Malformed input row; carries the offending row number."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class IngestError(ValueError):
    """Inconsistent or insufficient player data after parsing."""


@dataclass(frozen=True)
class CourtSpec:
    """Offensive half-court extent in feet.

    width runs sideline to sideline, depth baseline to mid-court.
    """

    width: float = 50.0
    depth: float = 47.0

    def __post_init__(self) -> None:
        if not (self.width > 0 and self.depth > 0):
            raise ValueError(f"court dimensions must be positive, got {self.width}x{self.depth}")


@dataclass(frozen=True)
class ShotEvent:
    """One field-goal attempt with unit-square coordinates."""

    player_id: str
    player_name: str
    position: Position
    x: float
    y: float
    made: bool
    season: str


@dataclass
class PlayerRecord:
    """A retained player's attempts, split by outcome.

    Point arrays have shape (n, 2) and hold unit-square coordinates.
    """

    player_id: str
    player_name: str
    position: Position
    made_points: np.ndarray
    missed_points: np.ndarray

    @property
    def attempts(self) -> int:
        return len(self.made_points) + len(self.missed_points)


def normalize_point(x_ft: float, y_ft: float, court: CourtSpec = CourtSpec()) -> tuple[float, float]:
    """Map court coordinates in feet onto the unit square.

    Purely linear (x/width, y/depth); out-of-range inputs pass through
    unclamped so the exclusion step can drop them later.
    """
    return x_ft / court.width, y_ft / court.depth


def _parse_position(raw: str, row: int) -> Position:
    key = raw.strip().lower()
    try:
        return _POSITION_ALIASES[key]
    except KeyError:
        raise ParseError(row, f"unknown position label {raw!r}") from None


def _parse_float(raw: str, name: str, row: int) -> float:
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ParseError(row, f"non-numeric {name} {raw!r}") from None


def parse_events(stream: Iterable[str], court: CourtSpec = CourtSpec()) -> list[ShotEvent]:
    """Parse a CSV record stream into normalized shot events.

    The stream must start with the exact header
    ``player_id,player_name,position,x_ft,y_ft,made,season``. Rows are
    normalized with :func:`normalize_point` in input order. An empty
    stream yields an empty list; a malformed row raises
    :class:`ParseError` carrying its line number.
    """
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        return []
    if [h.strip() for h in header] != list(CSV_FIELDS):
        raise ParseError(1, f"expected header {','.join(CSV_FIELDS)!r}, got {','.join(header)!r}")
    events: list[ShotEvent] = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue  # tolerate blank lines
        if len(row) != len(CSV_FIELDS):
            raise ParseError(line, f"expected {len(CSV_FIELDS)} fields, got {len(row)}")
        pid, name, pos_raw, x_raw, y_raw, made_raw, season = (f.strip() for f in row)
        position = _parse_position(pos_raw, line)
        x_ft = _parse_float(x_raw, "x_ft", line)
        y_ft = _parse_float(y_raw, "y_ft", line)
        if made_raw not in ("0", "1"):
            raise ParseError(line, f"made flag must be 0 or 1, got {made_raw!r}")
        x, y = normalize_point(x_ft, y_ft, court)
        events.append(ShotEvent(pid, name, position, x, y, made_raw == "1", season))
    return events


def parse_events_json(text: str, court: CourtSpec = CourtSpec()) -> list[ShotEvent]:
    """Parse a JSON array of shot objects (same keys as the CSV columns).

    ``made`` may be a boolean or a 0/1 integer. Row numbers in errors are
    1-based positions within the array.
    """
    data = json.loads(text)
    if not isinstance(data, list):
        raise ParseError(1, "expected a JSON array of shot objects")
    events: list[ShotEvent] = []
    for i, obj in enumerate(data, start=1):
        if not isinstance(obj, dict) or set(obj) != set(CSV_FIELDS):
            raise ParseError(i, f"expected an object with keys {','.join(CSV_FIELDS)}")
        position = _parse_position(str(obj["position"]), i)
        x_ft = _parse_float(obj["x_ft"], "x_ft", i)
        y_ft = _parse_float(obj["y_ft"], "y_ft", i)
        made_raw = obj["made"]
        if isinstance(made_raw, bool):
            made = made_raw
        elif made_raw in (0, 1):
            made = bool(made_raw)
        else:
            raise ParseError(i, f"made flag must be boolean or 0/1, got {made_raw!r}")
        x, y = normalize_point(x_ft, y_ft, court)
        events.append(
            ShotEvent(str(obj["player_id"]), str(obj["player_name"]), position, x, y, made, str(obj["season"]))
        )
    return events


def load_events(path: str | Path, court: CourtSpec = CourtSpec()) -> list[ShotEvent]:
    """Load shot events from a CSV or JSON file, dispatching on suffix."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        return parse_events_json(path.read_text(encoding="utf-8"), court)
    with path.open(encoding="utf-8", newline="") as fh:
        return parse_events(fh, court)


def write_events_csv(events: Sequence[ShotEvent], court: CourtSpec, stream) -> None:
    """Serialize events back to the CSV input format (coordinates in feet)."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for e in events:
        writer.writerow(
            [
                e.player_id,
                e.player_name,
                e.position.value,
                repr(e.x * court.width),
                repr(e.y * court.depth),
                int(e.made),
                e.season,
            ]
        )


def exclude_impossible(events: Sequence[ShotEvent]) -> list[ShotEvent]:
    """Drop attempts outside the unit square; boundary points stay in."""
    return [e for e in events if 0.0 <= e.x <= 1.0 and 0.0 <= e.y <= 1.0]


def filter_players(events: Sequence[ShotEvent], min_attempts: int = 1000) -> list[PlayerRecord]:
    """Group events by player and keep players with more than min_attempts.

    The comparison is strict: a player with exactly min_attempts attempts
    is dropped. Output is sorted by player_id. A player whose retained
    attempts are all made or all missed is rejected, since a density
    cannot be estimated from an empty point set.
    """
    if min_attempts < 1:
        raise ValueError(f"min_attempts must be at least 1, got {min_attempts}")
    groups: dict[str, dict] = {}
    for e in events:
        g = groups.setdefault(e.player_id, {"name": e.player_name, "position": e.position, "made": [], "missed": []})
        if e.position is not g["position"]:
            raise IngestError(
                f"conflicting position labels for player {e.player_id} ({g['name']}): "
                f"{g['position'].value} vs {e.position.value}"
            )
        (g["made"] if e.made else g["missed"]).append((e.x, e.y))
    records: list[PlayerRecord] = []
    for pid in sorted(groups):
        g = groups[pid]
        if len(g["made"]) + len(g["missed"]) <= min_attempts:
            continue
        for side in ("made", "missed"):
            if not g[side]:
                raise IngestError(f"player {pid} ({g['name']}) has no {side} shots; cannot estimate a density")
        records.append(
            PlayerRecord(
                player_id=pid,
                player_name=g["name"],
                position=g["position"],
                made_points=np.array(g["made"], dtype=float).reshape(-1, 2),
                missed_points=np.array(g["missed"], dtype=float).reshape(-1, 2),
            )
        )
    return records


def write_players_json(records: Sequence[PlayerRecord], path: str | Path) -> None:
    """Write player records (with point lists) as a deterministic JSON file."""
    payload = [
        {
            "player_id": r.player_id,
            "player_name": r.player_name,
            "position": r.position.value,
            "made_points": r.made_points.tolist(),
            "missed_points": r.missed_points.tolist(),
        }
        for r in records
    ]
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def read_players_json(path: str | Path) -> list[PlayerRecord]:
    """Inverse of :func:`write_players_json`."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return [
        PlayerRecord(
            player_id=obj["player_id"],
            player_name=obj["player_name"],
            position=Position(obj["position"]),
            made_points=np.array(obj["made_points"], dtype=float).reshape(-1, 2),
            missed_points=np.array(obj["missed_points"], dtype=float).reshape(-1, 2),
        )
        for obj in payload
    ]
