"""GPS trace ingestion and discretization.

Raw taxi datasets come in many shapes; this module consumes one
normalized CSV format (``agent_id,timestamp_unix_s,lat,lon``, header
required) and turns it into per-agent sector sequences at a chosen time
window. Converting vendor formats into the normalized CSV is left to
one-off scripts; recipes live in the README.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from trustsense.grid import GeoPoint, SectorGrid


class ParseError(ValueError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class EmptyTraceSetError(ValueError):
    """No in-bounds points remain after filtering."""


EXPECTED_HEADER = ["agent_id", "timestamp_unix_s", "lat", "lon"]


@dataclass
class TraceSet:
    """Per-agent, time-ordered in-bounds fixes plus provenance metadata."""

    points: dict[str, list[GeoPoint]]
    source: str = ""
    dropped_out_of_bounds: int = 0
    dropped_duplicates: int = 0

    @property
    def t_min(self) -> int:
        return min(p.timestamp for pts in self.points.values() for p in pts)

    @property
    def t_max(self) -> int:
        return max(p.timestamp for pts in self.points.values() for p in pts)

    def all_points(self) -> list[GeoPoint]:
        return [p for pts in self.points.values() for p in pts]


def ingest(path: str, grid: SectorGrid) -> TraceSet:
    """Parse a normalized trace CSV, keeping only in-bounds fixes.

    Points outside the grid bounds are discarded; per agent, fixes are
    sorted by timestamp and exact-duplicate timestamps keep the first
    occurrence. Malformed rows raise ParseError with the line number.
    """
    raw: dict[str, list[GeoPoint]] = {}
    dropped_oob = 0
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError(1, "empty file")
        if [h.strip() for h in header] != EXPECTED_HEADER:
            raise ParseError(1, f"expected header {','.join(EXPECTED_HEADER)}")
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise ParseError(line_no, f"expected 4 fields, got {len(row)}")
            agent_id = row[0].strip()
            if not agent_id:
                raise ParseError(line_no, "empty agent_id")
            try:
                ts = int(row[1])
            except ValueError:
                raise ParseError(line_no, f"bad timestamp {row[1]!r}") from None
            try:
                lat, lon = float(row[2]), float(row[3])
            except ValueError:
                raise ParseError(line_no, f"bad coordinate in {row[2]!r},{row[3]!r}") from None
            try:
                point = GeoPoint(lat=lat, lon=lon, timestamp=ts)
            except ValueError as exc:
                raise ParseError(line_no, str(exc)) from None
            if grid.sector_of(point) is None:
                dropped_oob += 1
                continue
            raw.setdefault(agent_id, []).append(point)

    points: dict[str, list[GeoPoint]] = {}
    dropped_dup = 0
    for agent_id, pts in raw.items():
        pts.sort(key=lambda p: p.timestamp)
        deduped: list[GeoPoint] = []
        for p in pts:
            if deduped and deduped[-1].timestamp == p.timestamp:
                dropped_dup += 1
                continue
            deduped.append(p)
        points[agent_id] = deduped

    if not points:
        raise EmptyTraceSetError(f"{path}: no in-bounds trace points")
    return TraceSet(points=points, source=path, dropped_out_of_bounds=dropped_oob, dropped_duplicates=dropped_dup)


def discretize(
    trace_set: TraceSet,
    grid: SectorGrid,
    window_minutes: int,
    origin: Optional[int] = None,
) -> dict[str, np.ndarray]:
    """Per-agent sector index per time window, gaps forward-filled.

    Windows of ``window_minutes`` are aligned to ``origin`` (default:
    the earliest timestamp in the set). Each window takes the sector of
    the agent's last fix inside it; windows with no fix repeat the
    previous window's sector, on the assumption that an agent between
    fixes is still near its last position. Windows before an agent's
    first fix have no defensible value and are marked -1.
    """
    if window_minutes < 1:
        raise ValueError("window must be at least one minute")
    window_s = window_minutes * 60
    if origin is None:
        origin = trace_set.t_min
    out: dict[str, np.ndarray] = {}
    for agent_id, pts in trace_set.points.items():
        last_w = (pts[-1].timestamp - origin) // window_s
        seq = np.full(last_w + 1, -1, dtype=np.int64)
        for p in pts:
            w = (p.timestamp - origin) // window_s
            if w >= 0:
                seq[w] = grid.sector_of(p)  # later fixes in a window overwrite earlier
        for i in range(1, len(seq)):
            if seq[i] < 0:
                seq[i] = seq[i - 1]
        out[agent_id] = seq
    return out
