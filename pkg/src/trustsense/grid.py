"""Sector geometry of a rectangular sensing area.

The sensing area is a lat/lon bounding box split into ``rows x cols``
equal-size sectors. Sectors are indexed row-major with row 0 the
northernmost band, so index = row * cols + col. Cells are half-open:
a point exactly on an interior boundary belongs to the cell with the
larger index on that axis, and the outermost edges are closed, so every
in-bounds point maps to exactly one sector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class BoundingBox:
    """Geographic extent, degrees. min < max required on both axes."""

    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float

    def __post_init__(self) -> None:
        if not (self.lat_min < self.lat_max):
            raise ValueError(f"lat_min must be < lat_max, got [{self.lat_min}, {self.lat_max}]")
        if not (self.lon_min < self.lon_max):
            raise ValueError(f"lon_min must be < lon_max, got [{self.lon_min}, {self.lon_max}]")

    def contains(self, lat: float, lon: float) -> bool:
        return self.lat_min <= lat <= self.lat_max and self.lon_min <= lon <= self.lon_max


@dataclass(frozen=True)
class GeoPoint:
    """One positioning fix: latitude/longitude in degrees, unix seconds."""

    lat: float
    lon: float
    timestamp: int = 0

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon}")


@dataclass(frozen=True)
class SectorGrid:
    """Immutable rectangular partition of a bounding box into sectors."""

    rows: int
    cols: int
    bounds: BoundingBox

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.rows}x{self.cols}")

    @property
    def n(self) -> int:
        """Number of sectors."""
        return self.rows * self.cols

    def sector_index(self, row: int, col: int) -> int:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise ValueError(f"cell ({row}, {col}) outside {self.rows}x{self.cols} grid")
        return row * self.cols + col

    def rowcol(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.n:
            raise ValueError(f"sector index {index} outside 0..{self.n - 1}")
        return index // self.cols, index % self.cols

    def sector_of(self, p: GeoPoint) -> Optional[int]:
        """Sector containing ``p``, or None for points outside the bounds.

        Row is measured from the north edge so that row 0 is the
        northernmost band; boundary points fall into the cell with the
        larger index, except on the outermost south/east edges which
        close the partition.
        """
        b = self.bounds
        if not b.contains(p.lat, p.lon):
            return None
        row = int((b.lat_max - p.lat) / (b.lat_max - b.lat_min) * self.rows)
        col = int((p.lon - b.lon_min) / (b.lon_max - b.lon_min) * self.cols)
        if row >= self.rows:
            row = self.rows - 1
        if col >= self.cols:
            col = self.cols - 1
        return row * self.cols + col

    def sector_center(self, index: int) -> GeoPoint:
        """Centroid of a sector, handy for synthesizing traces."""
        row, col = self.rowcol(index)
        b = self.bounds
        lat = b.lat_max - (row + 0.5) / self.rows * (b.lat_max - b.lat_min)
        lon = b.lon_min + (col + 0.5) / self.cols * (b.lon_max - b.lon_min)
        return GeoPoint(lat=lat, lon=lon)


def unit_grid(rows: int, cols: int) -> SectorGrid:
    """Grid over the unit square, used throughout tests and examples."""
    return SectorGrid(rows=rows, cols=cols, bounds=BoundingBox(0.0, 1.0, 0.0, 1.0))
