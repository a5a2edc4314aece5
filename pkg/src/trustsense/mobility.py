"""Stationary mobility distributions over sectors.

A mobility distribution assigns each sector the long-run probability of
finding an agent there. It can come from three places: the black-pixel
likelihood heuristic over a road-popularity raster (``lea``), empirical
frequencies of GPS fixes (``empirical_distribution``), or a plain
uniform/CSV specification. Distributions are stationary: they do not
change during a run.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, Iterable, Sequence, Union

import numpy as np

from trustsense import kernels
from trustsense.grid import GeoPoint, SectorGrid

PROB_SUM_TOL = 1e-9


class AllWhiteMapError(ValueError):
    """Raster has no black pixels, so no likelihood can be derived."""


class EmptyTraceError(ValueError):
    """No in-bounds samples to build an empirical distribution from."""


class MobilityDistribution:
    """Probability vector over the sectors of one grid.

    Immutable after construction; entries are non-negative and sum to 1
    within ``PROB_SUM_TOL``.
    """

    __slots__ = ("probs", "_cum")

    def __init__(self, probs: Union[Sequence[float], np.ndarray]):
        arr = np.asarray(probs, dtype=np.float64).copy()
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("probability vector must be one-dimensional and non-empty")
        if np.any(arr < 0):
            raise ValueError("probability vector has negative entries")
        total = float(arr.sum())
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, expected 1")
        arr.flags.writeable = False
        self.probs = arr
        cum = np.cumsum(arr)
        cum[-1] = 1.0
        cum.flags.writeable = False
        self._cum = cum

    def __len__(self) -> int:
        return int(self.probs.size)

    def __repr__(self) -> str:
        return f"MobilityDistribution(n={len(self)})"

    @classmethod
    def uniform(cls, n: int) -> "MobilityDistribution":
        if n < 1:
            raise ValueError("need at least one sector")
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def from_weights(cls, weights: Union[Sequence[float], np.ndarray]) -> "MobilityDistribution":
        """Normalize non-negative weights into a distribution."""
        arr = np.asarray(weights, dtype=np.float64)
        total = float(arr.sum())
        if total <= 0:
            raise ValueError("weights must have a positive sum")
        return cls(arr / total)


def sample_sector(dist: MobilityDistribution, rng: np.random.Generator) -> int:
    """Draw one sector index from ``dist``."""
    return int(np.searchsorted(dist._cum, rng.random(), side="right"))


def sample_sectors(dist: MobilityDistribution, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` iid sector indices from ``dist``."""
    return np.searchsorted(dist._cum, rng.random(size), side="right").astype(np.int64)


def distribution_from_sectors(sectors: Iterable[int], n: int) -> MobilityDistribution:
    """Empirical distribution of a sector-index sequence (negatives skipped)."""
    arr = np.asarray(list(sectors), dtype=np.int64)
    arr = arr[arr >= 0]
    if arr.size == 0:
        raise EmptyTraceError("no sector samples")
    counts = np.bincount(arr, minlength=n)
    return MobilityDistribution.from_weights(counts)


def empirical_distribution(points: Iterable[GeoPoint], grid: SectorGrid) -> MobilityDistribution:
    """Sector-frequency distribution of GPS fixes; out-of-bounds fixes dropped."""
    pts = list(points)
    if pts:
        lats = np.array([p.lat for p in pts])
        lons = np.array([p.lon for p in pts])
        b = grid.bounds
        sectors = kernels.sectorize_points(
            lats, lons, b.lat_min, b.lat_max, b.lon_min, b.lon_max, grid.rows, grid.cols
        )
        sectors = sectors[sectors >= 0]
    else:
        sectors = np.empty(0, dtype=np.int64)
    if sectors.size == 0:
        raise EmptyTraceError("no in-bounds trace samples")
    counts = np.bincount(sectors, minlength=grid.n)
    return MobilityDistribution.from_weights(counts)


# ---------------------------------------------------------------------------
# Raster handling (portable graymap)

@dataclass(frozen=True)
class MapRaster:
    """Grayscale image of the sensing area; intensity 0 = black."""

    width: int
    height: int
    pixels: np.ndarray  # uint8, shape (height, width)

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.shape != (self.height, self.width):
            raise ValueError(f"pixel block is {px.shape}, header says {self.height}x{self.width}")
        object.__setattr__(self, "pixels", px)


def _pgm_tokens(data: bytes):
    """Yield whitespace-separated header tokens, skipping # comments."""
    i = 0
    n = len(data)
    while i < n:
        c = data[i : i + 1]
        if c.isspace():
            i += 1
        elif c == b"#":
            while i < n and data[i : i + 1] != b"\n":
                i += 1
        else:
            j = i
            while j < n and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
                j += 1
            yield data[i:j], j
            i = j


def read_pgm(path: str) -> MapRaster:
    """Read a P2 (ASCII) or P5 (binary) portable graymap, maxval <= 255."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = _pgm_tokens(data)
    try:
        magic, _ = next(tokens)
    except StopIteration:
        raise ValueError(f"{path}: empty file") from None
    if magic not in (b"P2", b"P5"):
        raise ValueError(f"{path}: not a portable graymap (magic {magic!r})")
    try:
        width, _ = next(tokens)
        height, _ = next(tokens)
        maxval, end = next(tokens)
        width, height, maxval = int(width), int(height), int(maxval)
    except (StopIteration, ValueError):
        raise ValueError(f"{path}: malformed graymap header") from None
    if width < 1 or height < 1:
        raise ValueError(f"{path}: bad dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise ValueError(f"{path}: maxval {maxval} unsupported (need 1..255)")
    count = width * height
    if magic == b"P5":
        raw = data[end + 1 : end + 1 + count]
        if len(raw) != count:
            raise ValueError(f"{path}: truncated pixel data")
        px = np.frombuffer(raw, dtype=np.uint8)
    else:
        values = []
        for tok, _ in _pgm_tokens(data[end:]):
            values.append(int(tok))
            if len(values) == count:
                break
        if len(values) != count:
            raise ValueError(f"{path}: expected {count} pixels, found {len(values)}")
        px = np.array(values, dtype=np.uint8)
        if np.any(np.array(values) > maxval):
            raise ValueError(f"{path}: pixel value above maxval {maxval}")
    return MapRaster(width=width, height=height, pixels=px.reshape(height, width))


def write_pgm(raster: MapRaster, path: str, binary: bool = True) -> None:
    header = f"P5\n{raster.width} {raster.height}\n255\n" if binary else f"P2\n{raster.width} {raster.height}\n255\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            fh.write(raster.pixels.tobytes())
        else:
            for row in raster.pixels:
                fh.write((" ".join(str(int(v)) for v in row) + "\n").encode("ascii"))


DEFAULT_BLACK_THRESHOLD = 128


def lea(raster: MapRaster, grid: SectorGrid, black_threshold: int = DEFAULT_BLACK_THRESHOLD) -> MobilityDistribution:
    """Likelihood estimation from a road-popularity raster.

    Partitions the raster pixels into the grid's sectors, counts the
    black pixels (intensity below ``black_threshold``) per sector and
    returns the normalized counts. Black pixels mark the popular
    places, so their share of a sector approximates how likely an agent
    is to be found there.

    Raises AllWhiteMapError when the raster has no black pixels at all:
    inventing a distribution is the caller's call, not this function's.
    """
    if not 0 <= black_threshold <= 255:
        raise ValueError(f"black_threshold must be in 0..255, got {black_threshold}")
    if raster.width < grid.cols or raster.height < grid.rows:
        raise ValueError(
            f"raster {raster.width}x{raster.height} too coarse for a {grid.rows}x{grid.cols} grid"
        )
    counts = kernels.count_black_pixels(
        raster.pixels, raster.height, raster.width, grid.rows, grid.cols, black_threshold
    )
    total = int(counts.sum())
    if total == 0:
        raise AllWhiteMapError("raster has no pixels below the black threshold")
    return MobilityDistribution(counts / total)


# ---------------------------------------------------------------------------
# Distribution CSV format: single `prob` column, one row per sector.

def write_distribution_csv(dist: MobilityDistribution, fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["prob"])
    for p in dist.probs:
        writer.writerow([repr(float(p))])


def read_distribution_csv(fh: IO[str]) -> MobilityDistribution:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["prob"]:
        raise ValueError("distribution CSV must start with a 'prob' header row")
    probs = []
    for row in reader:
        if not row or not row[0].strip():
            continue
        probs.append(float(row[0]))
    return MobilityDistribution(probs)
