"""Voronoi geometry over a pixel grid.

Conventions used throughout the toolkit:

* ``x`` runs along the width (columns), ``y`` along the height (rows);
  a point is ``(x, y)``.
* Image and mask arrays are indexed ``[y, x]`` (numpy row-major).
* For nearest-generator queries, pixel ``(i, j)`` is represented by its
  center ``(i + 0.5, j + 0.5)``, which avoids systematic corner bias.
* A pixel exactly equidistant from several generators belongs to the one
  with the lowest index, so every assignment is deterministic.
* A cell is *bounded* (usable as a patch) iff all of its Voronoi vertices
  are finite (no ray edges) and lie inside the image rectangle
  ``[0, width] x [0, height]``, i.e. the whole cell polygon fits in the
  frame. Cells with finite vertices that stick out past the frame are
  treated like unbounded ones: they never serve as patch sources or paste
  targets.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial import QhullError, Voronoi

__all__ = [
    "Point",
    "PixelMask",
    "GeneratorSet",
    "Region",
    "VoronoiDiagram",
    "sample_generators",
    "nearest_generator",
    "assign_labels",
    "compute_voronoi",
    "bounded_regions",
    "bounded_pixel_areas",
    "rasterize_region",
    "region_centroid",
    "diagram_to_svg",
]

# Rows labelled per chunk; keeps the distance block cache-resident.
_ROW_BLOCK = 32


class Point(NamedTuple):
    """A 2-D point in pixel coordinates (x right, y down)."""

    x: float
    y: float


@dataclass(frozen=True, eq=False)
class PixelMask:
    """Set membership over a ``width x height`` pixel grid.

    ``bits`` is a read-only boolean array of shape ``(height, width)``.
    """

    width: int
    height: int
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.shape != (self.height, self.width):
            raise ValueError(
                f"mask bits shape {bits.shape} does not match "
                f"(height={self.height}, width={self.width})"
            )
        if bits.flags.writeable:
            bits = bits.copy()
            bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def count(self) -> int:
        return int(self.bits.sum())

    def is_empty(self) -> bool:
        return not self.bits.any()

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Member pixels as ``(rows, cols)`` index arrays."""
        return np.nonzero(self.bits)


@dataclass(frozen=True)
class GeneratorSet:
    """At least three distinct seed points inside a pixel grid.

    Points live in the continuous rectangle ``[0, width) x [0, height)``.
    """

    points: tuple[Point, ...]
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be positive")
        n = len(self.points)
        if n < 3:
            raise ValueError("at least 3 generator points are required")
        if n > self.width * self.height:
            raise ValueError(
                f"{n} generators exceed the {self.width}x{self.height} pixel budget"
            )
        seen = set()
        for p in self.points:
            if not (math.isfinite(p.x) and math.isfinite(p.y)):
                raise ValueError("generator coordinates must be finite")
            if not (0.0 <= p.x < self.width and 0.0 <= p.y < self.height):
                raise ValueError(f"generator {p} outside [0,{self.width})x[0,{self.height})")
            key = (p.x, p.y)
            if key in seen:
                raise ValueError(f"duplicate generator point {p}")
            seen.add(key)

    @property
    def n(self) -> int:
        return len(self.points)

    def as_array(self) -> np.ndarray:
        """Generator coordinates as an ``(n, 2)`` float64 array of ``(x, y)``."""
        return np.array(self.points, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class Region:
    """One Voronoi cell: polygon structure plus its rasterized pixel set.

    ``vertices`` are ordered counter-clockwise (positive shoelace area in
    the (x, y) frame) for bounded cells; for unbounded cells they are the
    finite vertices only, in diagram order. ``centroid`` is the rounded
    arithmetic mean of the mask's pixel coordinates, or ``None`` when the
    cell contains no pixel center of the grid.
    """

    generator_index: int
    vertices: tuple[Point, ...]
    bounded: bool  # finite polygon fully inside the image frame
    mask: PixelMask
    centroid: Point | None


@dataclass(frozen=True, eq=False)
class VoronoiDiagram:
    """A full partition of the pixel grid into Voronoi cells.

    ``labels`` caches the per-pixel cell assignment (``int32``, shape
    ``(height, width)``); region masks are slices of it, so the masks are
    pairwise disjoint and cover the grid by construction.
    """

    generators: GeneratorSet
    regions: tuple[Region, ...]
    labels: np.ndarray

    @property
    def width(self) -> int:
        return self.generators.width

    @property
    def height(self) -> int:
        return self.generators.height


def sample_generators(rng: np.random.Generator, n: int, width: int, height: int) -> GeneratorSet:
    """Draw ``n`` distinct generator points uniformly over ``[0,width) x [0,height)``.

    Exact duplicates are re-drawn, so the returned set is always distinct.
    The draw is a pure function of the RNG state: the same seeded stream
    yields the same points on every run.
    """
    if n < 3:
        raise ValueError("at least 3 generator points are required")
    if width < 2 or height < 2:
        raise ValueError("grid must be at least 2x2 pixels")
    if n > width * height:
        raise ValueError(f"{n} generators exceed the {width}x{height} pixel budget")

    chosen: list[Point] = []
    seen: set[tuple[float, float]] = set()
    while len(chosen) < n:
        draws = rng.random((n - len(chosen), 2))
        for u, v in draws:
            x = float(u * width)
            y = float(v * height)
            if (x, y) in seen:
                continue
            seen.add((x, y))
            chosen.append(Point(x, y))
    return GeneratorSet(tuple(chosen), width, height)


def nearest_generator(point: Point, gens: GeneratorSet) -> int:
    """Index of the generator closest to ``point`` (ties to the lowest index)."""
    best_i = 0
    best_d2 = math.inf
    for i, (gx, gy) in enumerate(gens.points):
        dx = point.x - gx
        dy = point.y - gy
        d2 = dx * dx + dy * dy
        if d2 < best_d2:
            best_i = i
            best_d2 = d2
    return best_i


def assign_labels(gens: GeneratorSet) -> np.ndarray:
    """Nearest-generator index for every pixel center of the grid.

    Returns an ``int32`` array of shape ``(height, width)``. Distances are
    squared Euclidean from pixel centers ``(i + 0.5, j + 0.5)``; exact ties
    resolve to the lowest generator index (``argmin`` keeps the first
    minimum).
    """
    xy = gens.as_array()
    w, h = gens.width, gens.height
    cx = np.arange(w, dtype=np.float64) + 0.5
    cy = np.arange(h, dtype=np.float64) + 0.5
    dx2 = (cx[None, :] - xy[:, 0][:, None]) ** 2  # (n, W)
    dy2 = (cy[None, :] - xy[:, 1][:, None]) ** 2  # (n, H)

    labels = np.empty((h, w), dtype=np.int32)
    for y0 in range(0, h, _ROW_BLOCK):
        y1 = min(y0 + _ROW_BLOCK, h)
        block = dy2[:, y0:y1, None] + dx2[:, None, :]
        labels[y0:y1] = np.argmin(block, axis=0)
    return labels


def _ccw(vertices: np.ndarray) -> np.ndarray:
    """Order polygon vertices counter-clockwise (positive shoelace area)."""
    x = vertices[:, 0]
    y = vertices[:, 1]
    area2 = np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)
    if area2 < 0:
        return vertices[::-1]
    return vertices


def _cell_structure(gens: GeneratorSet) -> list[tuple[tuple[Point, ...], bool]]:
    """Per-cell (vertices, bounded) pairs from the planar diagram.

    A cell is bounded iff its vertex list is finite (no ray edge) and
    every vertex lies inside the ``[0, width] x [0, height]`` frame.
    Degenerate inputs (e.g. all generators collinear) produce no finite
    cell: every region is flagged unbounded with an empty vertex list.
    """
    try:
        vor = Voronoi(gens.as_array())
    except QhullError:
        return [((), False)] * gens.n

    out: list[tuple[tuple[Point, ...], bool]] = []
    for i in range(gens.n):
        raw = vor.regions[vor.point_region[i]]
        finite = [v for v in raw if v != -1]
        closed = bool(raw) and len(finite) == len(raw)
        verts = vor.vertices[finite] if finite else np.empty((0, 2))
        bounded = (
            closed
            and bool(np.all(np.isfinite(verts)))
            and bool(
                np.all(
                    (verts[:, 0] >= 0.0)
                    & (verts[:, 0] <= gens.width)
                    & (verts[:, 1] >= 0.0)
                    & (verts[:, 1] <= gens.height)
                )
            )
        )
        if bounded:
            verts = _ccw(verts)
        out.append((tuple(Point(float(x), float(y)) for x, y in verts), bounded))
    return out


def compute_voronoi(gens: GeneratorSet) -> VoronoiDiagram:
    """Build the Voronoi diagram of ``gens`` over its pixel grid.

    Each region carries its polygon vertices, boundedness flag, pixel mask
    (exactly the pixels whose nearest generator it is, ties to the lowest
    index) and mask centroid. Region masks partition the grid.
    """
    labels = assign_labels(gens)
    labels.setflags(write=False)
    structure = _cell_structure(gens)

    regions = []
    for i, (verts, bounded) in enumerate(structure):
        bits = labels == i
        mask = PixelMask(gens.width, gens.height, bits)
        centroid = region_centroid(mask) if not mask.is_empty() else None
        regions.append(Region(i, verts, bounded, mask, centroid))
    return VoronoiDiagram(gens, tuple(regions), labels)


def bounded_regions(diagram: VoronoiDiagram) -> list[int]:
    """Indices of bounded regions, ascending. May be empty (degenerate input)."""
    return [r.generator_index for r in diagram.regions if r.bounded]


def bounded_pixel_areas(gens: GeneratorSet) -> np.ndarray:
    """Pixel area (grid-clipped) of every bounded cell, in generator order.

    Lean path for Monte-Carlo statistics: skips mask and centroid
    construction.
    """
    labels = assign_labels(gens)
    counts = np.bincount(labels.ravel(), minlength=gens.n)
    structure = _cell_structure(gens)
    idx = [i for i, (_, bounded) in enumerate(structure) if bounded]
    return counts[idx].astype(np.int64)


def rasterize_region(region: Region, gens: GeneratorSet) -> PixelMask:
    """Pixel mask of a bounded region, recomputed from the generator set.

    The mask is defined by nearest-generator assignment (ties to the
    lowest index), so it always agrees with ``compute_voronoi`` masks.
    Raises ``ValueError`` for unbounded regions: those never serve as
    patches.
    """
    if not region.bounded:
        raise ValueError("unbounded region cannot be rasterized as a patch")
    labels = assign_labels(gens)
    return PixelMask(gens.width, gens.height, labels == region.generator_index)


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def region_centroid(mask: PixelMask) -> Point:
    """Arithmetic mean of the mask's pixel coordinates, rounded half-up.

    The result always lies inside the mask's bounding box. Raises
    ``ValueError`` on an empty mask.
    """
    if mask.is_empty():
        raise ValueError("empty mask has no centroid")
    ys, xs = mask.coords()
    return Point(_round_half_up(float(xs.mean())), _round_half_up(float(ys.mean())))


def diagram_to_svg(diagram: VoronoiDiagram) -> str:
    """Render the diagram as SVG: bounded cell polygons plus generator dots.

    Documentation aid only; unbounded cells are omitted (their rays have
    no finite polygon).
    """
    w, h = diagram.width, diagram.height
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" '
        f'width="{w}" height="{h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
    ]
    for region in diagram.regions:
        if not region.bounded or not region.vertices:
            continue
        pts = " ".join(f"{p.x:.3f},{p.y:.3f}" for p in region.vertices)
        parts.append(
            f'<polygon points="{pts}" fill="none" stroke="#1f77b4" stroke-width="0.8"/>'
        )
    for p in diagram.generators.points:
        parts.append(f'<circle cx="{p.x:.3f}" cy="{p.y:.3f}" r="1.5" fill="#d62728"/>')
    parts.append("</svg>")
    return "\n".join(parts)
