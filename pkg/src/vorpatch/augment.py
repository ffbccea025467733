"""Image augmentations: Voronoi patch transport, its random-fill variant,
rectangle erasing, and channel-wise min-max normalization.

Images are numpy float64 arrays of shape ``(height, width, channels)``
with every value in ``[0, 1]``. All operations are pure functions of
``(image, config, RNG state)``: the same seeded generator reproduces the
same output bit for bit, and nothing outside the documented pixels is
ever touched.

RNG draw order is part of the contract (it pins cross-run determinism):

* patch transport: generator points first, then per patch one source
  index followed by one target index (plus the fill values, in
  random-fill mode);
* rectangle erasing: one application draw, then per attempt the area
  fraction and aspect ratio, then the two corner coordinates, then the
  fill values if any.
"""

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from vorpatch._filters import gaussian_blur
from vorpatch.errors import DegenerateGeometryError
from vorpatch.geometry import (
    PixelMask,
    Point,
    VoronoiDiagram,
    bounded_regions,
    compute_voronoi,
    sample_generators,
)

__all__ = [
    "FillMode",
    "EraseFill",
    "VpConfig",
    "ReConfig",
    "PatchMove",
    "EraseRecord",
    "voronoi_patches",
    "random_fill_patches",
    "apply_patches",
    "calc_border",
    "smooth_borders",
    "random_erasing",
    "min_max_normalize",
]


class FillMode(enum.Enum):
    """What lands at the paste location: transported image content or noise."""

    TRANSPORT = "transport"
    RANDOM_FILL = "random_fill"


class EraseFill(enum.Enum):
    BLACK = "black"
    RANDOM_UNIFORM = "random_uniform"


@dataclass(frozen=True)
class VpConfig:
    """Patch-transport hyperparameters.

    The reference grid is generators in {50, 70, 90} and patches in
    {5, 10, 15}, with and without smoothing; other values are accepted.
    ``border_width`` and ``blur_sigma`` only matter when ``smooth`` is on.
    """

    generators: int = 70
    patches: int = 15
    smooth: bool = False
    border_width: int = 2
    blur_sigma: float = 1.0
    fill_mode: FillMode = FillMode.TRANSPORT

    def __post_init__(self):
        if self.generators < 3:
            raise ValueError("generators must be >= 3")
        if self.patches < 1:
            raise ValueError("patches must be >= 1")
        if self.border_width < 1:
            raise ValueError("border_width must be >= 1")
        if not self.blur_sigma > 0:
            raise ValueError("blur_sigma must be positive")
        if not isinstance(self.fill_mode, FillMode):
            raise ValueError(f"fill_mode must be a FillMode, got {self.fill_mode!r}")


@dataclass(frozen=True)
class ReConfig:
    """Rectangle-erasing hyperparameters (standard defaults)."""

    probability: float = 0.5
    area_fraction_range: tuple[float, float] = (0.02, 0.4)
    aspect_range: tuple[float, float] = (0.3, 1.0 / 0.3)
    fill: EraseFill = EraseFill.BLACK

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("probability must be in [0, 1]")
        lo, hi = self.area_fraction_range
        if not (0.0 < lo <= hi < 1.0):
            raise ValueError("area_fraction_range must satisfy 0 < low <= high < 1")
        alo, ahi = self.aspect_range
        if not (0.0 < alo <= ahi):
            raise ValueError("aspect_range must satisfy 0 < low <= high")
        if not isinstance(self.fill, EraseFill):
            raise ValueError(f"fill must be an EraseFill, got {self.fill!r}")


class PatchMove(NamedTuple):
    """Audit record of one transported patch.

    ``translation`` is ``(dx, dy) = target centroid - source centroid``
    (integer pixels); ``pixels_moved`` counts source pixels whose
    translated position stayed inside the image.
    """

    source_region: int
    translation: tuple[int, int]
    target_centroid: Point
    pixels_moved: int


@dataclass(frozen=True)
class EraseRecord:
    """Outcome of one erase call.

    ``rect`` is ``(x, y, w, h)`` when a rectangle was erased, else None.
    ``exhausted`` flags the rare case where no sampled rectangle fit
    within the retry budget and the image was returned unchanged.
    """

    applied: bool
    rect: tuple[int, int, int, int] | None
    area: int
    exhausted: bool = False


_ERASE_RETRIES = 100


def _check_image(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.ndim != 3:
        raise ValueError(f"image must be (height, width, channels), got shape {image.shape}")
    if image.size == 0:
        raise ValueError("image must be non-empty")
    if not np.issubdtype(image.dtype, np.floating):
        raise ValueError(f"image must be a float array, got dtype {image.dtype}")
    if float(image.min()) < 0.0 or float(image.max()) > 1.0:
        raise ValueError("image values must lie in [0, 1]; normalize first")
    return image.astype(np.float64, copy=False)


def voronoi_patches(
    sample: np.ndarray, cfg: VpConfig, rng: np.random.Generator
) -> tuple[np.ndarray, list[PatchMove]]:
    """Transport randomly chosen bounded Voronoi cells within the image.

    A fresh diagram with ``cfg.generators`` points is built per call. For
    each of ``cfg.patches`` rounds, a source cell and a target centroid
    are drawn independently (with replacement) from the bounded cells;
    the source pixel set is translated so its mean lands on the target
    centroid and the original image's pixels are copied to the translated
    positions (later patches overwrite earlier ones; pixels translated
    out of the image are dropped). With ``cfg.smooth``, the union border
    band of all pasted patches is replaced by Gaussian-blurred values.

    Returns the augmented image and one ``PatchMove`` per round. Raises
    ``DegenerateGeometryError`` when the diagram has no usable bounded
    cell (the caller may retry with a fresh draw).
    """
    if cfg.fill_mode is not FillMode.TRANSPORT:
        raise ValueError("voronoi_patches requires fill_mode=TRANSPORT")
    sample = _check_image(sample)
    h, w = sample.shape[:2]
    gens = sample_generators(rng, cfg.generators, w, h)
    diagram = compute_voronoi(gens)
    return apply_patches(sample, diagram, cfg, rng)


def random_fill_patches(
    sample: np.ndarray, cfg: VpConfig, rng: np.random.Generator
) -> tuple[np.ndarray, list[PatchMove]]:
    """Patch transport's ablation: identical cell/target selection, but the
    pasted pixels are i.i.d. uniform [0, 1) noise per channel instead of
    image content. Smoothing applies the same way.
    """
    if cfg.fill_mode is not FillMode.RANDOM_FILL:
        raise ValueError("random_fill_patches requires fill_mode=RANDOM_FILL")
    sample = _check_image(sample)
    h, w = sample.shape[:2]
    gens = sample_generators(rng, cfg.generators, w, h)
    diagram = compute_voronoi(gens)
    return apply_patches(sample, diagram, cfg, rng)


def apply_patches(
    sample: np.ndarray,
    diagram: VoronoiDiagram,
    cfg: VpConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, list[PatchMove]]:
    """Run the patch loop against a pre-built diagram.

    Lower-level entry point for callers that need the diagram afterwards
    (replay verification, previews). ``voronoi_patches`` and
    ``random_fill_patches`` are this plus a fresh diagram.
    """
    sample = _check_image(sample)
    h, w, channels = sample.shape
    if (diagram.width, diagram.height) != (w, h):
        raise ValueError(
            f"diagram grid {diagram.width}x{diagram.height} does not match image {w}x{h}"
        )

    eligible = [i for i in bounded_regions(diagram) if diagram.regions[i].centroid is not None]
    if not eligible:
        raise DegenerateGeometryError(
            f"diagram with {diagram.generators.n} generators has no usable bounded cell"
        )

    aug = sample.copy()
    moves: list[PatchMove] = []
    pasted: list[PixelMask] = []
    for _ in range(cfg.patches):
        src = eligible[int(rng.integers(len(eligible)))]
        tgt = eligible[int(rng.integers(len(eligible)))]
        src_region = diagram.regions[src]
        src_c = src_region.centroid
        tgt_c = diagram.regions[tgt].centroid
        dx = int(tgt_c.x) - int(src_c.x)
        dy = int(tgt_c.y) - int(src_c.y)

        ys, xs = src_region.mask.coords()
        ty = ys + dy
        tx = xs + dx
        keep = (ty >= 0) & (ty < h) & (tx >= 0) & (tx < w)
        ty, tx = ty[keep], tx[keep]
        if cfg.fill_mode is FillMode.TRANSPORT:
            aug[ty, tx] = sample[ys[keep], xs[keep]]
        else:
            aug[ty, tx] = rng.random((ty.shape[0], channels))

        bits = np.zeros((h, w), dtype=bool)
        bits[ty, tx] = True
        pasted.append(PixelMask(w, h, bits))
        moves.append(PatchMove(src, (dx, dy), tgt_c, int(ty.shape[0])))

    if cfg.smooth:
        border = calc_border(pasted, cfg.border_width)
        aug = smooth_borders(aug, border, cfg.blur_sigma)
    return aug, moves


def calc_border(patch_masks: list[PixelMask], width: int) -> PixelMask:
    """Transition band around the patch boundaries.

    A pixel belongs to the band iff its Chebyshev ``width``-neighborhood
    (clipped to the image) contains both a patch pixel and a non-patch
    pixel — i.e. it lies within ``width`` of the union mask's boundary,
    on either side of it. Out-of-image positions count as non-patch, so
    a mask touching the frame has a band along the frame's interior.

    An empty mask list yields an empty zero-size mask.
    """
    if width < 1:
        raise ValueError("border width must be >= 1")
    if not patch_masks:
        return PixelMask(0, 0, np.zeros((0, 0), dtype=bool))
    w, h = patch_masks[0].width, patch_masks[0].height
    union = np.zeros((h, w), dtype=bool)
    for m in patch_masks:
        if (m.width, m.height) != (w, h):
            raise ValueError("patch masks must share dimensions")
        union |= m.bits

    padded = np.pad(union, width, constant_values=False)
    windows = sliding_window_view(padded, (2 * width + 1, 2 * width + 1))
    near_patch = windows.any(axis=(2, 3))
    inside_only = windows.all(axis=(2, 3))
    return PixelMask(w, h, near_patch & ~inside_only)


def smooth_borders(aug: np.ndarray, border: PixelMask, sigma: float) -> np.ndarray:
    """Replace the border-band pixels of ``aug`` with Gaussian-blurred values.

    The blur runs over the whole image (per channel, kernel truncated at
    radius ceil(3*sigma), edge-replicate padding) but only pixels inside
    ``border`` take the blurred value; every other pixel is bit-identical
    to the input.
    """
    aug = _check_image(aug)
    h, w = aug.shape[:2]
    if (border.width, border.height) != (w, h):
        raise ValueError(
            f"border mask {border.width}x{border.height} does not match image {w}x{h}"
        )
    out = aug.copy()
    if border.is_empty():
        return out
    blurred = gaussian_blur(aug, sigma)
    out[border.bits] = blurred[border.bits]
    return out


def random_erasing(
    sample: np.ndarray, cfg: ReConfig, rng: np.random.Generator
) -> tuple[np.ndarray, EraseRecord]:
    """Occlude one random axis-aligned rectangle with probability
    ``cfg.probability``.

    The rectangle's area fraction and aspect ratio are drawn uniformly
    from the configured ranges and re-sampled until the rectangle fits
    strictly inside the image (up to 100 attempts, then the image is
    returned unchanged with ``exhausted`` set). Fill is black (0.0) or
    per-channel uniform [0, 1) noise.
    """
    sample = _check_image(sample)
    h, w, channels = sample.shape

    if rng.random() >= cfg.probability:
        return sample.copy(), EraseRecord(applied=False, rect=None, area=0)

    lo, hi = cfg.area_fraction_range
    alo, ahi = cfg.aspect_range
    for _ in range(_ERASE_RETRIES):
        target_area = rng.uniform(lo, hi) * h * w
        aspect = rng.uniform(alo, ahi)
        eh = int(round(np.sqrt(target_area * aspect)))
        ew = int(round(np.sqrt(target_area / aspect)))
        if 0 < eh < h and 0 < ew < w:
            y0 = int(rng.integers(0, h - eh + 1))
            x0 = int(rng.integers(0, w - ew + 1))
            out = sample.copy()
            if cfg.fill is EraseFill.BLACK:
                out[y0 : y0 + eh, x0 : x0 + ew] = 0.0
            else:
                out[y0 : y0 + eh, x0 : x0 + ew] = rng.random((eh, ew, channels))
            return out, EraseRecord(applied=True, rect=(x0, y0, ew, eh), area=eh * ew)

    return sample.copy(), EraseRecord(applied=False, rect=None, area=0, exhausted=True)


def min_max_normalize(raw: np.ndarray) -> np.ndarray:
    """Scale each channel to [0, 1] by its own min and max.

    A constant channel maps to all zeros (its span is undefined, and zero
    keeps the output in range). Non-constant channels map their minimum
    to exactly 0.0 and maximum to exactly 1.0.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 3:
        raise ValueError(f"image must be (height, width, channels), got shape {raw.shape}")
    if raw.size == 0:
        raise ValueError("image must be non-empty")
    flat = raw.reshape(-1, raw.shape[2])
    mn = flat.min(axis=0)
    mx = flat.max(axis=0)
    span = mx - mn
    constant = span == 0
    safe_span = np.where(constant, 1.0, span)
    out = (raw - mn) / safe_span
    out[..., constant] = 0.0
    return out
