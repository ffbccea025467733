"""Analysis instruments: Shannon entropy of class distributions, SSIM
between original and augmented images, and Monte-Carlo patch statistics.

Everything here is a pure function; Monte-Carlo loops consume an explicit
seeded generator, so results are reproducible and schedule-independent.
"""

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from vorpatch._filters import correlate_axis, gaussian_kernel
from vorpatch.augment import FillMode, VpConfig, random_fill_patches, voronoi_patches
from vorpatch.geometry import bounded_pixel_areas, sample_generators

__all__ = [
    "SsimParams",
    "PatchStats",
    "entropy",
    "mean_entropy",
    "ssim",
    "mean_ssim_for_config",
    "patch_size_stats",
    "total_pixels_moved",
]

_PROB_SUM_TOL = 1e-6


@dataclass(frozen=True)
class SsimParams:
    """Gaussian-window SSIM parameters (canonical defaults, unit range)."""

    window_size: int = 11
    window_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    def __post_init__(self):
        if self.window_size < 3 or self.window_size % 2 == 0:
            raise ValueError("window_size must be odd and >= 3")
        if self.window_sigma <= 0 or self.dynamic_range <= 0:
            raise ValueError("window_sigma and dynamic_range must be positive")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be positive")


@dataclass(frozen=True)
class PatchStats:
    """Distribution of the per-diagram mean bounded-cell pixel area."""

    mean: float
    min: float
    max: float
    std: float
    trials: int


def _check_probs(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probability distribution must be a non-empty 1-D sequence")
    if float(p.min()) < 0.0 or float(p.max()) > 1.0:
        raise ValueError("probabilities must lie in [0, 1]")
    if abs(float(p.sum()) - 1.0) > _PROB_SUM_TOL:
        raise ValueError(f"probabilities must sum to 1 (got {float(p.sum()):.9f})")
    return p


def entropy(probs) -> float:
    """Shannon entropy in bits: ``-sum(p * log2(p))`` with ``0*log2(0) = 0``.

    Zero for a one-hot distribution, ``log2(K)`` for the uniform one over
    K classes (3.32 bits at K=10).
    """
    p = _check_probs(probs)
    nz = p[p > 0.0]
    return float(-(nz * np.log2(nz)).sum()) + 0.0


def mean_entropy(dists: Sequence) -> float:
    """Arithmetic mean of ``entropy`` over a non-empty list of distributions."""
    if len(dists) == 0:
        raise ValueError("mean_entropy needs at least one distribution")
    return float(np.mean([entropy(d) for d in dists]))


def _ssim_single(a: np.ndarray, b: np.ndarray, params: SsimParams) -> float:
    """Mean local SSIM of two 2-D planes over valid Gaussian windows."""
    kernel = gaussian_kernel(params.window_sigma, radius=params.window_size // 2)

    def filt(img):
        out = correlate_axis(img, kernel, axis=0, mode="valid")
        return correlate_axis(out, kernel, axis=1, mode="valid")

    c1 = (params.k1 * params.dynamic_range) ** 2
    c2 = (params.k2 * params.dynamic_range) ** 2

    mu_a = filt(a)
    mu_b = filt(b)
    var_a = filt(a * a) - mu_a * mu_a
    var_b = filt(b * b) - mu_b * mu_b
    cov = filt(a * b) - mu_a * mu_b

    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(a: np.ndarray, b: np.ndarray, params: SsimParams = SsimParams()) -> float:
    """Structural similarity of two images with values in [0, 1].

    Mean local SSIM over a Gaussian window ('valid' positions only);
    multi-channel images average the per-channel score. Identical inputs
    score exactly 1.0; the score is symmetric in its arguments.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a = a[..., None]
        b = b[..., None]
    if a.ndim != 3:
        raise ValueError(f"images must be 2-D or 3-D, got shape {a.shape}")
    if min(a.shape[0], a.shape[1]) < params.window_size:
        raise ValueError("image smaller than the SSIM window")
    scores = [_ssim_single(a[..., c], b[..., c], params) for c in range(a.shape[2])]
    return float(np.mean(scores))


def mean_ssim_for_config(
    images: Sequence[np.ndarray],
    cfg: VpConfig,
    trials: int,
    rng: np.random.Generator,
    augment_fn: Callable | None = None,
    ssim_params: SsimParams = SsimParams(),
) -> float:
    """Mean SSIM(original, augmented) over ``trials`` augmentations.

    Images are consumed cyclically. ``augment_fn(image, cfg, rng) ->
    (augmented, moves)`` defaults to the transport or random-fill patch
    operation according to ``cfg.fill_mode``.
    """
    if len(images) == 0:
        raise ValueError("at least one image is required")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if augment_fn is None:
        augment_fn = (
            random_fill_patches if cfg.fill_mode is FillMode.RANDOM_FILL else voronoi_patches
        )
    total = 0.0
    for t in range(trials):
        img = images[t % len(images)]
        aug, _ = augment_fn(img, cfg, rng)
        total += ssim(img, aug, ssim_params)
    return total / trials


def patch_size_stats(
    n_generators: int, width: int, height: int, trials: int, rng: np.random.Generator
) -> PatchStats:
    """Monte-Carlo distribution of the per-diagram mean bounded-cell area.

    Each trial draws a fresh diagram and records the mean pixel area of
    its bounded cells; the report aggregates that per-diagram statistic.
    Diagrams without any bounded cell (vanishingly rare at the reference
    scales) are skipped and do not count toward ``trials``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    means = []
    for _ in range(trials):
        gens = sample_generators(rng, n_generators, width, height)
        areas = bounded_pixel_areas(gens)
        if areas.size:
            means.append(float(areas.mean()))
    arr = np.array(means)
    if arr.size == 0:
        raise ValueError("no trial produced a bounded cell")
    return PatchStats(
        mean=float(arr.mean()),
        min=float(arr.min()),
        max=float(arr.max()),
        std=float(arr.std()),
        trials=int(arr.size),
    )


def total_pixels_moved(n_generators: int, patches: int, stats: PatchStats) -> float:
    """Expected total pixel area transported per augmented image.

    Linear in the patch count: ``stats.mean * patches``, where ``stats``
    was measured for ``n_generators`` at the target resolution.
    """
    if patches < 1:
        raise ValueError("patches must be >= 1")
    if n_generators < 3:
        raise ValueError("n_generators must be >= 3")
    return stats.mean * patches
