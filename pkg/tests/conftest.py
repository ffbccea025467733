"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately re-derive results from first principles
(per-pixel scans, naive summation, replayed move records) so they stay
independent of the library's vectorized code paths.
"""

import numpy as np
import pytest

from vorpatch.geometry import GeneratorSet


def brute_force_labels(gens: GeneratorSet) -> np.ndarray:
    """Per-pixel brute-force nearest-generator scan (ties to lowest index).

    Sequential running-minimum over the generator list; strict improvement
    only, so earlier (lower) indices win exact ties. Distances are squared
    Euclidean from pixel centers (i + 0.5, j + 0.5), computed with the
    same elementary operations as any straightforward scan.
    """
    w, h = gens.width, gens.height
    xs, ys = np.meshgrid(np.arange(w) + 0.5, np.arange(h) + 0.5)
    best = np.full((h, w), np.inf)
    labels = np.zeros((h, w), dtype=np.int32)
    for i, (gx, gy) in enumerate(gens.points):
        d2 = (xs - gx) ** 2 + (ys - gy) ** 2
        better = d2 < best
        labels[better] = i
        best[better] = d2[better]
    return labels


def brute_force_nearest(px: float, py: float, points) -> int:
    """Scalar-arithmetic nearest-point scan for spot checks."""
    best_i, best_d2 = 0, float("inf")
    for i, (gx, gy) in enumerate(points):
        d2 = (px - gx) * (px - gx) + (py - gy) * (py - gy)
        if d2 < best_d2:
            best_i, best_d2 = i, d2
    return best_i


def border_band_oracle(union_bits: np.ndarray, width: int) -> np.ndarray:
    """Per-pixel enumeration of the transition band.

    A pixel is in the band iff its Chebyshev `width`-neighborhood contains
    both a patch pixel and a non-patch position (out-of-image counts as
    non-patch).
    """
    h, w = union_bits.shape
    out = np.zeros((h, w), dtype=bool)
    for y in range(h):
        for x in range(w):
            sees_patch = sees_outside = False
            for dy in range(-width, width + 1):
                for dx in range(-width, width + 1):
                    ny, nx = y + dy, x + dx
                    if 0 <= ny < h and 0 <= nx < w:
                        if union_bits[ny, nx]:
                            sees_patch = True
                        else:
                            sees_outside = True
                    else:
                        sees_outside = True
            out[y, x] = sees_patch and sees_outside
    return out


def replay_moves(sample: np.ndarray, diagram, moves) -> np.ndarray:
    """Rebuild the sudden-mode output from the move records alone."""
    h, w = sample.shape[:2]
    expected = sample.copy()
    for move in moves:
        dx, dy = move.translation
        ys, xs = diagram.regions[move.source_region].mask.coords()
        ty, tx = ys + dy, xs + dx
        keep = (ty >= 0) & (ty < h) & (tx >= 0) & (tx < w)
        expected[ty[keep], tx[keep]] = sample[ys[keep], xs[keep]]
        assert move.pixels_moved == int(keep.sum())
    return expected


def pasted_union(diagram, moves, shape) -> np.ndarray:
    """Union of the translated-and-clipped patch masks from move records."""
    h, w = shape
    union = np.zeros((h, w), dtype=bool)
    for move in moves:
        dx, dy = move.translation
        ys, xs = diagram.regions[move.source_region].mask.coords()
        ty, tx = ys + dy, xs + dx
        keep = (ty >= 0) & (ty < h) & (tx >= 0) & (tx < w)
        union[ty[keep], tx[keep]] = True
    return union


@pytest.fixture(scope="session")
def smooth_images():
    """A small bank of low-frequency test images in [0, 1]."""
    from vorpatch._filters import gaussian_blur
    from vorpatch.augment import min_max_normalize

    rng = np.random.default_rng(20240817)
    images = []
    for _ in range(12):
        base = gaussian_blur(rng.random((96, 96, 3)), 2.5)
        images.append(min_max_normalize(base))
    return images
