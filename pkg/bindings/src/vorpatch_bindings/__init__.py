"""Array-in/array-out bindings over the vorpatch core.

Four functions for training pipelines that want the augmentations and
metrics without touching toolkit types: plain ``(H, W, C)`` float arrays
in, plain arrays (or floats) out. Seeds are explicit arguments — there
is no hidden RNG state — so a caller that fixes its seeds reproduces its
augmentations exactly.

Arrays are accepted in float32 or float64; computation always runs in
float64 (the core's fixed precision) and results come back as float64,
bit-identical to the corresponding core call with the same seed.
"""

import numpy as np

import vorpatch
from vorpatch.augment import (
    EraseFill,
    FillMode,
    ReConfig,
    VpConfig,
    random_erasing,
    random_fill_patches,
    voronoi_patches,
)
from vorpatch.metrics import entropy, ssim

__version__ = vorpatch.__version__

__all__ = [
    "py_voronoi_patches",
    "py_random_erasing",
    "py_ssim",
    "py_entropy",
    "__version__",
]

_FILLS = {
    "black": EraseFill.BLACK,
    "random": EraseFill.RANDOM_UNIFORM,
    "random_uniform": EraseFill.RANDOM_UNIFORM,
}


def _check_array(array) -> np.ndarray:
    arr = np.asarray(array)
    if arr.ndim != 3:
        raise ValueError(f"expected a (H, W, C) array, got shape {arr.shape}")
    if arr.dtype not in (np.float32, np.float64):
        raise ValueError(f"expected float32 or float64 values, got {arr.dtype}")
    arr = arr.astype(np.float64, copy=False)
    if arr.size == 0:
        raise ValueError("array must be non-empty")
    if float(arr.min()) < 0.0 or float(arr.max()) > 1.0:
        raise ValueError("array values must lie in [0, 1]")
    return arr


def py_voronoi_patches(
    array,
    generators: int,
    patches: int,
    smooth: bool = False,
    border_width: int = 2,
    sigma: float = 1.0,
    seed: int = 0,
    random_fill: bool = False,
) -> np.ndarray:
    """Voronoi patch transport on a raw array; see the core for semantics.

    ``random_fill=True`` selects the noise-fill variant. Equal inputs and
    seed produce output bit-identical to the core operation.
    """
    arr = _check_array(array)
    fill = FillMode.RANDOM_FILL if random_fill else FillMode.TRANSPORT
    cfg = VpConfig(
        generators=generators,
        patches=patches,
        smooth=smooth,
        border_width=border_width,
        blur_sigma=sigma,
        fill_mode=fill,
    )
    rng = np.random.default_rng(seed)
    fn = random_fill_patches if random_fill else voronoi_patches
    aug, _ = fn(arr, cfg, rng)
    return aug


def py_random_erasing(
    array,
    probability: float = 0.5,
    area_range: tuple[float, float] = (0.02, 0.4),
    aspect_range: tuple[float, float] = (0.3, 1.0 / 0.3),
    fill: str = "black",
    seed: int = 0,
) -> np.ndarray:
    """Rectangle erasing on a raw array; ``fill`` is 'black' or 'random'."""
    arr = _check_array(array)
    if fill not in _FILLS:
        raise ValueError(f"fill must be one of {sorted(_FILLS)}, got {fill!r}")
    cfg = ReConfig(
        probability=probability,
        area_fraction_range=(float(area_range[0]), float(area_range[1])),
        aspect_range=(float(aspect_range[0]), float(aspect_range[1])),
        fill=_FILLS[fill],
    )
    rng = np.random.default_rng(seed)
    out, _ = random_erasing(arr, cfg, rng)
    return out


def py_ssim(array_a, array_b) -> float:
    """Structural similarity of two arrays; same code path as the core."""
    return ssim(_check_array(array_a), _check_array(array_b))


def py_entropy(probs) -> float:
    """Shannon entropy (bits) of one class distribution."""
    return entropy(probs)
