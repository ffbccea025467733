"""Batch augmentation pipeline: directory-scale runs, preview montages and
Monte-Carlo stats reports, all bit-reproducible.

Every image gets its own RNG stream seeded by ``derive_image_seed(master,
index)`` where ``index`` is the image's position in sorted filename
order, so results are independent of thread count and completion order.
Outputs are 8-bit PNGs quantized with round-half-up, and reports are
JSON with a CSV mirror of the per-image records; neither carries
timestamps, so identical configurations produce byte-identical trees.
"""

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image

import vorpatch
from vorpatch.augment import (
    FillMode,
    ReConfig,
    VpConfig,
    min_max_normalize,
    random_erasing,
    random_fill_patches,
    voronoi_patches,
)
from vorpatch.errors import DegenerateGeometryError, PipelineIOError
from vorpatch.geometry import compute_voronoi, sample_generators
from vorpatch.metrics import patch_size_stats, ssim, total_pixels_moved

__all__ = [
    "Method",
    "RunConfig",
    "ImageRecord",
    "RunReport",
    "derive_image_seed",
    "load_image",
    "save_png",
    "run_batch",
    "preview_montage",
    "stats_report",
]

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".webp"}

_MASK64 = (1 << 64) - 1
_DEGENERATE_RETRIES = 5


class Method(Enum):
    VP = "vp"
    VP_RANDOM = "vp-random"
    RE = "re"
    NONE = "none"


@dataclass(frozen=True)
class RunConfig:
    """Everything a batch run depends on.

    ``threads`` is an execution detail and deliberately not part of the
    report echo: runs at any parallelism produce identical bytes.
    ``vp_probability`` applies the patch transform per image with the
    given probability (1.0 = always, which also skips the Bernoulli draw
    so default runs are unaffected by the flag's existence).
    """

    method: Method
    input_dir: Path
    output_dir: Path
    report_path: Path
    seed: int = 0
    vp: VpConfig = field(default_factory=VpConfig)
    re: ReConfig = field(default_factory=ReConfig)
    resize_to: tuple[int, int] = (224, 224)
    vp_probability: float = 1.0
    overwrite: bool = False
    threads: int = 1

    def __post_init__(self):
        w, h = self.resize_to
        if w < 8 or h < 8:
            raise ValueError("resize target must be at least 8x8")
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must fit in 64 bits")
        if not 0.0 <= self.vp_probability <= 1.0:
            raise ValueError("vp_probability must be in [0, 1]")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class ImageRecord:
    """One row of the run report."""

    index: int
    filename: str
    method: str
    seed: int
    pixels_moved: int | None = None
    erased_area: int | None = None
    ssim: float | None = None
    error: str | None = None


@dataclass
class RunReport:
    """Run outcome: config echo, per-image records, and their aggregates."""

    version: str
    config: dict
    records: list[ImageRecord]
    aggregates: dict

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "config": self.config,
            "records": [vars(r) for r in self.records],
            "aggregates": self.aggregates,
        }


def derive_image_seed(master_seed: int, image_index: int) -> int:
    """Stateless per-image seed: a SplitMix64-style finalizer over
    ``master_seed XOR image_index``.

    Bit-exact definition (all arithmetic mod 2**64)::

        z = (master_seed ^ image_index) + 0x9E3779B97F4A7C15
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB
        return z ^ (z >> 31)

    The mix is a bijection of the 64-bit input, so distinct indices under
    one master seed can never collide, and the i-th image's augmentation
    is independent of processing order and thread count.
    """
    z = ((master_seed ^ image_index) + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def load_image(path: Path | str, resize_to: tuple[int, int] | None = None) -> np.ndarray:
    """Decode, optionally resize (bilinear), and min-max normalize an image.

    Returns a float64 ``(height, width, 3)`` array in [0, 1].
    """
    with Image.open(path) as img:
        img = img.convert("RGB")
        if resize_to is not None:
            img = img.resize(resize_to, Image.BILINEAR)
        raw = np.asarray(img, dtype=np.float64)
    return min_max_normalize(raw)


def save_png(path: Path | str, image: np.ndarray) -> None:
    """Write a [0, 1] float image as 8-bit PNG (round-half-up quantization)."""
    arr = np.asarray(image, dtype=np.float64)
    quantized = np.floor(arr * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(quantized, mode="RGB").save(path, format="PNG")


def _config_echo(cfg: RunConfig) -> dict:
    echo = {
        "method": cfg.method.value,
        "seed": cfg.seed,
        "resize_to": list(cfg.resize_to),
        "input_dir": str(cfg.input_dir),
        "output_dir": str(cfg.output_dir),
        "report_path": str(cfg.report_path),
    }
    if cfg.method in (Method.VP, Method.VP_RANDOM):
        echo["vp"] = {
            "generators": cfg.vp.generators,
            "patches": cfg.vp.patches,
            "smooth": cfg.vp.smooth,
            "border_width": cfg.vp.border_width,
            "blur_sigma": cfg.vp.blur_sigma,
        }
        echo["vp_probability"] = cfg.vp_probability
    if cfg.method is Method.RE:
        echo["re"] = {
            "probability": cfg.re.probability,
            "area_fraction_range": list(cfg.re.area_fraction_range),
            "aspect_range": list(cfg.re.aspect_range),
            "fill": cfg.re.fill.value,
        }
    return echo


def _augment_with_retry(tensor, vp_cfg, rng, fn):
    for _ in range(_DEGENERATE_RETRIES):
        try:
            return fn(tensor, vp_cfg, rng)
        except DegenerateGeometryError:
            continue
    raise DegenerateGeometryError(
        f"no usable bounded cell after {_DEGENERATE_RETRIES} fresh diagrams"
    )


def _as_random_fill(vp_cfg: VpConfig) -> VpConfig:
    return VpConfig(
        generators=vp_cfg.generators,
        patches=vp_cfg.patches,
        smooth=vp_cfg.smooth,
        border_width=vp_cfg.border_width,
        blur_sigma=vp_cfg.blur_sigma,
        fill_mode=FillMode.RANDOM_FILL,
    )


def _process_image(index: int, path: Path, cfg: RunConfig) -> tuple[ImageRecord, np.ndarray | None]:
    seed = derive_image_seed(cfg.seed, index)
    record = ImageRecord(index=index, filename=path.name, method=cfg.method.value, seed=seed)
    try:
        tensor = load_image(path, cfg.resize_to)
    except Exception as exc:  # decode failures: record and continue
        record.error = f"{type(exc).__name__}: {exc}"
        return record, None

    rng = np.random.default_rng(seed)
    if cfg.method in (Method.VP, Method.VP_RANDOM):
        apply_it = True
        if cfg.vp_probability < 1.0:
            apply_it = rng.random() < cfg.vp_probability
        if apply_it:
            if cfg.method is Method.VP:
                fn, vp_cfg = voronoi_patches, cfg.vp
            else:
                fn, vp_cfg = random_fill_patches, _as_random_fill(cfg.vp)
            aug, moves = _augment_with_retry(tensor, vp_cfg, rng, fn)
            record.pixels_moved = sum(m.pixels_moved for m in moves)
        else:
            aug = tensor.copy()
            record.pixels_moved = 0
    elif cfg.method is Method.RE:
        aug, erase = random_erasing(tensor, cfg.re, rng)
        record.erased_area = erase.area
    else:
        aug = tensor.copy()

    record.ssim = ssim(tensor, aug)
    return record, aug


def _aggregate(records: list[ImageRecord]) -> dict:
    ok = [r for r in records if r.error is None]
    agg: dict = {
        "images": len(records),
        "processed": len(ok),
        "failed": len(records) - len(ok),
    }
    ssims = [r.ssim for r in ok if r.ssim is not None]
    agg["mean_ssim"] = float(np.mean(ssims)) if ssims else None
    moved = [r.pixels_moved for r in ok if r.pixels_moved is not None]
    agg["mean_pixels_moved"] = float(np.mean(moved)) if moved else None
    erased = [r.erased_area for r in ok if r.erased_area is not None]
    agg["mean_erased_area"] = float(np.mean(erased)) if erased else None
    return agg


def _write_report(report: RunReport, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    csv_path = path.with_suffix(".csv")
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["index", "filename", "method", "seed", "pixels_moved", "erased_area", "ssim", "error"]
        )
        for r in report.records:
            writer.writerow(
                [r.index, r.filename, r.method, r.seed, r.pixels_moved, r.erased_area, r.ssim, r.error]
            )


def run_batch(cfg: RunConfig) -> RunReport:
    """Augment every decodable image in ``cfg.input_dir``.

    Images are discovered by extension and processed in sorted filename
    order; each is resized, normalized, augmented with its derived seed,
    written to ``cfg.output_dir`` as a PNG of the same stem, and recorded
    in the report (written to ``cfg.report_path`` plus a ``.csv`` mirror).
    Unreadable files are recorded as errors and skipped. Raises
    ``PipelineIOError`` when there is no candidate input, or when an
    output file already exists and ``overwrite`` is off.
    """
    input_dir = Path(cfg.input_dir)
    if not input_dir.is_dir():
        raise PipelineIOError(f"input directory not found: {input_dir}")
    files = sorted(p for p in input_dir.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS)
    if not files:
        raise PipelineIOError(f"no images found in {input_dir}")

    output_dir = Path(cfg.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    targets = [output_dir / (p.stem + ".png") for p in files]
    if not cfg.overwrite:
        clashes = [t for t in targets if t.exists()]
        if clashes:
            raise PipelineIOError(
                f"{len(clashes)} output file(s) already exist (first: {clashes[0]}); "
                "pass overwrite to replace them"
            )
        if Path(cfg.report_path).exists():
            raise PipelineIOError(f"report already exists: {cfg.report_path}")

    def work(item):
        index, path = item
        record, aug = _process_image(index, path, cfg)
        if aug is not None:
            save_png(targets[index], aug)
        return record

    if cfg.threads == 1:
        records = [work(item) for item in enumerate(files)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            records = list(pool.map(work, enumerate(files)))

    report = RunReport(
        version=vorpatch.__version__,
        config=_config_echo(cfg),
        records=records,
        aggregates=_aggregate(records),
    )
    _write_report(report, Path(cfg.report_path))
    return report


_EDGE_COLOR = (1.0, 0.1, 0.1)
_DOT_COLOR = (1.0, 0.9, 0.0)


def _diagram_overlay(tensor: np.ndarray, diagram) -> np.ndarray:
    """Draw cell boundaries and generator dots over a copy of the image."""
    overlay = tensor.copy()
    labels = diagram.labels
    edges = np.zeros(labels.shape, dtype=bool)
    edges[:-1, :] |= labels[:-1, :] != labels[1:, :]
    edges[:, :-1] |= labels[:, :-1] != labels[:, 1:]
    overlay[edges] = _EDGE_COLOR
    h, w = labels.shape
    for p in diagram.generators.points:
        x, y = int(p.x), int(p.y)
        overlay[max(y - 1, 0) : min(y + 2, h), max(x - 1, 0) : min(x + 2, w)] = _DOT_COLOR
    return overlay


def preview_montage(
    cfg: RunConfig, image_path: Path | str, grid: tuple[int, int], out_path: Path | str
) -> np.ndarray:
    """Compose original | diagram overlay | augmented samples into one image.

    The montage has ``rows x cols`` tiles: the original, the Voronoi
    overlay for the first augmentation's diagram, and ``rows*cols - 2``
    augmentations with distinct derived seeds (tile index k uses
    ``derive_image_seed(cfg.seed, k)``). Deterministic: identical calls
    produce identical bytes.
    """
    rows, cols = grid
    if rows < 1 or cols < 1 or rows * cols < 3:
        raise ValueError("grid must have at least 3 tiles")
    tensor = load_image(image_path, cfg.resize_to)
    h, w = tensor.shape[:2]

    overlay_rng = np.random.default_rng(derive_image_seed(cfg.seed, 2))
    gens = sample_generators(overlay_rng, cfg.vp.generators, w, h)
    diagram = compute_voronoi(gens)

    tiles = [tensor, _diagram_overlay(tensor, diagram)]
    for k in range(2, rows * cols):
        rng = np.random.default_rng(derive_image_seed(cfg.seed, k))
        if cfg.method is Method.RE:
            aug, _ = random_erasing(tensor, cfg.re, rng)
        elif cfg.method is Method.NONE:
            aug = tensor.copy()
        elif cfg.method is Method.VP_RANDOM:
            aug, _ = _augment_with_retry(tensor, _as_random_fill(cfg.vp), rng, random_fill_patches)
        else:
            aug, _ = _augment_with_retry(tensor, cfg.vp, rng, voronoi_patches)
        tiles.append(aug)

    montage = np.zeros((rows * h, cols * w, tensor.shape[2]))
    for i, tile in enumerate(tiles):
        r, c = divmod(i, cols)
        montage[r * h : (r + 1) * h, c * w : (c + 1) * w] = tile
    save_png(out_path, montage)
    return montage


def stats_report(
    generator_counts: list[int],
    patch_counts: list[int],
    trials: int,
    seed: int,
    width: int = 224,
    height: int = 224,
) -> dict:
    """Monte-Carlo patch statistics and the transported-area matrix.

    For each generator count ``n`` the per-diagram mean bounded-cell area
    is sampled ``trials`` times (stream seeded by ``derive_image_seed(seed,
    n)``, so rows are independent of list order), and the expected total
    transported area is tabulated for every patch count.
    """
    if not generator_counts or not patch_counts:
        raise ValueError("generator and patch count lists must be non-empty")
    stats = {}
    totals = {}
    for n in generator_counts:
        rng = np.random.default_rng(derive_image_seed(seed, n))
        st = patch_size_stats(n, width, height, trials, rng)
        stats[str(n)] = {
            "mean": st.mean,
            "min": st.min,
            "max": st.max,
            "std": st.std,
            "trials": st.trials,
        }
        totals[str(n)] = {str(k): total_pixels_moved(n, k, st) for k in patch_counts}
    return {
        "width": width,
        "height": height,
        "trials": trials,
        "seed": seed,
        "patch_stats": stats,
        "total_pixels_moved": totals,
    }
