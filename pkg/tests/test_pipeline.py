"""Pipeline tests: seeding, batch runs, montages, stats reports."""

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from tests.conftest import pasted_union
from vorpatch.augment import ReConfig, VpConfig, apply_patches, calc_border
from vorpatch.errors import DegenerateGeometryError, PipelineIOError
from vorpatch.geometry import PixelMask, compute_voronoi, sample_generators
from vorpatch.metrics import patch_size_stats, total_pixels_moved
from vorpatch.pipeline import (
    Method,
    RunConfig,
    derive_image_seed,
    load_image,
    preview_montage,
    run_batch,
    save_png,
    stats_report,
)

GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


def splitmix_oracle(values: np.ndarray) -> np.ndarray:
    """Vectorized re-implementation of the seed mixer for cross-checking."""
    z = values.astype(np.uint64) + np.uint64(GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def write_images(directory: Path, count=4, size=(40, 32), seed=0):
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    names = []
    for i in range(count):
        arr = (rng.random((size[1], size[0], 3)) * 255).astype(np.uint8)
        name = f"img_{i}.png"
        Image.fromarray(arr).save(directory / name)
        names.append(name)
    return names


def small_config(tmp_path, **overrides) -> RunConfig:
    defaults = dict(
        method=Method.VP,
        input_dir=tmp_path / "in",
        output_dir=tmp_path / "out",
        report_path=tmp_path / "report.json",
        seed=123,
        vp=VpConfig(generators=18, patches=3),
        resize_to=(32, 32),
    )
    defaults.update(overrides)
    return RunConfig(**defaults)


class TestDeriveImageSeed:
    def test_deterministic(self):
        assert derive_image_seed(42, 7) == derive_image_seed(42, 7)

    def test_matches_vectorized_oracle(self):
        masters = [0, 1, 42, 2**63, 2**64 - 1]
        indices = np.arange(1000, dtype=np.uint64)
        for m in masters:
            mine = np.array([derive_image_seed(m, int(i)) for i in indices], dtype=np.uint64)
            with np.errstate(over="ignore"):
                ref = splitmix_oracle(np.uint64(m) ^ indices)
            assert np.array_equal(mine, ref)

    def test_no_collisions_across_indices(self):
        indices = np.arange(1_000_000, dtype=np.uint64)
        with np.errstate(over="ignore"):
            outs = splitmix_oracle(np.uint64(931) ^ indices)
        # the mix is a bijection, so collisions are impossible; verify anyway
        assert np.unique(outs).size == outs.size
        # and the scalar implementation agrees on a sample
        for i in range(0, 1_000_000, 50_021):
            assert derive_image_seed(931, i) == int(outs[i])

    def test_low_bits_uniform_chi_square(self):
        from scipy.stats import chisquare

        indices = np.arange(1_000_000, dtype=np.uint64)
        with np.errstate(over="ignore"):
            outs = splitmix_oracle(np.uint64(7) ^ indices)
        low16 = (outs & np.uint64(0xFFFF)).astype(np.int64)
        counts = np.bincount(low16, minlength=65536)
        result = chisquare(counts)
        assert result.pvalue > 0.001


class TestRunBatch:
    def test_method_none_identity_ssim(self, tmp_path):
        write_images(tmp_path / "in")
        cfg = small_config(tmp_path, method=Method.NONE)
        report = run_batch(cfg)
        assert all(r.ssim == 1.0 for r in report.records)
        assert report.aggregates["mean_ssim"] == 1.0
        # outputs are the resized, normalized inputs
        out = load_image(tmp_path / "out" / "img_0.png", None)
        assert out.shape == (32, 32, 3)

    def test_reports_and_trees_reproducible(self, tmp_path):
        write_images(tmp_path / "in")
        cfg = small_config(tmp_path)
        run_batch(cfg)
        first = {
            p.name: p.read_bytes() for p in sorted((tmp_path / "out").iterdir())
        }
        first_report = cfg.report_path.read_bytes()
        cfg2 = small_config(tmp_path, overwrite=True, threads=3)
        run_batch(cfg2)
        second = {
            p.name: p.read_bytes() for p in sorted((tmp_path / "out").iterdir())
        }
        assert first == second
        assert first_report == cfg.report_path.read_bytes()

    def test_unreadable_file_recorded_and_skipped(self, tmp_path):
        write_images(tmp_path / "in", count=2)
        (tmp_path / "in" / "broken.png").write_bytes(b"not an image at all")
        cfg = small_config(tmp_path)
        report = run_batch(cfg)
        agg = report.aggregates
        assert agg["images"] == 3
        assert agg["processed"] == 2
        assert agg["failed"] == 1
        bad = [r for r in report.records if r.error is not None]
        assert len(bad) == 1 and bad[0].filename == "broken.png"
        assert not (tmp_path / "out" / "broken.png").exists()

    def test_empty_input_rejected(self, tmp_path):
        (tmp_path / "in").mkdir()
        with pytest.raises(PipelineIOError):
            run_batch(small_config(tmp_path))

    def test_collision_refused_without_overwrite(self, tmp_path):
        write_images(tmp_path / "in")
        run_batch(small_config(tmp_path))
        with pytest.raises(PipelineIOError):
            run_batch(small_config(tmp_path))
        run_batch(small_config(tmp_path, overwrite=True))  # no raise

    def test_aggregates_recomputable_from_records(self, tmp_path):
        write_images(tmp_path / "in", count=5)
        cfg = small_config(tmp_path)
        report = run_batch(cfg)
        records = report.records
        assert len(records) == 5
        ok = [r for r in records if r.error is None]
        assert report.aggregates["processed"] == len(ok)
        assert report.aggregates["mean_ssim"] == pytest.approx(
            np.mean([r.ssim for r in ok]), abs=1e-9
        )
        assert report.aggregates["mean_pixels_moved"] == pytest.approx(
            np.mean([r.pixels_moved for r in ok]), abs=1e-9
        )

    def test_round_trip_output_decodes_in_range(self, tmp_path):
        write_images(tmp_path / "in", count=2)
        cfg = small_config(tmp_path)
        run_batch(cfg)
        for p in (tmp_path / "out").iterdir():
            arr = np.asarray(Image.open(p), dtype=np.float64) / 255.0
            assert arr.shape == (32, 32, 3)
            assert arr.min() >= 0.0 and arr.max() <= 1.0

    def test_per_image_seeds_in_report(self, tmp_path):
        write_images(tmp_path / "in", count=3)
        cfg = small_config(tmp_path)
        report = run_batch(cfg)
        for r in report.records:
            assert r.seed == derive_image_seed(cfg.seed, r.index)

    def test_vp_probability_zero_skips_everything(self, tmp_path):
        write_images(tmp_path / "in", count=3)
        cfg = small_config(tmp_path, vp_probability=0.0)
        report = run_batch(cfg)
        assert all(r.pixels_moved == 0 for r in report.records)
        assert all(r.ssim == 1.0 for r in report.records)

    def test_degenerate_geometry_exhaustion_propagates(self, tmp_path):
        # three generators can never enclose a bounded cell, so all five
        # fresh-diagram retries fail and the run aborts
        write_images(tmp_path / "in", count=1)
        cfg = small_config(tmp_path, vp=VpConfig(generators=3, patches=1))
        with pytest.raises(DegenerateGeometryError):
            run_batch(cfg)

    def test_re_method_records_area(self, tmp_path):
        write_images(tmp_path / "in", count=6)
        cfg = small_config(tmp_path, method=Method.RE, re=ReConfig(probability=1.0))
        report = run_batch(cfg)
        areas = [r.erased_area for r in report.records]
        assert all(a is not None and a > 0 for a in areas)
        assert report.aggregates["mean_erased_area"] == pytest.approx(np.mean(areas))

    def test_csv_mirror_row_count(self, tmp_path):
        write_images(tmp_path / "in", count=4)
        cfg = small_config(tmp_path)
        run_batch(cfg)
        lines = cfg.report_path.with_suffix(".csv").read_text().strip().splitlines()
        assert len(lines) == 1 + 4  # header + one row per image


class TestPreviewMontage:
    def test_grid_1x3_composition(self, tmp_path):
        write_images(tmp_path / "in", count=1, size=(48, 48))
        cfg = small_config(tmp_path, resize_to=(48, 48))
        out = tmp_path / "montage.png"
        montage = preview_montage(cfg, tmp_path / "in" / "img_0.png", (1, 3), out)
        assert montage.shape == (48, 3 * 48, 3)
        assert out.exists()
        original = load_image(tmp_path / "in" / "img_0.png", (48, 48))
        assert np.array_equal(montage[:, :48], original)
        # overlay differs from the original exactly on edges and dots
        assert not np.array_equal(montage[:, 48:96], original)

    def test_deterministic_bytes(self, tmp_path):
        write_images(tmp_path / "in", count=1, size=(48, 48))
        cfg = small_config(tmp_path, resize_to=(48, 48))
        a = tmp_path / "a.png"
        b = tmp_path / "b.png"
        preview_montage(cfg, tmp_path / "in" / "img_0.png", (2, 2), a)
        preview_montage(cfg, tmp_path / "in" / "img_0.png", (2, 2), b)
        assert a.read_bytes() == b.read_bytes()

    def test_too_small_grid_rejected(self, tmp_path):
        write_images(tmp_path / "in", count=1)
        cfg = small_config(tmp_path)
        with pytest.raises(ValueError):
            preview_montage(cfg, tmp_path / "in" / "img_0.png", (1, 2), tmp_path / "m.png")

    def test_smooth_sudden_diff_confined_to_border_band(self, tmp_path):
        write_images(tmp_path / "in", count=1, size=(64, 64), seed=5)
        image_path = tmp_path / "in" / "img_0.png"
        vp_sudden = VpConfig(generators=20, patches=3, smooth=False)
        vp_smooth = VpConfig(generators=20, patches=3, smooth=True)
        cfg_a = small_config(tmp_path, vp=vp_sudden, resize_to=(64, 64))
        cfg_b = small_config(tmp_path, vp=vp_smooth, resize_to=(64, 64))
        ma = preview_montage(cfg_a, image_path, (1, 3), tmp_path / "a.png")
        mb = preview_montage(cfg_b, image_path, (1, 3), tmp_path / "b.png")
        # first two tiles identical
        assert np.array_equal(ma[:, :128], mb[:, :128])
        # third tile: reconstruct the move set to find the border band
        tensor = load_image(image_path, (64, 64))
        rng = np.random.default_rng(derive_image_seed(cfg_a.seed, 2))
        gens = sample_generators(rng, vp_sudden.generators, 64, 64)
        diagram = compute_voronoi(gens)
        aug, moves = apply_patches(tensor, diagram, vp_sudden, rng)
        assert np.array_equal(aug, ma[:, 128:])
        union = PixelMask(64, 64, pasted_union(diagram, moves, (64, 64)))
        band = calc_border([union], vp_smooth.border_width).bits
        diff = np.any(ma[:, 128:] != mb[:, 128:], axis=2)
        assert not np.any(diff & ~band)


class TestStatsReport:
    def test_delegates_to_metrics(self):
        report = stats_report([50], [5, 10], trials=4, seed=3, width=96, height=96)
        rng = np.random.default_rng(derive_image_seed(3, 50))
        expected = patch_size_stats(50, 96, 96, 4, rng)
        row = report["patch_stats"]["50"]
        assert row["mean"] == expected.mean
        assert row["std"] == expected.std
        totals = report["total_pixels_moved"]["50"]
        assert totals["5"] == total_pixels_moved(50, 5, expected)
        assert totals["10"] == total_pixels_moved(50, 10, expected)
        assert totals["10"] / totals["5"] == 2.0

    def test_rows_independent_of_list_order(self):
        a = stats_report([30, 40], [5], trials=3, seed=9, width=64, height=64)
        b = stats_report([40, 30], [5], trials=3, seed=9, width=64, height=64)
        assert a["patch_stats"]["30"] == b["patch_stats"]["30"]
        assert a["patch_stats"]["40"] == b["patch_stats"]["40"]

    def test_empty_lists_rejected(self):
        with pytest.raises(ValueError):
            stats_report([], [5], trials=1, seed=0)


class TestImageIO:
    def test_save_load_round_trip_quantization(self, tmp_path):
        img = np.random.default_rng(0).random((16, 16, 3))
        path = tmp_path / "x.png"
        save_png(path, img)
        arr = np.asarray(Image.open(path), dtype=np.float64)
        assert np.array_equal(arr, np.floor(img * 255.0 + 0.5))

    def test_load_resizes_and_normalizes(self, tmp_path):
        arr = (np.random.default_rng(1).random((30, 50, 3)) * 255).astype(np.uint8)
        path = tmp_path / "y.png"
        Image.fromarray(arr).save(path)
        out = load_image(path, (24, 20))
        assert out.shape == (20, 24, 3)
        assert out.min() == 0.0 and out.max() == 1.0


class TestRunConfigValidation:
    def test_tiny_resize_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            small_config(tmp_path, resize_to=(4, 224))

    def test_bad_probability_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            small_config(tmp_path, vp_probability=1.5)

    def test_bad_threads_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            small_config(tmp_path, threads=0)
