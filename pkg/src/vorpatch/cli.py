"""Command-line interface.

Subcommands: ``augment`` (directory batch), ``preview`` (montage),
``stats`` (Monte-Carlo patch statistics), ``ssim`` and ``entropy``
(metric one-shots). A JSON config file can pre-set any ``augment``
option; explicit command-line flags win over file values.

Exit codes: 0 success, 1 configuration error, 2 I/O error,
3 degenerate-geometry exhaustion.
"""

import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

import vorpatch
from vorpatch.augment import EraseFill, ReConfig, VpConfig
from vorpatch.errors import DegenerateGeometryError, PipelineIOError
from vorpatch.metrics import entropy as entropy_fn
from vorpatch.metrics import mean_entropy, ssim as ssim_fn
from vorpatch.pipeline import (
    Method,
    RunConfig,
    preview_montage,
    run_batch,
    stats_report,
)


@click.group()
@click.version_option(version=vorpatch.__version__, prog_name="vorpatch")
def cli():
    """Seeded Voronoi patch-transport augmentation toolkit."""


def _from_file_or_flag(ctx, file_cfg: dict, name: str, value, file_key: str | None = None):
    """File value unless the flag was given explicitly on the command line."""
    source = ctx.get_parameter_source(name)
    if source is not None and source.name == "COMMANDLINE":
        return value
    return file_cfg.get(file_key or name, value)


_METHODS = [m.value for m in Method]
_FILLS = {f.value: f for f in EraseFill} | {"random": EraseFill.RANDOM_UNIFORM}


def _build_run_config(ctx, config_file, **opts) -> RunConfig:
    file_cfg = {}
    if config_file:
        try:
            file_cfg = json.loads(Path(config_file).read_text())
        except OSError as exc:
            raise PipelineIOError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValueError(f"config file is not valid JSON: {exc}") from exc

    def pick(name, file_key=None):
        return _from_file_or_flag(ctx, file_cfg, name, opts[name], file_key)

    method = pick("method")
    input_dir = pick("input_dir", "input")
    output_dir = pick("output_dir", "output")
    report = pick("report")
    if input_dir is None or output_dir is None:
        raise ValueError("--in and --out are required (flag or config file)")
    if report is None:
        report = str(Path(output_dir) / "report.json")

    resize = pick("resize", "resize_to")
    probability = pick("probability")
    re_cfg = ReConfig(
        probability=0.5 if probability is None else float(probability),
        fill=_FILLS[pick("re_fill")],
    )
    vp_cfg = VpConfig(
        generators=int(pick("generators")),
        patches=int(pick("patches")),
        smooth=bool(pick("smooth")),
        border_width=int(pick("border_width")),
        blur_sigma=float(pick("sigma")),
    )
    return RunConfig(
        method=Method(method),
        input_dir=Path(input_dir),
        output_dir=Path(output_dir),
        report_path=Path(report),
        seed=int(pick("seed")),
        vp=vp_cfg,
        re=re_cfg,
        resize_to=(int(resize[0]), int(resize[1])),
        vp_probability=1.0 if probability is None else float(probability),
        overwrite=bool(pick("overwrite")),
        threads=int(pick("threads")),
    )


_SHARED_AUGMENT_OPTIONS = [
    click.option("--method", type=click.Choice(_METHODS), default="vp", show_default=True),
    click.option("--generators", type=int, default=70, show_default=True),
    click.option("--patches", type=int, default=15, show_default=True),
    click.option("--smooth", is_flag=True, default=False),
    click.option("--border-width", "border_width", type=int, default=2, show_default=True),
    click.option("--sigma", type=float, default=1.0, show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
    click.option(
        "--probability",
        type=float,
        default=None,
        help="Per-image application probability (default: 1.0 for vp modes, 0.5 for re).",
    ),
    click.option(
        "--re-fill",
        "re_fill",
        type=click.Choice(sorted(_FILLS)),
        default="black",
        show_default=True,
    ),
    click.option("--resize", nargs=2, type=int, default=(224, 224), show_default=True),
    click.option("--config", "config_file", type=click.Path(), default=None),
]


def _with_options(options):
    def wrap(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn

    return wrap


@cli.command()
@_with_options(_SHARED_AUGMENT_OPTIONS)
@click.option("--in", "input_dir", type=click.Path(), default=None)
@click.option("--out", "output_dir", type=click.Path(), default=None)
@click.option("--report", type=click.Path(), default=None)
@click.option("--overwrite", is_flag=True, default=False)
@click.option("--threads", type=int, default=1, show_default=True)
@click.pass_context
def augment(ctx, config_file, **opts):
    """Augment every image in a directory and write a run report."""
    cfg = _build_run_config(ctx, config_file, **opts)
    report = run_batch(cfg)
    agg = report.aggregates
    click.echo(
        f"processed {agg['processed']}/{agg['images']} images "
        f"(failed {agg['failed']}); report: {cfg.report_path}"
    )


@cli.command()
@_with_options(_SHARED_AUGMENT_OPTIONS)
@click.option("--image", "image_path", type=click.Path(), required=True)
@click.option("--grid", default="1x3", show_default=True, help="Tile grid, e.g. 2x3.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.pass_context
def preview(ctx, config_file, image_path, grid, out_path, **opts):
    """Write a montage: original, diagram overlay, augmented samples."""
    try:
        rows, cols = (int(v) for v in grid.lower().split("x"))
    except ValueError as exc:
        raise ValueError(f"grid must look like RxC, got {grid!r}") from exc
    opts.update(input_dir=".", output_dir=".", report=None, overwrite=True, threads=1)
    cfg = _build_run_config(ctx, config_file, **opts)
    preview_montage(cfg, image_path, (rows, cols), out_path)
    click.echo(f"montage written to {out_path}")


@cli.command()
@click.option("--generators", default="50,70,90", show_default=True)
@click.option("--patches", default="5,10,15", show_default=True)
@click.option("--trials", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--width", type=int, default=224, show_default=True)
@click.option("--height", type=int, default=224, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def stats(generators, patches, trials, seed, width, height, out_path):
    """Monte-Carlo patch statistics over a generator/patch grid."""
    gen_list = [int(v) for v in generators.split(",") if v]
    patch_list = [int(v) for v in patches.split(",") if v]
    report = stats_report(gen_list, patch_list, trials, seed, width, height)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    Path(out_path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    for n, st in report["patch_stats"].items():
        click.echo(f"generators={n}: mean area {st['mean']:.1f} px^2 (std {st['std']:.1f})")
    click.echo(f"stats written to {out_path}")


@cli.command(name="ssim")
@click.option("--a", "path_a", type=click.Path(), required=True)
@click.option("--b", "path_b", type=click.Path(), required=True)
def ssim_cmd(path_a, path_b):
    """Structural similarity of two same-sized images (loaded as-is, /255)."""
    from PIL import Image

    def load_raw(path):
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0

    value = ssim_fn(load_raw(path_a), load_raw(path_b))
    click.echo(f"{value:.6f}")


@cli.command(name="entropy")
@click.option("--probs", "probs_path", type=click.Path(), required=True)
def entropy_cmd(probs_path):
    """Entropy (bits) of the class distributions in a CSV, one per row."""
    try:
        with open(probs_path, newline="") as fh:
            rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    except OSError as exc:
        raise PipelineIOError(f"cannot read {probs_path}: {exc}") from exc
    if not rows:
        raise ValueError(f"no distributions found in {probs_path}")
    values = [entropy_fn(row) for row in rows]
    for v in values:
        click.echo(f"{v:.6f}")
    click.echo(f"mean {mean_entropy(rows):.6f}")


def main(argv=None) -> int:
    """Console entry point mapping failures to documented exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.UsageError as exc:
        exc.show()
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except DegenerateGeometryError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)
    except PipelineIOError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    return 0


if __name__ == "__main__":
    main()
