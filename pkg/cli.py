"""Batch driver: demodulate, train, detect and benchmark from the command line."""
import os
import sys
import json
import logging

import click

from models.baseModel import AttentionError, ModelFileError, PnmError
from models.configModel import CLASSIFIERS, CLASSIFIER_ALIASES, load_config
from models.detectionModel import Direction
from models.imageModel import GrayImage
from services import amfm, attention, bench, detect, gaborbank, imgcore
from utils import configure_logging, ordered_map, worker_count

logger = logging.getLogger(__name__)

FRAME_EXTENSIONS = {".pgm", ".ppm", ".pnm", ".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}


def _frames(path):
    if os.path.isdir(path):
        names = sorted(n for n in os.listdir(path) if os.path.splitext(n)[1].lower() in FRAME_EXTENSIONS)
        return [os.path.join(path, n) for n in names]
    return [path]


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="key=value file; flags override its values")
@click.option("--block-size", type=int, help="Face block side (60)")
@click.option("--stride", type=int, help="Face block stride (30)")
@click.option("--knn-k", type=int, help="Neighbours per KNN vote (3)")
@click.option("--head-window", type=int, help="Back-of-head density window (200)")
@click.option("--top-columns", type=int, help="Columns kept before the density scan (60)")
@click.option("--top-rows", type=int, help="Rows kept when counting face patches (7)")
@click.option("--canny-sigma", type=float, help="Canny smoothing (1.0)")
@click.option("--canny-lo", type=float, help="Canny low threshold, fraction of max gradient (0.1)")
@click.option("--canny-hi", type=float, help="Canny high threshold, fraction of max gradient (0.3)")
@click.option("--skin-frac", type=float, help="Skin share a face block needs (0.25)")
@click.option("--min-skin-area", type=int, help="Smallest skin region kept, pixels (100)")
@click.option("--classifier", type=click.Choice(CLASSIFIERS + tuple(CLASSIFIER_ALIASES)), help="Face-direction classifier")
@click.option("--threads", type=int, help="Worker threads, 0 = one per CPU")
@click.option("--filter-params", type=click.Path(exists=True, dir_okay=False), help="Filterbank override file")
@click.option("--log-level", default="WARNING", show_default=True)
@click.pass_context
def cli(ctx, config_path, log_level, **overrides):
    """Left/right attention detection from AM-FM image components."""
    configure_logging(log_level)
    try:
        ctx.obj = load_config(config_path, overrides)
    except ValueError as e:
        raise click.UsageError(str(e)) from None


@cli.command()
@click.argument("image", type=click.Path())
@click.option("--out-am", type=click.Path(dir_okay=False), help="AM image PGM")
@click.option("--out-fm", type=click.Path(dir_okay=False), help="FM image PGM")
@click.option("--scale", help="Scale group number or 'all'")
@click.option("--dump-channels", type=click.Path(file_okay=False), help="Directory for per-channel IA/IP PGMs")
@click.pass_obj
def demod(cfg, image, out_am, out_fm, scale, dump_channels):
    """Write the AM and FM images of one frame."""
    if not (out_am or out_fm or dump_channels):
        raise click.UsageError("nothing to write: give --out-am, --out-fm or --dump-channels")
    if scale is not None:
        cfg = _with(cfg, scale=scale)
    img = imgcore.load_image(image)
    bank = _bank(cfg)
    am, fm, _, channels = amfm.amfm_images(img, bank, cfg.selection, cfg.threads, keep_channels=bool(dump_channels))
    if out_am:
        imgcore.save_pnm(am, out_am)
    if out_fm:
        imgcore.save_pnm(fm, out_fm)
    if dump_channels:
        amfm.dump_channels(channels, dump_channels)
    return 0


@cli.command("train-knn")
@click.argument("manifest", type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False), help="Model file to write")
@click.pass_obj
def train_knn(cfg, manifest, out_path):
    """Store the labeled FM blocks of a manifest as a KNN model."""
    model = detect.train_knn(manifest, cfg.knn_k)
    if model.block_shape != (cfg.block_size, cfg.block_size):
        logger.warning(f"Model blocks are {model.block_shape}, pipeline block size is {cfg.block_size}")
    detect.save_knn(model, out_path)
    click.echo(f"{model.n_samples} samples written to {out_path}")
    return 0


@cli.command("detect")
@click.argument("source", type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path(dir_okay=False))
@click.option("--json", "json_path", type=click.Path(dir_okay=False), help="JSON Lines report (default stdout)")
@click.option("--overlay-dir", type=click.Path(file_okay=False), help="Directory for annotated PPMs")
@click.pass_obj
def detect_cmd(cfg, source, model_path, json_path, overlay_dir):
    """Detect faces and backs of heads and classify where they look."""
    model = detect.load_knn(model_path)
    if model.block_shape != (cfg.block_size, cfg.block_size):
        raise ModelFileError(f"model blocks are {model.block_shape[0]}x{model.block_shape[1]}, "
                             f"pipeline block size is {cfg.block_size}")
    bank = _bank(cfg)
    frames = _frames(source)
    if overlay_dir:
        _makedirs(overlay_dir)
    frame_workers = min(worker_count(cfg.threads), max(len(frames), 1))
    channel_threads = 1 if frame_workers > 1 else cfg.threads

    def process(path):
        img = imgcore.load_image(path)
        name = os.path.basename(path)
        report = attention.analyze_frame(img, model, cfg, bank, frame_id=name, threads=channel_threads)
        if overlay_dir:
            base = os.path.splitext(name)[0]
            imgcore.save_overlay(attention.as_rgb(img), report.detections, os.path.join(overlay_dir, base + ".ppm"))
        return report

    reports = list(ordered_map(process, frames, frame_workers))
    lines = "".join(json.dumps(r.to_dict()) + "\n" for r in reports)
    if json_path:
        try:
            with open(json_path, "w") as fh:
                fh.write(lines)
        except OSError as e:
            raise PnmError(f"cannot write report {json_path}: {e}") from None
    else:
        click.echo(lines, nl=False)
    if reports and all(r.abstained for r in reports):
        logger.error("Every frame was rejected")
        return 4
    return 0


@cli.command("bench")
@click.pass_obj
def bench_cmd(cfg):
    """Run the phantom acceptance checks."""
    results = bench.run_all(cfg)
    for r in results:
        status = "PASS" if r["passed"] else "FAIL"
        click.echo(f"{status} {r['name']}: {r['measured']} (tolerance {r['tolerance']}) [{r['seconds']:.3f}s]")
    return 0 if all(r["passed"] for r in results) else 1


@cli.command("filterbank")
@click.option("--out-response", type=click.Path(dir_okay=False), help="PGM of the bank's frequency tiling")
@click.option("--size", default=256, show_default=True, help="Response grid side")
@click.pass_obj
def filterbank_cmd(cfg, out_response, size):
    """List the filters and their crossing levels."""
    bank = gaborbank.build_filterbank(cfg.filter_params)
    click.echo("index group L/pi     ang     sigma  u        v")
    for i, f in enumerate(bank):
        d = f.to_dict()
        click.echo(f"{i:5d} {f.scale_group:5d} {d['L_over_pi']:.3f}  {f.ang:7.2f} {f.sigma:6.1f} {d['u']:+.4f} {d['v']:+.4f}")
    for r in gaborbank.overlap_levels(bank):
        flag = "  FLAGGED" if r["flagged"] else ""
        click.echo(f"group {r['group']} ang {r['ang']:7.2f}: L {r['L_inner']:.3f}->{r['L_outer']:.3f} "
                   f"cross at {r['radius']:.3f} level {r['level']:.3f}{flag}")
    if out_response:
        imgcore.save_pnm(GrayImage(gaborbank.bank_response(bank, size) * 255.0), out_response)
    return 0


def _direction_manifest(manifest):
    """(path, Direction) rows of a 'path,left|right' manifest; paths resolve against the manifest."""
    base = os.path.dirname(os.path.abspath(manifest))
    try:
        with open(manifest) as fh:
            lines = fh.readlines()
    except OSError as e:
        raise click.UsageError(f"cannot read manifest {manifest}: {e}") from None
    rows = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        path, _, label = line.rpartition(",")
        label = label.strip().lower()
        if not path or label not in {d.value for d in Direction}:
            raise click.UsageError(f"{manifest}:{lineno}: expected 'path,left|right'")
        rows.append((os.path.join(base, path.strip()), Direction(label)))
    return rows


def _echo_accuracy(result):
    for name, entry in result["classes"].items():
        accuracy = "n/a" if entry["accuracy"] is None else f"{100 * entry['accuracy']:.1f}%"
        click.echo(f"{name}: {entry['correct']}/{entry['total']} ({accuracy})")
    click.echo(f"abstained: {result['abstained']}")


@cli.command("evaluate")
@click.argument("manifest", type=click.Path())
@click.pass_obj
def evaluate_cmd(cfg, manifest):
    """Per-class accuracy over FM face blocks listed as 'path,left|right'."""
    samples = [
        (imgcore.to_gray(imgcore.load_image(path)), truth) for path, truth in _direction_manifest(manifest)
    ]
    _echo_accuracy(attention.evaluate_directions(samples, cfg))
    return 0


@cli.command("evaluate-heads")
@click.argument("manifest", type=click.Path())
@click.pass_obj
def evaluate_heads_cmd(cfg, manifest):
    """Away-direction accuracy over back-of-head frames listed as 'path,left|right'."""
    rows = _direction_manifest(manifest)
    bank = _bank(cfg)
    samples = ((os.path.basename(path), imgcore.load_image(path), truth) for path, truth in rows)
    result = attention.evaluate_away_directions(samples, cfg, bank, cfg.threads)
    for frame in result["frames"]:
        predicted = frame["predicted"] or f"none ({frame['reason']})"
        click.echo(f"{frame['frame']}: {frame['truth']} -> {predicted}")
    _echo_accuracy(result)
    return 0


@cli.command("serve")
@click.option("--port", type=int, default=lambda: int(os.environ.get("PORT", 5555)))
def serve(port):
    """Run the REST surface."""
    from app import app
    app.run(host="0.0.0.0", port=port)
    return 0


def _bank(cfg):
    """Filterbank of the configuration; the selected scale group must hold filters."""
    bank = gaborbank.build_filterbank(cfg.filter_params)
    if not bank.indices(cfg.selection):
        raise click.UsageError(f"no filters in scale group {cfg.scale}, the bank has {sorted(bank.group_sizes())}")
    return bank


def _makedirs(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise PnmError(f"cannot create {path}: {e}") from None


def _with(cfg, **changes):
    values = cfg.model_dump()
    values.update(changes)
    try:
        return type(cfg)(**values)
    except ValueError as e:
        raise click.UsageError(str(e)) from None


def run(argv=None):
    """Run the CLI and map failures to exit codes: 1 usage, 2 I/O, 3 model, 4 all frames abstained."""
    try:
        code = cli.main(args=argv, prog_name="attention", standalone_mode=False)
    except click.exceptions.Abort:
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    except AttentionError as e:
        logger.error(str(e))
        click.echo(f"Error: {e}", err=True)
        return e.exit_code
    except ValueError as e:
        logger.error(str(e))
        click.echo(f"Error: {e}", err=True)
        return 1
    return code or 0


if __name__ == "__main__":
    sys.exit(run())
