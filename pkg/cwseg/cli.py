"""
Command-line entry point: one subcommand per pipeline stage.

Exit codes: 0 success, 2 input/format error, 3 data-capacity error,
4 training non-convergence.
"""
import argparse
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from dotenv import dotenv_values
from pydantic import ValidationError

from cwseg.db import get_db
from cwseg.errors import ConvergenceError, CwsegError, PreconditionError
from cwseg.evaluation import format_reports, evaluate, pixel_accuracy, render, segment_image
from cwseg.gabor_baseline import STATUS_DEGENERATE, segment_gabor
from cwseg.history import format_runs, list_runs, record_run
from cwseg.image_io import read_image, read_mask, rgb_to_gray, to_gray, write_image, write_mask
from cwseg.mlp import load_model, save_model, write_training_log
from cwseg.nn_baseline import NNModel, load_nn_model
from cwseg.pipeline import build_classifier, format_sweep, run_window_sweep
from cwseg.sampler import read_dataset, sample_dataset, write_dataset
from cwseg.schemas import ClassifierKind, EfficiencyReport, RunConfig, Split
from cwseg.settings import configure_logging, get_settings
from cwseg.synthetic import stripes_vs_uniform, two_texture_image

logger = logging.getLogger(__name__)

# flags that map one-to-one onto RunConfig fields
_CONFIG_FLAGS = ("window", "layers", "band", "total", "seed", "kind", "trainer", "max_epochs", "mse_goal")


def _run_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise PreconditionError(f"config file {path} not found")
        values.update({k.strip().lower(): v for k, v in dotenv_values(path).items() if v is not None})
    for key in _CONFIG_FLAGS:
        value = getattr(args, key, None)
        if value is not None:
            values[key] = value
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise PreconditionError(f"invalid configuration: {e}")


def _window_given(args: argparse.Namespace) -> bool:
    if getattr(args, "window", None) is not None:
        return True
    return bool(getattr(args, "config", None)) and "window" in {
        k.strip().lower() for k in dotenv_values(args.config)
    }


def _image_set(image_paths: Sequence[str], mask_paths: Sequence[str]) -> List[Tuple]:
    if not image_paths:
        raise PreconditionError("at least one --image is required")
    if len(image_paths) != len(mask_paths):
        raise PreconditionError(f"{len(image_paths)} --image but {len(mask_paths)} --mask arguments")
    return [(read_image(i), read_mask(m), Path(i).stem) for i, m in zip(image_paths, mask_paths)]


def _infer_window(width: int, channels: int) -> int:
    for c in (channels, 1):
        side = math.isqrt(width // c) if width % c == 0 else 0
        if side * side * c == width and side % 2 == 1:
            return side
    raise PreconditionError(f"classifier width {width} is not a square window for this image")


def _load_classifier(kind: ClassifierKind, model_path: Optional[str], dataset_path: Optional[str] = None):
    if kind == ClassifierKind.MLP:
        if not model_path:
            raise PreconditionError("--model is required for kind=mlp")
        return load_model(model_path)
    if kind == ClassifierKind.NN:
        path = model_path or dataset_path
        if not path:
            raise PreconditionError("--model (a dataset file) is required for kind=nn")
        return load_nn_model(path)
    raise PreconditionError(f"kind={kind.value} has no stored model")


def _should_record(args: argparse.Namespace) -> bool:
    return bool(getattr(args, "record", False)) or get_settings().record_runs


RecordEntry = Tuple[Sequence[EfficiencyReport], ClassifierKind, Optional[int], dict]


def _record(command: str, cfg: RunConfig, entries: Sequence[RecordEntry]) -> None:
    db_gen = get_db()
    db = next(db_gen)
    try:
        for reports, kind, window, payload in entries:
            record_run(db, command, reports, classifier=kind.value, window=window, seed=cfg.seed, payload=payload)
    finally:
        db_gen.close()


# ===== Subcommands =====

def cmd_gray(args: argparse.Namespace) -> int:
    image = read_image(args.input)
    if image.channels != 3:
        raise PreconditionError(f"{args.input} is not a color (P6) image")
    write_image(rgb_to_gray(image), args.out)
    logger.info(f"[gray] {args.input} -> {args.out}")
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    images = _image_set(args.image, args.mask)
    dataset = sample_dataset(images, cfg.window, total=cfg.total, band=cfg.band, seed=cfg.seed,
                             train_fraction=cfg.train_fraction)
    write_dataset(dataset, args.out)
    print(f"train={len(dataset.train)} test={len(dataset.test)} width={dataset.width} -> {args.out}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    dataset = read_dataset(args.dataset)
    log_path = args.log or f"{args.out}.log.csv"
    try:
        built = build_classifier(ClassifierKind.MLP, dataset, cfg.layers, cfg.train_config(), trainer=cfg.trainer)
    except ConvergenceError as e:
        save_model(e.result.model, args.out)
        write_training_log(e.result, log_path)
        logger.error(f"[train] {e}; best model written to {args.out}")
        return e.exit_code
    save_model(built.classifier, args.out)
    write_training_log(built.training, log_path)
    print(f"status={built.training.status} epochs={len(built.training.history) - 1} "
          f"mse={built.training.final_mse:.6g} -> {args.out}")
    return 0


def cmd_segment(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    image = read_image(args.image)
    window = cfg.window
    status = "ok"
    if cfg.kind == ClassifierKind.GABOR:
        gabor = segment_gabor(to_gray(image), cfg.gabor_spec())
        result = render(gabor.mask, image)
        status = gabor.status
        window = None
    else:
        classifier = _load_classifier(cfg.kind, args.model)
        if not _window_given(args):
            window = _infer_window(classifier.input_width, image.channels)
        result = segment_image(classifier, image, window)

    write_image(result.mask_image, f"{args.out}_mask.pgm")
    write_image(result.gray_masked, f"{args.out}_gray.pgm")
    print(f"wrote {args.out}_mask.pgm {args.out}_gray.pgm" + (" (degenerate)" if status == STATUS_DEGENERATE else ""))

    reports = []
    if args.mask:
        reports.append(pixel_accuracy(result.mask, read_mask(args.mask)))
        sys.stdout.write(format_reports(reports))
    if _should_record(args):
        _record("segment", cfg, [(reports, cfg.kind, window, {"image": args.image, "status": status})])
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    if cfg.kind == ClassifierKind.GABOR:
        raise PreconditionError("kind=gabor has no sample-level evaluation; use segment --mask")
    dataset = read_dataset(args.dataset)
    if cfg.kind == ClassifierKind.NN and not args.model:
        classifier = NNModel.from_dataset(dataset)
    else:
        classifier = _load_classifier(cfg.kind, args.model)
    reports = [
        evaluate(classifier, dataset.train, Split.TRAIN),
        evaluate(classifier, dataset.test, Split.TEST),
    ]
    sys.stdout.write(format_reports(reports))
    if _should_record(args):
        _record("eval", cfg, [(reports, cfg.kind, None, {"dataset": args.dataset, "model": args.model})])
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    images = _image_set(args.image, args.mask)
    windows = [int(w) for w in args.windows.split(",") if w]
    kinds = [ClassifierKind(k) for k in args.kinds.split(",") if k]
    if ClassifierKind.GABOR in kinds:
        raise PreconditionError("the sweep compares trainable classifiers only (mlp, nn)")
    rows = run_window_sweep(images, windows, kinds, total=cfg.total, band=cfg.band, seed=cfg.seed,
                            config=cfg.train_config())
    table = format_sweep(rows)
    sys.stdout.write(table)
    if args.out:
        Path(args.out).write_text(table, encoding="utf-8")
    if _should_record(args):
        _record("sweep", cfg, [([row.train, row.test], row.classifier, row.window, {"layers": row.layers})
                               for row in rows])
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    if args.kind == "stripes":
        image, mask = stripes_vs_uniform(args.size)
    else:
        image, mask = two_texture_image(args.size, seed=args.seed, color=args.color)
    suffix = "ppm" if image.channels == 3 else "pgm"
    write_image(image, f"{args.out}.{suffix}")
    write_mask(mask, f"{args.out}_mask.pgm")
    print(f"wrote {args.out}.{suffix} {args.out}_mask.pgm")
    return 0


def cmd_runs(args: argparse.Namespace) -> int:
    db_gen = get_db()
    db = next(db_gen)
    try:
        sys.stdout.write(format_runs(list_runs(db, args.limit)))
    finally:
        db_gen.close()
    return 0


# ===== Parser =====

def _add_run_flags(p: argparse.ArgumentParser, *names: str) -> None:
    if "window" in names:
        p.add_argument("--window", type=int, help="context window size (odd, default 9)")
    if "layers" in names:
        p.add_argument("--layers", help="layer sizes a,b,c,d (default: <width>,18,10,2)")
    if "band" in names:
        p.add_argument("--band", type=int, help="near-edge band in pixels (default 4)")
    if "total" in names:
        p.add_argument("--total", type=int, help="number of sampled pixels (default 1000)")
    if "seed" in names:
        p.add_argument("--seed", type=int, help="random seed (default 0)")
    if "kind" in names:
        p.add_argument("--kind", choices=[k.value for k in ClassifierKind], help="classifier kind (default mlp)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cwseg", description="Context-window pixel segmentation")
    parser.add_argument("--config", help="key=value configuration file (flags override it)")
    parser.add_argument("--log-level", default=None, help="logging level (default from CWSEG_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gray", help="convert a P6 color image to P5 gray")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gray)

    p = sub.add_parser("sample", help="sample labeled context windows into a dataset file")
    p.add_argument("--image", action="append", default=[])
    p.add_argument("--mask", action="append", default=[])
    p.add_argument("--out", required=True)
    _add_run_flags(p, "window", "total", "band", "seed")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("train", help="train the network with Levenberg-Marquardt")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="model file")
    p.add_argument("--log", help="training log (default <out>.log.csv)")
    p.add_argument("--trainer", choices=["lm", "gd"])
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--mse-goal", dest="mse_goal", type=float)
    _add_run_flags(p, "layers", "seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("segment", help="segment an image into <out>_mask.pgm and <out>_gray.pgm")
    p.add_argument("--image", required=True)
    p.add_argument("--model", help="model file (mlp) or dataset file (nn); ignored for gabor")
    p.add_argument("--mask", help="ground-truth mask for a whole-image accuracy line")
    p.add_argument("--out", required=True, help="output prefix")
    p.add_argument("--record", action="store_true", help="store the run in the run database")
    _add_run_flags(p, "window", "kind", "seed")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("eval", help="print train/test efficiency lines")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", help="model file (mlp) or dataset file (nn)")
    p.add_argument("--record", action="store_true")
    _add_run_flags(p, "kind")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="compare window sizes and classifiers")
    p.add_argument("--image", action="append", default=[])
    p.add_argument("--mask", action="append", default=[])
    p.add_argument("--windows", default="5,7,9,11")
    p.add_argument("--kinds", default="mlp,nn")
    p.add_argument("--out", help="also write the table to this file")
    p.add_argument("--record", action="store_true")
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    _add_run_flags(p, "total", "band", "seed")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="write a synthetic image and its mask")
    p.add_argument("--kind", choices=["two-texture", "stripes"], default="two-texture")
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--color", action="store_true")
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("runs", help="list recorded runs")
    p.add_argument("--limit", type=int, default=20)
    p.set_defaults(func=cmd_runs)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.func(args)
    except CwsegError as e:
        logger.error(f"[{args.command}] {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        logger.error(f"[{args.command}] {e}")
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception:
        logger.error(f"[{args.command}] unexpected failure", exc_info=True)
        raise
