"""Command-line entry point: ``neuroband <subcommand> [options]``.

Exit codes: 0 success, 1 configuration error, 2 input/output error,
3 every session failed, 4 model-file schema mismatch, 5 subject leakage.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import __version__
from .attention import band_split, export_band_split, kl_report_json, kl_report_text, load_attention_dir, pairwise_kl_report
from .classifiers.pipeline import KINDS, fit_pipeline, grid_search, load_model, save_model
from .config import RunConfig, load_config, parse_seed
from .errors import ConfigError, NeurobandError, SchemaMismatch, SubjectLeakage
from .features import (
    DatasetSplit,
    apply_split,
    feature_matrix,
    read_features_csv,
    read_split_assignments,
    session_features,
    session_psd,
    split_by_subject,
    write_features_csv,
    write_split,
)
from .ingest import ManifestEntry, load_manifest, read_recording
from .metrics import evaluate, format_report, report_json, write_confusion_csv
from .preprocess import epoch, prepare, resample
from .welch import write_psd_csv

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_ALL_FAILED = 3
EXIT_SCHEMA = 4
EXIT_LEAKAGE = 5

LOG_NAME = "neuroband.log"
DEFAULT_PARAMS = {
    "qda": {"reg_lambda": 0.01, "retained_variance": 0.95},
    "rf": {"n_estimators": 100, "max_depth": 0, "min_samples_leaf": 1, "retained_variance": 0.95},
}

log = logging.getLogger("neuroband")


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors, not exit 2 (reserved for I/O)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


class _Exit(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", type=Path, default=d(None), help="JSON run configuration")
    p.add_argument("--output-dir", type=Path, default=d(None), help="override output_dir")
    p.add_argument("--seed", default=d(None), help="override the split/forest seed")
    p.add_argument("--jobs", type=int, default=d(1), help="maximum worker processes")
    p.add_argument("--allow-partial", action="store_true", default=d(False),
                   help="exit 0 even if some sessions fail")
    p.add_argument("--dry-run", action="store_true", default=d(False),
                   help="validate configuration and inputs, write nothing")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="neuroband", description="EEG spectral feature extraction and classification")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("extract", help="recordings -> feature CSV and PSD CSVs")
    _add_globals(p, suppress=True)
    p.add_argument("--manifest", type=Path)

    for name, text in (("gridsearch", "select hyperparameters on validation macro-F1"),
                       ("train", "fit one pipeline with fixed hyperparameters")):
        p = sub.add_parser(name, help=text)
        _add_globals(p, suppress=True)
        p.add_argument("--features", type=Path)
        p.add_argument("--classifier", choices=KINDS)
        p.add_argument("--split", type=Path, help="split file to use instead of a seeded split")

    p = sub.add_parser("evaluate", help="score the test partition with a saved model")
    _add_globals(p, suppress=True)
    p.add_argument("--features", type=Path)
    p.add_argument("--model", type=Path)
    p.add_argument("--split", type=Path)
    p.add_argument("--dataset", default="", help="dataset label for the report table")

    p = sub.add_parser("kl", help="pairwise KL between correct and incorrect attention maps")
    _add_globals(p, suppress=True)
    p.add_argument("--attention-dir", type=Path)

    p = sub.add_parser("bandsplit", help="write one band-passed CSV per canonical band")
    _add_globals(p, suppress=True)
    p.add_argument("--manifest", type=Path)
    return parser


# ---------------------------------------------------------------------------
# helpers


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, split=replace(cfg.split, seed=parse_seed(args.seed)))
    if args.output_dir is not None:
        cfg = replace(cfg, output_dir=args.output_dir)
    if getattr(args, "manifest", None) is not None:
        cfg = replace(cfg, manifest=args.manifest)
    if getattr(args, "features", None) is not None:
        cfg = replace(cfg, features=args.features)
    if getattr(args, "model", None) is not None:
        cfg = replace(cfg, model=args.model)
    if getattr(args, "split", None) is not None:
        cfg = replace(cfg, split=replace(cfg.split, file=args.split))
    if getattr(args, "classifier", None) is not None:
        cfg = replace(cfg, classifier=args.classifier)
    if getattr(args, "attention_dir", None) is not None:
        cfg = replace(cfg, attention_dir=args.attention_dir)
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    return cfg


def _require(path: Path | None, what: str) -> Path:
    if path is None:
        raise ConfigError(f"no {what} configured")
    if not path.exists():
        raise ConfigError(f"{what} {path} does not exist")
    return path


def _setup_log(out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(out_dir / LOG_NAME, encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)


def _session_name(entry: ManifestEntry) -> str:
    return f"{entry.subject_id}_{entry.path.stem}"


def _load_split(cfg: RunConfig, rows, write: bool) -> DatasetSplit:
    """Split from the configured file if present, otherwise from the seed."""
    if cfg.split.file is not None:
        where = read_split_assignments(_require(cfg.split.file, "split file"))
        return apply_split(rows, where, cfg.seed, cfg.split.ratios)
    split = split_by_subject(rows, cfg.split.ratios, cfg.seed)
    if write:
        write_split(cfg.split_path, split)
    return split


# ---------------------------------------------------------------------------
# extract


def _extract_one(entry: ManifestEntry, cfg: RunConfig):
    """Features and session PSD of one recording, or the error text."""
    try:
        rec = read_recording(entry.path, cfg.csv_sample_rate_hz)
        rec = replace(rec, subject_id=entry.subject_id, label=entry.label)
        epochs = epoch(prepare(rec, cfg.preproc), cfg.preproc)
        feats = session_features(epochs, cfg.welch, cfg.wavelet, cfg.aggregate)
        return feats, session_psd(epochs, cfg.welch), rec.channels, None
    except (NeurobandError, OSError, ValueError) as exc:
        return None, None, None, f"{type(exc).__name__}: {exc}"


def cmd_extract(cfg: RunConfig, args) -> int:
    manifest = load_manifest(_require(cfg.manifest, "manifest"))
    missing = [e.path for e in manifest.entries if not e.path.exists()]
    if args.dry_run:
        for p in missing:
            print(f"warning: {p} does not exist", file=sys.stderr)
        print(f"dry run: {len(manifest.entries)} sessions, {len(missing)} missing; nothing written")
        return EXIT_OK
    _setup_log(cfg.output_dir)
    entries = list(manifest.entries)
    if args.jobs > 1 and len(entries) > 1:
        with ProcessPoolExecutor(max_workers=min(args.jobs, len(entries))) as pool:
            results = list(pool.map(_extract_one, entries, [cfg] * len(entries)))
    else:
        results = [_extract_one(e, cfg) for e in entries]

    psd_dir = cfg.output_dir / "psd"
    psd_dir.mkdir(exist_ok=True)
    rows, failed = [], 0
    for entry, (feats, psd, channels, err) in zip(entries, results):
        if err is not None:
            failed += 1
            log.warning("session %s failed: %s", entry.path, err)
            print(f"warning: skipping {entry.path}: {err}", file=sys.stderr)
            continue
        rows.append(feats)
        write_psd_csv(psd_dir / f"{_session_name(entry)}.csv", psd, channels)
    summary = f"extracted {len(rows)} of {len(entries)} sessions ({failed} failed)"
    log.info(summary)
    print(summary, file=sys.stderr)
    if not rows:
        return EXIT_ALL_FAILED
    write_features_csv(cfg.features_path, rows)
    if failed and not args.allow_partial:
        return EXIT_IO
    return EXIT_OK


# ---------------------------------------------------------------------------
# train / gridsearch / evaluate


def _fit_command(cfg: RunConfig, args, search: bool) -> int:
    rows = read_features_csv(_require(cfg.features_path, "feature file"))
    if args.dry_run:
        split = _load_split(cfg, rows, write=False)
        print(f"dry run: {len(split.train)}/{len(split.val)}/{len(split.test)} "
              f"train/val/test sessions; nothing written")
        return EXIT_OK
    _setup_log(cfg.output_dir)
    split = _load_split(cfg, rows, write=True)
    class_names = _class_names(cfg)
    K = max(r.label for r in rows) + 1
    if search:
        report = grid_search(cfg.classifier, split, cfg.grids[cfg.classifier], cfg.seed,
                             cfg.refit_with_val, K, class_names)
        model = report.refit_model
        (cfg.output_dir / "gridsearch.json").write_text(
            json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
        log.info("gridsearch %s best %s", cfg.classifier, report.best_params)
        print(f"best {cfg.classifier} params: {json.dumps(report.best_params, sort_keys=True)}")
    else:
        report = None
        params = {**DEFAULT_PARAMS[cfg.classifier], **cfg.params}
        fit_rows = split.train + split.val if cfg.refit_with_val else split.train
        X, y = feature_matrix(fit_rows)
        model = fit_pipeline(cfg.classifier, params, X, y, cfg.seed, K, class_names)
        model = replace(model, training_subjects=tuple(sorted({r.subject_id for r in fit_rows})))
        log.info("trained %s with %s", cfg.classifier, params)
    save_model(cfg.model_path, model, report)
    print(f"model written to {cfg.model_path}")
    return EXIT_OK


def _class_names(cfg: RunConfig) -> tuple[str, ...]:
    if cfg.manifest is not None and cfg.manifest.exists():
        return load_manifest(cfg.manifest).class_names
    return ()


def cmd_gridsearch(cfg: RunConfig, args) -> int:
    return _fit_command(cfg, args, search=True)


def cmd_train(cfg: RunConfig, args) -> int:
    return _fit_command(cfg, args, search=False)


def cmd_evaluate(cfg: RunConfig, args) -> int:
    rows = read_features_csv(_require(cfg.features_path, "feature file"))
    model = load_model(_require(cfg.model_path, "model file"))
    split_file = cfg.split.file
    if split_file is None and cfg.split_path.exists():
        split_file = cfg.split_path
    cfg = replace(cfg, split=replace(cfg.split, file=split_file))
    split = _load_split(cfg, rows, write=False)
    leaked = sorted(split.subjects("test") & set(model.training_subjects))
    if leaked:
        raise SubjectLeakage(f"test subjects were used to fit the model: {leaked[:5]}")
    if args.dry_run:
        print(f"dry run: {len(split.test)} test sessions; nothing written")
        return EXIT_OK
    _setup_log(cfg.output_dir)
    X, y = feature_matrix(split.test)
    pred, scores = model.predict(X)
    rep = evaluate(y, pred, scores, model.n_classes, model.class_names or None)
    text = format_report(rep, model.kind.upper(), args.dataset)
    (cfg.output_dir / "report.txt").write_text(text, encoding="utf-8")
    (cfg.output_dir / "report.json").write_text(report_json(rep), encoding="utf-8")
    write_confusion_csv(cfg.output_dir / "confusion.csv", rep)
    log.info("evaluated %d test sessions", len(y))
    print(text, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# kl / bandsplit


def cmd_kl(cfg: RunConfig, args) -> int:
    maps = load_attention_dir(_require(cfg.attention_dir, "attention directory"))
    rep = pairwise_kl_report(maps)
    if args.dry_run:
        print(f"dry run: {rep.n_correct} correct and {rep.n_incorrect} incorrect maps; nothing written")
        return EXIT_OK
    _setup_log(cfg.output_dir)
    text = kl_report_text(rep)
    (cfg.output_dir / "kl_report.txt").write_text(text, encoding="utf-8")
    (cfg.output_dir / "kl_report.json").write_text(kl_report_json(rep), encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def cmd_bandsplit(cfg: RunConfig, args) -> int:
    manifest = load_manifest(_require(cfg.manifest, "manifest"))
    if args.dry_run:
        print(f"dry run: {len(manifest.entries)} sessions; nothing written")
        return EXIT_OK
    _setup_log(cfg.output_dir)
    out = cfg.output_dir / "bandsplit"
    n = 0
    for entry in manifest.entries:
        rec = read_recording(entry.path, cfg.csv_sample_rate_hz)
        rec = resample(rec, cfg.preproc.target_rate_hz)
        rec = replace(rec, subject_id=entry.subject_id, label=entry.label, session_id=_session_name(entry))
        n += len(export_band_split(out, rec, band_split(rec, order=cfg.preproc.filter_order)))
    log.info("bandsplit wrote %d files", n)
    print(f"wrote {n} band files to {out}")
    return EXIT_OK


COMMANDS = {
    "extract": cmd_extract,
    "gridsearch": cmd_gridsearch,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "kl": cmd_kl,
    "bandsplit": cmd_bandsplit,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    log.setLevel(logging.INFO)
    try:
        cfg = _resolve_config(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SchemaMismatch as exc:
        print(f"model schema mismatch: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except SubjectLeakage as exc:
        print(f"split leakage: {exc}", file=sys.stderr)
        return EXIT_LEAKAGE
    except (NeurobandError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO
    finally:
        for h in list(log.handlers):
            log.removeHandler(h)
            h.close()


if __name__ == "__main__":
    sys.exit(main())
