"""Macro-averaged classification metrics and report formatting."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import AllOneClass, LabelOutOfRange

METRIC_KEYS = ("accuracy", "macro_precision", "macro_recall", "macro_f1", "macro_auroc", "macro_auprc")
TABLE_COLUMNS = ("Acc", "Prec", "Rec", "F1", "AUROC", "AUPRC")


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Counts with rows = ground truth, columns = prediction."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred differ in length")
    for name, arr in (("y_true", y_true), ("y_pred", y_pred)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise LabelOutOfRange(f"{name} has labels outside [0, {n_classes})")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def per_class_prf(cm: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-class precision, recall and F1; zero wherever a denominator is zero."""
    cm = np.asarray(cm)
    tp = np.diag(cm).astype(np.float64)
    col = cm.sum(axis=0).astype(np.float64)
    row = cm.sum(axis=1).astype(np.float64)
    precision = np.divide(tp, col, out=np.zeros_like(tp), where=col > 0)
    recall = np.divide(tp, row, out=np.zeros_like(tp), where=row > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)
    return precision, recall, f1


def macro_prf(cm: np.ndarray) -> tuple[float, float, float]:
    """Macro precision, recall, F1 over the classes present in the ground truth."""
    cm = np.asarray(cm)
    present = cm.sum(axis=1) > 0
    if not present.any():
        return 0.0, 0.0, 0.0
    p, r, f = per_class_prf(cm)
    return float(p[present].mean()), float(r[present].mean()), float(f[present].mean())


def macro_f1(y_true, y_pred, n_classes: int) -> float:
    return macro_prf(confusion_matrix(y_true, y_pred, n_classes))[2]


def auroc_binary(positive, scores) -> float:
    """ROC area via the Mann-Whitney U statistic with midranks for ties."""
    positive = np.asarray(positive, dtype=bool)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise AllOneClass("AUROC needs at least one positive and one negative")
    ranks = rankdata(scores)  # midranks
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def average_precision(positive, scores) -> float:
    """Step-wise average precision, sum_n (R_n - R_{n-1}) P_n, ties grouped."""
    positive = np.asarray(positive, dtype=bool)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int(positive.sum())
    if n_pos == 0 or n_pos == positive.size:
        raise AllOneClass("average precision needs positives and negatives")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    hits = positive[order].astype(np.float64)
    # last index of each group of equal scores
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp = np.cumsum(hits)[ends]
    seen = ends + 1.0
    precision = tp / seen
    recall = tp / n_pos
    prev = np.r_[0.0, recall[:-1]]
    return float(np.sum((recall - prev) * precision))


def _ovr(score_fn, y_true, scores) -> tuple[float, list[float | None]]:
    y_true = np.asarray(y_true, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] != y_true.shape[0]:
        raise ValueError("scores must be an (n, K) matrix")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    per_class: list[float | None] = []
    for k in range(scores.shape[1]):
        pos = y_true == k
        if pos.all() or not pos.any():
            per_class.append(None)
            continue
        per_class.append(score_fn(pos, scores[:, k]))
    valid = [v for v in per_class if v is not None]
    if not valid:
        raise AllOneClass("no class has both positives and negatives")
    return float(np.mean(valid)), per_class


def auroc_ovr(y_true, scores) -> float:
    """Macro one-vs-rest AUROC; classes without positives or negatives are skipped."""
    return _ovr(auroc_binary, y_true, scores)[0]


def auprc_ovr(y_true, scores) -> float:
    """Macro one-vs-rest average precision."""
    return _ovr(average_precision, y_true, scores)[0]


@dataclass
class MetricsReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    macro_auroc: float | None
    macro_auprc: float | None
    confusion: list[list[int]]
    per_class: list[dict] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    class_names: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def percentages(self) -> dict[str, float | None]:
        out = {}
        for key in METRIC_KEYS:
            v = getattr(self, key)
            out[key] = None if v is None else 100.0 * v
        return out


def evaluate(y_true, y_pred, scores, n_classes: int,
             class_names: Sequence[str] | None = None) -> MetricsReport:
    """Full metric suite for one set of predictions."""
    y_true = np.asarray(y_true, dtype=np.int64)
    cm = confusion_matrix(y_true, y_pred, n_classes)
    names = list(class_names) if class_names else [str(k) for k in range(n_classes)]
    p, r, f = per_class_prf(cm)
    mp, mr, mf = macro_prf(cm)
    flags = []
    col = cm.sum(axis=0)
    row = cm.sum(axis=1)
    for k in range(n_classes):
        if col[k] == 0 and row[k] > 0:
            flags.append(f"class {names[k]} never predicted: precision set to 0")
        if row[k] == 0:
            flags.append(f"class {names[k]} absent from ground truth: excluded from macro averages")
    try:
        auroc, roc_pc = _ovr(auroc_binary, y_true, scores)
        auprc, pr_pc = _ovr(average_precision, y_true, scores)
    except AllOneClass:
        auroc = auprc = None
        roc_pc = pr_pc = [None] * n_classes
        flags.append("AUROC/AUPRC undefined: no class admits one-vs-rest")
    per_class = [
        {"class": names[k], "precision": float(p[k]), "recall": float(r[k]), "f1": float(f[k]),
         "auroc": roc_pc[k], "auprc": pr_pc[k], "support": int(row[k])}
        for k in range(n_classes)
    ]
    n = int(cm.sum())
    return MetricsReport(
        accuracy=float(np.trace(cm) / n) if n else 0.0,
        macro_precision=mp,
        macro_recall=mr,
        macro_f1=mf,
        macro_auroc=auroc,
        macro_auprc=auprc,
        confusion=cm.tolist(),
        per_class=per_class,
        flags=flags,
        class_names=names,
    )


def format_table(rows: Sequence[tuple[str, str, MetricsReport]]) -> str:
    """Text table in percentages with two decimals, one line per (classifier, dataset)."""
    header = f"{'Classifier':<12}{'Dataset':<12}" + "".join(f"{c:>9}" for c in TABLE_COLUMNS)
    lines = [header, "-" * len(header)]
    for clf, dataset, rep in rows:
        cells = []
        for key in METRIC_KEYS:
            v = rep.percentages()[key]
            cells.append(f"{'n/a':>9}" if v is None else f"{v:>9.2f}")
        lines.append(f"{clf:<12}{dataset:<12}" + "".join(cells))
    return "\n".join(lines) + "\n"


def format_report(rep: MetricsReport, classifier: str = "", dataset: str = "") -> str:
    out = [format_table([(classifier, dataset, rep)]), "Confusion matrix (rows = truth, cols = predicted):"]
    names = rep.class_names
    width = max(6, *(len(n) + 2 for n in names))
    out.append(" " * width + "".join(f"{n:>{width}}" for n in names))
    for name, row in zip(names, rep.confusion):
        out.append(f"{name:<{width}}" + "".join(f"{v:>{width}d}" for v in row))
    for flag in rep.flags:
        out.append(f"note: {flag}")
    return "\n".join(out) + "\n"


def report_json(rep: MetricsReport) -> str:
    return json.dumps(rep.to_dict(), indent=2) + "\n"


def write_confusion_csv(path, rep: MetricsReport) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["truth\\predicted", *rep.class_names])
        for name, row in zip(rep.class_names, rep.confusion):
            writer.writerow([name, *row])
