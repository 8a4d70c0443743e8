"""Attention-map KL diagnostics and per-band signal decomposition.

Attention maps come from external model code as text files::

    sample_id <id>
    outcome correct|incorrect
    shape Q K
    <Q lines of K space-separated floats>
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    AllZeroMap,
    LengthMismatch,
    MalformedAttentionFile,
    MissingOutcomeGroup,
    ShapeMismatch,
)
from .ingest import Recording, write_csv_matrix
from .preprocess import FILTER_ORDER, bandpass
from .welch import CANONICAL_BANDS, BandDef

SMOOTHING_EPS = 1e-10
OUTCOMES = ("correct", "incorrect")


@dataclass(frozen=True)
class AttentionMap:
    sample_id: str
    outcome: str
    weights: np.ndarray  # (Q, K)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2:
            raise ShapeMismatch(f"attention weights must be 2-D, got shape {w.shape}")
        if self.outcome not in OUTCOMES:
            raise ValueError(f"outcome must be one of {OUTCOMES}, got {self.outcome!r}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError(f"{self.sample_id}: attention weights must be finite and >= 0")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class KlReport:
    kl_correct_vs_incorrect: float
    kl_incorrect_vs_correct: float
    pair_count: int
    std_correct_vs_incorrect: float
    std_incorrect_vs_correct: float
    n_correct: int
    n_incorrect: int
    convention: str = "maps as exported (head/layer averaging done upstream)"

    def to_dict(self) -> dict:
        return asdict(self)


def normalize_map(m: AttentionMap, smoothing_eps: float = SMOOTHING_EPS) -> np.ndarray:
    """Flatten row-major, add ``smoothing_eps`` to every entry and renormalise."""
    flat = m.weights.ravel()
    if flat.sum() <= 0:
        raise AllZeroMap(f"{m.sample_id}: attention map is all zeros")
    flat = flat + smoothing_eps
    return flat / flat.sum()


def kl_divergence(p, q) -> float:
    """``sum p log(p / q)`` in nats; zero-probability terms of ``p`` contribute 0."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise LengthMismatch(f"distributions of length {p.size} and {q.size}")
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz] / q[nz])))


def pairwise_kl_report(maps: Sequence[AttentionMap], smoothing_eps: float = SMOOTHING_EPS) -> KlReport:
    """Mean and spread of KL over every (correct, incorrect) pair, both directions."""
    correct = [m for m in maps if m.outcome == "correct"]
    incorrect = [m for m in maps if m.outcome == "incorrect"]
    if not correct or not incorrect:
        raise MissingOutcomeGroup(
            f"need both outcome groups, have {len(correct)} correct and {len(incorrect)} incorrect"
        )
    shapes = {m.weights.shape for m in maps}
    if len(shapes) > 1:
        raise ShapeMismatch(f"attention maps differ in shape: {sorted(shapes)}")
    # sort so the result does not depend on input order
    P = np.array([normalize_map(m, smoothing_eps) for m in sorted(correct, key=lambda m: m.sample_id)])
    Q = np.array([normalize_map(m, smoothing_eps) for m in sorted(incorrect, key=lambda m: m.sample_id)])
    logP, logQ = np.log(P), np.log(Q)
    # (i, j) entries: KL(P_i || Q_j) and KL(Q_j || P_i)
    negent_p = np.sum(P * logP, axis=1)
    negent_q = np.sum(Q * logQ, axis=1)
    kl_pq = negent_p[:, None] - P @ logQ.T
    kl_qp = negent_q[None, :] - (Q @ logP.T).T
    return KlReport(
        kl_correct_vs_incorrect=float(kl_pq.mean()),
        kl_incorrect_vs_correct=float(kl_qp.mean()),
        pair_count=int(kl_pq.size),
        std_correct_vs_incorrect=float(kl_pq.std()),
        std_incorrect_vs_correct=float(kl_qp.std()),
        n_correct=len(correct),
        n_incorrect=len(incorrect),
    )


# ---------------------------------------------------------------------------
# attention files


def read_attention_file(path) -> AttentionMap:
    path = Path(path)
    lines = [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines()]
    lines = [ln for ln in lines if ln]
    try:
        key, sample_id = lines[0].split(maxsplit=1)
        okey, outcome = lines[1].split()
        skey, q, k = lines[2].split()
        if (key, okey, skey) != ("sample_id", "outcome", "shape"):
            raise ValueError("unexpected header keywords")
        q, k = int(q), int(k)
        rows = [[float(v) for v in ln.split()] for ln in lines[3:]]
    except (IndexError, ValueError) as exc:
        raise MalformedAttentionFile(f"{path}: {exc}") from None
    if len(rows) != q or any(len(r) != k for r in rows):
        raise MalformedAttentionFile(f"{path}: body does not match declared shape {q}x{k}")
    try:
        return AttentionMap(sample_id.strip(), outcome, np.array(rows).reshape(q, k))
    except ValueError as exc:
        raise MalformedAttentionFile(f"{path}: {exc}") from None


def write_attention_file(path, m: AttentionMap) -> None:
    q, k = m.weights.shape
    body = "\n".join(" ".join(repr(float(v)) for v in row) for row in m.weights)
    Path(path).write_text(f"sample_id {m.sample_id}\noutcome {m.outcome}\nshape {q} {k}\n{body}\n",
                          encoding="utf-8")


def load_attention_dir(directory) -> list[AttentionMap]:
    """Every regular file in ``directory`` (sorted by name) is one map."""
    files = sorted(p for p in Path(directory).iterdir() if p.is_file() and not p.name.startswith("."))
    return [read_attention_file(p) for p in files]


def kl_report_text(rep: KlReport) -> str:
    return (
        f"{'KL (Correct||Incorrect)':<26}{rep.kl_correct_vs_incorrect:.3e} "
        f"(std {rep.std_correct_vs_incorrect:.2e})\n"
        f"{'KL (Incorrect||Correct)':<26}{rep.kl_incorrect_vs_correct:.3e} "
        f"(std {rep.std_incorrect_vs_correct:.2e})\n"
        f"pairs: {rep.pair_count} ({rep.n_correct} correct x {rep.n_incorrect} incorrect)\n"
        f"convention: {rep.convention}\n"
    )


def kl_report_json(rep: KlReport) -> str:
    return json.dumps(rep.to_dict(), indent=2) + "\n"


# ---------------------------------------------------------------------------
# band decomposition


def band_split(rec: Recording, bands: Sequence[BandDef] = CANONICAL_BANDS,
               order: int = FILTER_ORDER) -> dict[str, Recording]:
    """One zero-phase band-passed copy of ``rec`` per band."""
    return {b.name: bandpass(rec, b.f_min_hz, b.f_max_hz, order=order) for b in bands}


def export_band_split(out_dir, rec: Recording, parts: dict[str, Recording]) -> list[Path]:
    """Write ``<session>_<band>.csv`` for each band; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = rec.session_id or "session"
    written = []
    for name, part in parts.items():
        path = out_dir / f"{stem}_{name}.csv"
        write_csv_matrix(path, part)
        written.append(path)
    return written
