"""Session feature vectors and subject-disjoint dataset splits.

A session is described by 13 numbers, always in this order::

    fft_delta fft_theta fft_alpha fft_beta fft_gamma
    dwt_delta dwt_theta dwt_alpha dwt_beta dwt_gamma
    mean_freq median_freq spectral_entropy
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ClassMissing,
    EmptyEpochList,
    FeatureError,
    SubjectLeakage,
    TooFewSubjects,
)
from .preprocess import Epoch
from .rng import Xoshiro256
from .wavelet import WaveletSpec, dwt_band_features
from .welch import (
    BAND_NAMES,
    DEFAULT_OVERLAP,
    DEFAULT_SEGMENT_LEN,
    PsdEstimate,
    aggregate_fft_features,
    band_powers,
    default_segment_len,
    fft_length_for,
    spectral_summaries,
    welch_psd,
)

FEATURE_NAMES: tuple[str, ...] = (
    *(f"fft_{b}" for b in BAND_NAMES),
    *(f"dwt_{b}" for b in BAND_NAMES),
    "mean_freq",
    "median_freq",
    "spectral_entropy",
)
N_FEATURES = len(FEATURE_NAMES)
PARTITIONS = ("train", "val", "test")


@dataclass(frozen=True)
class WelchConfig:
    segment_len: int = DEFAULT_SEGMENT_LEN
    overlap_fraction: float = DEFAULT_OVERLAP


@dataclass(frozen=True)
class SessionFeatures:
    subject_id: str
    label: int
    fft_bands: tuple[float, ...]
    dwt_bands: tuple[float, ...]
    mean_freq_hz: float
    median_freq_hz: float
    spectral_entropy_nats: float
    session_id: str = ""

    @classmethod
    def from_vector(cls, subject_id: str, label: int, vec, session_id: str = "") -> SessionFeatures:
        vec = [float(v) for v in vec]
        if len(vec) != N_FEATURES:
            raise FeatureError(f"expected {N_FEATURES} features, got {len(vec)}")
        return cls(subject_id, int(label), tuple(vec[0:5]), tuple(vec[5:10]),
                   vec[10], vec[11], vec[12], session_id)

    def vector(self) -> np.ndarray:
        return np.array([*self.fft_bands, *self.dwt_bands, self.mean_freq_hz,
                         self.median_freq_hz, self.spectral_entropy_nats])


def epoch_psd(ep: Epoch, welch_cfg: WelchConfig = WelchConfig()) -> PsdEstimate:
    """Welch PSD of one epoch, falling back to shorter segments for short epochs.

    The FFT is zero-padded when needed so the grid is never coarser than 0.5 Hz.
    """
    n = ep.data.shape[1]
    seg = default_segment_len(n, welch_cfg.segment_len)
    nfft = fft_length_for(seg, ep.sample_rate_hz)
    return welch_psd(ep.data, ep.sample_rate_hz, seg, welch_cfg.overlap_fraction, nfft=nfft)


def epoch_features(ep: Epoch, welch_cfg: WelchConfig = WelchConfig(),
                   spec: WaveletSpec | None = None) -> np.ndarray:
    """The 13-dimensional feature vector of a single epoch."""
    psd = epoch_psd(ep, welch_cfg)
    fft = aggregate_fft_features(band_powers(psd))
    summ = spectral_summaries(psd)
    dwt = dwt_band_features(ep.data, ep.sample_rate_hz, spec)
    return np.concatenate([fft, dwt, [summ.mean_freq_hz, summ.median_freq_hz,
                                      summ.spectral_entropy_nats]])


def session_features(
    epochs: Sequence[Epoch],
    welch_cfg: WelchConfig = WelchConfig(),
    spec: WaveletSpec | None = None,
    aggregate: str = "mean",
) -> SessionFeatures:
    """Average the per-epoch feature vectors of one session.

    ``aggregate="median"`` takes the element-wise median instead of the mean.
    """
    if not epochs:
        raise EmptyEpochList("session has no epochs")
    if len({(e.subject_id, e.session_id) for e in epochs}) > 1:
        raise FeatureError("epochs come from more than one session")
    per_epoch = np.array([epoch_features(e, welch_cfg, spec) for e in epochs])
    if aggregate == "mean":
        vec = per_epoch.mean(axis=0)
    elif aggregate == "median":
        vec = np.median(per_epoch, axis=0)
    else:
        raise ValueError(f"unknown aggregate {aggregate!r}")
    first = epochs[0]
    return SessionFeatures.from_vector(first.subject_id, first.label, vec, first.session_id)


def session_psd(epochs: Sequence[Epoch], welch_cfg: WelchConfig = WelchConfig()) -> PsdEstimate:
    """Epoch-averaged PSD of a session (for inspection plots)."""
    psds = [epoch_psd(e, welch_cfg) for e in epochs]
    return PsdEstimate(psds[0].freqs_hz, np.mean([p.psd for p in psds], axis=0),
                       psds[0].segment_len, psds[0].overlap_fraction,
                       sum(p.n_segments for p in psds))


def feature_matrix(rows: Sequence[SessionFeatures]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([r.vector() for r in rows]).reshape(len(rows), N_FEATURES)
    y = np.array([r.label for r in rows], dtype=np.int64)
    return X, y


# ---------------------------------------------------------------------------
# feature files

FEATURE_HEADER = ("subject_id", "label", *FEATURE_NAMES)


def write_features_csv(path, rows: Iterable[SessionFeatures]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FEATURE_HEADER)
        for r in rows:
            writer.writerow([r.subject_id, r.label, *(repr(float(v)) for v in r.vector())])


def read_features_csv(path) -> list[SessionFeatures]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != FEATURE_HEADER:
            raise FeatureError(f"{path}: unexpected header {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append(SessionFeatures.from_vector(row[0], int(row[1]), row[2:]))
            except (ValueError, IndexError) as exc:
                raise FeatureError(f"{path}:{lineno}: {exc}") from None
    return rows


# ---------------------------------------------------------------------------
# splitting


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[SessionFeatures, ...]
    val: tuple[SessionFeatures, ...]
    test: tuple[SessionFeatures, ...]
    split_seed: int
    ratios: tuple[float, float, float]

    def partition(self, name: str) -> tuple[SessionFeatures, ...]:
        return {"train": self.train, "val": self.val, "test": self.test}[name]

    def subjects(self, name: str) -> set[str]:
        return {r.subject_id for r in self.partition(name)}

    def check(self) -> None:
        """Raise :class:`SubjectLeakage` if any subject sits in two partitions."""
        seen: dict[str, str] = {}
        for name in PARTITIONS:
            for sid in self.subjects(name):
                if sid in seen:
                    raise SubjectLeakage(f"subject {sid!r} in both {seen[sid]} and {name}")
                seen[sid] = name

    def assignments(self) -> dict[str, str]:
        return {sid: name for name in PARTITIONS for sid in sorted(self.subjects(name))}


def _apportion(n: int, ratios: Sequence[float]) -> list[int]:
    """Largest-remainder integer counts summing to ``n``, each at least one."""
    ideal = [r * n for r in ratios]
    counts = [int(np.floor(v)) for v in ideal]
    order = sorted(range(len(ratios)), key=lambda i: (-(ideal[i] - counts[i]), i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    for i in range(len(counts)):
        while counts[i] == 0:
            donor = max(range(len(counts)), key=lambda j: (counts[j], -j))
            counts[donor] -= 1
            counts[i] += 1
    return counts


def split_by_subject(
    rows: Sequence[SessionFeatures],
    ratios: Sequence[float] = (0.6, 0.2, 0.2),
    seed: int = 0,
) -> DatasetSplit:
    """Stratified, subject-atomic train/validation/test split.

    Subjects of each class are shuffled with a seeded xoshiro256** stream and
    dealt into the partitions in proportion to ``ratios``; all sessions of a
    subject follow it.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or min(ratios) <= 0 or abs(sum(ratios) - 1) > 1e-9:
        raise ValueError(f"ratios must be three positive numbers summing to 1, got {ratios}")

    subject_label: dict[str, int] = {}
    for r in rows:
        if subject_label.setdefault(r.subject_id, r.label) != r.label:
            raise FeatureError(f"subject {r.subject_id!r} carries more than one label")
    by_class: dict[int, list[str]] = defaultdict(list)
    for sid, lab in subject_label.items():
        by_class[lab].append(sid)
    if not by_class:
        raise TooFewSubjects("no sessions to split")
    for lab, subjects in sorted(by_class.items()):
        if len(subjects) < 3:
            raise TooFewSubjects(f"class {lab} has {len(subjects)} subjects, need >= 3")

    rng = Xoshiro256(seed)
    where: dict[str, str] = {}
    for lab in sorted(by_class):
        subjects = sorted(by_class[lab])
        rng.shuffle(subjects)
        counts = _apportion(len(subjects), ratios)
        pos = 0
        for name, count in zip(PARTITIONS, counts):
            for sid in subjects[pos : pos + count]:
                where[sid] = name
            pos += count

    parts = {name: tuple(r for r in rows if where[r.subject_id] == name) for name in PARTITIONS}
    split = DatasetSplit(parts["train"], parts["val"], parts["test"], int(seed), ratios)
    split.check()
    return split


def write_split(path, split: DatasetSplit) -> None:
    lines = [f"{sid} {name}" for sid, name in sorted(split.assignments().items())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_split_assignments(path) -> dict[str, str]:
    """Read a split file; a subject listed under two partitions is leakage."""
    where: dict[str, str] = {}
    for lineno, ln in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        parts = ln.split()
        if len(parts) != 2 or parts[1] not in PARTITIONS:
            raise FeatureError(f"{path}:{lineno}: expected '<subject_id> train|val|test'")
        sid, name = parts
        if sid in where and where[sid] != name:
            raise SubjectLeakage(f"subject {sid!r} assigned to both {where[sid]} and {name}")
        where[sid] = name
    return where


def apply_split(rows: Sequence[SessionFeatures], where: dict[str, str], seed: int = 0,
                ratios: tuple[float, float, float] = (0.6, 0.2, 0.2)) -> DatasetSplit:
    missing = sorted({r.subject_id for r in rows} - set(where))
    if missing:
        raise FeatureError(f"subjects missing from split file: {missing[:5]}")
    parts = {name: tuple(r for r in rows if where[r.subject_id] == name) for name in PARTITIONS}
    split = DatasetSplit(parts["train"], parts["val"], parts["test"], seed, ratios)
    split.check()
    return split


def check_classes_present(split: DatasetSplit) -> None:
    labels = {r.label for name in PARTITIONS for r in split.partition(name)}
    for name in PARTITIONS:
        present = {r.label for r in split.partition(name)}
        if present != labels:
            raise ClassMissing(f"partition {name} lacks classes {sorted(labels - present)}")
