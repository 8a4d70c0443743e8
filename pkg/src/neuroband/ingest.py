"""Reading EEG recordings from EDF and CSV files, and label manifests."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import (
    DegenerateScaling,
    DuplicatePath,
    EmptyFile,
    EmptyManifest,
    HeterogeneousRate,
    MalformedHeader,
    NonNumericCell,
    RaggedRows,
    TruncatedData,
    UnknownLabel,
)

ANNOTATION_LABEL = "EDF Annotations"


@dataclass(frozen=True)
class Recording:
    """A multi-channel EEG session.

    ``data`` has one row per channel (C x T, microvolts).
    """

    data: np.ndarray
    channels: tuple[str, ...]
    sample_rate_hz: float
    subject_id: str = ""
    session_id: str = ""
    label: int = 0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValueError(f"data must be 2-D (C x T), got shape {data.shape}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "channels", tuple(self.channels))
        if data.shape[0] != len(self.channels):
            raise ValueError(
                f"{len(self.channels)} channel names for {data.shape[0]} data rows"
            )
        if data.shape[1] < 1:
            raise ValueError("recording has no samples")
        if len(set(self.channels)) != len(self.channels):
            raise ValueError("channel names must be unique")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.label < 0:
            raise ValueError("label must be a non-negative class index")
        if not np.all(np.isfinite(data)):
            raise ValueError("recording contains non-finite samples")

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    def with_data(self, data: np.ndarray, sample_rate_hz: float | None = None) -> Recording:
        """Copy of this recording carrying new samples (and optionally a new rate)."""
        return Recording(
            data=data,
            channels=self.channels,
            sample_rate_hz=self.sample_rate_hz if sample_rate_hz is None else sample_rate_hz,
            subject_id=self.subject_id,
            session_id=self.session_id,
            label=self.label,
        )


class ManifestEntry(NamedTuple):
    path: Path
    subject_id: str
    label: int


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]
    class_names: tuple[str, ...] = field(default=())


# ---------------------------------------------------------------------------
# EDF

_MAIN_FIELDS = (
    ("version", 8),
    ("patient", 80),
    ("recording", 80),
    ("startdate", 8),
    ("starttime", 8),
    ("header_bytes", 8),
    ("reserved", 44),
    ("n_records", 8),
    ("record_duration", 8),
    ("ns", 4),
)

_SIGNAL_FIELDS = (
    ("label", 16),
    ("transducer", 80),
    ("physical_dimension", 8),
    ("physical_min", 8),
    ("physical_max", 8),
    ("digital_min", 8),
    ("digital_max", 8),
    ("prefiltering", 80),
    ("samples_per_record", 8),
    ("reserved", 32),
)


def _field_number(raw: str, name: str, kind=float):
    text = raw.strip()
    try:
        value = kind(text)
    except ValueError:
        raise MalformedHeader(f"field {name!r} is not numeric: {text!r}") from None
    if kind is float and not math.isfinite(value):
        raise MalformedHeader(f"field {name!r} is not finite: {text!r}")
    return value


def parse_edf_header(buf: bytes) -> tuple[dict, list[dict]]:
    """Decode the fixed and per-signal ASCII headers of an EDF file.

    Returns the main header and one dict per signal, with numeric fields
    converted. Raises :class:`MalformedHeader` on any size or format problem.
    """
    if len(buf) < 256:
        raise MalformedHeader(f"file has {len(buf)} bytes, shorter than the 256-byte header")
    text = buf[:256].decode("ascii", errors="replace")
    main = {}
    pos = 0
    for name, width in _MAIN_FIELDS:
        main[name] = text[pos : pos + width]
        pos += width
    if main["version"] != "0       ":
        raise MalformedHeader(f"version field must be '0' padded to 8 bytes, got {main['version']!r}")

    ns = _field_number(main["ns"], "ns", int)
    if ns < 1:
        raise MalformedHeader(f"header declares {ns} signals")
    header_bytes = _field_number(main["header_bytes"], "header_bytes", int)
    if header_bytes != 256 * (ns + 1):
        raise MalformedHeader(f"header size {header_bytes} does not match {ns} signals")
    if len(buf) < header_bytes:
        raise MalformedHeader("file ends inside the signal headers")
    main["ns"] = ns
    main["header_bytes"] = header_bytes
    main["n_records"] = _field_number(main["n_records"], "n_records", int)
    main["record_duration"] = _field_number(main["record_duration"], "record_duration")
    if main["record_duration"] <= 0:
        raise MalformedHeader("record duration must be positive")

    sig_text = buf[256:header_bytes].decode("ascii", errors="replace")
    signals = [{} for _ in range(ns)]
    pos = 0
    for name, width in _SIGNAL_FIELDS:
        for sig in signals:
            sig[name] = sig_text[pos : pos + width]
            pos += width
    for i, sig in enumerate(signals):
        sig["label"] = sig["label"].strip()
        for name in ("physical_min", "physical_max"):
            sig[name] = _field_number(sig[name], f"{name}[{i}]")
        for name in ("digital_min", "digital_max", "samples_per_record"):
            sig[name] = _field_number(sig[name], f"{name}[{i}]", int)
        if sig["samples_per_record"] < 1:
            raise MalformedHeader(f"signal {i} declares {sig['samples_per_record']} samples per record")
    return main, signals


def read_edf(path) -> Recording:
    """Read an EDF file into a :class:`Recording` in physical units.

    Annotation channels are dropped. All remaining signals must share one
    sampling rate. Subject, session and label are left for the caller to fill
    (the session id defaults to the file stem).
    """
    path = Path(path)
    buf = path.read_bytes()
    main, signals = parse_edf_header(buf)

    spr = np.array([s["samples_per_record"] for s in signals])
    record_samples = int(spr.sum())
    data_bytes = len(buf) - main["header_bytes"]
    n_records = main["n_records"]
    if n_records == -1:
        n_records = data_bytes // (2 * record_samples)
    if n_records < 1:
        raise MalformedHeader(f"header declares {n_records} data records")
    needed = n_records * record_samples * 2
    if data_bytes < needed:
        raise TruncatedData(f"expected {needed} data bytes, found {data_bytes}")

    keep = [i for i, s in enumerate(signals) if s["label"] != ANNOTATION_LABEL]
    if not keep:
        raise MalformedHeader("file contains only annotation signals")
    rates = {spr[i] / main["record_duration"] for i in keep}
    if len(rates) > 1:
        raise HeterogeneousRate(f"signals have differing rates: {sorted(rates)}")

    digital = np.frombuffer(buf, dtype="<i2", count=n_records * record_samples,
                            offset=main["header_bytes"]).reshape(n_records, record_samples)
    offsets = np.concatenate([[0], np.cumsum(spr)])
    rows = []
    for i in keep:
        sig = signals[i]
        dmin, dmax = sig["digital_min"], sig["digital_max"]
        if dmax == dmin:
            raise DegenerateScaling(f"signal {sig['label']!r} has digital_min == digital_max")
        d = digital[:, offsets[i] : offsets[i + 1]].reshape(-1).astype(np.float64)
        slope = (sig["physical_max"] - sig["physical_min"]) / (dmax - dmin)
        rows.append(sig["physical_min"] + slope * (d - dmin))

    return Recording(
        data=np.vstack(rows),
        channels=tuple(signals[i]["label"] for i in keep),
        sample_rate_hz=float(rates.pop()),
        session_id=path.stem,
    )


# ---------------------------------------------------------------------------
# CSV matrices


def read_csv_matrix(path, sample_rate_hz: float) -> Recording:
    """Read a CSV with a header of channel names and one row per time point."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not any(h.strip() for h in header):
            raise EmptyFile(f"{path} is empty")
        names = [h.strip() for h in header]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(names):
                raise RaggedRows(f"{path}:{lineno}: {len(row)} cells, expected {len(names)}")
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                raise NonNumericCell(f"{path}:{lineno}: non-numeric cell in {row!r}") from None
    if not rows:
        raise EmptyFile(f"{path} has a header but no samples")
    data = np.array(rows, dtype=np.float64).T
    if not np.all(np.isfinite(data)):
        raise NonNumericCell(f"{path}: non-finite value")
    return Recording(data=data, channels=names, sample_rate_hz=sample_rate_hz,
                     session_id=path.stem)


def write_csv_matrix(path, rec: Recording) -> None:
    """Write a recording as CSV (inverse of :func:`read_csv_matrix`)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(rec.channels)
        for row in rec.data.T:
            writer.writerow([repr(float(v)) for v in row])


def read_recording(path, csv_sample_rate_hz: float | None = None) -> Recording:
    """Dispatch on file extension: ``.edf`` or ``.csv``."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".edf":
        return read_edf(path)
    if suffix == ".csv":
        if csv_sample_rate_hz is None:
            raise ValueError("CSV recordings need csv_sample_rate_hz")
        return read_csv_matrix(path, csv_sample_rate_hz)
    raise ValueError(f"unsupported recording format: {path.suffix!r}")


# ---------------------------------------------------------------------------
# manifests


def load_manifest(path) -> Manifest:
    """Parse a manifest file.

    The first non-comment line lists class names; each further line is
    ``path,subject_id,label_name``. Relative paths resolve against the
    manifest's directory.
    """
    path = Path(path)
    lines = [
        ln.strip()
        for ln in path.read_text(encoding="utf-8").splitlines()
        if ln.strip() and not ln.lstrip().startswith("#")
    ]
    if not lines:
        raise EmptyManifest(f"{path} has no class declaration")
    class_names = tuple(c.strip() for c in lines[0].split(","))
    if not all(class_names) or len(set(class_names)) != len(class_names):
        raise EmptyManifest(f"{path}: invalid class list {lines[0]!r}")
    index = {name: i for i, name in enumerate(class_names)}

    entries = []
    seen = set()
    for ln in lines[1:]:
        parts = [p.strip() for p in ln.split(",")]
        if len(parts) != 3 or not all(parts):
            raise EmptyManifest(f"{path}: malformed entry {ln!r}")
        file_part, subject, label_name = parts
        if label_name not in index:
            raise UnknownLabel(f"{path}: label {label_name!r} not in {class_names}")
        p = Path(file_part)
        if not p.is_absolute():
            p = path.parent / p
        if p in seen:
            raise DuplicatePath(f"{path}: {file_part!r} listed twice")
        seen.add(p)
        entries.append(ManifestEntry(p, subject, index[label_name]))
    if not entries:
        raise EmptyManifest(f"{path} lists no recordings")
    return Manifest(entries=tuple(entries), class_names=class_names)
