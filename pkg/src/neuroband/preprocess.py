"""Resampling, band-pass filtering, DC removal and epoching."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import signal

from .errors import BandOutOfRange, IrrationalRatio, NonPositiveRate, RecordingTooShort
from .ingest import Recording

MAX_RATIO_TERM = 1000
STOPBAND_DB = 80.0
FILTER_ORDER = 8


@dataclass(frozen=True)
class PreprocConfig:
    target_rate_hz: float = 256.0
    band: tuple[float, float] = (0.5, 45.0)
    epoch_seconds: float = 4.0
    epoch_overlap_fraction: float = 0.0
    filter_order: int = FILTER_ORDER

    def __post_init__(self):
        low, high = self.band
        if not 0 < low < high < self.target_rate_hz / 2:
            raise BandOutOfRange(f"band {self.band} invalid for {self.target_rate_hz} Hz")
        if not 0 <= self.epoch_overlap_fraction < 1:
            raise ValueError("epoch_overlap_fraction must lie in [0, 1)")
        if self.epoch_seconds <= 0:
            raise ValueError("epoch_seconds must be positive")

    @property
    def epoch_samples(self) -> int:
        return int(round(self.epoch_seconds * self.target_rate_hz))


@dataclass(frozen=True)
class Epoch:
    data: np.ndarray
    sample_rate_hz: float
    subject_id: str = ""
    session_id: str = ""
    label: int = 0
    start: int = 0

    @property
    def source(self) -> tuple[str, str, int]:
        return (self.subject_id, self.session_id, self.label)


def rational_ratio(source_hz: float, target_hz: float) -> tuple[int, int]:
    """Return coprime ``(up, down)`` with ``up/down == target/source``."""
    if source_hz <= 0 or target_hz <= 0:
        raise NonPositiveRate(f"rates must be positive, got {source_hz} -> {target_hz}")
    exact = Fraction(target_hz) / Fraction(source_hz)
    approx = exact.limit_denominator(MAX_RATIO_TERM)
    if approx.numerator > MAX_RATIO_TERM or abs(approx - exact) > exact * Fraction(1, 10**9):
        raise IrrationalRatio(
            f"{target_hz}/{source_hz} is not a ratio with terms <= {MAX_RATIO_TERM}"
        )
    return approx.numerator, approx.denominator


def resampling_filter(up: int, down: int) -> np.ndarray:
    """Kaiser-windowed sinc low-pass for polyphase ``up/down`` resampling.

    Cutoff at the lower of the two Nyquist rates, 80 dB stopband. Unit DC
    gain; ``resample_poly`` applies the interpolation gain ``up`` itself.
    """
    factor = max(up, down)
    half_len = 10 * factor
    beta = signal.kaiser_beta(STOPBAND_DB)
    taps = signal.firwin(2 * half_len + 1, 1.0 / factor, window=("kaiser", beta))
    return taps


def resample(rec: Recording, target_rate_hz: float) -> Recording:
    """Polyphase rational resampling to ``target_rate_hz``.

    The recording is returned as-is when it is already at the target rate.
    Output length is ``ceil(T * up / down)``.
    """
    if rec.sample_rate_hz == target_rate_hz:
        return rec
    up, down = rational_ratio(rec.sample_rate_hz, target_rate_hz)
    taps = resampling_filter(up, down)
    out = signal.resample_poly(rec.data, up, down, axis=1, window=taps)
    expected = math.ceil(rec.n_samples * up / down)
    return rec.with_data(out[:, :expected], sample_rate_hz=float(target_rate_hz))


def design_bandpass(low_hz: float, high_hz: float, fs: float, order: int = FILTER_ORDER) -> np.ndarray:
    if not 0 < low_hz < high_hz < fs / 2:
        raise BandOutOfRange(f"band ({low_hz}, {high_hz}) Hz outside (0, {fs / 2}) Hz")
    return signal.butter(order, [low_hz, high_hz], btype="bandpass", fs=fs, output="sos")


def filter_rows(data: np.ndarray, sos: np.ndarray, fs: float, low_hz: float) -> np.ndarray:
    """Zero-phase (forward-backward) filtering of each row.

    Rows are mirror-extended by three periods of the low cutoff (capped by
    the signal length) to tame start-up transients.
    """
    n = data.shape[-1]
    padlen = min(n - 1, 3 * int(math.ceil(fs / low_hz)))
    return signal.sosfiltfilt(sos, data, axis=-1, padtype="even", padlen=max(padlen, 0))


def bandpass(rec: Recording, low_hz: float, high_hz: float, order: int = FILTER_ORDER) -> Recording:
    """Zero-phase Butterworth band-pass applied to every channel."""
    sos = design_bandpass(low_hz, high_hz, rec.sample_rate_hz, order)
    return rec.with_data(filter_rows(rec.data, sos, rec.sample_rate_hz, low_hz))


def center_dc(rec: Recording) -> Recording:
    return rec.with_data(rec.data - rec.data.mean(axis=1, keepdims=True))


def epoch(rec: Recording, cfg: PreprocConfig) -> list[Epoch]:
    """Cut ``rec`` into fixed-length windows, each re-centred per channel.

    A trailing remainder shorter than one window is dropped.
    """
    length = cfg.epoch_samples
    if rec.n_samples < length:
        raise RecordingTooShort(
            f"{rec.n_samples} samples, need at least {length} for one epoch"
        )
    hop = max(1, int(round(length * (1 - cfg.epoch_overlap_fraction))))
    epochs = []
    for start in range(0, rec.n_samples - length + 1, hop):
        window = rec.data[:, start : start + length]
        epochs.append(
            Epoch(
                data=window - window.mean(axis=1, keepdims=True),
                sample_rate_hz=rec.sample_rate_hz,
                subject_id=rec.subject_id,
                session_id=rec.session_id,
                label=rec.label,
                start=start,
            )
        )
    return epochs


def prepare(rec: Recording, cfg: PreprocConfig) -> Recording:
    """Resample, band-pass and centre a recording (everything before epoching)."""
    rec = resample(rec, cfg.target_rate_hz)
    rec = bandpass(rec, *cfg.band, order=cfg.filter_order)
    return center_dc(rec)


def preprocess(rec: Recording, cfg: PreprocConfig | None = None) -> list[Epoch]:
    cfg = cfg or PreprocConfig()
    return epoch(prepare(rec, cfg), cfg)
