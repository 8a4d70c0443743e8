"""Welch power spectral density, band powers and spectral summary statistics."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    GridDoesNotCoverBand,
    NoCompleteSegment,
    ResolutionTooCoarse,
    SegmentTooLong,
)

EPS = 1e-12
DEFAULT_SEGMENT_LEN = 1024
DEFAULT_OVERLAP = 0.5
MAX_RESOLUTION_HZ = 0.5


class BandDef(NamedTuple):
    name: str
    f_min_hz: float
    f_max_hz: float


CANONICAL_BANDS: tuple[BandDef, ...] = (
    BandDef("delta", 0.5, 4.0),
    BandDef("theta", 4.0, 8.0),
    BandDef("alpha", 8.0, 13.0),
    BandDef("beta", 13.0, 30.0),
    BandDef("gamma", 30.0, 45.0),
)
BAND_NAMES = tuple(b.name for b in CANONICAL_BANDS)
SUMMARY_RANGE = (CANONICAL_BANDS[0].f_min_hz, CANONICAL_BANDS[-1].f_max_hz)


@dataclass(frozen=True)
class PsdEstimate:
    """One-sided PSD per channel: ``psd`` is C x F in units^2/Hz."""

    freqs_hz: np.ndarray
    psd: np.ndarray
    segment_len: int
    overlap_fraction: float
    n_segments: int = 1

    @property
    def resolution_hz(self) -> float:
        return float(self.freqs_hz[1] - self.freqs_hz[0])


@dataclass(frozen=True)
class BandPowerSet:
    absolute: np.ndarray
    relative: np.ndarray
    epsilon: float = EPS


@dataclass(frozen=True)
class SpectralSummaries:
    mean_freq_hz: float
    median_freq_hz: float
    spectral_entropy_nats: float


def hann(n: int) -> np.ndarray:
    """Symmetric Hann window ``0.5 * (1 - cos(2 pi k / (n - 1)))``."""
    if n == 1:
        return np.ones(1)
    k = np.arange(n)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * k / (n - 1)))


def default_segment_len(n_samples: int, preferred: int = DEFAULT_SEGMENT_LEN) -> int:
    """``preferred`` if it fits, else the largest power of two <= ``n_samples``."""
    if n_samples >= preferred:
        return preferred
    return 1 << (int(n_samples).bit_length() - 1)


def fft_length_for(segment_len: int, fs: float, max_resolution_hz: float = MAX_RESOLUTION_HZ) -> int:
    """Smallest power-of-two FFT length >= segment_len giving bins <= max_resolution_hz."""
    nfft = segment_len
    while fs / nfft > max_resolution_hz:
        nfft *= 2
    return nfft


def welch_psd(
    data: np.ndarray,
    fs: float,
    segment_len: int = DEFAULT_SEGMENT_LEN,
    overlap_fraction: float = DEFAULT_OVERLAP,
    nfft: int | None = None,
) -> PsdEstimate:
    """Estimate the PSD of each row of ``data`` with Welch's method.

    Segments are mean-detrended, Hann-windowed and averaged; the spectrum is
    density-scaled by ``1 / (fs * sum(w**2))`` and folded to one side.

    Parameters
    ----------
    data : array_like
        ``(C, T)`` or ``(T,)`` signal.
    fs : float
        Sampling rate in Hz.
    segment_len : int
        Samples per segment; must be even and no longer than the signal.
    overlap_fraction : float
        Fraction of ``segment_len`` shared by consecutive segments, in [0, 1).
    nfft : int, optional
        FFT length (zero-padding); defaults to ``segment_len``.

    Returns
    -------
    PsdEstimate
    """
    x = np.atleast_2d(np.asarray(data, dtype=np.float64))
    n = x.shape[1]
    if segment_len > n:
        raise SegmentTooLong(f"segment_len {segment_len} exceeds signal length {n}")
    if segment_len < 2 or segment_len % 2:
        raise ValueError("segment_len must be an even integer >= 2")
    if not 0 <= overlap_fraction < 1:
        raise ValueError("overlap_fraction must lie in [0, 1)")
    nfft = segment_len if nfft is None else int(nfft)
    if nfft < segment_len or nfft % 2:
        raise ValueError("nfft must be even and >= segment_len")

    hop = max(1, int(round(segment_len * (1 - overlap_fraction))))
    starts = np.arange(0, n - segment_len + 1, hop)
    if starts.size == 0:
        raise NoCompleteSegment("no complete segment fits the signal")

    w = hann(segment_len)
    idx = starts[:, None] + np.arange(segment_len)[None, :]
    segs = x[:, idx]  # (C, S, N)
    segs = segs - segs.mean(axis=-1, keepdims=True)
    spec = np.abs(np.fft.rfft(segs * w, n=nfft, axis=-1)) ** 2
    spec /= fs * np.sum(w**2)
    spec[..., 1:-1] *= 2.0
    psd = spec.mean(axis=1)
    freqs = np.arange(nfft // 2 + 1) * (fs / nfft)
    return PsdEstimate(freqs, psd, segment_len, overlap_fraction, n_segments=int(starts.size))


def _interp_rows(freqs: np.ndarray, values: np.ndarray, x: float) -> np.ndarray:
    i = int(np.clip(np.searchsorted(freqs, x, side="right") - 1, 0, len(freqs) - 2))
    t = (x - freqs[i]) / (freqs[i + 1] - freqs[i])
    return values[:, i] + t * (values[:, i + 1] - values[:, i])


def integrate_band(freqs: np.ndarray, values: np.ndarray, f_lo: float, f_hi: float) -> np.ndarray:
    """Trapezoidal integral of each row over ``[f_lo, f_hi]``.

    The spectrum is treated as piecewise linear between grid points, so a
    band edge falling inside a bin contributes only its share of that bin.
    """
    inner = (freqs > f_lo) & (freqs < f_hi)
    xs = np.concatenate([[f_lo], freqs[inner], [f_hi]])
    ys = np.column_stack([_interp_rows(freqs, values, f_lo), values[:, inner],
                          _interp_rows(freqs, values, f_hi)])
    return np.trapezoid(ys, xs, axis=1)


def band_powers(psd: PsdEstimate, bands: Sequence[BandDef] = CANONICAL_BANDS) -> BandPowerSet:
    """Absolute and relative power of each channel in each band."""
    if psd.resolution_hz > MAX_RESOLUTION_HZ + 1e-12:
        raise ResolutionTooCoarse(
            f"grid spacing {psd.resolution_hz:g} Hz cannot resolve the 0.5 Hz delta edge"
        )
    absolute = np.column_stack(
        [integrate_band(psd.freqs_hz, psd.psd, b.f_min_hz, b.f_max_hz) for b in bands]
    )
    relative = absolute / (absolute.sum(axis=1, keepdims=True) + EPS)
    return BandPowerSet(absolute, relative)


def _median_from_masses(freqs: np.ndarray, p: np.ndarray) -> float:
    total = p.sum()
    if total <= 0:
        return 0.0
    p = p / total
    # cumulative mass at bin centres: half of each bin's own mass
    c = np.cumsum(p) - 0.5 * p
    flat = np.flatnonzero(np.abs(c - 0.5) <= 1e-12)
    if flat.size:
        # the curve sits at one half over a run of bins: take the run's midpoint
        return float(0.5 * (freqs[flat[0]] + freqs[flat[-1]]))
    i = int(np.flatnonzero(c > 0.5)[0])
    if i == 0:
        return float(freqs[0])
    return float(freqs[i - 1] + (0.5 - c[i - 1]) / (c[i] - c[i - 1]) * (freqs[i] - freqs[i - 1]))


def spectral_masses(psd: PsdEstimate, f_range=SUMMARY_RANGE) -> tuple[np.ndarray, np.ndarray]:
    """Bin frequencies inside ``f_range`` and per-channel normalised bin masses."""
    lo, hi = f_range
    f = psd.freqs_hz
    if f[0] > lo + 1e-9 or f[-1] < hi - 1e-9:
        raise GridDoesNotCoverBand(f"grid [{f[0]}, {f[-1]}] Hz does not cover [{lo}, {hi}] Hz")
    mask = (f >= lo - 1e-9) & (f <= hi + 1e-9)
    s = psd.psd[:, mask]
    return f[mask], s / (s.sum(axis=1, keepdims=True) + EPS)


def spectral_summaries(psd: PsdEstimate, f_range=SUMMARY_RANGE) -> SpectralSummaries:
    """Channel-averaged mean frequency, median frequency and entropy (nats)."""
    freqs, p = spectral_masses(psd, f_range)
    means, medians, entropies = [], [], []
    for row in p:
        means.append(float(np.dot(freqs, row)))
        medians.append(_median_from_masses(freqs, row))
        nz = row[row > 0]
        entropies.append(float(-np.sum(nz * np.log(nz))))
    return SpectralSummaries(float(np.mean(means)), float(np.mean(medians)), float(np.mean(entropies)))


def aggregate_fft_features(bp: BandPowerSet) -> np.ndarray:
    """Channel mean of the relative band powers, ordered delta..gamma."""
    return bp.relative.mean(axis=0)


def write_psd_csv(path, psd: PsdEstimate, channels: Sequence[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["freq_hz", *channels])
        for j, f in enumerate(psd.freqs_hz):
            writer.writerow([repr(float(f)), *(repr(float(v)) for v in psd.psd[:, j])])
