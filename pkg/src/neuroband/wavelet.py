"""Multilevel periodized DWT, level energies and their mapping onto EEG bands."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import EmptyIntervals, LevelOutOfRange, SignalShorterThanFilter
from .welch import CANONICAL_BANDS, EPS, SUMMARY_RANGE, BandDef

MAX_LEVEL_CAP = 8

# Daubechies reconstruction low-pass filters (orthonormal: sum = sqrt 2, sum of squares = 1).
_REC_LO = {
    "haar": (0.7071067811865476, 0.7071067811865476),
    "db2": (
        0.48296291314469025,
        0.836516303737469,
        0.22414386804185735,
        -0.12940952255092145,
    ),
    "db4": (
        0.2303778133088965,
        0.7148465705529157,
        0.6308807679298589,
        -0.027983769416859854,
        -0.18703481171909309,
        0.030841381835560764,
        0.0328830116668852,
        -0.010597401785069032,
    ),
}


@dataclass(frozen=True)
class WaveletSpec:
    """Analysis filter pair for a named orthonormal wavelet."""

    family: str = "db4"
    max_level_cap: int = MAX_LEVEL_CAP
    decomposition_lowpass: np.ndarray = field(init=False, repr=False)
    decomposition_highpass: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.family not in _REC_LO:
            raise ValueError(f"unknown wavelet {self.family!r}; known: {sorted(_REC_LO)}")
        if self.max_level_cap < 1:
            raise ValueError("max_level_cap must be >= 1")
        rec_lo = np.array(_REC_LO[self.family])
        dec_lo = rec_lo[::-1].copy()
        n = len(dec_lo)
        # quadrature mirror: dec_hi[m] = (-1)^(m+1) dec_lo[n-1-m]
        dec_hi = np.array([(-1) ** (m + 1) * dec_lo[n - 1 - m] for m in range(n)])
        object.__setattr__(self, "decomposition_lowpass", dec_lo)
        object.__setattr__(self, "decomposition_highpass", dec_hi)

    @property
    def filter_len(self) -> int:
        return len(self.decomposition_lowpass)


@dataclass(frozen=True)
class WaveletDecomposition:
    """Per-channel coefficients: ``details[j - 1]`` holds level ``j`` (finest first)."""

    levels: int
    approx: list[np.ndarray]
    details: list[list[np.ndarray]]
    sample_rate_hz: float
    signal_len: int


@dataclass(frozen=True)
class WaveletEnergySet:
    approx_energy: np.ndarray  # (C,)
    detail_energies: np.ndarray  # (C, L)
    levels: int
    sample_rate_hz: float
    band_energies: np.ndarray | None = None  # (C, B), absolute, in-range only
    band_energies_relative: np.ndarray | None = None  # (C, B)
    session_dwt: np.ndarray | None = None  # (B,)


def max_level(signal_len: int, filter_len: int, cap: int = MAX_LEVEL_CAP) -> int:
    """Deepest useful level: ``min(cap, floor(log2(signal_len / (filter_len - 1))))``.

    Computed in integers, so exact powers of two are never misrounded.
    """
    if filter_len < 2:
        raise ValueError("filter_len must be >= 2")
    if signal_len < filter_len:
        raise SignalShorterThanFilter(f"signal of {signal_len} samples, filter of {filter_len}")
    level = 0
    while (filter_len - 1) << (level + 1) <= signal_len:
        level += 1
    return min(cap, level)


def _analysis(x: np.ndarray, spec: WaveletSpec) -> tuple[np.ndarray, np.ndarray]:
    # Odd lengths: the last sample is carried into the approximation untouched,
    # which keeps the step orthogonal and the coefficient count equal to len(x).
    if x.shape[0] % 2:
        a, d = _kernels.dwt_step(x[:-1], spec.decomposition_lowpass, spec.decomposition_highpass)
        return np.append(a, x[-1]), d
    return _kernels.dwt_step(x, spec.decomposition_lowpass, spec.decomposition_highpass)


def _synthesis(a: np.ndarray, d: np.ndarray, spec: WaveletSpec) -> np.ndarray:
    if a.shape[0] == d.shape[0] + 1:
        x = _kernels.idwt_step(a[:-1], d, spec.decomposition_lowpass, spec.decomposition_highpass)
        return np.append(x, a[-1])
    return _kernels.idwt_step(a, d, spec.decomposition_lowpass, spec.decomposition_highpass)


def wavedec(x: np.ndarray, spec: WaveletSpec, levels: int) -> tuple[np.ndarray, list[np.ndarray]]:
    """Decompose a 1-D signal; returns ``(cA_L, [cD_1, ..., cD_L])``."""
    a = np.asarray(x, dtype=np.float64)
    details = []
    for _ in range(levels):
        a, d = _analysis(a, spec)
        details.append(d)
    return a, details


def waverec(approx: np.ndarray, details: Sequence[np.ndarray], spec: WaveletSpec) -> np.ndarray:
    """Inverse of :func:`wavedec`."""
    a = np.asarray(approx, dtype=np.float64)
    for d in reversed(details):
        a = _synthesis(a, d, spec)
    return a


def dwt(data: np.ndarray, fs: float, spec: WaveletSpec | None = None) -> WaveletDecomposition:
    """Multilevel DWT of each row of ``data`` at the deepest admissible level."""
    spec = spec or WaveletSpec()
    x = np.atleast_2d(np.asarray(data, dtype=np.float64))
    n = x.shape[1]
    levels = max_level(n, spec.filter_len, spec.max_level_cap)
    approx, details = [], []
    for row in x:
        a, ds = wavedec(row, spec, levels)
        approx.append(a)
        details.append(ds)
    return WaveletDecomposition(levels, approx, details, float(fs), n)


def level_energies(dec: WaveletDecomposition) -> WaveletEnergySet:
    approx = np.array([float(np.dot(a, a)) for a in dec.approx])
    detail = np.array([[float(np.dot(d, d)) for d in ds] for ds in dec.details]).reshape(
        len(dec.approx), dec.levels
    )
    return WaveletEnergySet(approx, detail, dec.levels, dec.sample_rate_hz)


def dyadic_interval(level_j: int, fs: float, levels: int) -> tuple[float, float]:
    """Nominal frequency support of detail level ``j``; ``j = 0`` is the approximation."""
    if level_j == 0:
        return (0.0, fs / 2 ** (levels + 1))
    if not 1 <= level_j <= levels:
        raise LevelOutOfRange(f"level {level_j} outside 0..{levels}")
    return (fs / 2 ** (level_j + 1), fs / 2**level_j)


def subband_intervals(levels: int, fs: float) -> list[tuple[float, float]]:
    """Intervals ordered ``[approx, detail 1, ..., detail L]``."""
    return [dyadic_interval(j, fs, levels) for j in range(levels + 1)]


def _overlap(a: tuple[float, float], b: tuple[float, float]) -> float:
    return max(0.0, min(a[1], b[1]) - max(a[0], b[0]))


def overlap_weights(
    intervals: Sequence[tuple[float, float]],
    bands: Sequence[BandDef] = CANONICAL_BANDS,
    f_range: tuple[float, float] = SUMMARY_RANGE,
) -> np.ndarray:
    """Fraction of each subband interval falling in each band, clipped to ``f_range``.

    Returns an ``(n_subbands, n_bands)`` matrix.
    """
    if len(intervals) == 0:
        raise EmptyIntervals("no subband intervals to map")
    w = np.zeros((len(intervals), len(bands)))
    for i, iv in enumerate(intervals):
        width = iv[1] - iv[0]
        if width <= 0:
            raise EmptyIntervals(f"degenerate interval {iv}")
        for b, band in enumerate(bands):
            lo = max(band.f_min_hz, f_range[0])
            hi = min(band.f_max_hz, f_range[1])
            w[i, b] = _overlap(iv, (lo, hi)) / width
    return w


def map_to_bands(
    energies: WaveletEnergySet,
    intervals: Sequence[tuple[float, float]] | None = None,
    bands: Sequence[BandDef] = CANONICAL_BANDS,
) -> WaveletEnergySet:
    """Apportion subband energies to bands by interval overlap and normalise.

    ``intervals`` defaults to the nominal dyadic supports, ordered approximation
    first then details 1..L. Energy outside the 0.5-45 Hz range is discarded
    before the per-channel normalisation.
    """
    if intervals is None:
        intervals = subband_intervals(energies.levels, energies.sample_rate_hz)
    w = overlap_weights(intervals, bands)
    sub = np.column_stack([energies.approx_energy, energies.detail_energies])
    if sub.shape[1] != w.shape[0]:
        raise EmptyIntervals(f"{w.shape[0]} intervals for {sub.shape[1]} subbands")
    band_abs = sub @ w
    rel = band_abs / (band_abs.sum(axis=1, keepdims=True) + EPS)
    return WaveletEnergySet(
        energies.approx_energy,
        energies.detail_energies,
        energies.levels,
        energies.sample_rate_hz,
        band_energies=band_abs,
        band_energies_relative=rel,
        session_dwt=rel.mean(axis=0),
    )


def dwt_band_features(data: np.ndarray, fs: float, spec: WaveletSpec | None = None) -> np.ndarray:
    """Channel-averaged relative DWT band energies (delta..gamma) of one epoch."""
    return map_to_bands(level_energies(dwt(data, fs, spec))).session_dwt
