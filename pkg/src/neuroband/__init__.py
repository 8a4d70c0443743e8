"""Spectral band-power features and classical classifiers for multi-channel EEG."""

__version__ = "0.1.0"

from .errors import NeurobandError  # noqa: E402
from .ingest import Recording, load_manifest, read_edf, read_recording  # noqa: E402
from .preprocess import PreprocConfig, preprocess  # noqa: E402
from .welch import CANONICAL_BANDS, band_powers, spectral_summaries, welch_psd  # noqa: E402
from .wavelet import WaveletSpec, dwt, dwt_band_features, max_level  # noqa: E402
from .features import SessionFeatures, session_features, split_by_subject  # noqa: E402
from .metrics import evaluate  # noqa: E402
from .attention import pairwise_kl_report  # noqa: E402

__all__ = [
    "CANONICAL_BANDS", "NeurobandError", "PreprocConfig", "Recording", "SessionFeatures",
    "WaveletSpec", "band_powers", "dwt", "dwt_band_features", "evaluate", "load_manifest",
    "max_level", "pairwise_kl_report", "preprocess", "read_edf", "read_recording",
    "session_features", "spectral_summaries", "split_by_subject", "welch_psd",
]
