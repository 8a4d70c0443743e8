"""Run configuration: a JSON file plus command-line and environment overrides.

Relative paths in the file resolve against the file's own directory.
Precedence for the seed: ``--seed`` flag, then ``NEUROBAND_SEED``, then the
file.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError, PreprocessError
from .features import WelchConfig
from .classifiers.pipeline import DEFAULT_GRIDS, KINDS
from .preprocess import PreprocConfig
from .wavelet import WaveletSpec

SEED_ENV = "NEUROBAND_SEED"
_U64_MAX = (1 << 64) - 1

_TOP_KEYS = {
    "manifest", "output_dir", "csv_sample_rate_hz", "preproc", "welch", "wavelet", "aggregate",
    "split", "classifier", "grids", "params", "refit_with_val", "attention_dir", "features",
    "model",
}


@dataclass(frozen=True)
class SplitConfig:
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2)
    seed: int = 0
    file: Path | None = None


@dataclass(frozen=True)
class RunConfig:
    manifest: Path | None = None
    output_dir: Path = Path("neuroband_out")
    csv_sample_rate_hz: float | None = None
    preproc: PreprocConfig = field(default_factory=PreprocConfig)
    welch: WelchConfig = field(default_factory=WelchConfig)
    wavelet: WaveletSpec = field(default_factory=WaveletSpec)
    aggregate: str = "mean"
    split: SplitConfig = field(default_factory=SplitConfig)
    classifier: str = "qda"
    grids: dict = field(default_factory=lambda: {k: dict(v) for k, v in DEFAULT_GRIDS.items()})
    params: dict = field(default_factory=dict)
    refit_with_val: bool = True
    attention_dir: Path | None = None
    features: Path | None = None
    model: Path | None = None

    @property
    def seed(self) -> int:
        return self.split.seed

    @property
    def features_path(self) -> Path:
        return self.features or self.output_dir / "features.csv"

    @property
    def model_path(self) -> Path:
        return self.model or self.output_dir / "model.json"

    @property
    def split_path(self) -> Path:
        return self.split.file or self.output_dir / "split.txt"


def _path(base: Path, value) -> Path | None:
    if value is None:
        return None
    p = Path(value)
    return p if p.is_absolute() else base / p


def parse_seed(value) -> int:
    try:
        seed = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"seed must be an integer, got {value!r}") from None
    if not 0 <= seed <= _U64_MAX:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def config_from_dict(doc: dict, base: Path = Path(".")) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    try:
        pre = dict(doc.get("preproc", {}))
        if "band" in pre:
            pre["band"] = tuple(pre["band"])
        preproc = PreprocConfig(**pre)
        welch = WelchConfig(**doc.get("welch", {}))
        wavelet = WaveletSpec(**doc.get("wavelet", {}))
        sp = dict(doc.get("split", {}))
        split = SplitConfig(
            ratios=tuple(float(r) for r in sp.get("ratios", (0.6, 0.2, 0.2))),
            seed=parse_seed(sp.get("seed", 0)),
            file=_path(base, sp.get("file")),
        )
    except (TypeError, ValueError, PreprocessError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None
    if len(split.ratios) != 3 or abs(sum(split.ratios) - 1) > 1e-9 or min(split.ratios) <= 0:
        raise ConfigError(f"split ratios must be three positive numbers summing to 1: {split.ratios}")
    classifier = doc.get("classifier", "qda")
    if classifier not in KINDS:
        raise ConfigError(f"classifier must be one of {KINDS}, got {classifier!r}")
    grids = {k: dict(v) for k, v in DEFAULT_GRIDS.items()}
    for kind, grid in doc.get("grids", {}).items():
        if kind not in KINDS or not isinstance(grid, dict):
            raise ConfigError(f"invalid grid for {kind!r}")
        grids[kind] = {k: list(v) for k, v in grid.items()}
    aggregate = doc.get("aggregate", "mean")
    if aggregate not in ("mean", "median"):
        raise ConfigError(f"aggregate must be 'mean' or 'median', got {aggregate!r}")
    rate = doc.get("csv_sample_rate_hz")
    if rate is not None and not (isinstance(rate, (int, float)) and rate > 0):
        raise ConfigError("csv_sample_rate_hz must be a positive number")
    return RunConfig(
        manifest=_path(base, doc.get("manifest")),
        output_dir=_path(base, doc.get("output_dir", "neuroband_out")),
        csv_sample_rate_hz=None if rate is None else float(rate),
        preproc=preproc,
        welch=welch,
        wavelet=wavelet,
        aggregate=aggregate,
        split=split,
        classifier=classifier,
        grids=grids,
        params=dict(doc.get("params", {})),
        refit_with_val=bool(doc.get("refit_with_val", True)),
        attention_dir=_path(base, doc.get("attention_dir")),
        features=_path(base, doc.get("features")),
        model=_path(base, doc.get("model")),
    )


def load_config(path: str | os.PathLike | None, env: dict | None = None) -> RunConfig:
    """Read a config file (or defaults when ``path`` is None) and apply the seed env override."""
    env = os.environ if env is None else env
    if path is None:
        cfg = RunConfig()
    else:
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from None
        cfg = config_from_dict(doc, path.parent)
    if env.get(SEED_ENV):
        cfg = replace(cfg, split=replace(cfg.split, seed=parse_seed(env[SEED_ENV])))
    return cfg
