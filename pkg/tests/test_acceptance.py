"""End-to-end acceptance checks; each test carries a ``criterion`` marker and
the run ends with one PASS/FAIL/SKIP line per criterion."""

import json
import os
import time
from itertools import product

import numpy as np
import pytest

from edf_fixture_writer import edf_bytes, write_edf
from oracles import brute_auroc, gaussian_oracle
from synth import tone, write_synthetic_cohort
from neuroband.attention import AttentionMap, kl_divergence, normalize_map, pairwise_kl_report
from neuroband.classifiers import fit_pipeline, fit_qda, grid_search, qda_predict
from neuroband.classifiers.pipeline import model_to_dict
from neuroband.cli import main
from neuroband.errors import MalformedHeader, TruncatedData
from neuroband.features import DatasetSplit, SessionFeatures, feature_matrix, read_features_csv, split_by_subject
from neuroband.ingest import read_edf
from neuroband.metrics import auroc_binary, evaluate
from neuroband.wavelet import WaveletSpec, dwt_band_features, dyadic_interval, max_level, wavedec
from neuroband.welch import band_powers, fft_length_for, welch_psd

ADFTD_ENV = "NEUROBAND_ADFTD_FEATURES"
ADFTD_QDA_F1 = 61.19


@pytest.mark.criterion("C1 ADFTD QDA macro-F1 within 5 points of 61.19")
@pytest.mark.skipif(not os.environ.get(ADFTD_ENV), reason=f"set {ADFTD_ENV} to a features.csv extracted from ADFTD")
def test_c1_adftd_recipe():
    rows = read_features_csv(os.environ[ADFTD_ENV])
    for seed in range(5):
        split = split_by_subject(rows, seed=seed)
        gs = grid_search("qda", split, seed=seed)
        X, y = feature_matrix(split.test)
        pred, scores = gs.refit_model.predict(X)
        f1 = 100 * evaluate(y, pred, scores, gs.refit_model.n_classes).macro_f1
        assert abs(f1 - ADFTD_QDA_F1) <= 5.0, f"seed {seed}: macro-F1 {f1:.2f}"


@pytest.mark.criterion("C2 synthetic 40-subject pipeline accuracy >= 95% in <= 60 s")
def test_c2_synthetic_pipeline(tmp_path):
    write_synthetic_cohort(tmp_path, n_subjects=40, snr_db=6, seed=0)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"manifest": "manifest.txt", "output_dir": "out", "classifier": "qda"}))
    t0 = time.perf_counter()
    for cmd in ("extract", "gridsearch", "evaluate"):
        assert main(["--config", str(cfg), "--seed", "0", cmd]) == 0
    elapsed = time.perf_counter() - t0
    rep = json.loads((tmp_path / "out" / "report.json").read_text())
    where = dict(ln.split() for ln in (tmp_path / "out" / "split.txt").read_text().splitlines())
    parts = {p: {s for s, q in where.items() if q == p} for p in ("train", "val", "test")}
    assert not (parts["train"] & parts["test"]) and not (parts["val"] & parts["test"])
    assert rep["accuracy"] >= 0.95, rep["accuracy"]
    assert elapsed <= 60.0, elapsed


@pytest.mark.criterion("C3 wavelet Parseval on 200 signals to 1e-9 in <= 5 s")
def test_c3_wavelet_parseval():
    g = np.random.default_rng(3)
    spec = WaveletSpec()
    lengths = (256, 512, 1000, 1024)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(200):
        x = g.standard_normal(lengths[i % 4]) * g.uniform(0.1, 100)
        a, ds = wavedec(x, spec, max_level(x.size, spec.filter_len))
        energy = a @ a + sum(d @ d for d in ds)
        worst = max(worst, abs(energy - x @ x) / (x @ x))
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-9, worst
    assert elapsed <= 5.0, elapsed


@pytest.mark.criterion("C4 max_level(256, 8, 8) = 5 and approximation band (0, 4) Hz")
def test_c4_level_and_approximation():
    assert max_level(256, 8, 8) == 5
    assert dyadic_interval(0, 256.0, 5) == (0.0, 4.0)
    # the same geometry drives the feature extractor on a 1 s, 256 Hz epoch
    assert dwt_band_features(tone(2, 256, 1), 256.0).shape == (5,)


@pytest.mark.criterion("C5 Welch 10 Hz tone: alpha >= 0.99, sum 1 +- 1e-9, power within 2%")
def test_c5_welch_tone():
    fs = 256.0
    x = tone(10, fs, 8)
    psd = welch_psd(x, fs, 1024, 0.5, nfft=fft_length_for(1024, fs))
    rel = band_powers(psd).relative[0]
    assert rel[2] >= 0.99
    assert abs(rel.sum() - 1) <= 1e-9
    total = np.trapezoid(psd.psd[0], psd.freqs_hz)
    assert abs(total - 0.5) <= 0.02 * 0.5


@pytest.mark.criterion("C6 QDA equals explicit-inverse Gaussian oracle on 100 problems")
def test_c6_qda_oracle():
    g = np.random.default_rng(6)
    worst = 0.0
    for _ in range(100):
        K, k = int(g.integers(2, 4)), int(g.integers(1, 6))
        n = int(g.integers(K * (k + 2), 201))
        y = np.concatenate([np.arange(K), g.integers(0, K, n - K)])
        while np.bincount(y, minlength=K).min() < k + 2:
            y = np.concatenate([np.arange(K), g.integers(0, K, n - K)])
        X = g.standard_normal((n, k)) * g.uniform(0.5, 3, k) + 1.5 * y[:, None]
        reg = float(g.choice([0.0, 1e-3, 0.1, 0.5]))
        labels, log_post = qda_predict(fit_qda(X, y, reg, K), X)
        ref = gaussian_oracle(X, y, reg, K)
        np.testing.assert_array_equal(labels, np.argmax(ref, axis=1))
        worst = max(worst, float(np.max(np.abs(log_post - ref))))
    assert worst <= 1e-8, worst


@pytest.mark.criterion("C7 AUROC equals exhaustive pair counting on 500 instances")
def test_c7_auroc_bruteforce():
    g = np.random.default_rng(7)
    for _ in range(500):
        n = int(g.integers(2, 51))
        pos = np.zeros(n, dtype=bool)
        pos[: int(g.integers(1, n))] = True
        g.shuffle(pos)
        # coarse scores so ties are common
        s = g.integers(0, int(g.integers(2, 12)), n).astype(float)
        assert abs(auroc_binary(pos, s) - brute_auroc(pos, s)) <= 1e-12


@pytest.mark.criterion("C8 KL identity, hand pair and 2+2 pairwise report")
def test_c8_kl():
    g = np.random.default_rng(8)
    for _ in range(100):
        w = g.uniform(0, 1, (int(g.integers(1, 6)), int(g.integers(1, 9))))
        p = normalize_map(AttentionMap("m", "correct", w))
        assert abs(kl_divergence(p, p)) <= 1e-12
    assert round(kl_divergence([0.5, 0.5], [0.9, 0.1]), 5) == 0.51083
    assert round(kl_divergence([0.9, 0.1], [0.5, 0.5]), 5) == 0.36806

    maps = [AttentionMap(f"s{i}", o, g.uniform(0, 1, (2, 3)))
            for i, o in enumerate(("correct", "incorrect", "correct", "incorrect"))]
    rep = pairwise_kl_report(maps)
    flat = {m.sample_id: (m.weights.ravel() + 1e-10) / (m.weights.ravel() + 1e-10).sum() for m in maps}
    fwd, bwd = [], []
    for c, i in product(("s0", "s2"), ("s1", "s3")):
        P, Q = flat[c], flat[i]
        fwd.append(sum(a * np.log(a / b) for a, b in zip(P, Q)))
        bwd.append(sum(b * np.log(b / a) for a, b in zip(P, Q)))
    assert rep.pair_count == 4
    assert rep.kl_correct_vs_incorrect == pytest.approx(sum(fwd) / 4, abs=1e-12)
    assert rep.kl_incorrect_vs_correct == pytest.approx(sum(bwd) / 4, abs=1e-12)


def _rows(X, y, prefix):
    return tuple(SessionFeatures.from_vector(f"{prefix}{i}", int(c), x) for i, (x, c) in enumerate(zip(X, y)))


def _snapshot(model) -> str:
    return json.dumps(model_to_dict(model))


@pytest.mark.criterion("C9 fitted transforms and classifier ignore val/test mutation")
@pytest.mark.parametrize("kind,params", [("qda", {"reg_lambda": 0.01, "retained_variance": 0.99}),
                                         ("rf", {"n_estimators": 5, "retained_variance": 0.95})])
def test_c9_leakage_guard(kind, params):
    g = np.random.default_rng(9)
    y = np.tile([0, 1], 30)
    X = g.standard_normal((60, 13)) + 0.8 * y[:, None]
    tr, va, te = slice(0, 36), slice(36, 48), slice(48, 60)

    # in-place mutation of every array after fitting
    Xfit = X[tr].copy()
    model = fit_pipeline(kind, params, Xfit, y[tr], seed=3)
    before = _snapshot(model)
    arrays = [model.standardizer.means.copy(), model.standardizer.stds.copy(), model.pca.components.copy()]
    Xva, Xte = X[va].copy(), X[te].copy()
    model.predict(Xva)
    model.predict(Xte)
    Xva *= -7.0
    Xte += 1e6
    Xfit[:] = 0.0
    model.predict(Xva)
    assert _snapshot(model) == before
    for a, b in zip(arrays, [model.standardizer.means, model.standardizer.stds, model.pca.components]):
        assert a.tobytes() == b.tobytes()

    # the test partition never reaches the grid search
    def search(Xtest):
        split = DatasetSplit(_rows(X[tr], y[tr], "a"), _rows(X[va], y[va], "b"),
                             _rows(Xtest, y[te], "c"), 0, (0.6, 0.2, 0.2))
        return _snapshot(grid_search(kind, split, {k: [v] for k, v in params.items()}, seed=3).refit_model)

    assert search(X[te]) == search(g.standard_normal((12, 13)) * 50)


@pytest.mark.criterion("C10 EDF round trip within 0.5 LSB; truncated and corrupt files raise")
def test_c10_edf(tmp_path):
    g = np.random.default_rng(10)
    for i in range(20):
        fs = int(g.choice([128, 200, 256, 500]))
        C, records = int(g.integers(1, 5)), int(g.integers(1, 4))
        pmin, pmax = -float(g.uniform(50, 5000)), float(g.uniform(50, 5000))
        data = g.uniform(0.999 * pmin, 0.999 * pmax, (C, fs * records))
        path = tmp_path / f"r{i}.edf"
        write_edf(path, data, fs, [f"ch{c}" for c in range(C)], pmin=pmin, pmax=pmax)
        rec = read_edf(path)
        pmin, pmax = float(f"{pmin:g}"), float(f"{pmax:g}")
        lsb = (pmax - pmin) / 65535
        assert rec.data.shape == data.shape and rec.sample_rate_hz == fs
        assert np.max(np.abs(rec.data - data)) <= 0.5 * lsb * (1 + 1e-9)

    raw = edf_bytes([g.integers(-1000, 1000, 512)] * 2, [256, 256], ["a", "b"])
    (tmp_path / "trunc.edf").write_bytes(raw[:-100])
    with pytest.raises(TruncatedData):
        read_edf(tmp_path / "trunc.edf")
    bad = bytearray(raw)
    bad[252:256] = b"xx  "  # signal count
    (tmp_path / "bad.edf").write_bytes(bytes(bad))
    with pytest.raises(MalformedHeader):
        read_edf(tmp_path / "bad.edf")
