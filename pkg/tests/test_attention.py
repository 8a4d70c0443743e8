import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from neuroband.attention import (
    AttentionMap,
    band_split,
    export_band_split,
    kl_divergence,
    kl_report_json,
    kl_report_text,
    load_attention_dir,
    normalize_map,
    pairwise_kl_report,
    read_attention_file,
    write_attention_file,
)
from neuroband.errors import AllZeroMap, LengthMismatch, MalformedAttentionFile, MissingOutcomeGroup, ShapeMismatch
from neuroband.ingest import Recording, read_csv_matrix
from neuroband.welch import BAND_NAMES

from synth import tone


def amap(w, outcome="correct", sid="x"):
    return AttentionMap(sid, outcome, np.asarray(w, dtype=float))


class TestNormalize:
    def test_uniform(self):
        np.testing.assert_allclose(normalize_map(amap(np.ones((2, 2)))), 0.25)

    def test_no_smoothing(self):
        np.testing.assert_array_equal(normalize_map(amap([[1, 0], [0, 0]]), smoothing_eps=0), [1, 0, 0, 0])

    def test_all_zero(self):
        with pytest.raises(AllZeroMap):
            normalize_map(amap(np.zeros((2, 2))))

    @given(st.integers(0, 2**32 - 1))
    def test_sums_to_one(self, seed):
        w = np.random.default_rng(seed).uniform(0, 1, (3, 5))
        assert normalize_map(amap(w)).sum() == pytest.approx(1.0, abs=1e-12)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            amap([[-1.0, 1.0]])


class TestKl:
    def test_identity(self):
        p = np.array([0.2, 0.3, 0.5])
        assert kl_divergence(p, p) == 0.0

    def test_hand_values(self):
        assert kl_divergence([0.5, 0.5], [0.9, 0.1]) == pytest.approx(0.51083, abs=5e-6)
        assert kl_divergence([0.9, 0.1], [0.5, 0.5]) == pytest.approx(0.36806, abs=5e-6)

    def test_length(self):
        with pytest.raises(LengthMismatch):
            kl_divergence([0.5, 0.5], [1.0])

    @settings(max_examples=50)
    @given(st.integers(0, 2**32 - 1))
    def test_gibbs(self, seed):
        g = np.random.default_rng(seed)
        p = normalize_map(amap(g.uniform(0, 1, (2, 4))))
        q = normalize_map(amap(g.uniform(0, 1, (2, 4))))
        assert kl_divergence(p, q) >= -1e-12


class TestPairwise:
    def test_identical(self):
        w = np.arange(1, 5.0).reshape(2, 2)
        rep = pairwise_kl_report([amap(w, "correct"), amap(w, "incorrect")])
        assert abs(rep.kl_correct_vs_incorrect) <= 1e-12 and abs(rep.kl_incorrect_vs_correct) <= 1e-12

    def test_single_pair(self):
        c, i = amap([[0.5, 0.5]], "correct"), amap([[0.9, 0.1]], "incorrect")
        rep = pairwise_kl_report([c, i])
        assert rep.pair_count == 1
        assert rep.kl_correct_vs_incorrect == pytest.approx(kl_divergence(normalize_map(c), normalize_map(i)), abs=1e-12)
        assert rep.kl_incorrect_vs_correct == pytest.approx(kl_divergence(normalize_map(i), normalize_map(c)), abs=1e-12)

    def test_two_by_two(self, rng):
        maps = [amap(rng.uniform(0, 1, (2, 3)), o, f"{o}{k}") for o in ("correct", "incorrect") for k in range(2)]
        rep = pairwise_kl_report(maps)
        P = [normalize_map(m) for m in maps[:2]]
        Q = [normalize_map(m) for m in maps[2:]]
        pq = [kl_divergence(p, q) for p in P for q in Q]
        qp = [kl_divergence(q, p) for p in P for q in Q]
        assert rep.pair_count == 4
        assert rep.kl_correct_vs_incorrect == pytest.approx(np.mean(pq), abs=1e-12)
        assert rep.kl_incorrect_vs_correct == pytest.approx(np.mean(qp), abs=1e-12)
        assert rep.std_correct_vs_incorrect == pytest.approx(np.std(pq), abs=1e-12)

    def test_order_invariant(self, rng):
        maps = [amap(rng.uniform(0, 1, (2, 3)), o, f"{o}{k}") for o in ("correct", "incorrect") for k in range(3)]
        a = pairwise_kl_report(maps)
        b = pairwise_kl_report(maps[::-1])
        assert a == b

    def test_missing_group(self):
        with pytest.raises(MissingOutcomeGroup):
            pairwise_kl_report([amap([[1.0]])])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            pairwise_kl_report([amap(np.ones((2, 2))), amap(np.ones((2, 3)), "incorrect")])

    def test_reports(self):
        rep = pairwise_kl_report([amap([[0.5, 0.5]]), amap([[0.9, 0.1]], "incorrect")])
        assert json.loads(kl_report_json(rep))["pair_count"] == 1
        assert "KL (Correct||Incorrect)" in kl_report_text(rep)
        assert "convention" in json.loads(kl_report_json(rep))


class TestAttentionFiles:
    def test_round_trip(self, tmp_path, rng):
        m = amap(rng.uniform(0, 1, (3, 4)), "incorrect", "sample 7")
        write_attention_file(tmp_path / "a.txt", m)
        back = read_attention_file(tmp_path / "a.txt")
        assert (back.sample_id, back.outcome) == ("sample 7", "incorrect")
        np.testing.assert_array_equal(back.weights, m.weights)

    def test_directory(self, tmp_path):
        write_attention_file(tmp_path / "b.txt", amap([[1.0]], "incorrect", "b"))
        write_attention_file(tmp_path / "a.txt", amap([[1.0]], "correct", "a"))
        assert [m.sample_id for m in load_attention_dir(tmp_path)] == ["a", "b"]

    @pytest.mark.parametrize("text", [
        "", "sample_id a\noutcome maybe\nshape 1 1\n1\n", "sample_id a\noutcome correct\nshape 2 1\n1\n",
        "sample_id a\noutcome correct\nshape 1 2\n1 x\n", "id a\noutcome correct\nshape 1 1\n1\n",
    ])
    def test_malformed(self, tmp_path, text):
        (tmp_path / "a.txt").write_text(text)
        with pytest.raises(MalformedAttentionFile):
            read_attention_file(tmp_path / "a.txt")


FS = 256.0


def rec(x):
    x = np.atleast_2d(x)
    return Recording(x, tuple(f"c{i}" for i in range(x.shape[0])), FS, "s", "ses1")


class TestBandSplit:
    def test_tone_routing(self):
        parts = band_split(rec(tone(10, FS, 8)))
        r = {k: np.sqrt(np.mean(v.data[0, 256:-256] ** 2)) for k, v in parts.items()}
        assert all(r["alpha"] >= 10 * r[b] for b in BAND_NAMES if b != "alpha")

    def test_zero(self):
        parts = band_split(rec(np.zeros((2, 1024))))
        assert list(parts) == list(BAND_NAMES)
        assert all(not np.any(p.data) and p.n_channels == 2 for p in parts.values())

    def test_broadband_reconstruction(self, rng):
        from neuroband.preprocess import bandpass

        x = bandpass(rec(rng.normal(size=(2, 4096))), 0.5, 45)
        total = sum(p.data for p in band_split(x).values())
        for c in range(2):
            assert np.corrcoef(total[c], x.data[c])[0, 1] >= 0.95

    def test_export(self, tmp_path, rng):
        r = rec(rng.normal(size=(2, 512)))
        paths = export_band_split(tmp_path, r, band_split(r))
        assert sorted(p.name for p in paths) == sorted(f"ses1_{b}.csv" for b in BAND_NAMES)
        back = read_csv_matrix(tmp_path / "ses1_alpha.csv", FS)
        assert back.data.shape == (2, 512)
