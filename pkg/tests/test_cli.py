import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from synth import write_synthetic_cohort
from neuroband.attention import AttentionMap, write_attention_file
from neuroband.cli import main
from neuroband.config import SEED_ENV, config_from_dict, load_config
from neuroband.errors import ConfigError


def write_cfg(root: Path, **extra) -> Path:
    doc = {"manifest": "manifest.txt", "output_dir": "out", **extra}
    path = root / "cfg.json"
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture(scope="module")
def cohort(tmp_path_factory):
    root = tmp_path_factory.mktemp("cohort")
    write_synthetic_cohort(root, n_subjects=16, seconds=8, snr_db=10, seed=1)
    return root


@pytest.fixture
def work(cohort, tmp_path):
    for p in cohort.iterdir():
        shutil.copy(p, tmp_path / p.name)
    return tmp_path


@pytest.fixture
def trio(tmp_path):
    write_synthetic_cohort(tmp_path, n_subjects=3, seconds=8, seed=2)
    return tmp_path


class TestConfig:
    def test_defaults(self):
        cfg = load_config(None, env={})
        assert cfg.seed == 0 and cfg.classifier == "qda" and cfg.preproc.target_rate_hz == 256

    def test_relative_paths(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path), env={})
        assert cfg.manifest == tmp_path / "manifest.txt"
        assert cfg.features_path == tmp_path / "out" / "features.csv"

    def test_nested_sections(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, preproc={"epoch_seconds": 2, "band": [1, 40]},
                                    welch={"segment_len": 256}, split={"seed": 9, "ratios": [0.5, 0.25, 0.25]}),
                          env={})
        assert cfg.preproc.epoch_samples == 512 and cfg.preproc.band == (1, 40)
        assert cfg.welch.segment_len == 256 and cfg.seed == 9

    def test_env_seed(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, split={"seed": 3}), env={SEED_ENV: "17"})
        assert cfg.seed == 17

    @pytest.mark.parametrize("doc", [
        {"bogus": 1}, {"split": {"seed": -1}}, {"split": {"seed": 2**64}}, {"split": {"ratios": [0.5, 0.5]}},
        {"classifier": "svm"}, {"aggregate": "max"}, {"preproc": {"band": [0.5, 200]}},
        {"preproc": {"unknown": 1}}, {"csv_sample_rate_hz": -5}, {"grids": {"svm": {}}},
    ])
    def test_invalid(self, doc):
        with pytest.raises(ConfigError):
            config_from_dict(doc)

    def test_bad_json(self, tmp_path):
        (tmp_path / "c.json").write_text("{")
        with pytest.raises(ConfigError):
            load_config(tmp_path / "c.json")


class TestExtract:
    def test_three_sessions(self, trio):
        assert main(["--config", str(write_cfg(trio)), "extract"]) == 0
        lines = (trio / "out" / "features.csv").read_text().splitlines()
        assert len(lines) == 4 and lines[0].startswith("subject_id,label,fft_delta")
        assert len(list((trio / "out" / "psd").iterdir())) == 3

    def test_partial_failure(self, trio, capsys):
        (trio / "sub01_ses0.edf").write_bytes(b"garbage")
        cfg = str(write_cfg(trio))
        assert main(["--config", cfg, "extract"]) == 2
        assert "warning" in capsys.readouterr().err
        assert len((trio / "out" / "features.csv").read_text().splitlines()) == 3
        assert main(["--config", cfg, "--allow-partial", "extract"]) == 0

    def test_all_failed(self, trio):
        for p in trio.glob("*.edf"):
            p.write_bytes(b"garbage")
        assert main(["--config", str(write_cfg(trio)), "extract"]) == 3

    def test_missing_file_is_skipped(self, trio):
        (trio / "sub02_ses0.edf").unlink()
        assert main(["--config", str(write_cfg(trio)), "extract", "--allow-partial"]) == 0

    def test_deterministic(self, trio):
        cfg = str(write_cfg(trio))
        main(["--config", cfg, "extract"])
        first = (trio / "out" / "features.csv").read_bytes()
        psd = (trio / "out" / "psd" / "sub00_sub00_ses0.csv").read_bytes()
        main(["--config", cfg, "extract"])
        assert (trio / "out" / "features.csv").read_bytes() == first
        assert (trio / "out" / "psd" / "sub00_sub00_ses0.csv").read_bytes() == psd

    def test_jobs_same_output(self, trio):
        cfg = str(write_cfg(trio))
        main(["--config", cfg, "extract"])
        serial = (trio / "out" / "features.csv").read_bytes()
        assert main(["--config", cfg, "--jobs", "2", "--output-dir", str(trio / "par"), "extract"]) == 0
        assert (trio / "par" / "features.csv").read_bytes() == serial

    def test_dry_run_writes_nothing(self, trio):
        assert main(["--config", str(write_cfg(trio)), "--dry-run", "extract"]) == 0
        assert not (trio / "out").exists()

    def test_csv_recordings(self, tmp_path):
        from neuroband.ingest import Recording, write_csv_matrix

        def writer(path, data, fs):
            write_csv_matrix(path.with_suffix(".csv"), Recording(data, ("a", "b"), fs))

        man = write_synthetic_cohort(tmp_path, n_subjects=3, seconds=8, writer=writer)
        man.write_text(man.read_text().replace(".edf", ".csv"))
        cfg = write_cfg(tmp_path, csv_sample_rate_hz=256)
        assert main(["--config", str(cfg), "extract"]) == 0


class TestConfigErrors:
    def test_missing_config(self, tmp_path):
        assert main(["--config", str(tmp_path / "nope.json"), "extract"]) == 1

    def test_missing_manifest(self, tmp_path):
        assert main(["--config", str(write_cfg(tmp_path)), "extract"]) == 1

    def test_bad_jobs(self, trio):
        assert main(["--config", str(write_cfg(trio)), "--jobs", "0", "extract"]) == 1

    def test_bad_seed(self, trio):
        assert main(["--config", str(write_cfg(trio)), "--seed", "abc", "extract"]) == 1

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1


def run_pipeline(root, *extra):
    cfg = str(write_cfg(root))
    assert main(["--config", cfg, *extra, "extract"]) == 0
    assert main(["--config", cfg, *extra, "gridsearch"]) == 0
    return cfg


class TestModelCommands:
    def test_separable_report(self, work, capsys):
        cfg = run_pipeline(work)
        assert main(["--config", cfg, "evaluate"]) == 0
        out = work / "out"
        line = (out / "report.txt").read_text().splitlines()[2]
        assert line.split()[1] == "100.00"
        doc = json.loads((out / "report.json").read_text())
        assert doc["accuracy"] == 1.0
        assert (out / "confusion.csv").read_text().startswith("truth\\predicted,HC,AD")
        assert json.loads((out / "gridsearch.json").read_text())["kind"] == "qda"

    def test_evaluate_deterministic(self, work):
        cfg = run_pipeline(work)
        main(["--config", cfg, "evaluate"])
        first = (work / "out" / "report.json").read_bytes()
        main(["--config", cfg, "evaluate"])
        assert (work / "out" / "report.json").read_bytes() == first

    def test_gridsearch_deterministic(self, work):
        cfg = run_pipeline(work)
        model = (work / "out" / "model.json").read_bytes()
        split = (work / "out" / "split.txt").read_bytes()
        assert main(["--config", cfg, "gridsearch"]) == 0
        assert (work / "out" / "model.json").read_bytes() == model
        assert (work / "out" / "split.txt").read_bytes() == split

    def test_rf_train(self, work):
        cfg = write_cfg(work, classifier="rf", params={"n_estimators": 10})
        assert main(["--config", str(cfg), "extract"]) == 0
        assert main(["--config", str(cfg), "train"]) == 0
        assert json.loads((work / "out" / "model.json").read_text())["kind"] == "rf"
        assert main(["--config", str(cfg), "evaluate"]) == 0

    def test_classifier_flag_after_subcommand(self, work):
        cfg = str(write_cfg(work))
        main(["--config", cfg, "extract"])
        assert main(["train", "--config", cfg, "--classifier", "qda", "--seed", "4"]) == 0

    def test_tampered_split_duplicate(self, work):
        cfg = run_pipeline(work)
        split = work / "out" / "split.txt"
        first = split.read_text().splitlines()[0].split()[0]
        split.write_text(split.read_text() + f"{first} test\n")
        assert main(["--config", cfg, "evaluate"]) == 5

    def test_tampered_split_moved_subject(self, work):
        cfg = run_pipeline(work)
        split = work / "out" / "split.txt"
        lines = split.read_text().splitlines()
        moved = [ln.replace(" train", " test") if ln.endswith(" train") else ln for ln in lines]
        split.write_text("\n".join(moved) + "\n")
        assert main(["--config", cfg, "evaluate"]) == 5

    def test_schema_mismatch(self, work):
        cfg = run_pipeline(work)
        model = work / "out" / "model.json"
        doc = json.loads(model.read_text())
        doc["schema_version"] = 2
        model.write_text(json.dumps(doc))
        assert main(["--config", cfg, "evaluate"]) == 4

    def test_seed_env_and_flag(self, work, monkeypatch):
        cfg = str(write_cfg(work))
        assert main(["--config", cfg, "extract"]) == 0
        feats = ["--features", str(work / "out" / "features.csv")]

        def split_for(label, env, *flag):
            monkeypatch.setenv(SEED_ENV, env)
            assert main(["--config", cfg, "--output-dir", str(work / label), *flag, "train", *feats]) == 0
            return (work / label / "split.txt").read_bytes()

        env12 = split_for("env12", "12")
        assert split_for("flag12", "11", "--seed", "12") == env12
        assert split_for("env11", "11") != env12

    def test_dry_run_gridsearch(self, work):
        cfg = str(write_cfg(work))
        main(["--config", cfg, "extract"])
        before = sorted(p.name for p in (work / "out").iterdir())
        assert main(["--config", cfg, "--dry-run", "gridsearch"]) == 0
        assert sorted(p.name for p in (work / "out").iterdir()) == before

    def test_missing_features(self, work):
        assert main(["--config", str(write_cfg(work)), "gridsearch"]) == 1

    def test_log_is_sidecar(self, work):
        run_pipeline(work)
        log = (work / "out" / "neuroband.log").read_text()
        assert "gridsearch" in log


class TestKlAndBandsplit:
    def test_kl(self, tmp_path, rng):
        att = tmp_path / "att"
        att.mkdir()
        for k in range(4):
            write_attention_file(att / f"m{k}.txt", AttentionMap(f"m{k}", ("correct", "incorrect")[k % 2],
                                                                 rng.uniform(0, 1, (2, 3))))
        cfg = write_cfg(tmp_path, attention_dir="att")
        assert main(["--config", str(cfg), "kl"]) == 0
        doc = json.loads((tmp_path / "out" / "kl_report.json").read_text())
        assert doc["pair_count"] == 4
        first = (tmp_path / "out" / "kl_report.json").read_bytes()
        main(["--config", str(cfg), "kl"])
        assert (tmp_path / "out" / "kl_report.json").read_bytes() == first

    def test_kl_missing_group(self, tmp_path):
        att = tmp_path / "att"
        att.mkdir()
        write_attention_file(att / "a.txt", AttentionMap("a", "correct", np.ones((1, 2))))
        assert main(["--config", str(write_cfg(tmp_path)), "kl", "--attention-dir", str(att)]) == 2

    def test_bandsplit(self, trio):
        assert main(["--config", str(write_cfg(trio)), "bandsplit"]) == 0
        files = sorted(p.name for p in (trio / "out" / "bandsplit").iterdir())
        assert len(files) == 15 and "sub00_sub00_ses0_alpha.csv" in files
