"""End-to-end tests for the command-line interface."""

import json

import numpy as np
import pytest

from channel_cntk import cli
from channel_cntk.container import load_dataset, load_estimates


def _write_config(path, **kv):
    path.write_text(json.dumps(kv), encoding="utf-8")
    return str(path)


def _sim_config(tmp_path, **extra):
    cfg = {"seed": 11, "rows": 24, "cols": 14, "realizations": 2,
           "snr_db": 20.0, "pattern": "dense"}
    cfg.update(extra)
    return _write_config(tmp_path / "sim.json", **cfg)


class TestSimulate:
    def test_minimal_config_defaults(self, tmp_path, capsys):
        cfg = _write_config(tmp_path / "min.json", seed=3, rows=24)
        out = tmp_path / "data.bin"
        assert cli.main(["simulate", "--config", cfg, "--out", str(out)]) == 0
        manifest, records = load_dataset(out)
        assert manifest["realizations"] == 1
        assert manifest["snr_db"] == 20.0
        assert manifest["pattern"]["preset"] == "dense"
        assert len(records) == 1
        assert "seed 3" in capsys.readouterr().out

    def test_missing_seed_names_field(self, tmp_path, capsys):
        cfg = _write_config(tmp_path / "bad.json", rows=24)
        assert cli.main(["simulate", "--config", cfg,
                         "--out", str(tmp_path / "x.bin")]) == 1
        assert "seed" in capsys.readouterr().err

    def test_config_parse_error_has_line(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text('{"seed": 1,\n  broken\n}', encoding="utf-8")
        assert cli.main(["simulate", "--config", str(path),
                         "--out", str(tmp_path / "x.bin")]) == 1
        assert "line 2" in capsys.readouterr().err

    def test_byte_identical_rerun(self, tmp_path):
        cfg = _sim_config(tmp_path)
        out1, out2 = tmp_path / "a.bin", tmp_path / "b.bin"
        assert cli.main(["simulate", "--config", cfg, "--out", str(out1)]) == 0
        assert cli.main(["simulate", "--config", cfg, "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_custom_pattern_object(self, tmp_path):
        cfg = _write_config(tmp_path / "pat.json", seed=5, rows=24,
                            pattern={"sc_spacing": 4, "sym_spacing": 2})
        out = tmp_path / "d.bin"
        assert cli.main(["simulate", "--config", cfg, "--out", str(out)]) == 0
        manifest, _ = load_dataset(out)
        assert manifest["pattern"]["sc_spacing"] == 4

    def test_outdir_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CHANNEL_CNTK_OUTDIR", str(tmp_path / "outs"))
        cfg = _sim_config(tmp_path)
        assert cli.main(["simulate", "--config", cfg, "--out", "rel.bin"]) == 0
        assert (tmp_path / "outs" / "rel.bin").exists()


@pytest.fixture()
def dataset(tmp_path):
    cfg = _sim_config(tmp_path)
    out = tmp_path / "data.bin"
    assert cli.main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    return out


class TestEstimate:
    def test_cntk_smoke(self, dataset, tmp_path, capsys):
        est = tmp_path / "est.bin"
        code = cli.main(["estimate", "--dataset", str(dataset),
                         "--method", "cntk", "--out", str(est)])
        assert code == 0
        text = capsys.readouterr().out
        assert "aggregate nmse" in text
        manifest, estimates = load_estimates(est)
        assert manifest["method"] == "cntk"
        assert len(estimates) == 2
        assert estimates[0].shape == (24, 14)

    def test_unknown_method_lists_tags(self, dataset, tmp_path, capsys):
        code = cli.main(["estimate", "--dataset", str(dataset),
                         "--method", "bogus", "--out", str(tmp_path / "e.bin")])
        assert code == 1
        err = capsys.readouterr().err
        for tag in ("cntk", "nearest", "knn", "linear"):
            assert tag in err

    def test_full_mask_zero_lambda_residual(self, tmp_path, capsys):
        cfg = _write_config(tmp_path / "full.json", seed=6, rows=24,
                            snr_db="inf",
                            pattern={"sc_spacing": 1, "sym_spacing": 1})
        data = tmp_path / "full.bin"
        assert cli.main(["simulate", "--config", cfg, "--out", str(data)]) == 0
        code = cli.main(["estimate", "--dataset", str(data), "--method", "cntk",
                         "--lambda", "0", "--out", str(tmp_path / "e.bin")])
        assert code == 0
        out = capsys.readouterr().out
        resid_line = [ln for ln in out.splitlines() if "pilot residual" in ln][0]
        assert float(resid_line.split(":")[1]) < 1e-6

    def test_baseline_methods(self, dataset, tmp_path):
        for method in ("nearest", "knn", "linear"):
            code = cli.main(["estimate", "--dataset", str(dataset),
                             "--method", method,
                             "--out", str(tmp_path / f"{method}.bin")])
            assert code == 0


class TestSweep:
    def _cfg(self, tmp_path, **extra):
        cfg = {"seed": 9, "rows": 24, "cols": 14, "realizations": 2,
               "methods": ["nearest", "linear"], "snr_dbs": [10.0, 20.0],
               "patterns": ["dense"], "measure_time": False}
        cfg.update(extra)
        return _write_config(tmp_path / "sweep.json", **cfg)

    def test_rows_and_determinism(self, tmp_path):
        cfg = self._cfg(tmp_path)
        out1, out2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
        assert cli.main(["sweep", "--config", cfg, "--out", str(out1)]) == 0
        assert cli.main(["sweep", "--config", cfg, "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        lines = out1.read_text().strip().split("\n")
        assert len(lines) == 1 + 2 * 2  # header + methods x snrs

    def test_thread_invariance(self, tmp_path):
        cfg = self._cfg(tmp_path)
        out1, out2 = tmp_path / "t1.csv", tmp_path / "t2.csv"
        assert cli.main(["sweep", "--config", cfg, "--out", str(out1),
                         "--threads", "1"]) == 0
        assert cli.main(["sweep", "--config", cfg, "--out", str(out2),
                         "--threads", "3"]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_thread_env_cap(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CHANNEL_CNTK_THREADS", "1")
        cfg = self._cfg(tmp_path)
        out = tmp_path / "cap.csv"
        assert cli.main(["sweep", "--config", cfg, "--out", str(out),
                         "--threads", "8"]) == 0

    def test_zero_realizations_rejected(self, tmp_path, capsys):
        cfg = self._cfg(tmp_path)
        code = cli.main(["sweep", "--config", cfg, "--out",
                         str(tmp_path / "x.csv"), "--realizations", "0"])
        assert code == 1
        assert "realizations" in capsys.readouterr().err

    def test_flag_overrides(self, tmp_path):
        cfg = self._cfg(tmp_path)
        out = tmp_path / "o.csv"
        assert cli.main(["sweep", "--config", cfg, "--out", str(out),
                         "--methods", "nearest", "--snrs", "5",
                         "--patterns", "sparse"]) == 0
        lines = out.read_text().strip().split("\n")
        assert len(lines) == 2
        assert lines[1].startswith("nearest,5.0,12,")

    def test_plot_series_output(self, tmp_path):
        cfg = self._cfg(tmp_path)
        out = tmp_path / "s.csv"
        series = tmp_path / "s.txt"
        assert cli.main(["sweep", "--config", cfg, "--out", str(out),
                         "--plot-series", str(series)]) == 0
        assert "# series method=nearest" in series.read_text()

    def test_golden_regression(self, tmp_path):
        # frozen output of the bundled regression config
        from pathlib import Path
        here = Path(__file__).parent
        cfg = here / "data" / "golden_sweep_config.json"
        golden = here / "data" / "golden_sweep.csv"
        out = tmp_path / "golden_run.csv"
        assert cli.main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
        assert out.read_bytes() == golden.read_bytes()


class TestKernelDump:
    def test_dump_dimensions_and_determinism(self, dataset, tmp_path, capsys):
        out1, out2 = tmp_path / "k1.csv", tmp_path / "k2.csv"
        assert cli.main(["kernel-dump", "--dataset", str(dataset),
                         "--block", "0", "--out", str(out1),
                         "--check-symmetric"]) == 0
        assert "OK" in capsys.readouterr().out
        assert cli.main(["kernel-dump", "--dataset", str(dataset),
                         "--block", "0", "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        rows = out1.read_text().strip().split("\n")
        assert len(rows) == 168
        assert len(rows[0].split(",")) == 168

    def test_block_out_of_range(self, dataset, tmp_path, capsys):
        code = cli.main(["kernel-dump", "--dataset", str(dataset),
                         "--block", "5", "--out", str(tmp_path / "k.csv")])
        assert code == 1
        assert "out of range" in capsys.readouterr().err

    def test_dump_matches_library_kernel(self, dataset, tmp_path):
        out = tmp_path / "k.csv"
        assert cli.main(["kernel-dump", "--dataset", str(dataset),
                         "--block", "1", "--out", str(out)]) == 0
        from channel_cntk import build_prior, compute_cntk, split_blocks
        from channel_cntk.cli import _sparse_from_record
        manifest, records = load_dataset(dataset)
        sparse = _sparse_from_record(records[0], manifest)
        expect = compute_cntk(build_prior(split_blocks(sparse)[1])).gram
        got = np.loadtxt(out, delimiter=",")
        assert np.abs(got - expect).max() <= 1e-15 * np.abs(expect).max()
