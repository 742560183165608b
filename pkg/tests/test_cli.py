import csv
import io
import os

import numpy as np
import pytest

from rngrc import cli, evaluation
from rngrc import config as cfgmod
from rngrc import io as rio

SMALL = """
[experiment]
dataset = {dataset}
models = {models}
n = 12
seeds = 3
washout = 30
train_len = 300
test_len = 150
bias = true

[dataset]
{dataset_lines}

[model.ESN]
radius = 0.9

[pretrain]
epsilon_i = 0.1
"""
HEADER = ("dataset,variant,n,t_h,lambda_i,lambda_f,seed_count,nrmse_mean,nrmse_var,"
          "best_grid_point")


def write_cfg(tmp_path, dataset="mackey_glass", models="ESN", dataset_lines="t_h = 5",
              extra=""):
    path = tmp_path / "exp.ini"
    path.write_text(SMALL.format(dataset=dataset, models=models,
                                 dataset_lines=dataset_lines) + extra)
    return str(path)


def run(argv, capsys=None):
    rc = cli.main(argv)
    out = capsys.readouterr().out if capsys else ""
    return rc, out


def table(path):
    lines = [ln for ln in open(path).read().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


class TestRun:
    def test_results_and_echo(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, models="ESN, M-RNG-IRM",
                        extra="\n[model.M-RNG-IRM]\neta = 0.25\n")
        out = tmp_path / "o"
        rc, text = run(["run", "--config", cfg, "--out", str(out), "--seeds", "2",
                        "--no-timestamp"], capsys)
        assert rc == 0
        assert text.startswith("# effective-config\n")
        assert "seeds = 2" in text
        assert "seeds = 2" in (out / "effective-config.ini").read_text()
        csv_text = (out / "results.csv").read_text()
        assert csv_text.splitlines()[0] == HEADER
        rows = table(out / "results.csv")
        assert [r["variant"] for r in rows] == ["ESN", "M-RNG-IRM"]
        assert all(r["seed_count"] == "2" and r["t_h"] == "5" for r in rows)
        snaps = sorted(os.listdir(out / "snapshots"))
        assert snaps == ["ESN_n12_seed0.snap", "M-RNG-IRM_n12_seed0.snap"]
        r = rio.load_snapshot(out / "snapshots" / snaps[1], expect="M-RNG-IRM")
        assert r.n == 12 and r.mask.any()

    def test_byte_identical(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, models="ESN, RNG-J")
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run(["run", "--config", cfg, "--out", str(out), "--no-timestamp"])[0] == 0
        for name in ("results.csv", "results.jsonl", "effective-config.ini",
                     "snapshots/RNG-J_n12_seed0.snap"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_timestamp_is_only_difference(self, tmp_path):
        cfg = write_cfg(tmp_path)
        a, b = tmp_path / "a", tmp_path / "b"
        run(["run", "--config", cfg, "--out", str(a)])
        run(["run", "--config", cfg, "--out", str(b), "--no-timestamp"])
        ta = (a / "results.csv").read_text().splitlines()
        tb = (b / "results.csv").read_text().splitlines()
        assert ta[0].startswith("# generated ") and ta[1:] == tb

    def test_flags_override_config(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        rc, _ = run(["run", "--config", cfg, "--out", str(tmp_path), "--n", "7", "--th", "3",
                     "--variant", "RNG-IR", "--lambda-i", "2", "--lambda-f", "0.5",
                     "--no-snapshot", "--no-timestamp"], capsys)
        assert rc == 0
        (row,) = table(tmp_path / "results.csv")
        assert (row["variant"], row["n"], row["t_h"]) == ("RNG-IR", "7", "3")
        assert (float(row["lambda_i"]), float(row["lambda_f"])) == (2.0, 0.5)
        assert not (tmp_path / "snapshots").exists()

    def test_grid(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, extra="\n[grid.ESN]\nradius = 0.5, 0.9\n")
        text = open(cfg).read().replace("bias = true", "validation_len = 100")
        open(cfg, "w").write(text)
        rc, _ = run(["run", "--config", cfg, "--out", str(tmp_path), "--grid",
                     "--no-timestamp"], capsys)
        assert rc == 0
        (row,) = table(tmp_path / "results.csv")
        assert "radius" in row["best_grid_point"]


class TestExitCodes:
    def test_missing_config(self, tmp_path, capsys):
        assert run(["run", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path)])[0] == 2

    def test_argparse_usage(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["run", "--seeds", "many"])
        assert exc.value.code == 2

    @pytest.mark.parametrize("extra", ["\n[model.ESN]\nwidth = 3\n",
                                       "\n[model.RNG-IR n=abc]\nalpha = 1\n",
                                       "\n[experiment]\nseeds = 0\n"])
    def test_bad_config(self, tmp_path, extra, capsys):
        cfg = write_cfg(tmp_path)
        text = open(cfg).read()
        if "[experiment]" in extra:
            text = text.replace("seeds = 3", "seeds = 0")
        else:
            text += extra
        open(cfg, "w").write(text)
        assert run(["run", "--config", cfg, "--out", str(tmp_path)])[0] == 2

    def test_unknown_variant(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        assert run(["run", "--config", cfg, "--out", str(tmp_path), "--variant", "LSTM"])[0] == 2

    def test_bad_data(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, dataset_lines="t_h = 5\ntau = -1")
        assert run(["run", "--config", cfg, "--out", str(tmp_path)])[0] == 3

    def test_unknown_dataset(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, dataset="sunspots", dataset_lines="")
        assert run(["gen-data", "--config", cfg, "--out", str(tmp_path)])[0] in (2, 3)

    def test_numerical_failure(self, tmp_path, monkeypatch, capsys):
        def boom(spec, seed, train, test):
            raise FloatingPointError("overflow in reservoir")
        monkeypatch.setattr(evaluation, "evaluate_split", boom)
        cfg = write_cfg(tmp_path)
        assert cli.main(["run", "--config", cfg, "--out", str(tmp_path)]) == 4
        assert "numerical failure" in capsys.readouterr().err


class TestGenData:
    def test_narma_defaults(self, tmp_path, capsys):
        rc, _ = run(["gen-data", "--dataset", "narma", "--seeds", "1", "--out", str(tmp_path)],
                    capsys)
        assert rc == 0
        train = rio.read_sequence_csv(tmp_path / "narma_seed0_train.csv")
        test = rio.read_sequence_cache(tmp_path / "narma_seed0_test.bin")
        assert train.X.shape == (10000, 1) and test.X.shape == (2000, 1)
        cached = rio.read_sequence_cache(tmp_path / "narma_seed0_train.bin")
        assert cached.y.tobytes() == train.y.tobytes()

    def test_lorenz_columns(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, dataset="lorenz", dataset_lines="t_h = 2")
        assert run(["gen-data", "--config", cfg, "--out", str(tmp_path)], capsys)[0] == 0
        text = (tmp_path / "lorenz_train.csv").read_text().splitlines()
        assert text[0].startswith("# meta: ") and text[1] == "x1,x2,x3,y"
        assert len(text) == 2 + 300


class TestSweep:
    def test_units_shape(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        text = open(cfg).read().replace("seeds = 3", "seeds = 1")
        open(cfg, "w").write(text)
        rc, _ = run(["sweep", "units", "--config", cfg, "--out", str(tmp_path), "--values",
                     "4,6,8,10", "--variant", "all", "--no-timestamp"], capsys)
        assert rc == 0
        rows = table(tmp_path / "sweep_units.csv")
        assert len(rows) == 7 * 4
        assert [r["n"] for r in rows[:4]] == ["4", "6", "8", "10"]
        assert len({r["variant"] for r in rows}) == 7

    def test_horizon(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        rc, _ = run(["sweep", "horizon", "--config", cfg, "--out", str(tmp_path), "--values",
                     "1,5,10", "--no-timestamp"], capsys)
        assert rc == 0
        assert [r["t_h"] for r in table(tmp_path / "sweep_horizon.csv")] == ["1", "5", "10"]

    def test_lambda_regimes(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, models="ESN, M-RNG-IRM")
        rc, _ = run(["sweep", "lambda", "--config", cfg, "--out", str(tmp_path), "--values",
                     "8", "--no-timestamp"], capsys)
        assert rc == 0
        rows = table(tmp_path / "sweep_lambda.csv")
        assert [(float(r["lambda_i"]), float(r["lambda_f"])) for r in rows] == [
            (50.0, 0.01), (1.0, 1.0), (0.0, 0.0)]
        assert {r["variant"] for r in rows} == {"M-RNG-IRM"}

    def test_empty_values(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        assert run(["sweep", "units", "--config", cfg, "--out", str(tmp_path)])[0] == 2
        assert run(["sweep", "units", "--config", cfg, "--out", str(tmp_path), "--values",
                    "a,b"])[0] == 2

    def test_units_with_n_flag(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        assert run(["sweep", "units", "--config", cfg, "--out", str(tmp_path), "--n", "5",
                    "--values", "4"])[0] == 2

    def test_narma_horizon(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, dataset="narma", dataset_lines="")
        assert run(["sweep", "horizon", "--config", cfg, "--out", str(tmp_path), "--values",
                    "2"])[0] == 2


class TestDemoRing:
    def test_csv(self, tmp_path, capsys):
        rc, text = run(["demo-ring", "--out", str(tmp_path), "--seeds", "2", "--iters", "2000",
                        "--n", "20", "--no-timestamp"], capsys)
        assert rc == 0 and "[ring]" in text
        rows = list(csv.DictReader(io.StringIO((tmp_path / "ring.csv").read_text())))
        assert list(rows[0]) == ["seed", "iteration", "coverage", "energy"]
        assert len(rows) == 2 * 11
        assert rows[-1]["iteration"] == "2000"
        cov = np.array([float(r["coverage"]) for r in rows])
        assert np.all((cov >= 0) & (cov <= 1))

    def test_bad_key(self, tmp_path, capsys):
        cfg = tmp_path / "r.ini"
        cfg.write_text("[ring]\nwidth = 3\n")
        assert run(["demo-ring", "--config", str(cfg), "--out", str(tmp_path)])[0] == 2


class TestConfigLayering:
    TEXT = """
[experiment]
dataset = mackey_glass
n = 50
[dataset]
t_h = 20
[model]
gamma = 0.5
radius = 0.8
alpha = 2
[model.ESN]
radius = 0.95
[model.ESN n=400]
radius = 0.7
[model.ESN n=400 t_h=80]
radius = 0.6
[model.RNG-IR t_h=80]
alpha = 7
"""

    def spec(self, kind, **kw):
        return cfgmod.experiment_spec(cfgmod.load_config(text=self.TEXT), kind, **kw)

    def test_specificity(self):
        assert self.spec("ESN").model.params["radius"] == 0.95
        assert self.spec("ESN", n=400).model.params["radius"] == 0.7
        assert self.spec("ESN", n=400, t_h=80).model.params["radius"] == 0.6
        assert self.spec("ESN", n=300, t_h=80).model.params["radius"] == 0.95

    def test_generic_keys_filtered(self):
        esn = self.spec("ESN").model.params
        rng = self.spec("RNG-IR").model.params
        assert "alpha" not in esn and esn["gamma"] == 0.5
        assert "radius" not in rng and rng["alpha"] == 2
        assert self.spec("RNG-IR", t_h=80).model.params["alpha"] == 7

    def test_kind_specific_key_rejected(self):
        cp = cfgmod.load_config(text=self.TEXT + "[model.ESN n=50]\nalpha = 1\n")
        with pytest.raises(cfgmod.ConfigError, match="does not apply"):
            cfgmod.experiment_spec(cp, "ESN")

    def test_overrides_last(self):
        cp = cfgmod.apply_overrides(cfgmod.load_config(text=self.TEXT), seeds=4, seed_base=10,
                                    t_h=80, n=400, lambda_i=3.0)
        s = cfgmod.experiment_spec(cp, "ESN")
        assert s.seeds == (10, 11, 12, 13) and s.n == 400 and s.dataset.t_h == 80
        assert s.model.params["radius"] == 0.6
        assert cfgmod.experiment_spec(cp, "M-RNG-J").model.pretrain["lambda_i"] == 3.0

    def test_models_all(self):
        cp = cfgmod.apply_overrides(cfgmod.load_config(text=self.TEXT), models=["all"])
        assert cfgmod.models(cp) == list(cfgmod.ALL_MODELS) and len(cfgmod.ALL_MODELS) == 7

    @pytest.mark.parametrize("text,value", [("1", 1), ("0.5", 0.5), ("on", True), ("No", False),
                                            ("1e-6", 1e-6), ("abc", "abc")])
    def test_parse_value(self, text, value):
        assert cfgmod.parse_value(text) == value

    def test_bad_regime(self):
        cp = cfgmod.load_config(text="[sweep]\nregimes = 50-0.01\n")
        with pytest.raises(cfgmod.ConfigError):
            cfgmod.sweep_options(cp)
