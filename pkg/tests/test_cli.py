import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from ncmart.algebra import matrix_from_dict
from ncmart.cli import load_config, main, run
from ncmart.errors import ConfigError
from ncmart.search import Instance, evaluate


def invoke(argv, environ=None):
    cfg = load_config(argv, environ or {})
    out, err = io.StringIO(), io.StringIO()
    code = run(cfg, out, err)
    return code, out.getvalue(), err.getvalue()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestVerify:
    def test_rows_and_exit(self):
        code, out, err = invoke(["verify", "--dims", "2", "--ns", "2", "--p-grid", "0.5,1,2", "--trials", "20", "--seed", "7"])
        assert code == 0
        data = rows(out)
        assert len(data) == 60
        assert list(data[0]) == ["name", "p", "dim", "n", "lhs", "rhs", "constant", "ratio", "slack", "seed"]
        assert {r["name"] for r in data} == {"dd_down", "dd_up"}
        assert "violations=0" in err

    def test_p_one_rows_are_exact(self):
        _, out, _ = invoke(["verify", "--p-grid", "1", "--trials", "30", "--seed", "3"])
        assert all(abs(float(r["ratio"]) - 1) <= 1e-10 for r in rows(out))

    @pytest.mark.parametrize("theorem,p", [("cor13a", "1"), ("cor13b", "3"), ("bg", "3"), ("stein", "2")])
    def test_corollaries(self, theorem, p):
        code, out, _ = invoke(["verify", "--theorem", theorem, "--p-grid", p, "--trials", "10"])
        assert code == 0 and len(rows(out)) == 10


class TestConfigErrors:
    @pytest.mark.parametrize("argv", [
        ["verify", "--p-grid", ""],
        ["verify", "--p-grid", "0.01"],
        ["verify", "--p-grid", "3"],
        ["verify", "--p-grid", "1", "--trials", "0"],
        ["verify", "--p-grid", "1", "--format", "xml"],
        ["verify", "--p-grid", "1", "--tower-kinds", "weird"],
        ["maximal", "--p-grid", "1.5"],
        ["search", "--p-grid", "0.5"],
        ["search", "--theorem", "dd_down", "--p-grid", "1.5"],
        ["bogus"],
        ["verify", "--p-grid", "a,b"],
    ])
    def test_rejected(self, argv):
        with pytest.raises(ConfigError):
            load_config(argv, {})

    def test_main_exit_code(self, capsys):
        assert main(["verify", "--p-grid", ""], {}) == 2
        assert "config error" in capsys.readouterr().err

    def test_bad_env_seed(self):
        with pytest.raises(ConfigError):
            load_config(["verify", "--p-grid", "1"], {"NCMART_SEED": "x"})


class TestPrecedence:
    def test_toml_flag_env(self, tmp_path):
        cfg_file = tmp_path / "c.toml"
        cfg_file.write_text('p_grid = [0.5]\ntrials = 4\nseed = 3\ndims = [2]\n')
        cfg = load_config(["verify", "--config", str(cfg_file), "--trials", "6"], {"NCMART_SEED": "99"})
        assert cfg.trials == 6 and cfg.master_seed == 3 and cfg.p_grid == [0.5] and cfg.dims == [2]
        cfg_file.write_text('p_grid = [0.5]\n')
        cfg = load_config(["verify", "--config", str(cfg_file)], {"NCMART_SEED": "99"})
        assert cfg.master_seed == 99
        cfg = load_config(["verify", "--config", str(cfg_file), "--seed", "5"], {"NCMART_SEED": "99"})
        assert cfg.master_seed == 5

    def test_unknown_key(self, tmp_path):
        cfg_file = tmp_path / "c.toml"
        cfg_file.write_text('p_grid = [0.5]\ncolour = "red"\n')
        with pytest.raises(ConfigError):
            load_config(["verify", "--config", str(cfg_file)], {})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(["verify", "--config", str(tmp_path / "none.toml")], {})


class TestSuites:
    def test_trace(self):
        code, out, _ = invoke(["trace", "--p-grid", "0.5,1.5,3", "--trials", "5", "--dims", "2,4"])
        assert code == 0
        names = {r["name"].split(":")[0] for r in rows(out)}
        assert names == {"thm11", "thm12", "bg"}
        assert all(float(r["slack"]) >= -1e-8 for r in rows(out))

    def test_maximal_json_witness(self, tmp_path):
        path = tmp_path / "m.json"
        code, out, _ = invoke(["maximal", "--p-grid", "2", "--trials", "2", "--dims", "2", "--ns", "2",
                               "--format", "json", "--output", str(path)])
        assert code == 0 and "rows=2" in out
        data = json.loads(path.read_text())
        w = matrix_from_dict(data[0]["witness"])
        assert w.shape == (2, 2) and np.allclose(w, w.conj().T)
        assert data[0]["converged"] is True and data[0]["gap"] <= 1e-5

    def test_search_json_instance(self):
        code, out, _ = invoke(["search", "--theorem", "dd_down", "--p-grid", "0.5", "--dims", "2", "--ns", "2",
                               "--trials", "5", "--format", "json"])
        assert code == 0
        rec = json.loads(out)[0]
        inst = Instance.from_dict(rec["instance"])
        assert evaluate(inst) == rec["best_ratio"]
        assert rec["best_ratio"] >= 1.071796 - 1e-6

    def test_sweep_skips(self):
        code, out, _ = invoke(["sweep", "--theorem", "dd_up", "--p-grid", "0.5,1,2", "--dims", "2", "--ns", "2",
                               "--trials", "3"])
        assert code == 0
        assert [float(r["p"]) for r in rows(out)] == [1.0, 2.0]

    def test_violation_exit(self, monkeypatch):
        import ncmart.harness as harness
        from ncmart.inequalities import make_report

        monkeypatch.setattr(harness, "verify_reports",
                            lambda inst, p, theorem="dd": [make_report("dd_down", p, 3.0, 1.0, 2.0)])
        code, _, err = invoke(["verify", "--p-grid", "0.5", "--trials", "2"])
        assert code == 1 and "CRITICAL" in err and "violations=2" in err


@pytest.mark.parametrize("argv", [
    ["verify", "--p-grid", "0.5,2", "--trials", "40"],
    ["trace", "--p-grid", "0.5,2,3", "--trials", "10"],
    ["maximal", "--p-grid", "2", "--trials", "3", "--dims", "2,4", "--ns", "2,3", "--format", "json"],
    ["search", "--theorem", "dd_down", "--p-grid", "0.5", "--dims", "2", "--ns", "2", "--trials", "20",
     "--ascent-steps", "30"],
    ["sweep", "--theorem", "stein", "--p-grid", "2,3", "--dims", "2", "--ns", "2", "--trials", "10"],
])
def test_byte_identical_across_workers(argv):
    _, one, _ = invoke(argv + ["--seed", "13", "--workers", "1"])
    _, four, _ = invoke(argv + ["--seed", "13", "--workers", "4"])
    _, again, _ = invoke(argv + ["--seed", "13", "--workers", "4"])
    assert one == four == again


def test_module_entry_point(tmp_path):
    out = tmp_path / "v.csv"
    proc = subprocess.run([sys.executable, "-m", "ncmart", "verify", "--p-grid", "1", "--trials", "3",
                           "--output", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("instances=3 rows=3")
    assert len(out.read_text().splitlines()) == 4
