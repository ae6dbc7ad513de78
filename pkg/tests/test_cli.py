"""Configuration parsing, the run pipeline and the command-line entry point."""

import json
import math

import numpy as np
import pytest

from deformphase import cli
from deformphase import deformation as dm
from deformphase.config import build_model, load_config, parse_config
from deformphase.errors import ConfigError
from deformphase.fixtures import FIXTURES
from deformphase.pipeline import TRAJECTORY_COLUMNS

BASE = {"model": {"kind": "rigid", "inertia": [1, 2, 3]}, "pi0": [0.6, 0.0, 0.8],
        "t0": 0.0, "t1": 1.0, "h": 0.01}


def write(tmp_path, doc, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


class TestConfig:
    def test_defaults(self):
        cfg = parse_config(BASE)
        assert cfg.R0 is None
        assert cfg.tolerances.closure_tol == 1e-3
        assert cfg.outputs.trajectory and cfg.outputs.report and not cfg.outputs.model_csv

    @pytest.mark.parametrize("patch", [
        {"tolerance": {"closure_tol": 1e-3}},
        {"tolerances": {"closure_tolerance": 1e-3}},
        {"outputs": {"plots": True}},
        {"model": {"kind": "rigid", "inertia": [1, 2, 3], "L0": [0, 0, 0]}},
        {"model": {"kind": "rubber"}},
        {"pi0": [0, 0, 0]},
        {"pi0": [1, 2]},
        {"t1": -1.0},
        {"h": 0.0},
        {"h": "0.01"},
        {"R0": [[1, 0, 0], [0, 1, 0], [0, 0, -1]]},
        {"allow_partial": "yes"},
        {"max_segments": 0},
        {"tolerances": {"axis_tol": -1.0}},
    ])
    def test_rejected(self, patch):
        with pytest.raises(ConfigError):
            parse_config({**BASE, **patch})

    def test_missing_key(self):
        doc = dict(BASE)
        del doc["h"]
        with pytest.raises(ConfigError):
            parse_config(doc)

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(p)

    @pytest.mark.parametrize("name", sorted(FIXTURES))
    def test_fixture_configs_build(self, name):
        f = FIXTURES[name]
        m = build_model(parse_config(f.config()))
        np.testing.assert_array_equal(m.eval(0.7).inertia, f.model.eval(0.7).inertia)

    def test_bad_model_parameters(self):
        with pytest.raises(ConfigError):
            build_model(parse_config({**BASE, "model": {"kind": "rigid", "inertia": [1, -2, 3]}}))


class TestSimulate:
    def test_row_count_and_columns(self, tmp_path):
        code = cli.main(["simulate", "--config", str(write(tmp_path, BASE)),
                         "--out-dir", str(tmp_path / "out")])
        assert code == 0
        header, data = read_csv(tmp_path / "out" / "trajectory.csv")
        assert header == TRAJECTORY_COLUMNS
        assert data.shape == (101, 19)
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["nodes"] == 101
        assert report["segments"] is None

    def test_corotating_rows(self, tmp_path):
        f = FIXTURES["corotating"]
        R0 = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]
        cfg = write(tmp_path, f.config(t1=2.0, h=0.01, R0=R0))
        assert cli.main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
        _, data = read_csv(tmp_path / "trajectory.csv")
        np.testing.assert_allclose(data[:, 4:13], np.tile(np.ravel(R0), (len(data), 1)),
                                   atol=1e-14)

    def test_symmetric_top_conservation(self, tmp_path):
        f = FIXTURES["s1"]
        cfg = write(tmp_path, f.config(outputs={"trajectory": False}))
        assert cli.main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["conservation"]["spatial_residual_max"] <= 1e-7
        assert not (tmp_path / "trajectory.csv").exists()

    def test_model_csv_round_trip(self, tmp_path):
        f = FIXTURES["antenna"]
        cfg = write(tmp_path, f.config(t1=2.0, outputs={"model_csv": True}))
        assert cli.main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
        back = dm.read_tabulated_csv(tmp_path / "model.csv")
        times = read_csv(tmp_path / "trajectory.csv")[1][:, 0]
        a, b = back.eval_many(times), f.model.eval_many(times)
        np.testing.assert_allclose(a.inertia, b.inertia, atol=1e-9)
        np.testing.assert_allclose(a.internal_momentum, b.internal_momentum, atol=1e-9)

    def test_tabulated_config(self, tmp_path):
        f = FIXTURES["antenna"]
        dm.write_tabulated_csv(tmp_path / "m.csv", dm.sample_model(f.model, np.linspace(0, 2, 41)))
        doc = {**BASE, "model": {"kind": "tabulated", "path": "m.csv"}, "t1": 2.0}
        assert cli.main(["simulate", "--config", str(write(tmp_path, doc)),
                         "--out-dir", str(tmp_path / "o")]) == 0

    def test_step_not_dividing(self, tmp_path, capsys):
        code = cli.main(["simulate", "--config", str(write(tmp_path, {**BASE, "h": 0.3})),
                         "--out-dir", str(tmp_path)])
        assert code == 2
        assert "config error" in capsys.readouterr().err

    def test_partial_step_allowed(self, tmp_path):
        doc = {**BASE, "h": 0.03, "allow_partial": True}
        assert cli.main(["simulate", "--config", str(write(tmp_path, doc)),
                         "--out-dir", str(tmp_path)]) == 0
        t = read_csv(tmp_path / "trajectory.csv")[1][:, 0]
        assert t.size == 35 and t[-1] == 1.0

    def test_unknown_key(self, tmp_path):
        code = cli.main(["simulate", "--config", str(write(tmp_path, {**BASE, "hh": 1})),
                         "--out-dir", str(tmp_path)])
        assert code == 2

    def test_numerical_failure(self, tmp_path, capsys):
        doc = {**BASE, "pi0": [3.0, 0.5, 4.0], "t1": 20.0, "h": 0.5}
        code = cli.main(["simulate", "--config", str(write(tmp_path, doc)),
                         "--out-dir", str(tmp_path)])
        assert code == 3
        assert "numerical failure" in capsys.readouterr().err


class TestPhase:
    def test_symmetric_top(self, tmp_path):
        cfg = write(tmp_path, FIXTURES["s1"].config(outputs={"trajectory": False}))
        assert cli.main(["phase", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
        segs = json.loads((tmp_path / "report.json").read_text())["segments"]
        assert len(segs) == 1
        theta = segs[0]["theta_M_formula"]
        assert min(abs(theta), 2 * math.pi - abs(theta)) < 1e-5

    def test_no_closure(self, tmp_path):
        assert cli.main(["phase", "--config", str(write(tmp_path, BASE)),
                         "--out-dir", str(tmp_path)]) == 0
        assert json.loads((tmp_path / "report.json").read_text())["segments"] == []

    def test_antenna_bounds(self, tmp_path):
        cfg = write(tmp_path, FIXTURES["antenna"].config(outputs={"trajectory": False}))
        assert cli.main(["phase", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
        seg = next(s for s in json.loads((tmp_path / "report.json").read_text())["segments"]
                   if s["status"] == "ok")
        assert seg["bounds_low"] <= seg["theta_M_unwrapped"] <= seg["bounds_high"]

    def test_deterministic(self, tmp_path):
        cfg = write(tmp_path, FIXTURES["antenna"].config(t1=12.0))
        for d in ("a", "b"):
            assert cli.main(["phase", "--config", str(cfg), "--out-dir", str(tmp_path / d)]) == 0
        for name in ("trajectory.csv", "report.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestVerify:
    def test_list(self, capsys):
        assert cli.main(["verify", "--list"]) == 0
        names = capsys.readouterr().out.split()
        assert len(names) == 9
        assert names[0] == "montgomery_vs_direct"

    def test_unknown_suite(self):
        assert cli.main(["verify", "--suite", "nope"]) == 2

    def test_single_check_with_json(self, tmp_path, capsys):
        out = tmp_path / "summary.json"
        assert cli.main(["verify", "--suite", "symmetric_top", "--json", str(out)]) == 0
        summary = json.loads(out.read_text())
        assert summary["passed"] and summary["checks"][0]["name"] == "symmetric_top"
        assert "[PASS] symmetric_top" in capsys.readouterr().out

    def test_sign_flip_mutation_detected(self, monkeypatch, capsys):
        from deformphase import phase
        original = phase.signed_solid_angle
        monkeypatch.setattr(phase, "signed_solid_angle", lambda pts: -original(pts))
        assert cli.main(["verify", "--suite", "montgomery_vs_direct"]) == 1
        assert "[FAIL] montgomery_vs_direct" in capsys.readouterr().out


class TestBatch:
    def test_runs_every_config(self, tmp_path, capsys):
        src = tmp_path / "configs"
        src.mkdir()
        write(src, BASE, "a.json")
        write(src, FIXTURES["triaxial"].config(outputs={"trajectory": False}), "b.json")
        out = tmp_path / "out"
        assert cli.main(["batch", "--configs", str(src), "--jobs", "2",
                         "--out-dir", str(out)]) == 0
        assert (out / "a" / "report.json").exists() and (out / "b" / "report.json").exists()
        assert "1 closed segment" in capsys.readouterr().out

    def test_worst_exit_code(self, tmp_path):
        src = tmp_path / "configs"
        src.mkdir()
        write(src, BASE, "good.json")
        write(src, {**BASE, "bogus": 1}, "bad.json")
        assert cli.main(["batch", "--configs", str(src)]) == 2

    def test_empty_dir(self, tmp_path):
        assert cli.main(["batch", "--configs", str(tmp_path)]) == 2
