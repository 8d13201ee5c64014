import json
import textwrap
from pathlib import Path

import numpy as np
import pytest

from twophase1d import ConfigError
from twophase1d.cli import main, snapshot_csv, write_outputs
from twophase1d.config import (build_grid, build_initial, build_mode,
                               build_model, parse_config, serialize_config,
                               snapshot_times)

MINIMAL = "model: {preset: TF1}\n"

FULL = textwrap.dedent("""
    model: {preset: TF1}
    grid: {x_min: -1.0, x_max: 1.0, n_left: 50, n_right: 50}
    mode: nonclassical
    initial: {kind: riemann, ul: 0.5, ur: 0.5}
    t_end: 0.05
    snapshots: 3
    seed: 7
""")


class TestParseConfig:
    def test_minimal_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.grid == {"x_min": -2.0, "x_max": 2.0,
                            "n_left": 400, "n_right": 400}
        assert cfg.mode == "nonclassical"
        assert cfg.cfl == 0.49
        assert cfg.initial["kind"] == "riemann"

    def test_eps_window_semantic_error(self):
        text = MINIMAL + "eps: 1.0\n"  # preset plateau gap is 1.0
        with pytest.raises(ConfigError, match="eps must be < P2-P1"):
            parse_config(text)

    def test_collects_all_errors(self):
        text = textwrap.dedent("""
            model: {q: -1, C: 0}
            grid: {x_min: 1.0, x_max: 2.0}
            mode: bogus
            t_end: -3
        """)
        with pytest.raises(ConfigError) as err:
            parse_config(text)
        msg = str(err.value)
        for frag in ("model.q", "model.C", "model.P1 required",
                     "interface", "unknown mode", "t_end"):
            assert frag in msg

    def test_parse_error_carries_line_info(self):
        with pytest.raises(ConfigError, match="line"):
            parse_config("model: {preset: TF1\n  bad yaml [\n")

    def test_round_trip_identity(self):
        cfg = parse_config(FULL)
        again = parse_config(serialize_config(cfg))
        assert again == cfg

    def test_misaligned_grid(self):
        text = MINIMAL + "grid: {x_min: -1.0, x_max: 1.0, n_left: 30, n_right: 40}\n"
        with pytest.raises(ConfigError, match="face"):
            parse_config(text)

    def test_unknown_keys_preserved(self):
        cfg = parse_config(MINIMAL + "note: hello\n")
        assert cfg.extra == {"note": "hello"}


class TestBuilders:
    def test_model_from_family_section(self):
        cfg = parse_config(textwrap.dedent("""
            model:
              q: 0.25
              C: 1.0
              P1: 1.0
              P2: 2.0
              family: {K1: 1.0, K2: 2.0}
        """))
        model = build_model(cfg)
        assert model.flux(1, 0.1) == pytest.approx(0.115)

    def test_grid_and_mode(self):
        cfg = parse_config(FULL)
        grid = build_grid(cfg)
        assert grid.n_cells == 100
        assert build_mode(cfg).tag == "non_classical"
        cfg2 = parse_config(MINIMAL + "mode: flux:0.1\n")
        assert build_mode(cfg2).value == 0.1

    def test_initial_kinds(self, tmp_path):
        cfg = parse_config(FULL)
        grid = build_grid(cfg)
        u = build_initial(cfg, grid)
        assert np.all(u == 0.5)

        cfg_ind = parse_config(MINIMAL + textwrap.dedent("""
            grid: {x_min: -1.0, x_max: 1.0, n_left: 50, n_right: 50}
            initial: {kind: indicator, a: -0.5, b: 0.0, value: 0.8}
        """))
        u = build_initial(cfg_ind, build_grid(cfg_ind))
        assert u.max() == 0.8 and u.min() == 0.0

        table = tmp_path / "u0.csv"
        table.write_text("x,u\n-1.0,0.2\n1.0,0.4\n")
        cfg_csv = parse_config(MINIMAL + textwrap.dedent(f"""
            grid: {{x_min: -1.0, x_max: 1.0, n_left: 10, n_right: 10}}
            initial: {{kind: csv, path: {table}}}
        """))
        u = build_initial(cfg_csv, build_grid(cfg_csv))
        assert u[0] == pytest.approx(0.2, abs=0.02)
        assert u[-1] == pytest.approx(0.4, abs=0.02)

    def test_snapshot_times(self):
        cfg = parse_config(FULL)
        assert snapshot_times(cfg) == pytest.approx([0.025, 0.05])


class TestWriteOutputs:
    def test_round_trip_bits(self, tmp_path):
        x = np.array([-0.5, 0.5])
        u = np.array([1 / 3, 2 / 7])
        text = snapshot_csv(x, u)
        out = np.genfromtxt([line for line in text.splitlines()][1:],
                            delimiter=",")
        assert np.array_equal(out[:, 1], u)

    def test_manifest_and_refusal(self, tmp_path):
        files = {"a.csv": "x,u\n", "summary.json": "{}\n"}
        manifest = write_outputs(files, tmp_path / "run")
        assert {f["name"] for f in manifest["files"]} == set(files)
        with pytest.raises(ConfigError, match="--force"):
            write_outputs(files, tmp_path / "run")
        write_outputs(files, tmp_path / "run", force=True)


class TestCli:
    def test_riemann_json(self, capsys):
        rc = main(["riemann", "--ul", "0.5", "--ur", "0.5"])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["case"] == "a"
        assert out["u1"] == 1.0
        assert out["u2"] == pytest.approx(0.125)

    def test_riemann_table_csv(self, capsys):
        rc = main(["riemann-table"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "ul,ur,case,u1,u2,flux,classification"
        assert len(lines) == 7
        cases = sorted(line.split(",")[2] for line in lines[1:])
        assert cases == list("abcdef")

    def test_validate_exit_codes(self, capsys):
        assert main(["validate"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["H1"]["passed"] and report["H2"]["passed"]

    def test_config_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text(MINIMAL + "eps: 5.0\n")
        rc = main(["simulate", "--config", str(bad)])
        assert rc == 2

    def test_simulate_writes_deterministic_outputs(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(FULL)
        rc = main(["simulate", "--config", str(cfg), "--out",
                   str(tmp_path / "run1")])
        assert rc == 0
        rc = main(["simulate", "--config", str(cfg), "--out",
                   str(tmp_path / "run2")])
        assert rc == 0
        m1 = json.loads((tmp_path / "run1" / "manifest.json").read_text())
        m2 = json.loads((tmp_path / "run2" / "manifest.json").read_text())
        assert m1 == m2
        # snapshot reload equals in-memory values bit for bit
        summary = json.loads((tmp_path / "run1" / "summary.json").read_text())
        assert summary["mode"] == "non_classical"
        data = np.genfromtxt(tmp_path / "run1" / "snapshot_002.csv",
                             delimiter=",", names=True)
        assert np.all(np.isfinite(data["u"]))

    def test_simulate_refuses_overwrite(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(FULL)
        out = tmp_path / "run"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 2
        assert main(["simulate", "--config", str(cfg), "--out", str(out),
                     "--force"]) == 0

    def test_capillary_run(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(FULL.replace("t_end: 0.05", "t_end: 0.02") + "eps: 0.1\n")
        rc = main(["capillary", "--config", str(cfg)])
        assert rc == 0
        summary = json.loads(capsys.readouterr().out)
        assert "energy_estimate" in summary
        assert summary["eps"] == 0.1

    def test_capillary_needs_eps(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(FULL)
        assert main(["capillary", "--config", str(cfg)]) == 2

    def test_steady_cli(self, capsys):
        rc = main(["steady", "--kind", "kappa", "--lambda", "0.115"])
        assert rc == 0
        report = json.loads(capsys.readouterr().out)
        prof = report["profiles"][0]
        assert prof["residual"] <= 1e-6
        assert prof["limits"]["left"] == pytest.approx(0.1, abs=1e-9)

    def test_contract_cli(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(FULL.replace("n_left: 50", "n_left: 30")
                       .replace("n_right: 50", "n_right: 30"))
        rc = main(["contract", "--config", str(cfg), "--pairs", "2",
                   "--t-end", "0.05"])
        assert rc == 0
        verdict = json.loads(capsys.readouterr().out)
        assert verdict["passed"] and verdict["seed"] == 7

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
