"""Configuration parsing, validation and CSV/JSON serialization."""

import json
import math

import numpy as np
import pytest

from kzk import io
from kzk.config import (PRESETS, ConfigError, RunConfig, decay_gate, dump_config, load_config,
                        load_preset, parse_config, validate)

BASE = """
[equation]
b = 0.0
nonlinearity = quadratic
[domain]
L = 1.0
X_max = 20.0
family = a
[discretization]
nx = 201
ny_modes = 4
dt = 1e-3
T = 0.01
[weight:exp]
kind = exp
alpha = 0.1
"""


class TestParse:
    """INI configs to RunConfig."""

    def test_defaults(self):
        cfg = parse_config("")
        assert cfg.nx == 601 and cfg.family == "a" and cfg.nonlinearity == "quadratic"

    def test_fields(self):
        cfg = parse_config(BASE)
        assert cfg.X_max == 20.0 and cfg.ny_modes == 4 and "exp" in cfg.weights
        assert cfg.weights["exp"].alpha == 0.1

    def test_round_trip(self):
        cfg = parse_config(BASE + "[experiment]\npreset = decay_weak\nalpha = 0.1\n")
        again = parse_config(dump_config(cfg))
        for k in ("b", "L", "X_max", "nx", "ny_modes", "dt", "T", "family", "weights",
                  "experiment", "cadence"):
            assert getattr(again, k) == getattr(cfg, k)

    def test_unparseable(self):
        with pytest.raises(ConfigError):
            parse_config("not an ini file")

    def test_bad_value(self):
        with pytest.raises(ConfigError):
            parse_config("[domain]\nL = wide\n")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.cfg")

    @pytest.mark.parametrize("name", PRESETS + ("baseline",))
    def test_presets_load_and_validate(self, name):
        cfg = load_preset(name)
        assert validate(cfg) == []
        if name != "baseline":
            assert cfg.preset == name

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            load_preset("nonsense")

    def test_output_root(self, monkeypatch, tmp_path):
        cfg = parse_config(BASE)
        monkeypatch.setenv("KZK_OUTPUT_ROOT", str(tmp_path))
        assert cfg.output_path() == tmp_path / "kzk_output"
        monkeypatch.delenv("KZK_OUTPUT_ROOT")
        assert str(cfg.output_path()) == "kzk_output"


class TestValidate:
    """Hypothesis checks on configs."""

    def test_baseline_clean(self):
        assert validate(parse_config(BASE)) == []

    def test_p_range(self):
        cfg = parse_config(BASE.replace("quadratic", "power\np = 3"))
        assert "p outside [0, 8/3)" in validate(cfg)

    def test_decay_family(self):
        cfg = parse_config(BASE.replace("family = a", "family = b")
                           + "[experiment]\npreset = decay_weak\n")
        assert any("family a or c" in v for v in validate(cfg))

    def test_decay_gate_L(self):
        good = parse_config(BASE.replace("b = 0.0", "b = 1.0").replace("L = 1.0", "L = 0.5")
                            + "[experiment]\npreset = decay_weak\nalpha = 0.1\n")
        bad = parse_config(BASE.replace("b = 0.0", "b = 1.0")
                           + "[experiment]\npreset = decay_weak\nalpha = 0.1\n")
        assert decay_gate(good) == []
        assert any("L0" in v for v in decay_gate(bad))

    def test_alpha_gate(self):
        cfg = parse_config(BASE + "[experiment]\npreset = decay_weak\nalpha = 0.4\n")
        assert any("alpha0" in v for v in validate(cfg))

    def test_epsilon_gate(self):
        cfg = parse_config(BASE + "[experiment]\npreset = decay_weak\nepsilon0 = 0.001\n")
        assert any("epsilon0" in v for v in validate(cfg))

    def test_strong_trace(self, tmp_path):
        from kzk.eigenbasis import build_basis
        basis = build_basis("a", 1.0, 4)
        x = np.linspace(0.0, 20.0, 201)
        io.write_field_csv(tmp_path / "u0.csv", np.outer(np.exp(-x), np.ones(basis.n_nodes)),
                           x, basis.nodes, 20.0, 1.0, "a")
        bad = parse_config(BASE + f"[initial]\nkind = csv\npath = {tmp_path / 'u0.csv'}\n"
                           "[uniqueness]\nregime = strong\n")
        good = parse_config(BASE + "[uniqueness]\nregime = strong\n")
        assert any("u0(0, y)" in v for v in validate(bad))
        assert validate(good) == []

    def test_weak_uniqueness(self):
        cfg = parse_config(BASE.replace("kind = exp\nalpha = 0.1", "kind = pow\nalpha = 0.25")
                           .replace("quadratic", "cubic") + "[uniqueness]\nregime = weak\n")
        assert any("weak uniqueness" in v for v in validate(cfg))

    def test_structural(self):
        cfg = parse_config(BASE.replace("nx = 201", "nx = 8").replace("family = a", "family = q"))
        v = validate(cfg)
        assert any("nx" in s for s in v) and any("family" in s for s in v)

    def test_pure(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        validate(parse_config(BASE))
        assert list(tmp_path.iterdir()) == []


class TestIO:
    """Round-trip precision file formats."""

    def test_fmt_round_trip(self):
        for v in (0.1, 1 / 3, 1e-300, -2.5e17, math.pi):
            assert float(io.fmt(v)) == v

    def test_field_csv(self, tmp_path):
        rng = np.random.default_rng(0)
        vals = rng.normal(size=(6, 3))
        x, y = np.linspace(0, 5, 6), np.array([0.25, 0.5, 0.75])
        p = io.write_field_csv(tmp_path / "f.csv", vals, x, y, 5.0, 1.0, "a")
        back, meta = io.read_field_csv(p)
        assert np.array_equal(back, vals)
        assert meta["nx"] == 6 and meta["family"] == "a" and meta["L"] == 1.0
        text = p.read_text().splitlines()
        assert text[0] == "# nx=6" and text[6].startswith("x,u0,u1,u2")

    def test_table_csv(self, tmp_path):
        p = io.write_table_csv(tmp_path / "t.csv", ["l", "lambda"], [(1, 1.0), (2, 4.0)])
        cols, rows = io.read_table_csv(p)
        assert cols == ["l", "lambda"] and rows == [["1", "1.0"], ["2", "4.0"]]

    def test_byte_identical(self, tmp_path):
        vals = np.arange(6.0).reshape(3, 2) / 7
        a = io.write_field_csv(tmp_path / "a.csv", vals, np.arange(3.0), np.arange(2.0), 2, 1, "b")
        b = io.write_field_csv(tmp_path / "b.csv", vals, np.arange(3.0), np.arange(2.0), 2, 1, "b")
        assert a.read_bytes() == b.read_bytes()

    def test_json_nonfinite(self, tmp_path):
        p = io.write_json(tmp_path / "v.json", {"a": math.inf, "b": [1.0, math.nan], "c": (1, 2)})
        data = json.loads(p.read_text())
        assert data["a"] == "inf" and data["b"][1] == "nan"

    def test_metadata_separate(self, tmp_path):
        p = io.write_metadata(tmp_path, command="run")
        assert p.name == "metadata.json" and "created" in json.loads(p.read_text())
