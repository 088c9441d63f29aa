import filecmp
import re
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from ramanmem import __version__
from ramanmem.cli import main
from ramanmem.config import ConfigError, parse_config
from ramanmem.outputs import read_csv, write_csv
from ramanmem.svg import PlotError, render

CONFIGS = resources.files("ramanmem").joinpath("configs")


def cfg_path(name):
    return str(CONFIGS.joinpath(name))


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestConfig:
    def test_defaults_and_lists(self):
        cfg = parse_config("mode = memory\nwrite.ATL = -10, -40\nread.ATL = -2, -8\ninput.xi3 = 9\n")
        assert cfg["grid.n"] == 256 and cfg["flags.optimal_retrieval"] is True
        sc = cfg.scenarios()
        assert [s["write.ATL"] for s in sc] == [-10.0, -40.0]
        assert [s["input.xi3"] for s in sc] == [9.0, 9.0]
        assert np.isinf(sc[0]["input.tau_c_over_T"])

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match=r":2: unknown key 'write.atl'"):
            parse_config("mode = spectra\nwrite.atl = -1\ninput.xi3 = 9\n")

    def test_key_from_other_mode(self):
        with pytest.raises(ConfigError, match="unknown key 'read.ATL'"):
            parse_config("mode = spectra\nwrite.ATL = -1\nread.ATL = -1\ninput.xi3 = 9\n")

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="missing required key 'read.ATL'"):
            parse_config("mode = memory\nwrite.ATL = -1\ninput.xi3 = 9\n")

    def test_bad_value_and_syntax(self):
        with pytest.raises(ConfigError, match=":2: bad value for 'grid.n'"):
            parse_config("mode = entangle\ngrid.n = many\nentangle.ATL = 1\n")
        with pytest.raises(ConfigError, match=":1: expected"):
            parse_config("mode memory\n")
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config("mode = entangle\nmode = entangle\n")

    def test_branch_validation(self):
        with pytest.raises(ConfigError, match="A > 0"):
            parse_config("mode = entangle\nentangle.ATL = 1, -2\n")
        with pytest.raises(ConfigError, match="negative"):
            parse_config("mode = spectra\nwrite.ATL = 3\ninput.xi3 = 9\n")

    def test_list_length_mismatch(self):
        with pytest.raises(ConfigError, match="equal lengths"):
            parse_config("mode = memory\nwrite.ATL = -1, -2\nread.ATL = -1, -2, -3\ninput.xi3 = 9\n")

    def test_hash_is_canonical(self):
        a = parse_config("mode = entangle\nentangle.ATL = 1, 2\n# comment\n")
        b = parse_config("entangle.ATL=1,2\nmode=entangle\n")
        assert a.sha256 == b.sha256
        assert a.with_overrides(**{"grid.n": 64}).sha256 != a.sha256

    def test_packaged_configs_parse(self):
        for name in ("fig3_broadband.cfg", "fig4_readout.cfg", "fig56_finite_bandwidth.cfg",
                     "entangle_sweep.cfg", "coupling_rb87.cfg"):
            parse_config(CONFIGS.joinpath(name).read_text(), name)


class TestOutputs:
    def test_csv_round_trip_full_precision(self, tmp_path):
        x = 0.1 + 0.2
        p = write_csv(tmp_path / "a.csv", ["k", "v"], [[0, x], [1, 1 / 3]], ["hello"])
        header, names, data = read_csv(p)
        assert header == ["hello"] and names == ["k", "v"]
        assert data[0, 1] == x and data[1, 1] == 1 / 3
        assert "0.30000000000000004" in p.read_text()


class TestSvg:
    def test_two_series_two_polylines(self):
        data = np.array([[0, 0.0, 1.0, 2.0], [1, 1.0, 10.0, 20.0]])
        svg = render(["k", "x", "Xi_I.in", "Xi_I.out"], data)
        assert svg.count("<polyline") == 2
        assert svg.count("<g id=\"panel-") == 1

    def test_one_panel_per_channel(self):
        data = np.array([[0.0, 1.0, 2.0], [1.0, 3.0, 4.0]])
        svg = render(["x", "T_I.out", "T_III.out"], data)
        assert svg.count("<g id=\"panel-") == 2

    def test_margin_five_percent(self):
        data = np.array([[0.0, 1.0], [10.0, 100.0]])
        svg = render(["x", "a.y"], data)
        pts = re.search(r'points="([^"]+)"', svg).group(1).split()
        (x0, y0), (x1, y1) = [tuple(map(float, p.split(","))) for p in pts]
        m = re.search(r'<rect x="(\d+)" y="(\d+)" width="(\d+)" height="(\d+)" fill="none"', svg)
        ox, oy, w, h = map(float, m.groups())
        assert (x0 - ox) / w == pytest.approx(0.05 / 1.1, abs=1e-3)
        assert (ox + w - x1) / w == pytest.approx(0.05 / 1.1, abs=1e-3)
        assert (oy + h - y0) / h == pytest.approx(0.05 / 1.1, abs=1e-3)

    def test_empty(self):
        with pytest.raises(PlotError):
            render(["x", "a.y"], np.zeros((0, 2)))

    def test_cli_empty_csv_exit_code(self, tmp_path, capsys):
        p = write(tmp_path, "e.csv", "# nothing\nx,a.y\n")
        assert main(["plot", p]) == 2
        assert "nothing to plot" in capsys.readouterr().err


class TestCommands:
    def test_missing_key_exit_2(self, tmp_path):
        p = write(tmp_path, "m.cfg", "mode = memory\nwrite.ATL = -10\ninput.xi3 = 9\n")
        assert main(["memory", "--config", p, "--out", str(tmp_path / "o")]) == 2

    def test_entangle_negative_exit_2(self, tmp_path):
        p = write(tmp_path, "e.cfg", "mode = entangle\nentangle.ATL = -1\n")
        assert main(["entangle", "--config", p, "--out", str(tmp_path / "o")]) == 2

    def test_wrong_subcommand_exit_2(self, tmp_path):
        p = write(tmp_path, "e.cfg", "mode = entangle\nentangle.ATL = 1\n")
        assert main(["memory", "--config", p, "--out", str(tmp_path / "o")]) == 2

    def test_bad_line_file_exit_2(self, tmp_path, capsys):
        lines = write(tmp_path, "bad.lines", "reference_THz = 377\ndipole_unit = SI\nreduced_dipole = 1\n1 1 x 1\n")
        p = write(tmp_path, "c.cfg", f"mode = coupling\ncoupling.lines = {lines}\n")
        assert main(["coupling", "--config", p, "--out", str(tmp_path / "o")]) == 2
        assert "bad.lines:4" in capsys.readouterr().err

    def test_solver_failure_exit_3(self, tmp_path):
        p = write(tmp_path, "e.cfg", "mode = entangle\nentangle.ATL = 20\nentangle.max_iter = 1\ngrid.n = 128\n")
        assert main(["entangle", "--config", p, "--out", str(tmp_path / "o")]) == 3

    def test_entangle_outputs(self, tmp_path):
        p = write(tmp_path, "e.cfg", "mode = entangle\nentangle.ATL = 1, 10\n")
        out = tmp_path / "o"
        assert main(["entangle", "--config", p, "--out", str(out), "--grid", "32"]) == 0
        _, names, h = read_csv(out / "e0_mode_h.csv")
        _, _, g = read_csv(out / "e0_mode_g.csv")
        assert h.shape[0] == 32 and g.shape[0] == 32
        header, names, w = read_csv(out / "witness.csv")
        assert names[:5] == ["ATL", "residual", "V1", "V3", "V_sum"]
        assert w[1, 4] < w[0, 4] < 4
        assert header[0] == f"ramanmem {__version__}" and header[1].startswith("config_sha256 ")

    def test_memory_outputs_and_header(self, tmp_path):
        p = write(tmp_path, "m.cfg", "mode = memory\nwrite.ATL = -10\nread.ATL = -2\ninput.xi3 = 9\n"
                                     "input.tau_c_over_T = 100\n")
        out = tmp_path / "o"
        assert main(["memory", "--config", p, "--out", str(out), "--grid", "32"]) == 0
        for f in ("s0_write_light.csv", "s0_write_spin.csv", "s0_read_light.csv", "s0_read_spin.csv"):
            header, names, data = read_csv(out / f)
            assert data.shape == (32, 6)
            assert header[0] == f"ramanmem {__version__}"
        assert '"config_sha256"' in (out / "fidelity.json").read_text()

    def test_coupling_finds_zero(self, tmp_path):
        import json
        out = tmp_path / "o"
        assert main(["coupling", "--config", cfg_path("coupling_rb87.cfg"), "--out", str(out)]) == 0
        zeros = json.loads((out / "coupling.json").read_text())["kappa1_zeros_MHz"]
        assert len(zeros) == 1 and abs(zeros[0] + 205) < 20


def _same_tree(a: Path, b: Path) -> bool:
    names = sorted(p.name for p in a.iterdir())
    if names != sorted(p.name for p in b.iterdir()):
        return False
    return all(filecmp.cmp(a / n, b / n, shallow=False) for n in names)


class TestDeterminism:
    @pytest.mark.parametrize("sub,name", [("memory", "fig3_broadband.cfg"), ("memory", "fig4_readout.cfg"),
                                          ("memory", "fig56_finite_bandwidth.cfg"),
                                          ("entangle", "entangle_sweep.cfg"), ("coupling", "coupling_rb87.cfg")])
    def test_byte_identical(self, tmp_path, sub, name):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main([sub, "--config", cfg_path(name), "--out", str(a)]) == 0
        assert main([sub, "--config", cfg_path(name), "--out", str(b)]) == 0
        assert _same_tree(a, b)

    def test_selftest(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["selftest", "--out", str(a)]) == 0
        assert main(["selftest", "--out", str(b)]) == 0
        assert _same_tree(a, b)

    def test_plot_is_pure(self, tmp_path):
        src = tmp_path / "m"
        assert main(["memory", "--config", cfg_path("fig3_broadband.cfg"), "--out", str(src), "--grid", "32"]) == 0
        csv = str(src / "s0_write_spin.csv")
        assert main(["plot", csv, "--out", str(tmp_path / "p1")]) == 0
        assert main(["plot", csv, "--out", str(tmp_path / "p2")]) == 0
        assert _same_tree(tmp_path / "p1", tmp_path / "p2")
        assert (tmp_path / "p1" / "s0_write_spin.svg").read_text().count("<polyline") == 4
