import json
import math

import pytest

from lamegap.harness.cli import build_config, main, make_parser


def test_flags_override_config(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("geometry:\n  gamma: 0.5\nmaterial:\n  lam: 2.0\n")
    args = make_parser().parse_args(
        ["asym", "--config", str(path), "--mu", "3", "--eps", "0.1", "0.05", "0.02", "--no-extrapolate",
         "--probe", "0.0", "0.25"])
    cfg = build_config(args)
    assert cfg.material.lam == 2.0 and cfg.material.mu == 3.0
    assert cfg.eps == [0.1, 0.05, 0.02] and not cfg.extrapolate
    assert cfg.probes == [(0.0, 0.25)]


def test_config_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text("geometry:\n  gamma: 1.5\n")
    assert main(["asym", "--config", str(path)]) == 2
    err = capsys.readouterr().err
    assert "config error" in err and "geometry.gamma (line 2)" in err


def test_missing_config_exit_code(tmp_path, capsys):
    assert main(["asym", "--config", str(tmp_path / "none.yaml")]) == 2


def test_asym_output(tmp_path):
    out = tmp_path / "asym.json"
    assert main(["asym", "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    g, tau = d["gamma"], d["tau"]
    closed = tau ** (-1 / (1 + g)) * 2 * math.pi / ((1 + g) * math.sin(math.pi / (1 + g)))
    assert d["M"] == pytest.approx(closed, rel=1e-6)
    assert d["energy_exponent"] == pytest.approx(-1 / 3)
    assert d["gradient_exponent"] == pytest.approx(-2 / 3)
    assert set(d["neck_integral"]) == {repr(e) for e in [4e-2, 2e-2, 1e-2, 5e-3, 2.5e-3]}
    sq = d["square"]
    assert len(sq["K_star"]) == len(sq["G_star"]) == len(d["L"]) == 2
    assert sq["K_star"][0] / d["L"][0] == pytest.approx(sq["K_star"][1] / d["L"][1], rel=1e-12)


@pytest.mark.slow
def test_mesh_subcommand(tmp_path, capsys):
    out = tmp_path / "m.txt"
    rc = main(["mesh", "--at", "0.02", "--n-layers", "4", "--h-far", "0.6", "--h-incl", "0.15",
               "--out", str(out)])
    assert rc == 0
    assert out.is_file() and out.stat().st_size > 0
    assert "vertices=" in capsys.readouterr().out


def test_unknown_subcommand_rejected():
    with pytest.raises(SystemExit):
        make_parser().parse_args(["nope"])
