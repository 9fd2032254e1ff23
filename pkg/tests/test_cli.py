import json

import pytest

from diracdyn import __version__
from diracdyn.cli import ConfigError, list_builtin_scenarios, load_config, main
from diracdyn.io import read_csv

BAD_TOML = """\
name = "bad"

[grid]
geometry = "line"
n = 200
extent = 10.0

[[tasks]]
type = "evolve"
window = [-2.0, 2.0]

[tasks.packet]
center = 0.0
widht = 1.0
"""

RANDOM_EVOLVE = """\
name = "random-evolve"
seed = 11

[grid]
geometry = "line"
n = 400
extent = 20.0

[[tasks]]
type = "evolve"
window = [-4.0, 4.0]
times = [0.0, 1.0, 2.0]

[tasks.packet]
center = "random"
center_range = [-2.0, 2.0]
width = 1.0
"""


def test_unknown_key_reports_line(tmp_path, capsys):
    p = tmp_path / "bad.toml"
    p.write_text(BAD_TOML)
    assert main(["run", str(p), "--out", str(tmp_path / "out")]) == 2
    err = capsys.readouterr().err
    assert "bad.toml:14:" in err and "widht" in err


def test_json_unknown_key_line():
    text = json.dumps({"name": "x", "grid": {"geometry": "line", "n": 10, "extent": 1.0}, "bogus": 1}, indent=1)
    with pytest.raises(ConfigError) as e:
        load_config(text, is_json=True, source="x.json")
    assert e.value.line == text.splitlines().index(' "bogus": 1') + 1


def test_syntax_error_and_missing_file(tmp_path, capsys):
    p = tmp_path / "broken.toml"
    p.write_text('name = "a"\ngrid = [\n')
    assert main(["run", str(p)]) == 2
    assert main(["run", str(tmp_path / "nope.toml")]) == 2


def test_horizon_checked_at_parse_time():
    text = RANDOM_EVOLVE.replace("[0.0, 1.0, 2.0]", "[0.0, 50.0]")
    with pytest.raises(ConfigError, match="extent"):
        load_config(text, is_json=False)


def test_builtins_listed(capsys):
    names = list_builtin_scenarios()
    for n in ("free-line-hs", "linear-field-ballistic", "boost-identity"):
        assert n in names
    assert main(["scenarios"]) == 0
    assert "free-line-hs" in capsys.readouterr().out
    assert main(["scenarios", "--show", "no-such"]) == 2


def test_free_line_run_is_deterministic(tmp_path, monkeypatch):
    monkeypatch.setenv("DIRAC_ARTIFACTS", str(tmp_path / "a"))
    assert main(["run", "free-line-hs"]) == 0
    assert main(["run", "free-line-hs", "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "free-line-hs" / "01-hs-scan.csv").read_bytes()
    b = (tmp_path / "b" / "free-line-hs" / "01-hs-scan.csv").read_bytes()
    assert a == b
    meta, cols, rows = read_csv(tmp_path / "a" / "free-line-hs" / "01-hs-scan.csv")
    assert meta["version"] == __version__ and meta["scenario"] == "free-line-hs"
    assert cols[-2:] == ["scenario", "version"]
    assert all(r[-2:] == ["free-line-hs", __version__] for r in rows)
    assert float(meta["fit_exponent"]) == pytest.approx(0.5, abs=0.02)
    assert (tmp_path / "a" / "free-line-hs" / "manifest.csv").exists()


def _center(tmp_path, seed):
    p = tmp_path / "r.toml"
    p.write_text(RANDOM_EVOLVE)
    out = tmp_path / f"s{seed}"
    assert main(["run", str(p), "--seed", str(seed), "--out", str(out)]) == 0
    meta, _, _ = read_csv(out / "random-evolve" / "01-evolve.csv")
    return float(meta["packet_center"])


def test_random_center_is_seeded(tmp_path):
    a, b, c = _center(tmp_path, 1), _center(tmp_path, 1), _center(tmp_path, 2)
    assert a == b and a != c
    assert -2.0 <= a <= 2.0


def test_accept_single_criterion(tmp_path, capsys):
    assert main(["accept", "--only", "4", "--out", str(tmp_path)]) == 0
    assert "PASS" in capsys.readouterr().out
    assert (tmp_path / "acceptance" / "acceptance.csv").exists()
