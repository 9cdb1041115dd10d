import csv
import json

import pytest

from sublap.cli import main
from sublap.config import ConfigError, from_dict, load_config, parse_text
from sublap.runner import CSV_COLUMNS, execute, rows_to_csv, run

INI = """
[experiment]
name = smoke
seed = 7

[group]
family = euclidean(1)
box_size = 6.283185307179586
nodes_per_axis = 64

[spectral]
mode = dense   # eigendecomposition

[family]
kind = gaussian
dilations = 0.5, 1, 2

[inequality]
variant = weak_p1
q = 2
s = 0.25
"""


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "smoke.ini"
    p.write_text(INI)
    return p


def test_parse_ini_coerces_values(cfg_path):
    cfg = load_config(cfg_path)
    assert cfg.name == "smoke" and cfg.seed == 7 and cfg.mode == "dense"
    assert cfg.group_spec().label == "euclidean(1)"
    assert cfg.family_spec().dilations == (0.5, 1.0, 2.0)
    assert cfg.params().beta == pytest.approx(0.5)
    cfg.validate()


def test_parse_json_matches_ini(cfg_path):
    ini = load_config(cfg_path)
    js = parse_text(json.dumps(ini.to_dict()))
    assert js.to_dict() == ini.to_dict()


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.ini")
    with pytest.raises(ConfigError, match="unknown config sections"):
        from_dict({"groups": {}})
    with pytest.raises(ConfigError, match="invalid JSON"):
        parse_text('{"group": ')
    with pytest.raises(ConfigError, match="missing"):
        from_dict({"group": {"family": "heisenberg1"}}).group_spec()
    with pytest.raises(ConfigError, match="spectral mode"):
        from_dict({"group": {"family": "euclidean(1)", "box_size": 1, "nodes_per_axis": 16},
                   "spectral": {"mode": "qr"}}).validate()


def test_run_writes_json_and_csv(cfg_path, tmp_path):
    out = tmp_path / "out"
    assert run(load_config(cfg_path), "poincare", out) == 0
    doc = json.loads((out / "smoke_poincare.json").read_text())
    assert doc["status"] == "ok"
    assert set(doc) >= {"experiment", "command", "config", "versions", "summary", "report"}
    s = doc["summary"]
    assert s["ratio_min"] <= s["ratio_median"] <= s["ratio_max"]
    assert s["verdict"] in ("pass", "fail", "degenerate")
    with open(out / "smoke_poincare.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) - 1 >= 3 * 32
    assert {r[0] for r in rows[1:]} == {"smoke"}


def test_rerun_is_byte_identical(cfg_path, tmp_path):
    cfg = load_config(cfg_path)
    run(cfg, "verify", tmp_path / "a")
    run(load_config(cfg_path), "verify", tmp_path / "b")
    a = (tmp_path / "a" / "smoke_verify.csv").read_bytes()
    assert a == (tmp_path / "b" / "smoke_verify.csv").read_bytes()
    assert b"\r\n" in a


def test_csv_float_roundtrip():
    text = rows_to_csv([{"experiment": "e", "ratio": 0.1 + 0.2, "verdict": "pass", "grid": "a,b"}])
    rows = list(csv.reader(text.splitlines()))
    assert float(rows[1][6]) == 0.1 + 0.2
    assert rows[1][4] == "a,b"


def test_bad_params_exit_2(cfg_path, tmp_path):
    cfg = load_config(cfg_path)
    cfg.inequality["s"] = 0.9
    assert run(cfg, "verify", tmp_path) == 2
    err = json.loads((tmp_path / "smoke_verify.error.json").read_text())
    assert err["error_type"] == "ParamError" and "0<s<1/q" in err["message"]
    assert not (tmp_path / "smoke_verify.csv").exists()


def test_computation_error_exit_1(cfg_path, tmp_path):
    cfg = load_config(cfg_path)
    cfg.grids["t"] = "0.0001"  # below h^2 for the heat check
    assert run(cfg, "heat-check", tmp_path) == 1


@pytest.mark.parametrize("proof", ["weak1", "threshold", "identities", "bandlimit", "poincare"])
def test_trace_proofs(cfg_path, proof):
    report, rows, summary = execute(load_config(cfg_path), "trace", proof=proof)
    assert rows and summary["verdict"] in ("pass", "fail")


def test_trace_identities_pass(cfg_path):
    _, rows, summary = execute(load_config(cfg_path), "trace", proof="identities")
    assert summary["verdict"] == "pass"
    assert len(rows) == 5


def test_cli_main_with_overrides(cfg_path, tmp_path, capsys):
    out = tmp_path / "cli"
    code = main(["lattice-info", "--config", str(cfg_path), "--out", str(out), "--resolution", "32", "--seed", "3"])
    assert code == 0
    doc = json.loads((out / "smoke_lattice-info.json").read_text())
    assert doc["report"]["nodes"] == 32
    assert doc["config"]["experiment"]["seed"] == 3
    assert "wrote" in capsys.readouterr().out


def test_cli_variant_alias(cfg_path, tmp_path):
    out = tmp_path / "v"
    assert main(["verify", "--config", str(cfg_path), "--out", str(out), "--variant", "weak1"]) == 0
    assert json.loads((out / "smoke_verify.json").read_text())["summary"]["variant"] == "weak_p1"


def test_cli_missing_config(tmp_path, capsys):
    assert main(["poincare", "--config", str(tmp_path / "none.ini")]) == 2
    assert "config error" in capsys.readouterr().err


def test_summarize(cfg_path, tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    assert main(["summarize", str(tmp_path / "empty")]) == 0
    assert "no reports" in capsys.readouterr().out
    for n in (32, 64):
        main(["poincare", "--config", str(cfg_path), "--out", str(tmp_path / "r"), "--resolution", str(n)])
        (tmp_path / "r" / "smoke_poincare.json").rename(tmp_path / "r" / f"n{n}.json")
    capsys.readouterr()
    assert main(["summarize", str(tmp_path / "r")]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].split("\t")[-1] == "stability"
    assert len(out) == 3
    (tmp_path / "r" / "broken.json").write_text('{\n "a": 1,\n oops\n}\n')
    assert main(["summarize", str(tmp_path / "r")]) == 1
    assert "line 3" in capsys.readouterr().err
