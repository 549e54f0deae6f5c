import json
from pathlib import Path

import pytest

from junctionsim import cli
from junctionsim.config import ConfigError, parse_config
from junctionsim.model import JunctionSpec

ROOT = Path(__file__).resolve().parents[1]

DC = """\
# two-site junction
model.L1 = 1
model.L2 = 1
model.t_hop = 0
model.g11 = 1
model.g22 = 1
model.g12 = 0.1
experiment.grid = 17
"""


def _write(tmp_path, text, name="run.conf"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_config_defaults():
    cfg = parse_config("model.L1 = 1\nmodel.L2 = 1\nmodel.g12 = 0.1\nexperiment.grid = 17\n",
                       kind="dc")
    spec = cfg.spec()
    assert spec == JunctionSpec(1, 1, g12=0.1)
    assert cfg.experiment["grid"] == 17 and cfg.experiment["engine"] == "meanfield"
    assert cfg.output["format"] == "csv"


def test_negative_g12_accepted():
    cfg = parse_config(DC.replace("0.1", "-0.1"), kind="dc")
    assert cfg.spec().g12 == -0.1


def test_range_error_names_key():
    with pytest.raises(ConfigError) as exc:
        parse_config(DC.replace("model.L1 = 1", "model.L1 = 0"), kind="dc")
    assert any("model.L1" in e for e in exc.value.errors)


def test_all_errors_reported():
    text = "model.L1 = 0\nmodel.L2 = 1\nnot a line\nmodel.colour = 3\nexperiment.grid = x\n" \
           "output.format = xml\nexperiment.kind = ac\n"
    with pytest.raises(ConfigError) as exc:
        parse_config(text, kind="dc")
    errs = exc.value.errors
    assert len(errs) == 6
    assert any(e.startswith("line 3: syntax error") for e in errs)
    assert any("unknown key 'model.colour'" in e for e in errs)
    assert any("line 5" in e and "experiment.grid" in e for e in errs)
    assert any("output.format" in e for e in errs)
    assert any("experiment.kind" in e for e in errs)


def test_missing_required_and_kind():
    with pytest.raises(ConfigError) as exc:
        parse_config("model.L2 = 1\n")
    assert any("model.L1" in e for e in exc.value.errors)
    assert any("experiment.kind" in e for e in exc.value.errors)


def test_comments_and_quotes():
    cfg = parse_config(DC + "model.boundary = 'periodic'  # ring\n\n# done\n", kind="dc")
    assert cfg.model["boundary"] == "periodic"


def test_dc_sweep_outputs(tmp_path):
    conf = _write(tmp_path, DC)
    out = tmp_path / "out"
    assert cli.main(["dc-sweep", "--config", str(conf), "--out", str(out)]) == 0
    lines = (out / "result.csv").read_text().splitlines()
    assert lines[0] == "delta_theta,observable"
    assert len(lines) == 18
    summary = json.loads((out / "summary.json").read_text())
    assert summary["schema_version"] == 1
    assert summary["status"] == "pass" and summary["reason"] is None
    assert abs(summary["fit"]["coefficients"]["sin"] + 0.1) < 1e-10
    assert summary["fit"]["residual"] < 1e-10
    assert summary["checks"] == {"dc_law": True}
    assert summary["config"]["model"]["g12"] == 0.1
    assert summary["version"]
    assert "plot" in (out / "plot.gp").read_text()
    assert not (out / "result.json").exists()


def test_csv_is_byte_identical(tmp_path):
    conf = _write(tmp_path, DC)
    for d in ("a", "b"):
        assert cli.main(["dc-sweep", "--config", str(conf), "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a/result.csv").read_bytes() == (tmp_path / "b/result.csv").read_bytes()


def test_formats(tmp_path):
    conf = _write(tmp_path, DC)
    cli.main(["energy-sweep", "--config", str(conf), "--out", str(tmp_path / "j"),
              "--format", "json"])
    assert (tmp_path / "j/result.json").exists() and not (tmp_path / "j/result.csv").exists()
    data = json.loads((tmp_path / "j/result.json").read_text())
    assert data["columns"] == ["delta_theta", "observable"] and len(data["rows"]) == 17
    cli.main(["energy-sweep", "--config", str(conf), "--out", str(tmp_path / "b"),
              "--format", "both"])
    assert (tmp_path / "b/result.json").exists() and (tmp_path / "b/result.csv").exists()


def test_output_directory_from_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    conf = _write(tmp_path, DC + "output.directory = here\n")
    assert cli.main(["dc-sweep", "--config", str(conf)]) == 0
    assert (tmp_path / "here/result.csv").exists()


def test_config_error_exit_code(tmp_path):
    conf = _write(tmp_path, DC.replace("model.L1 = 1", "model.L1 = 0"))
    out = tmp_path / "out"
    assert cli.main(["dc-sweep", "--config", str(conf), "--out", str(out)]) == 2
    summary = json.loads((out / "summary.json").read_text())
    assert summary["reason"]["code"] == "config_error"
    assert any("model.L1" in m for m in summary["reason"]["messages"])
    assert cli.main(["dc-sweep", "--config", str(tmp_path / "missing.conf")]) == 2


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        cli.main(["dc-sweep"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate", "--config", "x"])
    assert exc.value.code == 2


def test_capacity_exit_code(tmp_path):
    conf = _write(tmp_path, "model.L1 = 7\nmodel.L2 = 6\nmodel.g11 = 1\nmodel.g22 = 1\n"
                            "experiment.engine = exact\n")
    out = tmp_path / "out"
    assert cli.main(["dc-sweep", "--config", str(conf), "--out", str(out)]) == 3
    reason = json.loads((out / "summary.json").read_text())["reason"]
    assert reason["code"] == "capacity_exceeded"


def test_law_violation_exit_code(tmp_path):
    # a tolerance below round-off turns the dc fit into a reported violation
    conf = _write(tmp_path, DC + "experiment.law_tol = 1e-30\n")
    out = tmp_path / "out"
    assert cli.main(["dc-sweep", "--config", str(conf), "--out", str(out)]) == 1
    s = json.loads((out / "summary.json").read_text())
    assert s["status"] == "fail" and s["reason"]["code"] == "invariant_violation"
    assert s["checks"]["dc_law"] is False
    assert any("dc_law" in m for m in s["reason"]["messages"])


def test_validate_all_pass(tmp_path):
    conf = _write(tmp_path, DC)
    out = tmp_path / "out"
    assert cli.main(["validate", "--config", str(conf), "--out", str(out)]) == 0
    lines = (out / "result.csv").read_text().splitlines()
    assert lines[0] == "check,value,tolerance,passed"
    assert all(line.endswith(",1") for line in lines[1:])
    assert json.loads((out / "summary.json").read_text())["status"] == "pass"


def test_oracle_check_command(tmp_path):
    conf = _write(tmp_path, DC)
    out = tmp_path / "out"
    assert cli.main(["oracle-check", "--config", str(conf), "--out", str(out)]) == 0
    assert (out / "result.csv").read_text().startswith("delta_theta,meanfield,exact,abs_diff\n")


def test_ac_run_command(tmp_path):
    conf = _write(tmp_path, "model.L1 = 1\nmodel.L2 = 1\nmodel.t_hop = 0\nmodel.g11 = 1\n"
                            "model.g22 = 1\nmodel.g12 = 0.01\nexperiment.V = 0.25\n"
                            "experiment.n_samples = 256\n")
    out = tmp_path / "out"
    assert cli.main(["ac-run", "--config", str(conf), "--out", str(out)]) == 0
    assert (out / "result.csv").read_text().startswith("time,current,charge_region1\n")
    res = json.loads((out / "summary.json").read_text())["results"]
    assert abs(res["peak_omega"] - 0.5) <= res["binwidth"]


def test_odlro_command(tmp_path):
    out = tmp_path / "out"
    code = cli.main(["odlro-scan", "--config", str(ROOT / "configs/odlro_ring.conf"),
                     "--out", str(out)])
    assert code == 0
    lines = (out / "result.csv").read_text().splitlines()
    assert lines[0] == "separation,correlation_real,correlation_imag,plateau_deviation"
    assert len(lines) == 34
    res = json.loads((out / "summary.json").read_text())["results"]
    assert res["deviation_at_max"] * 100 <= res["deviation_at_2"]


def test_odlro_cross_command(tmp_path):
    conf = _write(tmp_path, "model.L1 = 4\nmodel.L2 = 4\nmodel.mu = -0.5\nmodel.g11 = 3\n"
                            "model.g22 = 3\nexperiment.region = cross\n")
    out = tmp_path / "out"
    assert cli.main(["odlro-scan", "--config", str(conf), "--out", str(out)]) == 0
    assert json.loads((out / "summary.json").read_text())["checks"]["cross_plateau"]


@pytest.mark.parametrize("name", ["two_site_dc.conf", "ac_12_modes.conf", "odlro_ring.conf"])
def test_shipped_configs_parse(name):
    parse_config((ROOT / "configs" / name).read_text(), kind="dc")
