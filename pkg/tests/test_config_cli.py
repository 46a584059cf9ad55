"""Config validation and CLI determinism."""

import json
from pathlib import Path

import pytest

from afpa_sim.cli import main
from afpa_sim.config import (
    ConfigError,
    canonical_form,
    default_config_path,
    load_config,
    parse_config,
)


@pytest.fixture()
def default_doc():
    return json.loads(default_config_path().read_text())


def test_default_config_loads_and_round_trips(default_doc):
    config = parse_config(default_doc)
    canon = canonical_form(config)
    assert parse_config(canon) == config
    assert canonical_form(parse_config(canon)) == canon


def test_missing_belt_span_named(default_doc):
    del default_doc["rig"]["belt_span"]
    with pytest.raises(ConfigError, match=r"rig\.belt_span"):
        parse_config(default_doc)


def test_unknown_key_rejected(default_doc):
    default_doc["rig"]["belt_spam"] = 1.0
    with pytest.raises(ConfigError, match="belt_spam"):
        parse_config(default_doc)


def test_unknown_nested_key_rejected(default_doc):
    default_doc["study"]["responder"]["extra"] = 1
    with pytest.raises(ConfigError, match=r"study\.responder.*extra"):
        parse_config(default_doc)


def test_pa_units_normalized(default_doc):
    kpa = parse_config(default_doc)
    default_doc["units"]["pressure"] = "Pa"
    for valve in default_doc["valves"].values():
        valve["supply_pressure"] *= 1e3
        valve["exhaust_pressure"] *= 1e3
    default_doc["planner"]["bounds"] = [v * 1e3 for v in default_doc["planner"]["bounds"]]
    default_doc["planner"]["max_characterized_p2"] *= 1e3
    default_doc["sweep"]["p2_levels"] = [v * 1e3 for v in default_doc["sweep"]["p2_levels"]]
    default_doc["sweep"]["p1_max"] *= 1e3
    default_doc["sweep"]["p1_step"] *= 1e3
    pa = parse_config(default_doc)
    assert pa.valves == kpa.valves
    assert pa.bounds == kpa.bounds
    assert pa.sweep == kpa.sweep


def test_bad_unit_tag_rejected(default_doc):
    default_doc["units"]["pressure"] = "psi"
    with pytest.raises(ConfigError, match="units.pressure"):
        parse_config(default_doc)


def test_wrong_type_named(default_doc):
    default_doc["rig"]["modulating"]["flat_width"] = "wide"
    with pytest.raises(ConfigError, match=r"rig\.modulating\.flat_width"):
        parse_config(default_doc)


def test_invalid_json_reports_line(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{\n  "units": oops\n}')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(p)


def test_missing_file_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json")


def test_invalid_bounds_rejected(default_doc):
    default_doc["planner"]["bounds"] = [100.0, 50.0, 0.0, 150.0]
    with pytest.raises(ConfigError, match=r"planner\.bounds"):
        parse_config(default_doc)


# --- CLI -------------------------------------------------------------------

def run_cli(args, capsys) -> list[Path]:
    assert main(args) == 0
    out = capsys.readouterr().out
    return [Path(line) for line in out.strip().splitlines()]


def read_all(paths) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in paths}


@pytest.mark.parametrize("command", ["plan", "feasibility", "characterize-size"])
def test_cli_rerun_byte_identical(command, tmp_path, capsys):
    a = run_cli([command, "--seed", "7", "--out", str(tmp_path / "a")], capsys)
    b = run_cli([command, "--seed", "7", "--out", str(tmp_path / "b")], capsys)
    assert read_all(a) == read_all(b)


def test_cli_study_pipeline_byte_identical(tmp_path, capsys):
    for d in ("a", "b"):
        run_cli(["study-run", "--seed", "9", "--out", str(tmp_path / d)], capsys)
        run_cli(["study-analyze", "--seed", "9", "--out", str(tmp_path / d)], capsys)
    files_a = sorted((tmp_path / "a").iterdir())
    files_b = sorted((tmp_path / "b").iterdir())
    assert [p.name for p in files_a] == [p.name for p in files_b]
    for pa, pb in zip(files_a, files_b):
        assert pa.read_bytes() == pb.read_bytes()


def test_cli_headers_unit_suffixed(tmp_path, capsys):
    paths = run_cli(["characterize-size", "--out", str(tmp_path)], capsys)
    header = paths[0].read_text().splitlines()[0]
    for col in header.split(","):
        assert any(col.endswith(s) for s in ("_kPa", "_mm", "_s", "_N", "_N_per_mm"))


def test_cli_study_analyze_without_logs_fails(tmp_path, capsys):
    assert main(["study-analyze", "--out", str(tmp_path)]) == 1


def test_cli_rejects_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["plan", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_cli_16hz_row_count(tmp_path, capsys):
    paths = run_cli(["step", "--out", str(tmp_path)], capsys)
    config = load_config(default_config_path())
    resampled = [p for p in paths if p.name.endswith("_16hz.csv")]
    assert resampled
    for p in resampled:
        rows = p.read_text().strip().splitlines()
        assert len(rows) - 1 == int(config.step.t_end * 16) + 1


def test_cli_zero_pressure_stiffness_forces_zero(tmp_path, capsys):
    doc = json.loads(default_config_path().read_text())
    doc["sweep"]["p2_levels"] = [0.0]
    doc["planner"]["max_characterized_p2"] = 0.001
    doc["rig"]["friction_force"] = 0.0
    cfg = tmp_path / "zero.json"
    cfg.write_text(json.dumps(doc))
    paths = run_cli(["characterize-stiffness", "--config", str(cfg),
                     "--out", str(tmp_path)], capsys)
    fig3a = [p for p in paths if p.name == "fig3a.csv"][0]
    rows = fig3a.read_text().strip().splitlines()[1:]
    zero_rows = [r for r in rows if r.split(",")[0] == "0"]
    assert zero_rows
    for row in zero_rows:
        _, _, f_load, f_unload = row.split(",")
        assert float(f_load) == 0.0
        assert float(f_unload) == 0.0
