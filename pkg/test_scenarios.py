import json

import pandas as pd
import pytest

import app
from core.errors import ConfigurationError
from core.exterior import ExteriorForm, affine_space, coord_symbol
from core.scenarios import (
    SCENARIOS, ScenarioConfig, compare_backends, family_from_json, form_table, parse_scenario_id, resolve_scenario,
    run_scenario,
)


@pytest.mark.parametrize("text, expected", [
    ("ex7_1", ("ex7_1", {})),
    ("ex7_8(k=3)", ("ex7_8", {"k": 3})),
    ("ex7_8(4)", ("ex7_8", {"k": 4})),
    ("ex7_5(2)", ("ex7_5", {"g": 2})),
    (" ex7_15_curvature(k=2) ", ("ex7_15_curvature", {"k": 2})),
])
def test_parse_scenario_id(text, expected):
    assert parse_scenario_id(text) == expected


def test_parse_scenario_id_rejects_garbage():
    with pytest.raises(ConfigurationError):
        parse_scenario_id("ex7_8[k=3]")
    with pytest.raises(ConfigurationError):
        parse_scenario_id("missing_file.json")


def test_unknown_scenario_suggests_the_closest_name():
    with pytest.raises(ConfigurationError, match="Did you mean 'gv_formal'"):
        resolve_scenario("gv_formall")


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ScenarioConfig("ex7_1", tolerance=0)
    with pytest.raises(ConfigurationError):
        ScenarioConfig("ex7_1", backend="spectral")
    with pytest.raises(ConfigurationError):
        ScenarioConfig("ex7_1", quad_order=0)
    assert ScenarioConfig("ex7_1").hash() == ScenarioConfig("ex7_1", report="elsewhere.json").hash()
    assert ScenarioConfig("ex7_1").hash() != ScenarioConfig("ex7_1", tolerance=1e-6).hash()


def test_form_table_lists_every_monomial():
    space = affine_space("Z", ["z1", "z2"])
    z1, z2 = coord_symbol("z1"), coord_symbol("z2")
    table = form_table(ExteriorForm.from_terms(space, [(z2, ["z1"]), (-z1, ["z2"])]))
    assert isinstance(table, pd.DataFrame)
    assert list(table["monomial"]) == ["dz1", "dz2"]
    assert list(table["coefficient"]) == ["z2", "-z1"]


@pytest.mark.parametrize("scenario", ["ex7_1_s1", "ex7_5(g=2)", "ex7_15_curvature(k=2)", "gv_formal"])
def test_light_scenarios_pass(scenario):
    report = run_scenario(ScenarioConfig(scenario))
    assert report["pass"], [c for c in report["checks"] if not c["pass"]]
    assert "error" not in report
    assert report["environment"]["config_hash"]


def test_full_torus_scenario_passes():
    report = run_scenario(ScenarioConfig("ex7_1"))
    assert report["pass"], [c for c in report["checks"] if not c["pass"]]
    refs = {c["ref"] for c in report["checks"]}
    assert {"ex7_1-invariant", "ex7_1-curvature", "ex7_1-shuffle", "ex7_1-formal", "extension-control",
            "foliated-variation", "gv-fibre-integral"} <= refs


def test_report_and_tables_are_written(tmp_path):
    report_path = tmp_path / "reports" / "ex7_5.json"
    csv_dir = tmp_path / "tables"
    run_scenario(ScenarioConfig("ex7_5(g=2)", report=str(report_path), csv=str(csv_dir)))
    with open(report_path) as handle:
        written = json.load(handle)
    assert written["scenario"] == "ex7_5(g=2)"
    assert all({"name", "ref", "expected", "provenance", "computed", "residual", "pass"} <= set(c)
               for c in written["checks"])
    assert (csv_dir / "ex7_5-invariant.csv").exists()


def test_custom_family_from_json(tmp_path):
    data = {
        "name": "circle-line",
        "fibre": {"coords": ["x"]},
        "base": {"coords": ["z"]},
        "connection": [{"coeff": "z", "wedge": ["x"]}],
        "Q": {"power": 1},
        "expected": [{"coeff": "z", "wedge": []}],
    }
    path = tmp_path / "family.json"
    path.write_text(json.dumps(data))
    report = run_scenario(ScenarioConfig(str(path)))
    assert report["pass"], report["checks"]


def test_custom_family_with_missing_fields():
    with pytest.raises(ConfigurationError):
        family_from_json({"fibre": {"coords": ["x"]}})


def test_compare_backends_on_the_torus_family():
    report = compare_backends(ScenarioConfig("ex7_8(k=3)"))
    assert report["comparison"]
    assert report["pass"]


def test_compare_backends_needs_a_comparable_scenario():
    with pytest.raises(ConfigurationError):
        compare_backends(ScenarioConfig("gv_formal"))


def test_cli_run_returns_zero_on_success(capsys):
    assert app.main(["run", "--scenario", "ex7_1_s1"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["pass"] and summary["failed"] == []


def test_cli_unknown_scenario_exits_with_two():
    assert app.main(["run", "--scenario", "ex7_99"]) == 2


def test_cli_list(capsys):
    assert app.main(["list"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in SCENARIOS)


def test_bundled_scenario_files_are_found_by_name():
    name, params = parse_scenario_id("circle_line.json")
    assert name == "custom"
    assert params["data"]["name"] == "circle-line"
