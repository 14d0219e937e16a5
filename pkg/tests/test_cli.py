import csv
import json
import shutil

import numpy as np
import pytest

from bitpareto.cli import main
from bitpareto.config import FIXTURES, fixture_path, load_fixture, parse_config
from bitpareto.errors import CycleError, ParseError, SchemaError
from bitpareto.pareto import Order, compare


def write_config(tmp_path, data, name="exp.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


BASE = {
    "dag": {"node_count": 3, "arcs": [[0, 1], [0, 2]]},
    "model": {"kind": "layered-exponential", "gains": {"1": {"1": 2}, "2": {"2": 2}}},
    "budget": 1,
    "grid_step": 0.5,
    "weight_resolution": 4,
}


# config

def test_fixture_round_trip():
    cfg = load_fixture("diamond3")
    assert cfg.node_count == 3 and cfg.budget == 1.0
    assert cfg.model.gains.tolist() == [[1, 0, 0], [1, 2, 0], [1, 0, 2]]


def test_defaults_applied(tmp_path):
    cfg = parse_config(write_config(tmp_path, BASE))
    tol = cfg.tolerances
    assert (tol.tie, tol.envelope, tol.continuity_factor, tol.support, tol.dominance_eps) == (
        1e-12, 1e-12, 4.0, 1e-9, 0.0)
    assert tol.match == 1.0
    assert cfg.formats == ("csv", "json", "plotdata")


def test_gain_outside_subgraph_named(tmp_path):
    data = {**BASE, "model": {"kind": "layered-exponential", "gains": {"1": {"2": 1.0}}}}
    with pytest.raises(SchemaError, match=r"node 2 .*resolution 1"):
        parse_config(write_config(tmp_path, data))


@pytest.mark.parametrize("patch, field", [
    ({"budget": 0}, "budget"),
    ({"grid_step": -1}, "grid_step"),
    ({"weight_resolution": 0}, "weight_resolution"),
    ({"weight_resolution": 2.5}, "weight_resolution"),
    ({"model": {"kind": "quadratic"}}, "model.kind"),
    ({"tolerances": {"tie": -1}}, "tolerances.tie"),
    ({"tolerances": {"bogus": 1}}, "tolerances"),
    ({"outputs": {"formats": ["xml"]}}, "outputs.formats"),
    ({"extra": 1}, "config"),
])
def test_schema_errors_name_the_field(tmp_path, patch, field):
    with pytest.raises(SchemaError, match=field.replace(".", r"\.")):
        parse_config(write_config(tmp_path, {**BASE, **patch}))


def test_missing_field(tmp_path):
    data = {k: v for k, v in BASE.items() if k != "budget"}
    with pytest.raises(SchemaError, match="budget"):
        parse_config(write_config(tmp_path, data))


def test_malformed_json_has_location(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"dag": {"node_count": 3,\n "arcs": [}')
    with pytest.raises(ParseError, match=r"bad\.json:2:"):
        parse_config(path)


def test_graph_errors_pass_through(tmp_path):
    data = {**BASE, "dag": {"node_count": 3, "arcs": [[0, 1], [1, 2], [2, 1]]}}
    with pytest.raises(CycleError):
        parse_config(write_config(tmp_path, data))


def test_tabulated_table_relative_to_config(tmp_path):
    shutil.copy(fixture_path("nonconvex3").with_suffix(".csv"), tmp_path / "t.csv")
    data = {"dag": {"node_count": 2, "arcs": [[0, 1]]},
            "model": {"kind": "tabulated", "table": "t.csv"},
            "budget": 1, "grid_step": 0.5}
    cfg = parse_config(write_config(tmp_path, data))
    assert cfg.model.lookup([0.5, 0.5]).tolist() == [3.5, 3.5]


# cli

def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_lists_subgraphs(tmp_path, capsys):
    code, out, _ = run(["demo", "--fixture", "dag5", "--out", str(tmp_path)], capsys)
    assert "pi_3: {0, 1, 2, 3}" in out
    report = json.loads((tmp_path / "dag5.validate.json").read_text())
    assert report["subgraphs"][4]["members"] == [0, 2, 4]


@pytest.mark.parametrize("name", ["svc-fig3", "svc-fig4", "dag5"])
def test_validate_fixtures(name, tmp_path, capsys):
    code, out, _ = run(["validate", str(fixture_path(name)), "--out", str(tmp_path)], capsys)
    assert code == 0 and "valid:" in out


def test_svc_fig4_has_a_node_with_two_paths(tmp_path):
    dag = load_fixture("svc-fig4").dag
    assert any(len(dag.parents(i)) >= 2 for i in range(dag.node_count))


def test_qcif_front_has_incomparable_pairs(tmp_path, capsys):
    code, _, _ = run(["demo", "--fixture", "qcif-chain", "--out", str(tmp_path)], capsys)
    assert code == 0
    with open(tmp_path / "qcif-chain.front.csv") as fh:
        rows = [r for r in csv.DictReader(fh) if r["label"] == "pareto"]
    pts = [np.array([float(r[f"g_{i}"]) for i in range(3)]) for r in rows]
    assert any(compare(a, b) is Order.INCOMPARABLE for a in pts for b in pts)
    cov = json.loads((tmp_path / "qcif-chain.demo.json").read_text())["coverage"]
    assert cov["complete"]


def test_nonconvex_demo_fails_with_witness(tmp_path, capsys):
    code, out, _ = run(["demo", "--fixture", "nonconvex3", "--out", str(tmp_path)], capsys)
    assert code == 2
    assert "missed [3.5, 3.5]" in out
    code, out, _ = run(["check", str(fixture_path("nonconvex3")), "--out", str(tmp_path)], capsys)
    assert code == 2
    reports = json.loads((tmp_path / "nonconvex3.check.json").read_text())["reports"]
    mink = next(r for r in reports if r["check"] == "minkowski_convexity")
    assert [w["point"] for w in mink["witnesses"]] == [[3.5, 3.5]]


def test_scalarize_prints_result(tmp_path, capsys):
    cfg = fixture_path("diamond3")
    code, out, _ = run(["scalarize", str(cfg), "--weights", "0,1,1", "--out", str(tmp_path)], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["weight"] == [0, 0.5, 0.5]
    # b_1 = b_2 with b_0 = 1 - 2 b_1 keeps both exponents at 1: 11 lattice ties
    assert data["ties"] == 11
    assert data["objective"] == pytest.approx(np.exp(-1), abs=1e-12)
    code, out, _ = run(["scalarize", str(cfg), "--weights", "1,1,1", "--continuous",
                        "--out", str(tmp_path)], capsys)
    assert json.loads(out)["objective"] == pytest.approx(np.exp(-1), abs=1e-9)


def test_bad_weights_exit_1(tmp_path, capsys):
    code, _, err = run(["scalarize", str(fixture_path("diamond3")), "--weights", "1,2",
                        "--out", str(tmp_path)], capsys)
    assert code == 1 and err.startswith("error[")


def test_continuous_on_tabulated_exit_1(tmp_path, capsys):
    code, _, err = run(["sweep", str(fixture_path("nonconvex3")), "--continuous",
                        "--out", str(tmp_path)], capsys)
    assert code == 1 and "layered-exponential" in err


def test_parse_error_exit_3(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    code, _, err = run(["front", str(bad)], capsys)
    assert code == 3 and err.startswith("error[ParseError]: ")


def test_schema_error_exit_3(tmp_path, capsys):
    code, _, err = run(["front", str(write_config(tmp_path, {**BASE, "budget": -1}))], capsys)
    assert code == 3 and err.startswith("error[SchemaError]: budget")


def test_cycle_exit_1(tmp_path, capsys):
    data = {**BASE, "dag": {"node_count": 3, "arcs": [[0, 1], [1, 2], [2, 0]]}}
    code, _, err = run(["validate", str(write_config(tmp_path, data))], capsys)
    assert code == 1 and err.startswith("error[CycleError]: directed cycle")


def test_commands_write_expected_files(tmp_path, capsys):
    cfg = str(write_config(tmp_path, {**BASE, "name": "t"}))
    out = tmp_path / "out"
    for cmd in (["enumerate"], ["front"], ["sweep"], ["compare"], ["check"]):
        code, _, _ = run([*cmd, cfg, "--out", str(out)], capsys)
        assert code == 0, cmd
    names = sorted(p.name for p in out.iterdir())
    assert names == ["t.check.json", "t.cloud.csv", "t.compare.json", "t.front.csv",
                     "t.front.json", "t.plot-front.csv", "t.plot-s0.csv", "t.sweep.csv",
                     "t.sweep.json"]
    assert not [p for p in out.iterdir() if p.name.endswith(".tmp")]


def test_psnr_columns(tmp_path, capsys):
    run(["front", str(fixture_path("diamond3")), "--out", str(tmp_path), "--psnr-peak", "1"], capsys)
    with open(tmp_path / "diamond3.front.csv") as fh:
        row = next(r for r in csv.DictReader(fh) if r["b_0"] == "1.0")
    assert float(row["psnr_0"]) == pytest.approx(10 * np.log10(np.e))


@pytest.mark.parametrize("name", FIXTURES)
def test_demo_output_is_byte_identical(name, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    run(["demo", "--fixture", name, "--out", str(a)], capsys)
    run(["demo", "--fixture", name, "--out", str(b), "--seed", "7"], capsys)
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir()) and files
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes(), f
