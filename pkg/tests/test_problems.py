import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from anidmp.cli import cli_main
from anidmp.config import ConfigError, load_config, parse_config
from anidmp.export import export_vtk, format_sig, format_table, table_csv, write_trace_csv
from anidmp.integrator import run
from anidmp.mesh import OUTER, Mesh, generate_mesh45
from anidmp.problems import (NeedsImportedMesh, example_problem, reproduce_table, u0_ramp)

DATA = Path(__file__).parent / "data"


def cli(*argv):
    buf = io.StringIO()
    code = cli_main(list(argv), buf)
    return code, buf.getvalue()


# ----------------------------------------------------------------------
# initial ramp


@pytest.mark.parametrize("kind", ["radial", "square"])
def test_ramp_values(kind):
    assert u0_ramp(0.6, 0.5, kind) == pytest.approx(4.0)
    assert u0_ramp(0.8, 0.5, kind) == pytest.approx(0.0)
    assert u0_ramp(0.7, 0.5, kind) == pytest.approx(2.0)
    assert u0_ramp(0.05, 0.95, kind) == 0.0


def test_ramp_shapes_differ_off_axis():
    # at a hole corner both give 4; along the diagonal only the square ramp stays square
    assert u0_ramp(0.6, 0.6, "radial") == pytest.approx(4.0)
    assert u0_ramp(0.6, 0.6, "square") == pytest.approx(4.0)
    assert u0_ramp(0.75, 0.75, "square") == pytest.approx(1.0)
    assert u0_ramp(0.75, 0.75, "radial") == 0.0
    with pytest.raises(ValueError):
        u0_ramp(0.5, 0.5, "diamond")


@pytest.mark.parametrize("kind", ["radial", "square"])
def test_ramp_continuous_and_bounded(kind):
    g = np.linspace(0, 1, 801)
    x, y = np.meshgrid(g, g)
    u = u0_ramp(x, y, kind)
    assert u.min() >= 0 and u.max() <= 4
    # steepest ramp is 4 over 0.3 - 0.1*sqrt(2); no jump beyond that slope
    step = 1 / 800
    jump = max(np.abs(np.diff(u, axis=0)).max(), np.abs(np.diff(u, axis=1)).max())
    assert jump <= 4 / (0.3 - 0.1 * np.sqrt(2)) * step * np.sqrt(2) + 1e-12


# ----------------------------------------------------------------------
# tables


def test_table_rows_deterministic_and_csv_matches_text():
    a = reproduce_table("1", max_n=40)
    b = reproduce_table("1", max_n=40)
    assert a == b
    cols = ["mesh", "h", "n_elements", "dt_ani", "dt_del", "dt", "u_min"]
    dicts = [r.to_dict() for r in a]
    text = format_table(dicts, cols).splitlines()[1:]
    rows = list(csv.DictReader(io.StringIO(table_csv(dicts, cols))))
    for line, row in zip(text, rows):
        shown = line.split()
        assert shown[0] == row["mesh"]
        for c, s in zip(cols[1:], shown[1:]):
            v = row[c]
            assert format_sig(int(v) if c == "n_elements" else float(v)) == s


def test_table_shapes():
    rows = reproduce_table("3", max_n=40)
    assert len(rows) == 4 and all(r.u_min_lumped is not None for r in rows)
    assert rows[0].n_elements == 3072
    assert rows[0].h == pytest.approx(2.5e-2)


def test_imported_rows_need_mesh():
    with pytest.raises(NeedsImportedMesh, match="imported mesh"):
        reproduce_table("3-imported")
    with pytest.raises(ValueError):
        reproduce_table("9")


def test_imported_rows_with_mesh():
    rows = reproduce_table("3-imported", n_steps=2, imported_mesh=generate_mesh45(10))
    assert [r.dt for r in rows] == [5e-2, 1e-4, 5e-5, 2e-5]


# ----------------------------------------------------------------------
# export


def test_vtk_golden(tmp_path):
    m = Mesh.from_arrays([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], [OUTER] * 3)
    path = tmp_path / "t.vtk"
    export_vtk(m, [0.0, 1.0, 2.0], path)
    assert path.read_bytes() == (DATA / "one_triangle.vtk").read_bytes()
    with pytest.raises(ValueError):
        export_vtk(m, [0.0, 1.0], path)


def test_vtk_cell_count(tmp_path):
    m = generate_mesh45(5)
    path = tmp_path / "m.vtk"
    export_vtk(m, np.zeros(m.n_vertices), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    cells = next(line for line in lines if line.startswith("CELLS"))
    assert int(cells.split()[1]) == m.n_elements


def test_trace_csv(tmp_path):
    r = run(example_problem("example1", generate_mesh45(5), dt=1e-3, n_steps=3))
    path = tmp_path / "trace.csv"
    write_trace_csv(r, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["step", "t", "u_min", "u_max"]
    assert len(rows) == 5
    assert float(rows[-1][2]) == r.u_min


def test_format_sig():
    assert format_sig(3.7e-4) == "3.70e-4"
    assert format_sig(-8.99e-2) == "-8.99e-2"
    assert format_sig(0.0) == "0"
    assert format_sig(float("inf")) == "inf"
    assert format_sig(None) == "-"


# ----------------------------------------------------------------------
# configuration


CONFIG = """
[mesh]
generator = "mesh45"
n = 10

[field]
builtin = "example1"

[time]
theta = 1.0
dt = 1e-3
n_steps = 4

[output]
trace_csv = "trace.csv"
vtk = "final.vtk"
summary_json = "summary.json"
"""


def test_config_parse(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(CONFIG)
    cfg = load_config(path)
    assert (cfg.mesh_generator, cfg.mesh_n, cfg.dt, cfg.n_steps) == ("mesh45", 10, 1e-3, 4)
    assert cfg.trace_csv == str(tmp_path / "trace.csv")
    assert cfg.build_mesh().n_elements == 192


@pytest.mark.parametrize("data", [
    {"mesh": {"generator": "mesh45", "n": 10}, "field": {"builtin": "example1"},
     "time": {"dt": 1e-3, "speed": 2}},
    {"mesh": {"generator": "mesh99", "n": 10}, "field": {"builtin": "example1"},
     "time": {"dt": 1e-3}},
    {"mesh": {"generator": "mesh45", "n": 10}, "field": {}, "time": {"dt": 1e-3}},
    {"mesh": {"generator": "mesh45", "n": 10}, "field": {"builtin": "example1"}, "time": {}},
    {"mesh": {"generator": "mesh45", "n": 10, "file": "x.msh"},
     "field": {"builtin": "example1"}, "time": {"dt": 1e-3}},
    {"mesh": {"generator": "mesh45", "n": 10}, "field": {"builtin": "example1"},
     "time": {"dt": 1e-3}, "plot": {}},
])
def test_config_rejects(data):
    with pytest.raises(ConfigError):
        parse_config(data)


# ----------------------------------------------------------------------
# command line


def test_cli_check_mesh():
    code, out = cli("check-mesh", "--gen", "mesh45:40", "--field", "example1")
    assert code == 0
    assert out.strip() == "anoac: satisfied (0.47π); delaunay: satisfied (0.94π)"
    code, out = cli("check-mesh", "--gen", "mesh135:10", "--field", "example1", "--strict")
    assert code == 1 and "violated" in out


def test_cli_check_mesh_json():
    code, out = cli("check-mesh", "--gen", "mesh45:10", "--json")
    data = json.loads(out)
    assert code == 0 and data["anoac"]["satisfied"] is True


def test_cli_bounds():
    code, out = cli("bounds", "--gen", "mesh45:40", "--field", "example1", "--theta", "1")
    assert code == 0
    assert out.splitlines()[0].startswith("Δt_Ani=3.70e-4, Δt_Del=")
    code, out = cli("bounds", "--gen", "mesh45:10", "--field", "constant:1,0,1", "--json")
    ani = json.loads(out)["ani"]
    assert ani["excluded"] == 192 and ani["upper"] == "inf"
    assert "left out of the lower bound" in ani["notes"][0]


def test_cli_run_round_trip(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(CONFIG)
    code, out = cli("run", str(path), "--json")
    assert code == 0
    summary = json.loads(out)
    assert json.loads((tmp_path / "summary.json").read_text()) == summary
    assert summary["n_steps"] == 4 and summary["dmp_ok"] is True
    assert (tmp_path / "final.vtk").read_text().startswith("# vtk")
    assert len((tmp_path / "trace.csv").read_text().splitlines()) == 6


def test_cli_run_strict_violation(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(CONFIG.replace("mesh45", "mesh135").replace("1e-3", "1.5e-4"))
    assert cli("run", str(path))[0] == 0
    assert cli("run", str(path), "--strict")[0] == 1


def test_cli_input_errors(tmp_path):
    assert cli("run", str(tmp_path / "missing.toml"))[0] == 2
    path = tmp_path / "run.toml"
    path.write_text(CONFIG.replace('generator = "mesh45"\nn = 10', 'file = "nope.msh"'))
    assert cli("run", str(path))[0] == 2
    path.write_text("[mesh\n")
    assert cli("run", str(path))[0] == 2
    assert cli("bounds", "--gen", "mesh45:40", "--bogus")[0] == 2
    assert cli("check-mesh", "--gen", "mesh45:7")[0] == 2
    assert cli("check-mesh", "--mesh", str(tmp_path / "none.msh"))[0] == 2
    assert cli("check-mesh", "--gen", "mesh45:10", "--field", "example7")[0] == 2
    assert cli("reproduce-table", "3-imported")[0] == 2


def test_cli_reproduce_table(tmp_path):
    out_csv = tmp_path / "t.csv"
    code, out = cli("reproduce-table", "1", "--max-n", "20", "--csv", str(out_csv))
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split()[0] == "mesh" and len(lines) == 2
    assert out_csv.read_text().splitlines()[0].startswith("mesh,h,")


def test_cli_convert_mesh(tmp_path):
    out = tmp_path / "m.msh"
    code, _ = cli("convert-mesh", "--gen", "mesh135:10", str(out))
    assert code == 0
    back = tmp_path / "m.dmpmesh"
    assert cli("convert-mesh", str(out), str(back))[0] == 0
    code, text = cli("check-mesh", "--mesh", str(back))
    assert code == 0 and "anoac" in text
