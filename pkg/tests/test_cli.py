import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from feasgov import cli
from feasgov.errors import InvariantViolation
from feasgov.polyhedra import equal, read_poly, read_poly_header
from feasgov.scenario import (
    FIXTURES,
    format_scenario,
    load_scenario,
    parse_scenario,
    scenarios_equal,
)


def data_lines(path):
    return [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]


def scenario_file(tmp_path, name="di_y1", **changes):
    text = (FIXTURES / f"{name}.ini").read_text()
    for key, value in changes.items():
        lines = [f"{key} = {value}" if ln.split("=")[0].strip() == key else ln for ln in text.splitlines()]
        text = "\n".join(lines) + "\n"
    path = tmp_path / f"{name}_mod.ini"
    path.write_text(text)
    return str(path)


def test_sets_zero_horizon(tmp_path):
    assert cli.main(["sets", "--scenario", "di_y1", "--N", "0", "--out", str(tmp_path)]) == 0
    assert data_lines(tmp_path / "gamma_0.poly") == data_lines(tmp_path / "T.poly")
    assert read_poly_header(tmp_path / "T.poly")["nx"] == "2"
    for name in ("veps.poly", "sigma.poly"):
        assert (tmp_path / name).exists()


def test_sets_both_methods_fig2(tmp_path):
    assert cli.main(["sets", "--scenario", "fig2_integrator", "--N", "2", "--method", "both", "--out", str(tmp_path)]) == 0
    assert equal(read_poly(tmp_path / "gamma_2.poly"), read_poly(tmp_path / "gamma_2_block.poly"), 1e-6)
    assert {f"gamma_{i}.poly" for i in range(3)} <= {p.name for p in tmp_path.iterdir()}


def test_simulate_steps_zero(tmp_path, capsys):
    out = tmp_path / "run.csv"
    assert cli.main(["simulate", "--scenario", "di_y1", "--steps", "0", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert len(rows) == 2 and rows[1][0] == "0"


def test_simulate_mpc_fixed_reference(tmp_path):
    path = scenario_file(tmp_path, x0="0.2 0")
    assert cli.main(["simulate", "--scenario", path, "--controller", "mpc", "--steps", "50", "--out", str(tmp_path / "m.csv")]) == 0


def test_nstar_zero_inside_terminal(tmp_path, capsys):
    path = scenario_file(tmp_path, x0="0.3 0", r="0.3")
    assert cli.main(["nstar", "--scenario", path]) == 0
    assert capsys.readouterr().out.strip() == "0"


def test_exit_code_not_found(capsys):
    assert cli.main(["nstar", "--scenario", "di_y3", "--max-N", "10"]) == 4
    assert "not_found" in capsys.readouterr().err


def test_exit_code_assumption(tmp_path, capsys):
    path = scenario_file(tmp_path, lower="0 -0.25 -0.25")
    assert cli.main(["nstar", "--scenario", path]) == 2
    assert "origin_not_interior" in capsys.readouterr().err


def test_exit_code_invariant(monkeypatch, capsys):
    def broken(*a, **k):
        raise InvariantViolation("lyapunov_increase", 7, "forced")

    monkeypatch.setattr(cli, "simulate", broken)
    assert cli.main(["simulate", "--scenario", "di_y1", "--steps", "1"]) == 3
    assert "lyapunov_increase" in capsys.readouterr().err


def test_bench_smoke(tmp_path):
    out = tmp_path / "bench.csv"
    assert cli.main(["bench", "--scenario", "di_y1", "--N-list", "1:2", "--method", "both", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [(r["N"], r["method"]) for r in rows] == [("1", "block"), ("1", "recursive"), ("2", "block"), ("2", "recursive")]
    assert float(rows[0]["wall_seconds"]) < 1.0


def test_compare_single_controller(tmp_path):
    assert cli.main(["compare", "--scenario", "di_y1", "--controllers", "fg", "--steps", "20", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "metrics.csv").open()))
    assert len(rows) == 1 and rows[0]["controller"] == "fg_N10"
    assert (tmp_path / "fg_N10.csv").exists()


@pytest.mark.parametrize("name", ["fig2_integrator", "di_y1", "di_y3", "vehicle"])
def test_fixture_round_trip(name):
    sc = load_scenario(name)
    assert scenarios_equal(parse_scenario(format_scenario(sc)), sc)


def test_vehicle_units_converted():
    sc = load_scenario("vehicle")
    Y = sc.constraint_set()
    assert np.max(Y.h) == pytest.approx(np.deg2rad(30.0))


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@given(
    st.lists(finite, min_size=2, max_size=2),
    finite,
    st.integers(1, 50),
    st.floats(0.001, 0.5),
    st.sampled_from(["gamma:0", "gamma:3", "box"]),
    st.integers(0, 2**31 - 1),
)
def test_config_round_trip(x0, r, N, eps, F, seed):
    base = load_scenario("di_y1")
    sc = base.with_(x0=np.array(x0), r=np.array([r]), N=N, eps=eps, F_spec=F, seed=seed)
    again = parse_scenario(format_scenario(sc))
    assert scenarios_equal(again, sc)
    assert format_scenario(again) == format_scenario(sc)
