import numpy as np

from feasgov import scenario as scn
from feasgov.scenario import feasible_sets, load_scenario, sets_key, synthesize


def test_key_ignores_simulation_settings():
    sc = load_scenario("di_y1")
    assert sets_key(sc) == sets_key(sc.with_(x0=np.array([0.1, 0.0]), r=np.array([0.2]), N=3, steps=5))
    assert sets_key(sc) != sets_key(sc.with_(eps_T=0.02))
    assert sets_key(sc) != sets_key(sc.with_(Q=2 * sc.Q))


def test_disk_cache_round_trip(tmp_path, monkeypatch):
    monkeypatch.setenv("FEASGOV_CACHE_DIR", str(tmp_path))
    monkeypatch.setattr(scn, "SHIPPED_SETS", tmp_path / "none")
    monkeypatch.setattr(scn, "_GAMMA_CACHE", {})
    syn = synthesize(load_scenario("fig2_integrator"))
    first = feasible_sets(syn, 2)
    files = sorted(p.name for p in (tmp_path / sets_key(syn.scenario)).iterdir())
    assert files == ["gamma_0.poly", "gamma_1.poly", "gamma_2.poly"]
    monkeypatch.setattr(scn, "_GAMMA_CACHE", {})
    again = feasible_sets(syn, 2)
    for a, b in zip(first, again):
        np.testing.assert_array_equal(a.A, b.A)
        np.testing.assert_array_equal(a.b, b.b)


def test_cache_extends(tmp_path, monkeypatch):
    monkeypatch.setattr(scn, "_GAMMA_CACHE", {})
    syn = synthesize(load_scenario("fig2_integrator"))
    short = feasible_sets(syn, 1, use_disk=False)
    long = feasible_sets(syn, 3, use_disk=False)
    assert len(short) == 2 and len(long) == 4
    assert long[1] is short[1]
