"""Shortest feasible horizon N* for the Y3 double integrator and the vehicle.

    python scripts/reproduce_nstar.py
"""
import time

from feasgov.mpc import find_N_star
from feasgov.scenario import load_scenario, synthesize


def main():
    for name, target in (("di_y3", "236"), ("vehicle", "76, or 75 by the other count")):
        syn = synthesize(load_scenario(name))
        t0 = time.perf_counter()
        n = find_N_star(syn.model, syn.Yset, syn.terminal.T, syn.scenario.x0, syn.v_star)
        print(f"{name}: N* = {n} (target {target}), {time.perf_counter() - t0:.2f} s")


if __name__ == "__main__":
    main()
