"""FG(N=10) vs ungoverned MPC(N*) rise times on the Y3 double integrator,
with the velocity cap that Gamma_10 imposes on the governed loop.

    python scripts/rise_time_gap.py
"""
import numpy as np

from feasgov.polyhedra import lp_support
from feasgov.scenario import feasible_set, load_scenario, synthesize
from feasgov.sim import rise_time, simulate


def main():
    syn = synthesize(load_scenario("di_y3"))
    r = syn.scenario.r
    e2 = np.array([0.0, 1.0, 0.0])
    print(f"max x2 over T: {lp_support(e2, syn.terminal.T)[0]:.4f}")
    print(f"max x2 over Gamma_10: {lp_support(e2, feasible_set(syn, 10))[0]:.4f}")
    fg = simulate(syn, "fg", N=10)
    mpc = simulate(syn, "mpc", N=236)
    for label, log in (("FG(10)", fg), ("MPC(236)", mpc)):
        x2 = log.array("x")[:, 1]
        print(f"{label}: rise {rise_time(log.array('z'), r)} steps, peak x2 {x2.max():.3f}")
    z_fg, z_mpc = fg.array("z")[:, 0], mpc.array("z")[:, 0]
    z0 = z_fg[0]
    for lo, hi in ((0.1, 0.9), (0.05, 0.95), (0.0, 0.95)):
        def cross(z, f):
            return int(np.flatnonzero((z - z0) / (r[0] - z0) >= f)[0]) if f > 0 else 0
        a = cross(z_fg, hi) - cross(z_fg, lo)
        b = cross(z_mpc, hi) - cross(z_mpc, lo)
        print(f"{int(lo * 100)}-{int(hi * 100)} %: ratio {a / b:.3f}")


if __name__ == "__main__":
    main()
