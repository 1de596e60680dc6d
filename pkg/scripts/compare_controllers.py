"""Closed-loop comparison of FG, ungoverned MPC at N* and the CG baseline.

    python scripts/compare_controllers.py di_y3 out/di_y3
    python scripts/compare_controllers.py vehicle out/vehicle

Writes one CSV log per controller plus ``metrics.csv`` and prints the table.
"""
import argparse
import csv
from pathlib import Path

from feasgov import cli


def main():
    p = argparse.ArgumentParser()
    p.add_argument("scenario")
    p.add_argument("out")
    p.add_argument("--steps", type=int)
    args = p.parse_args()
    argv = ["compare", "--scenario", args.scenario, "--controllers", "fg,fg_under,mpc:0,cg", "--out", args.out]
    if args.steps:
        argv += ["--steps", str(args.steps)]
    code = cli.main(argv)
    if code == 0:
        with open(Path(args.out) / "metrics.csv") as fh:
            for row in csv.DictReader(fh):
                print(
                    f"{row['controller']:>12}: rise {row['rise_time_steps']:>6}  settle {row['settling_time_steps']:>12}"
                    f"  v conv {row['v_convergence_step']:>12}  TAVE {1e3 * float(row['tave_s']):8.3f} ms"
                    f"  TMAX {1e3 * float(row['tmax_s']):8.3f} ms"
                )
    raise SystemExit(code)


if __name__ == "__main__":
    main()
