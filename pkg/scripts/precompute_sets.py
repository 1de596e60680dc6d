"""Fill the Gamma_i cache of a scenario one horizon at a time.

    python scripts/precompute_sets.py vehicle 15
    python scripts/precompute_sets.py di_y1 10 --ship

Each step is written as soon as it is done, so an interrupted run resumes
where it stopped. ``--ship`` copies the files into the package fixtures.
"""
import argparse
import shutil
import time

from feasgov.scenario import SHIPPED_SETS, cache_dir, feasible_sets, load_scenario, sets_key, synthesize


def main():
    p = argparse.ArgumentParser()
    p.add_argument("scenario")
    p.add_argument("N", type=int)
    p.add_argument("--ship", action="store_true")
    args = p.parse_args()
    syn = synthesize(load_scenario(args.scenario))
    key = sets_key(syn.scenario)
    t_all = time.perf_counter()
    for i in range(args.N + 1):
        t0 = time.perf_counter()
        G = feasible_sets(syn, i)[i]
        print(f"N={i}: {G.n_rows} rows ({time.perf_counter() - t0:.1f} s)", flush=True)
    print(f"total {time.perf_counter() - t_all:.1f} s, key {key}")
    if args.ship:
        dst = SHIPPED_SETS / key
        dst.mkdir(parents=True, exist_ok=True)
        for i in range(args.N + 1):
            shutil.copy(cache_dir() / key / f"gamma_{i}.poly", dst / f"gamma_{i}.poly")
        print(f"copied to {dst}")


if __name__ == "__main__":
    main()
