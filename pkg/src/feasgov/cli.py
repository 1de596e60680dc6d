"""Command-line front end.

    feasgov sets     --scenario di_y1 --N 10 --method recursive --out sets/
    feasgov simulate --scenario di_y1 --controller fg --steps 600 --out run.csv
    feasgov nstar    --scenario di_y3 --max-N 1000
    feasgov bench    --scenario di_y1 --N-list 1:20 --method both --out bench.csv
    feasgov compare  --scenario di_y3 --controllers fg,mpc:236,cg --out cmp/

Exit codes: 0 success, 2 assumption failure, 3 invariant violation,
4 infeasible / not found, 1 anything else raised by the library.
"""
import argparse
import csv
import sys
import time
from pathlib import Path

import numpy as np

from .errors import FeasGovError
from .mpc import find_N_star
from .polyhedra import canonical, write_poly
from .scenario import computed_sets, feasible_set, feasible_sets, load_scenario, synthesize
from .sim import compute_metrics, simulate


def _header(syn):
    return f"nx={syn.model.n_x} nv={syn.basis.n_v}"


def _parse_range(text):
    if ":" in text:
        a, b = text.split(":")
        return list(range(int(a), int(b) + 1))
    return [int(t) for t in text.split(",")]


def cmd_sets(args):
    syn = synthesize(load_scenario(args.scenario))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    N = syn.scenario.N if args.N is None else args.N
    head = _header(syn)
    write_poly(syn.terminal.T, out / "T.poly", f"{head} k_star={syn.terminal.finitely_determined_at}")
    write_poly(syn.Veps, out / "veps.poly", f"nv={syn.basis.n_v}")
    write_poly(syn.Sigma, out / "sigma.poly", head)
    print(f"T: {syn.terminal.T.n_rows} rows, k*={syn.terminal.finitely_determined_at}")
    methods = ["recursive", "block"] if args.method == "both" else [args.method]
    for method in methods:
        t0 = time.perf_counter()
        if method == "recursive":
            try:
                feasible_sets(syn, N)
            finally:
                # on a blowup the finished horizons are still written
                gammas = computed_sets(syn)[: N + 1]
                for i, G in enumerate(gammas):
                    write_poly(G, out / f"gamma_{i}.poly", f"{head} N={i} method=recursive")
            elapsed = time.perf_counter() - t0
            for i, G in enumerate(gammas):
                print(f"recursive N={i}: {G.n_rows} rows")
        else:
            G = feasible_set(syn, N, "block")
            elapsed = time.perf_counter() - t0
            name = f"gamma_{N}.poly" if len(methods) == 1 else f"gamma_{N}_block.poly"
            write_poly(G, out / name, f"{head} N={N} method=block")
            print(f"block N={N}: {G.n_rows} rows")
        print(f"{method}: {elapsed:.3f} s")
    return 0


def cmd_simulate(args):
    syn = synthesize(load_scenario(args.scenario))
    log = simulate(syn, args.controller, steps=args.steps, N=args.N, F_spec=args.F)
    text = log.to_csv(args.out)
    if args.out is None:
        sys.stdout.write(text)
    m = compute_metrics(log, syn.scenario.r, syn.v_star)
    print(
        f"{args.controller}: {len(log)} rows, rise={m.rise_time_steps}, settle={m.settling_time_steps}, "
        f"v_conv={m.v_convergence_step}, min margin={min(log.margin):.3e}",
        file=sys.stderr,
    )
    return 0


def cmd_nstar(args):
    syn = synthesize(load_scenario(args.scenario))
    sc = syn.scenario
    n = find_N_star(syn.model, syn.Yset, syn.terminal.T, sc.x0, syn.v_star, N_max=args.max_N)
    print(n)
    return 0


def _bench_cell(syn, N, method):
    t0 = time.perf_counter()
    G = feasible_set(syn, N, method) if method == "block" else _recursive_only(syn, N)
    return time.perf_counter() - t0, G.n_rows


def _recursive_only(syn, N):
    # fresh computation so the timing is not flattered by the cache
    from .mpc import feasible_set_recursive

    return feasible_set_recursive(syn.model, syn.basis, syn.Yset, syn.terminal.T, N)[-1]


def cmd_bench(args):
    syn = synthesize(load_scenario(args.scenario))
    methods = ["block", "recursive"] if args.method == "both" else [args.method]
    rows = []
    for N in _parse_range(args.N_list):
        for method in methods:
            wall, n_rows = _bench_cell(syn, N, method)
            rows.append((N, method, wall, n_rows))
            print(f"N={N} {method}: {n_rows} rows in {wall:.3f} s", file=sys.stderr)
    rows.sort(key=lambda r: (r[0], r[1]))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["N", "method", "wall_seconds", "rows"])
        for N, method, wall, n_rows in rows:
            w.writerow([N, method, f"{wall:.6f}", n_rows])
    finally:
        if args.out:
            fh.close()
    return 0


def _parse_controller(spec, default_N):
    """``fg``, ``fg-under``, ``cg``, ``mpc`` or ``name:N``."""
    name, _, n = spec.partition(":")
    return name.replace("-", "_"), int(n) if n else default_N


def cmd_compare(args):
    syn = synthesize(load_scenario(args.scenario))
    sc = syn.scenario
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = []
    for spec in args.controllers.split(","):
        name, N = _parse_controller(spec.strip(), sc.N)
        if name == "mpc" and N == 0:
            N = find_N_star(syn.model, syn.Yset, syn.terminal.T, sc.x0, syn.v_star)
        log = simulate(syn, name, steps=args.steps, N=N)
        label = name if name == "cg" else f"{name}_N{N}"
        log.to_csv(out / f"{label}.csv")
        m = compute_metrics(log, sc.r, syn.v_star)
        table.append({"controller": label, "N": N if name != "cg" else "", **m.as_row()})
        print(f"{label}: rise={m.rise_time_steps} settle={m.settling_time_steps} tmax={m.tmax * 1e3:.3f} ms", file=sys.stderr)
    with open(out / "metrics.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(table[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(table)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="feasgov", description="Feasibility governor toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sets", help="synthesize T, Gamma_i, V_eps and Sigma")
    s.add_argument("--scenario", required=True)
    s.add_argument("--N", type=int)
    s.add_argument("--method", choices=["block", "recursive", "both"], default="recursive")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sets)

    s = sub.add_parser("simulate", help="closed-loop run written as CSV")
    s.add_argument("--scenario", required=True)
    s.add_argument("--controller", choices=["fg", "fg-under", "fg_under", "mpc", "cg"], default="fg")
    s.add_argument("--steps", type=int)
    s.add_argument("--N", type=int)
    s.add_argument("--F", help="under-approximation: gamma:i or box")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("nstar", help="shortest feasible horizon at (x0, v*)")
    s.add_argument("--scenario", required=True)
    s.add_argument("--max-N", dest="max_N", type=int, default=1000)
    s.set_defaults(func=cmd_nstar)

    s = sub.add_parser("bench", help="Gamma_N wall time and row count per N")
    s.add_argument("--scenario", required=True)
    s.add_argument("--N-list", dest="N_list", default="1:10")
    s.add_argument("--method", choices=["block", "recursive", "both"], default="both")
    s.add_argument("--out")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("compare", help="metrics table over several controllers")
    s.add_argument("--scenario", required=True)
    s.add_argument("--controllers", default="fg,mpc:0,cg", help="comma list; mpc:0 means N = N*")
    s.add_argument("--steps", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_compare)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FeasGovError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
