"""Gamma_N wall time and row count for N = 1..K, block vs recursive.

    python scripts/bench_sweep.py di_y1 20 out/bench_di.csv
"""
import sys

from feasgov import cli


def main():
    name, K, out = sys.argv[1], int(sys.argv[2]), sys.argv[3]
    raise SystemExit(cli.main(["bench", "--scenario", name, "--N-list", f"1:{K}", "--method", "both", "--out", out]))


if __name__ == "__main__":
    main()
