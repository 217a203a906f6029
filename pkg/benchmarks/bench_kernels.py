"""Time the compiled kernels against their numpy fallbacks and print a table."""
import argparse
import json

from qcsc import kernels
from qcsc.bench import bench_kernels


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="1000,10000,100000")
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--json", help="also write the rows here")
    args = ap.parse_args()
    rows = bench_kernels([int(s) for s in args.sizes.split(",")], args.repeats)
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'kernel':<18}{'n':>8}{'python (ms)':>14}{'cython (ms)':>14}{'speedup':>9}")
    for r in rows:
        cy = f"{1e3 * r['cython']:14.3f}" if "cython" in r else f"{'-':>14}"
        sp = f"{r['speedup']:9.2f}" if "speedup" in r else f"{'-':>9}"
        print(f"{r['kernel']:<18}{r['n']:>8}{1e3 * r['python']:14.3f}{cy}{sp}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
