"""|lambda_2k^(1,1)(N, N/2)| / (2k)! for k = 1, 2, 3 over a range of even N."""

import argparse
import csv
from pathlib import Path

from sykdyn.cumulant import MAGNITUDE_CSV_HEADER, magnitude_table, separation_report


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n-range", type=int, nargs=2, default=(4, 14))
    p.add_argument("--samples", type=int, default=2000, help="Monte Carlo samples for order 6")
    p.add_argument("--mc-max-n", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("runs/magnitudes.csv"))
    a = p.parse_args()

    lo, hi = a.n_range
    notes = []
    rows = magnitude_table(range(lo + lo % 2, hi + 1, 2), mc_samples=a.samples,
                           mc_max_n=a.mc_max_n, master_seed=a.seed, notes=notes)
    a.out.parent.mkdir(parents=True, exist_ok=True)
    with open(a.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MAGNITUDE_CSV_HEADER)
        w.writerows(r.row() for r in rows)
    for r in rows:
        print(f"N={r.N:2d} order {r.order}: {r.magnitude:.4e} +/- {r.stderr:.1e} ({r.method})")
    for N, ok in separation_report(rows).items():
        print(f"N={N:2d} decreasing with order: {ok}")
    for n in notes:
        print("note:", n)


if __name__ == "__main__":
    main()
