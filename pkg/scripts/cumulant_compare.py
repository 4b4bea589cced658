"""ED disorder averages of R and R^2 against truncated cumulant reconstructions.

Prints the RMS deviation of each truncation from the ED average; the CSVs
are written by the ``cumulant-compare`` command.
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from sykdyn.cli import main as cli_main


def _column(path, name):
    with open(path, newline="") as fh:
        return np.array([float(r[name]) for r in csv.DictReader(fh)])


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default="runs")
    a = p.parse_args()

    out = Path(a.out)
    before = set(out.glob("cumulant-compare-*")) if out.exists() else set()
    code = cli_main(["cumulant-compare", "--n", str(a.n), "--samples", str(a.samples),
                     "--seed", str(a.seed), "--threads", str(a.threads), "--out", a.out, "--quiet"])
    if code:
        sys.exit(code)
    (run,) = set(out.glob("cumulant-compare-*")) - before
    for obs in ("R", "R2"):
        ed = _column(run / f"ed_{obs}.csv", "mean")
        for K in (2, 4, 6):
            f = run / f"cumulant_{obs}_order{K}.csv"
            if f.exists():
                pred = _column(f, "prediction")
                print(f"{obs:>2s} order {K}: RMS vs ED = {np.sqrt(np.mean((pred - ed) ** 2)):.4f}")


if __name__ == "__main__":
    main()
