#!/usr/bin/env python3
"""Replicated benchmark driven through the command line interface.

Chains simulate -> fit -> evaluate over several seeded replicates and
summarizes network and cluster recovery as mean(standard error) rows, the
same shape as a published comparison table. Every artifact a replicate
produces (data, truth, fit, report) lands under --workdir for inspection.

The default scale finishes in a few minutes on one core; pass
--p 100 --n-per 100 to reproduce the full-scale setting.
"""

import argparse
import subprocess
import sys
from pathlib import Path

import numpy as np


def run(*args):
    cmd = [sys.executable, "-m", "mixggm", *map(str, args)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"{' '.join(cmd)} failed:\n{proc.stderr}")
    return proc.stdout


def read_report(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        key, _, val = line.partition("=")
        out[key] = float(val.split(" ")[0])
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--M", type=int, default=3)
    ap.add_argument("--p", type=int, default=40)
    ap.add_argument("--n-per", dest="n_per", type=int, default=80)
    ap.add_argument("--m", type=float, default=0.5)
    ap.add_argument("--T", type=int, default=20)
    ap.add_argument("--restarts", type=int, default=2)
    ap.add_argument("--workdir", default="benchmark_runs")
    args = ap.parse_args()

    work = Path(args.workdir)
    rows = []
    for rep in range(args.reps):
        base = work / f"rep{rep:02d}"
        run("simulate", "--M", args.M, "--p", args.p, "--n-per", args.n_per,
            "--m", args.m, "--c", "0.5", "--seed", 600 + rep, "--out", base / "truth")
        run("fit", "--data", base / "truth" / "data.csv", "--M", args.M,
            "--T", args.T, "--burn-in", args.T // 2, "--seed", rep,
            "--restarts", args.restarts, "--write-sigma", "--out", base / "fit")
        run("evaluate", "--est", base / "fit", "--truth", base / "truth",
            "--out", base / "eval")
        rep_vals = read_report(base / "eval" / "report.txt")
        rows.append(rep_vals)
        print(f"rep {rep}: auc={rep_vals['auc']:.3f} fsr={rep_vals['fsr']:.3f} "
              f"nsr={rep_vals['nsr']:.3f} kl={rep_vals['kl']:.2f}")

    print()
    print(f"summary over {args.reps} replicates, mean(standard error):")
    for key in ("auc", "fsr", "nsr", "sl", "fl", "kl"):
        vals = np.array([r[key] for r in rows])
        se = vals.std(ddof=1) / np.sqrt(len(vals)) if len(vals) > 1 else 0.0
        print(f"  {key:4s} {vals.mean():8.3f} ({se:.3f})")


if __name__ == "__main__":
    main()
