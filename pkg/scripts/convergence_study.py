#!/usr/bin/env python3
"""Reconstruction error vs. grid resolution, for one or both routes.

Example:

    python scripts/convergence_study.py --problem full --grids 32,64,128,256
    python scripts/convergence_study.py --problem classical --paths response
"""

import argparse
import os

from memwave.pipeline import config_from_dict, run_convergence


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--problem", default="full")
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--grids", default="32,64,128",
                    help="comma-separated increasing N values")
    ap.add_argument("--paths", default="response,w_oracle",
                    help="comma-separated subset of {response, w_oracle}")
    ap.add_argument("--noise", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="runs/convergence")
    args = ap.parse_args()

    grids = [int(tok) for tok in args.grids.split(",") if tok.strip()]
    cfg = config_from_dict({
        "problem": args.problem,
        "T": args.T,
        "noise": {"sigma": args.noise, "seed": args.seed},
    })

    for path in [p.strip() for p in args.paths.split(",") if p.strip()]:
        outdir = os.path.join(args.out, path)
        rep = run_convergence(cfg, outdir, grids, path=path, threads=args.threads)
        print(f"[{path}] -> {outdir}/convergence.csv")
        print(f"  {'N':>6}  {'interior rel err':>18}  {'ratio':>7}  {'order':>6}")
        for row in rep["rows"]:
            print(f"  {row['N']:>6}  {row['error']:>18.6e}"
                  f"  {row['ratio']:>7.3f}  {row['order']:>6.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
