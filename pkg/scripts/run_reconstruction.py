#!/usr/bin/env python3
"""Run the full pipeline once: synthesize data, reconstruct, verify.

Writes everything under --out (data/, recon/, verify/) and prints a short
summary. Example:

    python scripts/run_reconstruction.py --problem full --N 128 --out runs/full128
    python scripts/run_reconstruction.py --problem full --N 64 --noise 1e-3 --ridge 1e-4
"""

import argparse
import os
import sys

from memwave.pipeline import config_from_dict, run_reconstruct, run_synth, run_verify


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--problem", default="full",
                    help="catalogue problem name (default: full)")
    ap.add_argument("--N", type=int, default=64)
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--noise", type=float, default=0.0,
                    help="response noise sigma (default 0)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--ridge", type=float, default=0.0)
    ap.add_argument("--path", choices=("response", "w_oracle"), default="response")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="runs/latest")
    args = ap.parse_args()

    cfg = config_from_dict({
        "problem": args.problem,
        "N": args.N,
        "T": args.T,
        "noise": {"sigma": args.noise, "seed": args.seed},
    })
    data_dir = os.path.join(args.out, "data")
    recon_dir = os.path.join(args.out, "recon")
    verify_dir = os.path.join(args.out, "verify")

    run_synth(cfg, data_dir)
    print(f"data -> {data_dir}")

    rep = run_reconstruct(data_dir, recon_dir, path=args.path,
                          threads=args.threads, ridge=args.ridge)
    m = rep["metrics"]
    print(f"reconstruction -> {recon_dir}")
    print(f"  cond estimate        {m['cond_estimate']:.3g}")
    print(f"  gl residual          {m['gl_residual']:.3e}")
    print(f"  operator identity    {m['operator_identity_residual']:.3e}")
    if "l2_rel_err" in m:
        print(f"  interior rel error   {m['l2_rel_err']:.3e}")
        print(f"  interior sup error   {m['linf_err']:.3e}")

    ver = run_verify(data_dir, verify_dir, threads=args.threads)
    for chk in ver["checks"]:
        flag = "PASS" if chk["passed"] else "FAIL"
        print(f"  {flag} {chk['name']} (metric {chk['metric']:.4g})")
    if ver["status"] != "ok":
        print("verification FAILED:", ", ".join(ver["failed_checks"]), file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
