"""Sweep epsilon on random instances and report residuals and wall time.

    python scripts/afp_sweep.py --instances 20 --eps 0.1 0.03 0.01 --csv sweep.csv
"""

import argparse
import csv
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from afpp.engine import approx_fixed_point, recompute_residuals

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from instances import random_instance  # noqa: E402


@dataclass
class SweepConfig:
    instances: int = 10
    eps: tuple = (0.1, 0.01)
    seed: int = 0


def sweep(cfg: SweepConfig):
    rows = []
    for eps in cfg.eps:
        rng = np.random.default_rng(cfg.seed)
        for k in range(cfg.instances):
            C, f, funcs = random_instance(rng)
            t0 = time.perf_counter()
            rep = approx_fixed_point(C, f, funcs, eps)
            rows.append({"eps": eps, "instance": k, "map": type(f).__name__,
                         "generators": len(C.generators), "functionals": len(funcs),
                         "max_residual": max(recompute_residuals(funcs, f, rep.point)),
                         "seconds": round(time.perf_counter() - t0, 4)})
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=SweepConfig.instances)
    ap.add_argument("--eps", type=float, nargs="+", default=list(SweepConfig.eps))
    ap.add_argument("--seed", type=int, default=SweepConfig.seed)
    ap.add_argument("--csv", type=Path)
    args = ap.parse_args()
    rows = sweep(SweepConfig(args.instances, tuple(args.eps), args.seed))
    if args.csv:
        with args.csv.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    for eps in args.eps:
        sel = [r for r in rows if r["eps"] == eps]
        print(f"eps={eps:g}: worst residual {max(r['max_residual'] for r in sel):.3g}, "
              f"total {sum(r['seconds'] for r in sel):.2f}s over {len(sel)} instances")


if __name__ == "__main__":
    main()
