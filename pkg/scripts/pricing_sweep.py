#!/usr/bin/env python3
"""Menu-pruning batch sweep on synthetic uniform clients.

Defaults match the desk-scale reproduction: d in {2, 3, 6}, 1000 clients in
batches of 100, budgets 10/25/50, all four pruning methods. Writes
results.csv and prints mean ratio and mean pruning time per (dim, method, budget).
"""
import argparse
from pathlib import Path

import numpy as np

from polyprune import pricing as pr


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3, 6])
    ap.add_argument("--budgets", type=int, nargs="+", default=[10, 25, 50])
    ap.add_argument("--n-clients", type=int, default=1000)
    ap.add_argument("--batch-size", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("pricing_results.csv"))
    args = ap.parse_args()

    cfg = pr.PricingConfig(dims=args.dims, budgets=args.budgets, n_clients=args.n_clients, batch_size=args.batch_size, seed=args.seed)
    rows = pr.batch_experiment(cfg, args.workers)
    args.out.write_text(pr.results_csv(rows))
    print(f"{'dim':>3} {'method':12s} {'budget':>6} {'mean ratio':>10} {'min ratio':>10} {'seconds':>8}")
    for d in cfg.dims:
        for m in cfg.methods:
            for n in cfg.budgets:
                sel = [r for r in rows if (r["dim"], r["method"], r["budget"]) == (d, m, n)]
                ratios = np.array([r["ratio"] for r in sel])
                secs = np.mean([r["seconds"] for r in sel])
                print(f"{d:>3} {m:12s} {n:>6} {ratios.mean():10.5f} {ratios.min():10.5f} {secs:8.3f}")


if __name__ == "__main__":
    main()
