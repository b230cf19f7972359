#!/usr/bin/env python3
"""Max-plus gate-synthesis benchmark.

Presets:
  plane    eps=0.05, tau=0.1, 6 steps, r=3, budget 100, kcenter-lp (value-function plane)
  scaled  tau=0.2, 10 steps, r=1.3, budgets 20 and 50, kcenter-lp vs pgd-sdp
  full    tau=0.2, 50 steps, r=1.3, budgets 20..100, all four methods (hours on one core)

Writes metrics.csv and one grid CSV per (method, budget) into --out-dir and
prints the strip means of every grid.
"""
import argparse
from pathlib import Path

from polyprune import quantum as qm

PRESETS = {"plane": qm.PLANE_CONFIG, "scaled": qm.SCALED_CONFIG, "full": qm.FULL_CONFIG}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("preset", choices=sorted(PRESETS))
    ap.add_argument("--out-dir", type=Path, default=Path("quantum_out"))
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--methods", nargs="+", help="restrict to these methods")
    args = ap.parse_args()

    fields = dict(PRESETS[args.preset])
    if args.methods:
        fields["methods"] = args.methods
    cfg = qm.QuantumConfig(**fields)
    rows, grids = qm.benchmark_run(cfg, args.workers)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / "metrics.csv").write_text(qm.metrics_csv(rows))
    for (method, budget), (ax, V) in grids.items():
        (args.out_dir / f"grid_{method}_{budget}.csv").write_text(qm.grid_csv(ax, V))
        xx, yy = qm.strip_means(ax, V)
        print(f"{method:12s} n={budget:<4d} strip |y|<=0.15pi: {xx:9.3f}  strip |x|<=0.15pi: {yy:9.3f}")
    for r in rows:
        print(f"{r['method']:12s} n={r['budget']:<4d} mean={r['mean_value']:.6f}  {r['seconds']:.1f}s  sizes {r['sizes']}")


if __name__ == "__main__":
    main()
