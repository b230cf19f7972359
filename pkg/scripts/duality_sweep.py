#!/usr/bin/env python3
"""1D pruning/quantization duality sweep.

Takes u = max of tangents of x^2/2 at the given points on [0, 1], and runs the
quantize -> Monge-Ampere solve -> shift pipeline for every budget 1..N. It
prints W1, W2 and the exact L2(rho) error.
"""
import argparse

import numpy as np

from polyprune import transport1d as t1


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tangents", type=int, default=10, help="number of equispaced tangent points")
    ap.add_argument("--points", type=float, nargs="+", help="explicit tangent points (overrides --tangents)")
    ap.add_argument("--p", type=int, choices=[1, 2], default=2, help="Wasserstein order used by the quantizer")
    args = ap.parse_args()

    pts = np.array(args.points) if args.points else np.linspace(0.0, 1.0, args.tangents)
    u = t1.tangent_lines(pts)
    rho = t1.Density1D.uniform()
    rows = [t1.duality_pipeline_1d(u, n, rho, args.p)[1] for n in range(1, len(pts) + 1)]
    print(t1.diagnostics_csv(rows), end="")


if __name__ == "__main__":
    main()
