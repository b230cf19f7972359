#!/usr/bin/env python3
"""Prune the six-term example max(-1, x-1, y-1, x+y-2, 2x-3, 2y-3) on [-3, 3]^2.

Prints, for every budget, the kept terms and the clustering radius. It also
prints the worst sampled gap against the bound radius * ||(x, 1)|| for each method.
"""
import numpy as np

from polyprune.baselines import pga_prune, pgd_prune
from polyprune.kcenter import greedy_kcenter, kcenter_cost
from polyprune.polyfunc import Box, MaxAffine, box_grid
from polyprune.redundancy import contribution_values, prune_redundant

TERMS = [[0, 0, 1], [1, 0, 1], [0, 1, 1], [1, 1, 2], [2, 0, 3], [0, 2, 3]]


def main() -> None:
    u = MaxAffine.from_terms(TERMS)
    box = Box([-3.0, -3.0], [3.0, 3.0])
    vals, _ = contribution_values(u, range(6), range(6), box)
    print("contribution values on the box:", vals.tolist())
    A = prune_redundant(u, box)
    print("terms surviving redundancy removal:", A.tolist())
    X = box.sample(10_000, np.random.default_rng(0))
    pts = u.lifted_points()
    for n in range(1, 6):
        picks = {
            "kcenter": sorted(greedy_kcenter(pts, n).selected),
            "kcenter-lp": sorted(A[list(greedy_kcenter(pts[A], n).selected)]) if A.size > n else A.tolist(),
            "pga": sorted(pga_prune(u, n, box_grid(box)).tolist()),
            "pgd": pgd_prune(u, n, box).tolist(),
        }
        for method, S in picks.items():
            radius = kcenter_cost(pts, S)
            gap = u(X) - u.restrict(S)(X)
            ratio = np.max(gap / (radius * np.sqrt(np.einsum("ij,ij->i", X, X) + 1.0))) if radius > 0 else 0.0
            print(f"n={n} {method:10s} keep={[int(k) for k in S]} radius={radius:.4f} mean gap={gap.mean():.4f} gap/bound max={ratio:.3f}")


if __name__ == "__main__":
    main()
