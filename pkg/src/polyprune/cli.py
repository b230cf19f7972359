"""Command-line entry point: ``polyprune {prune,duality1d,quantum,pricing} --config FILE``.

Every config is a JSON object with an integer ``"version"`` key (currently 1)
plus subcommand-specific fields; unknown or ill-typed fields are rejected with
one diagnostic per field. The resolved config and seed are echoed to stdout
and saved as ``resolved_config.json`` next to the outputs.

Exit codes: 0 on success, 2 for usage or config errors, 1 for runtime failures.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import polyfunc, pricing, quantum, transport1d
from .baselines import pga_prune, pgd_prune
from .kcenter import greedy_kcenter, kcenter_cost, kcenter_error_bound
from .polyfunc import Box, MaxAffine
from .redundancy import prune_redundant

CONFIG_VERSION = 1
PRUNE_METHODS = ("kcenter", "kcenter-lp", "pga", "pgd")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# subcommand configs


@dataclass
class PruneConfig:
    input: str = ""
    method: str = "kcenter-lp"
    budget: int = 3
    lo: list = field(default_factory=list)
    hi: list = field(default_factory=list)
    intercept_weight: float = 1.0
    samples: int = 10_000
    seed: int = 0

    def validate(self) -> None:
        errs = []
        if not isinstance(self.input, str) or not self.input:
            errs.append("input: path to a polyhedral-function file is required")
        if self.method not in PRUNE_METHODS:
            errs.append(f"method: expected one of {list(PRUNE_METHODS)}, got {self.method!r}")
        if not _is_int(self.budget) or self.budget < 1:
            errs.append("budget: must be a positive integer")
        for name in ("lo", "hi"):
            val = getattr(self, name)
            if not isinstance(val, list) or not val or not all(_is_num(v) for v in val):
                errs.append(f"{name}: must be a nonempty list of finite numbers")
        if not errs and len(self.lo) != len(self.hi):
            errs.append("hi: must have the same length as lo")
        elif not errs and any(a > b for a, b in zip(self.lo, self.hi)):
            errs.append("hi: every entry must be >= the matching lo entry")
        if not _is_num(self.intercept_weight) or self.intercept_weight <= 0:
            errs.append("intercept_weight: must be a positive number")
        if not _is_int(self.samples) or self.samples < 1:
            errs.append("samples: must be a positive integer")
        if not _is_int(self.seed) or self.seed < 0:
            errs.append("seed: must be a nonnegative integer")
        if errs:
            raise ValueError("; ".join(errs))


@dataclass
class DualityConfig:
    tangent_points: list = field(default_factory=lambda: np.linspace(0.0, 1.0, 10).tolist())
    n_max: int = 10
    p: int = 2
    breaks: list = field(default_factory=lambda: [0.0, 1.0])
    values: list = field(default_factory=lambda: [1.0])
    seed: int = 0

    def validate(self) -> None:
        errs = []
        pts = self.tangent_points
        if not isinstance(pts, list) or not pts or not all(_is_num(v) for v in pts):
            errs.append("tangent_points: must be a nonempty list of finite numbers")
        if not _is_int(self.n_max) or self.n_max < 1:
            errs.append("n_max: must be a positive integer")
        if self.p not in (1, 2) or isinstance(self.p, bool):
            errs.append("p: must be 1 or 2")
        if not isinstance(self.breaks, list) or len(self.breaks) < 2 or not all(_is_num(v) for v in self.breaks):
            errs.append("breaks: must list at least two finite numbers")
        elif any(b <= a for a, b in zip(self.breaks, self.breaks[1:])):
            errs.append("breaks: must be strictly increasing")
        if not isinstance(self.values, list) or not all(_is_num(v) and v > 0 for v in self.values):
            errs.append("values: must be a list of positive numbers")
        elif isinstance(self.breaks, list) and len(self.values) != len(self.breaks) - 1:
            errs.append("values: need exactly one value per interval between breaks")
        if not _is_int(self.seed) or self.seed < 0:
            errs.append("seed: must be a nonnegative integer")
        if errs:
            raise ValueError("; ".join(errs))


CONFIG_TYPES = {
    "prune": PruneConfig,
    "duality1d": DualityConfig,
    "quantum": quantum.QuantumConfig,
    "pricing": pricing.PricingConfig,
}


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def load_config(subcommand: str, path, overrides: dict):
    """Parse and validate a versioned JSON config; raises :class:`ConfigError`."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a JSON object")
    version = doc.pop("version", None)
    if version != CONFIG_VERSION or isinstance(version, bool):
        raise ConfigError(f"version: expected {CONFIG_VERSION}, got {version!r}")
    cls = CONFIG_TYPES[subcommand]
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError("; ".join(f"{k}: unknown field for {subcommand}" for k in unknown))
    doc.update(overrides)
    cfg = cls(**doc)
    try:
        cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def _overrides(subcommand: str, args) -> dict:
    out = {}
    if args.seed is not None:
        out["seed"] = args.seed
    if subcommand == "prune":
        if args.method is not None:
            out["method"] = args.method
        if args.budget is not None:
            out["budget"] = args.budget
    elif subcommand in ("quantum", "pricing"):
        if args.method is not None:
            out["methods"] = [args.method]
        if args.budget is not None:
            out["budgets"] = [args.budget]
    elif subcommand == "duality1d" and args.budget is not None:
        out["n_max"] = args.budget
    return out


# ---------------------------------------------------------------------------
# runners


def _write(out_dir: Path, name: str, text: str) -> Path:
    path = out_dir / name
    path.write_text(text)
    return path


def run_prune(cfg: PruneConfig, out_dir: Path, workers: int) -> list[Path]:
    u = polyfunc.load(cfg.input)
    box = Box(cfg.lo, cfg.hi)
    if box.dim != u.dim:
        raise ConfigError(f"lo: domain dimension {box.dim} does not match the function dimension {u.dim}")
    n = min(cfg.budget, u.n_terms)
    pts = u.lifted_points(cfg.intercept_weight)
    if cfg.method == "kcenter":
        keep = np.sort(np.array(greedy_kcenter(pts, n).selected))
    elif cfg.method == "kcenter-lp":
        A = prune_redundant(u, box, seed=cfg.seed)
        keep = A if A.size <= n else np.sort(A[np.array(greedy_kcenter(pts[A], n).selected)])
    elif cfg.method == "pga":
        keep = np.sort(pga_prune(u, n, polyfunc.box_grid(box)))
    else:
        keep = pgd_prune(u, n, box)
    radius = kcenter_cost(pts, keep)
    pruned = u.restrict(keep)
    paths = []
    out = out_dir / "pruned.json"
    polyfunc.save(pruned, out)
    paths.append(out)

    rng = np.random.default_rng(cfg.seed)
    xs = box.sample(cfg.samples, rng)
    gaps = u(xs) - pruned(xs)
    bounds = np.array([kcenter_error_bound(radius, x, intercept_weight=cfg.intercept_weight) for x in xs])
    lines = ["corner," + ",".join(f"x{j + 1}" for j in range(u.dim)) + ",gap,bound"]
    for i, x in enumerate(box.corners()):
        gap = float(u(x) - pruned(x))
        b = kcenter_error_bound(radius, x, intercept_weight=cfg.intercept_weight)
        lines.append(",".join([str(i), *(repr(float(v)) for v in x), repr(gap), repr(b)]))
    paths.append(_write(out_dir, "report.csv", "\n".join(lines) + "\n"))
    summary = dict(
        method=cfg.method,
        budget=cfg.budget,
        kept=[int(k) for k in keep],
        radius=radius,
        sampled_points=cfg.samples,
        min_sampled_gap=float(gaps.min()),
        max_sampled_gap=float(gaps.max()),
        bound_violations=int(np.sum(gaps > bounds + 1e-12 * (1 + np.abs(bounds)))),
    )
    paths.append(_write(out_dir, "summary.json", json.dumps(summary, indent=2) + "\n"))
    if summary["min_sampled_gap"] < -1e-9 or summary["bound_violations"]:
        raise RuntimeError("pruned function exceeds the original or the error bound on samples")
    return paths


def run_duality1d(cfg: DualityConfig, out_dir: Path, workers: int) -> list[Path]:
    rho = transport1d.Density1D(cfg.breaks, cfg.values)
    u = transport1d.tangent_lines(cfg.tangent_points)
    rows = [transport1d.duality_pipeline_1d(u, n, rho, cfg.p)[1] for n in range(1, cfg.n_max + 1)]
    return [_write(out_dir, "diagnostics.csv", transport1d.diagnostics_csv(rows))]


def run_quantum(cfg: quantum.QuantumConfig, out_dir: Path, workers: int) -> list[Path]:
    rows, grids = quantum.benchmark_run(cfg, workers)
    paths = [_write(out_dir, "metrics.csv", quantum.metrics_csv(rows))]
    for (method, budget), (ax, V) in grids.items():
        paths.append(_write(out_dir, f"grid_{method}_{budget}.csv", quantum.grid_csv(ax, V)))
    return paths


def run_pricing(cfg: pricing.PricingConfig, out_dir: Path, workers: int) -> list[Path]:
    rows = pricing.batch_experiment(cfg, workers)
    paths = [_write(out_dir, "results.csv", pricing.results_csv(rows))]
    lines = ["dim,method,budget,mean_ratio,min_ratio,ir_violations"]
    for d in cfg.dims:
        for m in cfg.methods:
            for n in cfg.budgets:
                sel = [r for r in rows if r["dim"] == d and r["method"] == m and r["budget"] == n]
                ratios = np.array([r["ratio"] for r in sel])
                viol = sum(r["ir_gap"] > 1e-9 for r in sel)
                lines.append(f"{d},{m},{n},{float(ratios.mean())!r},{float(ratios.min())!r},{viol}")
    paths.append(_write(out_dir, "summary.csv", "\n".join(lines) + "\n"))
    return paths


RUNNERS = {
    "prune": run_prune,
    "duality1d": run_duality1d,
    "quantum": run_quantum,
    "pricing": run_pricing,
}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polyprune", description="Polyhedral pruning experiments.")
    sub = parser.add_subparsers(dest="subcommand", metavar="{prune,duality1d,quantum,pricing}")
    sub.required = True
    for name, help_text in [
        ("prune", "prune a max-affine function from a JSON file"),
        ("duality1d", "1D pruning / quantization duality sweep"),
        ("quantum", "max-plus gate-synthesis benchmark"),
        ("pricing", "menu pruning batch experiment"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config with a 'version' key")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--workers", type=int, default=None, help="worker processes (default: available cores)")
        p.add_argument("--out-dir", default=".", help="directory for output files")
        p.add_argument("--method", default=None, help="override the method (list)")
        p.add_argument("--budget", type=int, default=None, help="override the budget (list)")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    workers = args.workers if args.workers is not None else (os.cpu_count() or 1)
    if workers < 1:
        print("error: --workers must be positive", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.subcommand, args.config, _overrides(args.subcommand, args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(args.out_dir)
    resolved = {"version": CONFIG_VERSION, "subcommand": args.subcommand, **dataclasses.asdict(cfg)}
    echo = json.dumps(resolved, indent=2, sort_keys=True)
    print(echo)
    print(f"seed: {cfg.seed}")
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "resolved_config.json").write_text(echo + "\n")
        paths = RUNNERS[args.subcommand](cfg, out_dir, workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures map to exit status 1
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        print(f"wrote {p}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
