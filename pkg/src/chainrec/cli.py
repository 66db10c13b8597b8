"""Command line entry point.

Exit codes: 0 when every analysis completed, 2 on invalid input, 3 when an
analysis failed.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

import numpy as np

from .errors import AnalysisError, ValidationError
from .finite_oracle import MAX_FUNCTIONAL_N, enumerate_functional, random_total_relations, sweep
from .report import load_config, run_pipeline, write_outputs
from .shadowing_lab import (KINDS, generate_pseudo_orbit, inverse_branch_shadow, orbit_deviation,
                            shadowing_search)
from .systems import BUILTINS, builtin

EXIT_OK, EXIT_INVALID, EXIT_ANALYSIS = 0, 2, 3


def _cmd_analyze(args) -> int:
    cfg = load_config(args.config)
    report = run_pipeline(cfg)
    out = write_outputs(report, args.output_dir)
    print(f"wrote {out}/report.json, condensation.dot, boxes.csv")
    for name, err in report.errors.items():
        print(f"error in {name}: {err['type']}: {err['message']}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_ANALYSIS


def _cmd_verify_finite(args) -> int:
    if not 1 <= args.n <= MAX_FUNCTIONAL_N:
        raise ValidationError(f"--n must be in 1..{MAX_FUNCTIONAL_N}")
    if args.random < 0:
        raise ValidationError("--random must be >= 0")
    results = [sweep(f"functional n={k}", enumerate_functional(k), cross_check=k <= 6)
               for k in range(1, args.n + 1)]
    if args.random:
        results.append(sweep(f"random total n={args.random_n}",
                             random_total_relations(args.random, args.random_n, args.seed), True))
    for r in results:
        status = "ok" if r.ok else "FAIL"
        fails = ", ".join(f"{k}={v}" for k, v in r.failures.items())
        print(f"{r.label:<22} systems={r.systems:<6} {status}  ({fails})")
    return EXIT_OK if all(r.ok for r in results) else EXIT_ANALYSIS


def _cmd_shadow(args) -> int:
    sys_def = builtin(args.system)
    rng = np.random.default_rng(args.seed)
    x0 = sys_def.domain.low + rng.random(sys_def.dim) * sys_def.domain.span
    po = generate_pseudo_orbit(sys_def, x0, args.delta, args.length, args.seed, args.kind)
    res = shadowing_search(sys_def, po, args.epsilon, args.search_depth)
    out = {"system": args.system, "delta": args.delta, "epsilon": args.epsilon, "length": args.length,
           "seed": args.seed, "kind": args.kind, "found": res.found, "witness": res.witness,
           "deviation": res.deviation if res.found else None, "candidates": res.candidates}
    try:
        z = inverse_branch_shadow(sys_def, po)
        out["inverse_branch_deviation"] = orbit_deviation(sys_def, z, po)
    except AnalysisError:
        pass
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chainrec", description="Chain recurrence on box grids.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="run the analyses of a TOML config")
    a.add_argument("config")
    a.add_argument("--output-dir", default=None, help="overrides output_dir from the config")
    a.set_defaults(func=_cmd_analyze)

    v = sub.add_parser("verify-finite", help="exhaustive checks on small finite systems")
    v.add_argument("--n", type=int, default=5)
    v.add_argument("--random", type=int, default=0, help="number of random total relations")
    v.add_argument("--random-n", type=int, default=8)
    v.add_argument("--seed", type=int, default=42)
    v.set_defaults(func=_cmd_verify_finite)

    s = sub.add_parser("shadow", help="search for a true orbit shadowing one pseudo-orbit")
    s.add_argument("--system", required=True, choices=BUILTINS)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--epsilon", type=float, required=True)
    s.add_argument("--length", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--kind", default="perturbed_orbit", choices=KINDS)
    s.add_argument("--search-depth", type=int, default=14)
    s.set_defaults(func=_cmd_shadow)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except AnalysisError as exc:
        print(f"analysis failed: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
