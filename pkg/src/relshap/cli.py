"""Command line interface.

Subcommands: gen, provenance, exact, estimate, bench.  Exit codes: 0 on
success, 2 on validation errors, 3 when a hard cap refuses exponential or
oversized work.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import kernels
from .errors import CapacityError, RelShapError
from .game import (
    DEFAULT_EXACT_CAP,
    DEFAULT_PERM_CAP,
    GameContext,
    exact_banzhaf,
    exact_shapley,
    exact_shapley_perm,
)
from .harness import BenchSpec, gen_instance, run_bench, write_bench_outputs
from .provenance import compute_lineage, is_endogenous
from .relcore import QuerySpec, load_instance
from .samplers import METHODS, EstimatorConfig, estimate


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _load(args) -> tuple:
    data = Path(args.data)
    schema = Path(args.schema) if args.schema else data / "schema.json"
    query = Path(args.query) if args.query else data / "query.json"
    instance = load_instance(schema)
    return instance, QuerySpec.from_file(query)


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="directory with schema.json/query.json/csvs")
    p.add_argument("--schema", default=None, help="override schema path")
    p.add_argument("--query", default=None, help="override query path")


def _cmd_gen(args) -> int:
    scale = tuple(int(x) for x in args.scale.split(","))
    if len(scale) != 3:
        raise RelShapError("--scale needs three counts: lineitems,orders,customers")
    paths = gen_instance(
        args.out,
        seed=args.seed,
        scale=scale,  # type: ignore[arg-type]
        skew=args.skew,
        p_auto=args.p_auto,
        p_late=args.p_late,
        preset=args.preset,
    )
    _emit({name: str(p) for name, p in paths.items()}, None)
    return 0


def _cmd_provenance(args) -> int:
    instance, query = _load(args)
    partition = compute_lineage(query, instance)
    _emit(partition.to_dict(), args.out)
    return 0


def _cmd_exact(args) -> int:
    instance, query = _load(args)
    ctx = GameContext(query, instance, evaluator=args.evaluator)
    t0 = time.perf_counter()
    if args.method == "subset":
        value = exact_shapley(ctx, args.target, cap=args.cap)
    elif args.method == "perm":
        value = exact_shapley_perm(ctx, args.target, cap=min(args.cap, DEFAULT_PERM_CAP))
    else:
        value = exact_banzhaf(ctx, args.target, cap=args.cap)
    seconds = time.perf_counter() - t0
    _emit(
        {
            "target": args.target,
            "method": args.method,
            "value": value,
            "n": ctx.n,
            "seconds": seconds,
            "evaluator": args.evaluator,
            "backend": kernels.active_backend(),
        },
        args.out,
    )
    return 0


def _cmd_estimate(args) -> int:
    instance, query = _load(args)
    partition = compute_lineage(query, instance)
    if not is_endogenous(partition, args.target):
        _emit(
            {
                "target": args.target,
                "method": args.method,
                "value": 0.0,
                "note": "target is not in the query lineage; attribution is exactly 0",
            },
            args.out,
        )
        return 0
    ctx = GameContext(
        query,
        instance,
        partition,
        evaluator=args.evaluator,
        cache_capacity=args.cache_capacity,
    )
    cfg = EstimatorConfig(
        method=args.method,
        m=args.budget,
        k=args.cycles,
        floor=args.floor,
        seed=args.seed,
        workers=args.workers,
        bins=args.bins,
        cache=args.cache_capacity > 0,
        evaluator=args.evaluator,
        prune=args.prune == "on",
        dedup=args.dedup,
    )
    report = estimate(ctx, args.target, cfg)
    _emit(report.to_dict(), args.out)
    return 0


def _cmd_bench(args) -> int:
    data = Path(args.data)
    spec = BenchSpec(
        schema_path=Path(args.schema) if args.schema else data / "schema.json",
        query_path=Path(args.query) if args.query else data / "query.json",
        target=args.target,
        methods=tuple(args.methods.split(",")),
        budgets=tuple(int(b) for b in args.budgets.split(",")),
        reps=args.reps,
        seed=args.seed,
        evaluator=args.evaluator,
        workers=args.workers,
        cycles=args.cycles,
        floor=args.floor,
        bins=args.bins,
        prune=args.prune == "on",
        no_exact=args.no_exact,
        oracle_cap=args.cap,
    )
    result = run_bench(spec)
    json_path, csv_path = write_bench_outputs(result, args.out)
    summary = {
        "report": str(json_path),
        "table": str(csv_path),
        "n": result.n,
        "exact": result.exact,
        "cells": [
            {
                "method": c.method,
                "budget": c.budget,
                "mre": c.mre,
                "abs_error": c.abs_error,
            }
            for c in result.cells
        ],
    }
    print(json.dumps(summary, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relshap",
        description="Tuple-level Shapley and Banzhaf attribution for join-aggregate queries",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic instance + query")
    p.add_argument("--out", required=True)
    p.add_argument("--preset", choices=["example1"], default=None)
    p.add_argument("--scale", default="8,3,2", help="lineitems,orders,customers")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--skew", type=float, default=0.0)
    p.add_argument("--p-auto", dest="p_auto", type=float, default=0.5)
    p.add_argument("--p-late", dest="p_late", type=float, default=0.6)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("provenance", help="print the endogenous partition of the query")
    _add_data_args(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_provenance)

    p = sub.add_parser("exact", help="exact attribution via brute-force oracles")
    _add_data_args(p)
    p.add_argument("--target", required=True)
    p.add_argument("--method", choices=["subset", "perm", "banzhaf"], default="subset")
    p.add_argument("--evaluator", choices=["naive", "compiled"], default="compiled")
    p.add_argument("--cap", type=int, default=DEFAULT_EXACT_CAP)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_exact)

    p = sub.add_parser("estimate", help="sampling estimators")
    _add_data_args(p)
    p.add_argument("--target", required=True)
    p.add_argument("--method", choices=list(METHODS), required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--cycles", type=int, default=5)
    p.add_argument("--floor", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--cache-capacity", dest="cache_capacity", type=int, default=1 << 20)
    p.add_argument("--prune", choices=["on", "off"], default="on")
    p.add_argument("--dedup", action="store_true")
    p.add_argument("--evaluator", choices=["naive", "compiled"], default="compiled")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("bench", help="estimator accuracy/runtime grid")
    _add_data_args(p)
    p.add_argument("--target", required=True)
    p.add_argument("--methods", default=",".join(METHODS))
    p.add_argument("--budgets", default="100,1000")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--cycles", type=int, default=5)
    p.add_argument("--floor", type=int, default=1)
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--prune", choices=["on", "off"], default="on")
    p.add_argument("--evaluator", choices=["naive", "compiled"], default="compiled")
    p.add_argument("--no-exact", dest="no_exact", action="store_true")
    p.add_argument("--cap", type=int, default=DEFAULT_EXACT_CAP)
    p.add_argument("--out", required=True, help="output prefix for .json/.csv")
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 3
    except RelShapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
