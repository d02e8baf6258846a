"""Synthetic data generation, accuracy metrics, and benchmark orchestration.

The built-in ``example1`` preset is a small three-relation instance
(lineitem / customer / orders) with a revenue query whose full-mask value is
2319.5; it anchors the golden tests.  Random instances reproduce the same
query shape (two equijoins, a date inequality, a constant selection, and a
SUM of price * (1 - discount)) at configurable scale and term skew so that
estimator behavior can be compared against the exact oracle at desk scale.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .errors import CapacityError, DomainError
from .game import DEFAULT_EXACT_CAP, GameContext, exact_shapley
from .provenance import compute_lineage
from .relcore import DatabaseInstance, QuerySpec, instance_from_tables
from .samplers import METHODS, EstimatorConfig, estimate

__all__ = [
    "EXAMPLE1_SCHEMA",
    "EXAMPLE1_QUERY",
    "example1",
    "gen_instance",
    "mre",
    "BenchSpec",
    "BenchCell",
    "BenchResult",
    "run_bench",
    "bench_flat_rows",
    "write_bench_outputs",
]

EXAMPLE1_SCHEMA = {
    "relations": [
        {
            "name": "lineitem",
            "columns": [
                ["lid", "text"],
                ["orderkey", "integer"],
                ["extendedprice", "decimal"],
                ["discount", "decimal"],
                ["shipdate", "date"],
            ],
            "endogenous": True,
            "file": "lineitem.csv",
        },
        {
            "name": "customer",
            "columns": [
                ["cid", "text"],
                ["custkey", "integer"],
                ["name", "text"],
                ["acctbal", "decimal"],
                ["mktsegment", "text"],
            ],
            "endogenous": True,
            "file": "customer.csv",
        },
        {
            "name": "orders",
            "columns": [
                ["oid", "text"],
                ["orderkey", "integer"],
                ["custkey", "integer"],
                ["orderdate", "date"],
                ["shippriority", "integer"],
            ],
            "endogenous": True,
            "file": "orders.csv",
        },
    ]
}

_EXAMPLE1_LINEITEM = [
    ["l1", "23417", "500", "0.10", "1998-04-21"],
    ["l2", "23417", "600", "0.01", "1998-04-16"],
    ["l3", "23417", "700", "0.06", "1998-04-06"],
    ["l4", "23417", "650", "0.05", "1998-03-25"],
    ["l5", "23110", "820", "0.04", "1998-02-14"],
    ["l6", "23110", "560", "0.03", "1998-02-17"],
    ["l7", "22789", "400", "0.07", "1998-01-11"],
    ["l8", "22789", "720", "0.06", "1998-01-15"],
]

_EXAMPLE1_CUSTOMER = [
    ["c1", "1456", "Cust1456", "6800", "AUTO"],
    ["c2", "3125", "Cust3125", "4300", "MACHINERY"],
]

_EXAMPLE1_ORDERS = [
    ["o1", "23417", "1456", "1997-12-21", "0"],
    ["o2", "23110", "3125", "1998-01-05", "1"],
    ["o3", "22789", "3125", "1998-01-07", "0"],
]

EXAMPLE1_QUERY = {
    "relations": ["customer", "orders", "lineitem"],
    "equijoins": [
        ["customer.custkey", "orders.custkey"],
        ["lineitem.orderkey", "orders.orderkey"],
    ],
    "predicates": [
        ["customer.mktsegment", "=", {"value": "AUTO"}],
        ["lineitem.shipdate", ">", "orders.orderdate"],
        ["orders.orderkey", "=", {"value": 23417}],
    ],
    "aggregate": {
        "kind": "sum",
        "expr": {
            "op": "*",
            "lhs": {"col": "lineitem.extendedprice"},
            "rhs": {"op": "-", "lhs": {"value": 1}, "rhs": {"col": "lineitem.discount"}},
        },
    },
}


def example1(
    prices: list | None = None, discounts: list | None = None
) -> tuple[DatabaseInstance, QuerySpec]:
    """The built-in preset instance and query, with optional lineitem edits.

    prices/discounts override the eight lineitem extendedprice/discount
    values (useful for the constant-term and skewed variants).
    """
    rows = [list(r) for r in _EXAMPLE1_LINEITEM]
    if prices is not None:
        for row, p in zip(rows, prices):
            row[2] = str(p)
    if discounts is not None:
        for row, d in zip(rows, discounts):
            row[3] = str(d)
    instance = instance_from_tables(
        EXAMPLE1_SCHEMA,
        {
            "lineitem": rows,
            "customer": _EXAMPLE1_CUSTOMER,
            "orders": _EXAMPLE1_ORDERS,
        },
    )
    return instance, QuerySpec.from_dict(EXAMPLE1_QUERY)


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def gen_instance(
    out_dir: str | Path,
    seed: int = 0,
    scale: tuple[int, int, int] = (8, 3, 2),
    skew: float = 0.0,
    p_auto: float = 0.5,
    p_late: float = 0.6,
    preset: str | None = None,
) -> dict[str, Path]:
    """Write a deterministic three-relation instance plus query to out_dir.

    scale = (lineitems, orders, customers).  skew >= 0 controls the
    heavy-tailedness of lineitem price terms; p_auto is the fraction of
    customers in the selected segment, p_late the fraction of lineitems
    shipping after their order date.  Same seed, same bytes.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    schema = json.loads(json.dumps(EXAMPLE1_SCHEMA))
    if preset == "example1":
        lineitem, customer, orders = (
            _EXAMPLE1_LINEITEM,
            _EXAMPLE1_CUSTOMER,
            _EXAMPLE1_ORDERS,
        )
        query = EXAMPLE1_QUERY
    elif preset is not None:
        raise DomainError(f"unknown preset {preset!r}")
    else:
        nl, no, nc = scale
        if min(nl, no, nc) < 0 or no < 1 or nc < 1:
            raise DomainError(f"scale needs >= 1 order and customer, got {scale}")
        rng = np.random.default_rng(seed)
        segments = ["MACHINERY", "BUILDING", "FURNITURE"]
        customer = []
        for i in range(nc):
            seg = "AUTO" if (i == 0 or rng.random() < p_auto) else segments[
                int(rng.integers(0, len(segments)))
            ]
            customer.append(
                [
                    f"c{i + 1}",
                    str(1000 + i),
                    f"Cust{1000 + i}",
                    f"{rng.uniform(0, 10000):.2f}",
                    seg,
                ]
            )
        base_day = date(1997, 1, 1)
        orders = []
        order_dates = []
        for j in range(no):
            odate = base_day + timedelta(days=int(rng.integers(0, 365)))
            order_dates.append(odate)
            orders.append(
                [
                    f"o{j + 1}",
                    str(20000 + j),
                    str(1000 + int(rng.integers(0, nc))),
                    odate.isoformat(),
                    str(int(rng.integers(0, 2))),
                ]
            )
        lineitem = []
        for k in range(nl):
            j = int(rng.integers(0, no))
            price = 50.0 + 100.0 * math.exp(skew * rng.standard_normal())
            discount = rng.uniform(0, 0.1)
            if rng.random() < p_late:
                ship = order_dates[j] + timedelta(days=1 + int(rng.integers(0, 60)))
            else:
                ship = order_dates[j] - timedelta(days=1 + int(rng.integers(0, 60)))
            lineitem.append(
                [
                    f"l{k + 1}",
                    str(20000 + j),
                    f"{price:.2f}",
                    f"{discount:.2f}",
                    ship.isoformat(),
                ]
            )
        query = json.loads(json.dumps(EXAMPLE1_QUERY))
        # generated instances keep the whole segment, not one order
        query["predicates"] = [
            p for p in query["predicates"] if p[0] != "orders.orderkey"
        ]

    paths = {}
    tables = {"lineitem": lineitem, "customer": customer, "orders": orders}
    for spec in schema["relations"]:
        path = out_dir / spec["file"]
        _write_csv(path, [c for c, _ in spec["columns"]], tables[spec["name"]])
        paths[spec["name"]] = path
    schema_path = out_dir / "schema.json"
    with open(schema_path, "w", encoding="utf-8") as fh:
        json.dump(schema, fh, indent=2)
        fh.write("\n")
    paths["schema"] = schema_path
    query_path = out_dir / "query.json"
    with open(query_path, "w", encoding="utf-8") as fh:
        json.dump(query, fh, indent=2)
        fh.write("\n")
    paths["query"] = query_path
    return paths


def mre(estimates: list[float], exact: float) -> float:
    """Mean relative error of repeated estimates against the exact value."""
    if not estimates:
        raise DomainError("mre needs at least one estimate")
    if exact == 0:
        raise DomainError("exact value is 0: relative error undefined, use absolute error")
    return math.fsum(abs(e - exact) for e in estimates) / (len(estimates) * abs(exact))


@dataclass
class BenchSpec:
    schema_path: str | Path
    query_path: str | Path
    target: str
    methods: tuple[str, ...] = METHODS
    budgets: tuple[int, ...] = (100, 1000)
    reps: int = 20
    seed: int = 0
    table_files: tuple[str, ...] | None = None
    evaluator: str = "compiled"
    workers: int = 1
    cycles: int = 5
    floor: int = 1
    bins: int | None = None
    cache: bool = True
    prune: bool = True
    no_exact: bool = False
    oracle_cap: int = DEFAULT_EXACT_CAP

    def __post_init__(self):
        if self.reps < 1:
            raise DomainError(f"reps must be >= 1, got {self.reps}")
        if list(self.budgets) != sorted(set(self.budgets)):
            raise DomainError("budgets must be strictly increasing")
        for m in self.methods:
            if m not in METHODS:
                raise DomainError(f"unknown method {m!r}")


@dataclass
class BenchCell:
    method: str
    budget: int
    estimates: list[float]
    wall_times: list[float]
    evaluator_times: list[float]
    mre: float | None
    abs_error: float | None
    absolute_mode: bool = False


@dataclass
class BenchResult:
    target: str
    n: int
    seed: int
    reps: int
    exact: float | None
    exact_seconds: float | None
    cells: list[BenchCell] = field(default_factory=list)

    def cell(self, method: str, budget: int) -> BenchCell:
        for c in self.cells:
            if c.method == method and c.budget == budget:
                return c
        raise KeyError((method, budget))

    def to_dict(self) -> dict:
        return asdict(self)


def run_bench(spec: BenchSpec) -> BenchResult:
    """Run every (method, budget) cell reps times with seeds seed+0..reps-1.

    The exact value comes from the brute-force oracle when n is within the
    cap; above the cap --no-exact must be set and MRE is suppressed.
    """
    from .relcore import load_instance

    instance = load_instance(spec.schema_path, spec.table_files)
    query = QuerySpec.from_file(spec.query_path)
    partition = compute_lineage(query, instance)
    if spec.target not in partition.index:
        raise DomainError(
            f"target {spec.target!r} is not in the query lineage; its attribution is 0"
        )
    ctx = GameContext(query, instance, partition, evaluator=spec.evaluator)
    exact = None
    exact_seconds = None
    if partition.n <= spec.oracle_cap:
        t0 = time.perf_counter()
        exact = exact_shapley(ctx, spec.target, cap=spec.oracle_cap)
        exact_seconds = time.perf_counter() - t0
    elif not spec.no_exact:
        raise CapacityError(
            f"n={partition.n} exceeds oracle cap {spec.oracle_cap}; pass no_exact to "
            "report raw estimates without MRE"
        )
    result = BenchResult(
        target=spec.target,
        n=partition.n,
        seed=spec.seed,
        reps=spec.reps,
        exact=exact,
        exact_seconds=exact_seconds,
    )
    for method in spec.methods:
        for budget in spec.budgets:
            estimates, walls, evals = [], [], []
            for rep in range(spec.reps):
                cfg = EstimatorConfig(
                    method=method,
                    m=budget,
                    k=spec.cycles,
                    floor=spec.floor,
                    seed=spec.seed + rep,
                    workers=spec.workers,
                    bins=spec.bins,
                    cache=spec.cache,
                    evaluator=spec.evaluator,
                    prune=spec.prune,
                )
                report = estimate(ctx, spec.target, cfg)
                estimates.append(report.value)
                walls.append(report.wall_time)
                evals.append(report.evaluator_time)
            cell_mre = None
            abs_err = None
            absolute = False
            if exact is not None:
                if exact != 0:
                    cell_mre = mre(estimates, exact)
                else:
                    abs_err = math.fsum(abs(e) for e in estimates) / len(estimates)
                    absolute = True
            result.cells.append(
                BenchCell(
                    method=method,
                    budget=budget,
                    estimates=estimates,
                    wall_times=walls,
                    evaluator_times=evals,
                    mre=cell_mre,
                    abs_error=abs_err,
                    absolute_mode=absolute,
                )
            )
    return result


def bench_flat_rows(result: BenchResult) -> list[tuple]:
    """Flat (method, budget, rep, seed, estimate, seconds, evaluator_seconds)."""
    rows = []
    for cell in result.cells:
        for rep, (est, wt, et) in enumerate(
            zip(cell.estimates, cell.wall_times, cell.evaluator_times)
        ):
            rows.append(
                (cell.method, cell.budget, rep, result.seed + rep, est, wt, et)
            )
    return rows


def write_bench_outputs(result: BenchResult, out_prefix: str | Path) -> tuple[Path, Path]:
    """Write the structured report and the flat table for plotting."""
    out_prefix = Path(out_prefix)
    out_prefix.parent.mkdir(parents=True, exist_ok=True)
    json_path = out_prefix.with_suffix(".json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(result.to_dict(), fh, indent=2)
        fh.write("\n")
    csv_path = out_prefix.with_suffix(".csv")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["method", "budget", "rep", "seed", "estimate", "seconds", "evaluator_seconds"]
        )
        writer.writerows(bench_flat_rows(result))
    return json_path, csv_path
