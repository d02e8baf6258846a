"""In-memory relational storage and join-aggregate evaluation over sub-instances.

Tables are immutable after load.  Every tuple receives a globally unique
identifier ``"<relation>:<row index>"`` assigned in relation-major, row
order.  A query is a select-project-join block over listed relations with a
single aggregate (SUM of an arithmetic expression, COUNT(*), or EXISTS).
Evaluation can be restricted to a sub-instance through a mask: a mapping
from relation name to the set of tuple ids considered present; relations
absent from the mask contribute all their rows.

Dates are stored as proleptic-Gregorian ordinal day integers so that date
comparisons are plain integer comparisons.  SUM accumulates satisfying join
combinations in a canonical order (sorted by row indices under the
alphabetical relation order), which makes results bit-reproducible and
independent of the relation order listed in the query.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Callable, Iterator, Mapping, Sequence

from .errors import DataError, QueryError, SchemaError

__all__ = [
    "COLUMN_TYPES",
    "COMPARISON_OPS",
    "Relation",
    "DatabaseInstance",
    "ColumnRef",
    "Const",
    "Predicate",
    "Col",
    "Lit",
    "BinOp",
    "Aggregate",
    "QuerySpec",
    "load_instance",
    "instance_from_tables",
    "parse_cell",
    "evaluate",
]

COLUMN_TYPES = ("integer", "decimal", "text", "date")
COMPARISON_OPS = ("=", "<>", "<", "<=", ">", ">=")
ARITH_OPS = ("+", "-", "*")

Mask = Mapping[str, frozenset] | Mapping[str, set] | None


def _parse_date(text: str) -> int:
    try:
        return date.fromisoformat(text.strip()).toordinal()
    except ValueError as exc:
        raise DataError(f"type mismatch: {text!r} is not an ISO date") from exc


def parse_cell(text: str, ctype: str, where: str = ""):
    """Parse one raw cell according to its declared column type."""
    loc = f" in {where}" if where else ""
    if ctype == "integer":
        try:
            return int(text.strip())
        except ValueError as exc:
            raise DataError(f"type mismatch: {text!r} is not an integer{loc}") from exc
    if ctype == "decimal":
        try:
            return float(text.strip())
        except ValueError as exc:
            raise DataError(f"type mismatch: {text!r} is not a decimal{loc}") from exc
    if ctype == "text":
        return text
    if ctype == "date":
        try:
            return _parse_date(text)
        except DataError as exc:
            raise DataError(f"{exc}{loc}") from None
    raise SchemaError(f"unknown column type {ctype!r}")


@dataclass(frozen=True)
class Relation:
    """One loaded table: named typed columns, rows, and per-row tuple ids."""

    name: str
    columns: tuple[tuple[str, str], ...]
    rows: tuple[tuple, ...]
    ids: tuple[str, ...]
    endogenous: bool = False

    def __post_init__(self):
        seen = set()
        for cname, ctype in self.columns:
            if ctype not in COLUMN_TYPES:
                raise SchemaError(f"relation {self.name}: unknown type {ctype!r}")
            if cname in seen:
                raise SchemaError(f"relation {self.name}: duplicate column {cname!r}")
            seen.add(cname)
        if len(self.rows) != len(self.ids):
            raise SchemaError(f"relation {self.name}: id/row count mismatch")
        arity = len(self.columns)
        for row in self.rows:
            if len(row) != arity:
                raise DataError(
                    f"relation {self.name}: row arity {len(row)} != {arity} columns"
                )
        object.__setattr__(
            self, "_colidx", {c: i for i, (c, _) in enumerate(self.columns)}
        )
        object.__setattr__(self, "_idset", frozenset(self.ids))

    @property
    def arity(self) -> int:
        return len(self.columns)

    def column_index(self, column: str) -> int:
        try:
            return self._colidx[column]
        except KeyError:
            raise QueryError(
                f"relation {self.name} has no column {column!r}"
            ) from None

    def column_type(self, column: str) -> str:
        return self.columns[self.column_index(column)][1]

    def has_id(self, tid: str) -> bool:
        return tid in self._idset


@dataclass(frozen=True)
class DatabaseInstance:
    """Immutable collection of relations with globally unique tuple ids."""

    relations: tuple[Relation, ...]

    def __post_init__(self):
        by_name = {}
        id_loc = {}
        for rel in self.relations:
            if rel.name in by_name:
                raise SchemaError(f"duplicate relation name {rel.name!r}")
            by_name[rel.name] = rel
            for i, tid in enumerate(rel.ids):
                if tid in id_loc:
                    raise SchemaError(f"duplicate tuple id {tid!r}")
                id_loc[tid] = (rel.name, i)
        object.__setattr__(self, "_by_name", by_name)
        object.__setattr__(self, "_id_loc", id_loc)

    def relation(self, name: str) -> Relation:
        try:
            return self._by_name[name]
        except KeyError:
            raise SchemaError(f"no relation named {name!r}") from None

    def has_relation(self, name: str) -> bool:
        return name in self._by_name

    def lookup(self, tid: str) -> tuple[Relation, int]:
        try:
            rel_name, idx = self._id_loc[tid]
        except KeyError:
            raise SchemaError(f"unknown tuple id {tid!r}") from None
        return self._by_name[rel_name], idx

    @property
    def tuple_count(self) -> int:
        return sum(len(r.rows) for r in self.relations)


def _build_relation(
    name: str,
    columns: Sequence[Sequence[str]],
    raw_rows: Sequence[Sequence[str]],
    endogenous: bool,
) -> Relation:
    cols = tuple((str(c), str(t)) for c, t in columns)
    parsed = []
    for rno, raw in enumerate(raw_rows):
        if len(raw) != len(cols):
            raise DataError(
                f"relation {name}: row {rno} has {len(raw)} cells, expected {len(cols)}"
            )
        parsed.append(
            tuple(
                parse_cell(cell, ctype, f"{name}.{cname} row {rno}")
                for cell, (cname, ctype) in zip(raw, cols)
            )
        )
    ids = tuple(f"{name}:{i}" for i in range(len(parsed)))
    return Relation(name, cols, tuple(parsed), ids, endogenous)


def _schema_relations(schema: Mapping) -> list[Mapping]:
    if not isinstance(schema, Mapping) or "relations" not in schema:
        raise SchemaError("schema must be an object with a 'relations' list")
    rels = schema["relations"]
    if not isinstance(rels, list) or not rels:
        raise SchemaError("schema 'relations' must be a non-empty list")
    return rels


def instance_from_tables(
    schema: Mapping, tables: Mapping[str, Sequence[Sequence[str]]]
) -> DatabaseInstance:
    """Build an instance from a schema dict and per-relation raw string rows."""
    relations = []
    for spec in _schema_relations(schema):
        name = spec["name"]
        if name not in tables:
            raise SchemaError(f"no table data provided for relation {name!r}")
        relations.append(
            _build_relation(
                name, spec["columns"], tables[name], bool(spec.get("endogenous", False))
            )
        )
    return DatabaseInstance(tuple(relations))


def _read_table_file(path: Path, columns: Sequence[Sequence[str]]) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file (header row required)") from None
        expected = [str(c) for c, _ in columns]
        if header != expected:
            raise SchemaError(
                f"{path}: header {header!r} does not match schema columns {expected!r}"
            )
        return [row for row in reader]


def load_instance(
    schema_path: str | Path, table_files: Sequence[str | Path] | None = None
) -> DatabaseInstance:
    """Load an instance from a schema JSON file plus one CSV per relation.

    When ``table_files`` is omitted, each schema entry must carry a ``file``
    field resolved relative to the schema file's directory.
    """
    schema_path = Path(schema_path)
    with open(schema_path, encoding="utf-8") as fh:
        schema = json.load(fh)
    rels = _schema_relations(schema)
    if table_files is None:
        paths = []
        for spec in rels:
            if "file" not in spec:
                raise SchemaError(
                    f"relation {spec.get('name')!r}: no 'file' in schema and no table files given"
                )
            paths.append(schema_path.parent / spec["file"])
    else:
        if len(table_files) != len(rels):
            raise SchemaError(
                f"{len(table_files)} table files for {len(rels)} schema relations"
            )
        paths = [Path(p) for p in table_files]
    tables = {
        spec["name"]: _read_table_file(path, spec["columns"])
        for spec, path in zip(rels, paths)
    }
    return instance_from_tables(schema, tables)


# --- query model -----------------------------------------------------------


@dataclass(frozen=True)
class ColumnRef:
    relation: str
    column: str

    def __str__(self) -> str:
        return f"{self.relation}.{self.column}"


@dataclass(frozen=True)
class Const:
    value: object


@dataclass(frozen=True)
class Predicate:
    lhs: ColumnRef | Const
    op: str
    rhs: ColumnRef | Const

    def __post_init__(self):
        if self.op not in COMPARISON_OPS:
            raise QueryError(f"unsupported comparison operator {self.op!r}")


@dataclass(frozen=True)
class Col:
    ref: ColumnRef


@dataclass(frozen=True)
class Lit:
    value: float


@dataclass(frozen=True)
class BinOp:
    op: str
    lhs: "Col | Lit | BinOp"
    rhs: "Col | Lit | BinOp"

    def __post_init__(self):
        if self.op not in ARITH_OPS:
            raise QueryError(f"unsupported arithmetic operator {self.op!r}")


@dataclass(frozen=True)
class Aggregate:
    kind: str  # sum | count | exists
    expr: Col | Lit | BinOp | None = None

    def __post_init__(self):
        if self.kind not in ("sum", "count", "exists"):
            raise QueryError(f"unsupported aggregate kind {self.kind!r}")
        if self.kind == "sum" and self.expr is None:
            raise QueryError("SUM aggregate requires an expression")


def parse_column_ref(text: str) -> ColumnRef:
    if not isinstance(text, str) or "." not in text:
        raise QueryError(f"malformed column reference {text!r} (expected rel.col)")
    rel, col = text.split(".", 1)
    if not rel or not col:
        raise QueryError(f"malformed column reference {text!r}")
    return ColumnRef(rel, col)


def _operand_from_json(obj) -> ColumnRef | Const:
    if isinstance(obj, str):
        return parse_column_ref(obj)
    if isinstance(obj, Mapping) and set(obj) == {"value"}:
        return Const(obj["value"])
    raise QueryError(f"malformed operand {obj!r} (column 'rel.col' or {{'value': ...}})")


def _operand_to_json(op: ColumnRef | Const):
    return str(op) if isinstance(op, ColumnRef) else {"value": op.value}


def _expr_from_json(obj) -> Col | Lit | BinOp:
    if isinstance(obj, Mapping):
        if set(obj) == {"col"}:
            return Col(parse_column_ref(obj["col"]))
        if set(obj) == {"value"}:
            v = obj["value"]
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise QueryError(f"aggregate literal must be numeric, got {v!r}")
            return Lit(v)
        if set(obj) == {"op", "lhs", "rhs"}:
            return BinOp(obj["op"], _expr_from_json(obj["lhs"]), _expr_from_json(obj["rhs"]))
    raise QueryError(f"malformed aggregate expression node {obj!r}")


def _expr_to_json(node: Col | Lit | BinOp):
    if isinstance(node, Col):
        return {"col": str(node.ref)}
    if isinstance(node, Lit):
        return {"value": node.value}
    return {"op": node.op, "lhs": _expr_to_json(node.lhs), "rhs": _expr_to_json(node.rhs)}


@dataclass(frozen=True)
class QuerySpec:
    """A join-aggregate query over named relations.

    Self-joins are not supported: each relation may be listed once.
    """

    relations: tuple[str, ...]
    equijoins: tuple[tuple[ColumnRef, ColumnRef], ...] = ()
    predicates: tuple[Predicate, ...] = ()
    aggregate: Aggregate = field(default_factory=lambda: Aggregate("count"))

    @classmethod
    def from_dict(cls, obj: Mapping) -> "QuerySpec":
        try:
            rels = tuple(str(r) for r in obj["relations"])
        except KeyError:
            raise QueryError("query must list 'relations'") from None
        joins = tuple(
            (parse_column_ref(a), parse_column_ref(b))
            for a, b in obj.get("equijoins", ())
        )
        preds = tuple(
            Predicate(_operand_from_json(l), str(op), _operand_from_json(r))
            for l, op, r in obj.get("predicates", ())
        )
        agg = obj.get("aggregate", {"kind": "count"})
        kind = agg.get("kind")
        expr = _expr_from_json(agg["expr"]) if "expr" in agg else None
        return cls(rels, joins, preds, Aggregate(kind, expr))

    @classmethod
    def from_file(cls, path: str | Path) -> "QuerySpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        agg: dict = {"kind": self.aggregate.kind}
        if self.aggregate.expr is not None:
            agg["expr"] = _expr_to_json(self.aggregate.expr)
        return {
            "relations": list(self.relations),
            "equijoins": [[str(a), str(b)] for a, b in self.equijoins],
            "predicates": [
                [_operand_to_json(p.lhs), p.op, _operand_to_json(p.rhs)]
                for p in self.predicates
            ],
            "aggregate": agg,
        }

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


# --- binding and evaluation --------------------------------------------------

_NUMERIC = ("integer", "decimal")


def _type_class(ctype: str) -> str:
    return "numeric" if ctype in _NUMERIC else ctype


def _compare(op: str):
    import operator as _op

    return {
        "=": _op.eq,
        "<>": _op.ne,
        "<": _op.lt,
        "<=": _op.le,
        ">": _op.gt,
        ">=": _op.ge,
    }[op]


def _coerce_const(value, ctype: str):
    """Coerce a predicate constant to be comparable with a column of ctype."""
    if ctype in _NUMERIC:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return value
        raise QueryError(f"constant {value!r} is not comparable with a {ctype} column")
    if ctype == "text":
        if isinstance(value, str):
            return value
        raise QueryError(f"constant {value!r} is not comparable with a text column")
    if ctype == "date":
        if isinstance(value, str):
            return _parse_date(value)
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        raise QueryError(f"constant {value!r} is not comparable with a date column")
    raise SchemaError(f"unknown column type {ctype!r}")


class _Binding:
    """A query resolved against an instance: positions, compiled predicates,
    join adjacency, and the aggregate term function."""

    def __init__(self, query: QuerySpec, instance: DatabaseInstance):
        if not query.relations:
            raise QueryError("query lists no relations")
        if len(set(query.relations)) != len(query.relations):
            raise QueryError("duplicate relation in query (self-joins unsupported)")
        self.query = query
        self.instance = instance
        self.rels = [instance.relation(name) for name in query.relations]
        self.pos = {name: i for i, name in enumerate(query.relations)}
        npos = len(self.rels)

        def resolve(ref: ColumnRef) -> tuple[int, int, str]:
            if ref.relation not in self.pos:
                raise QueryError(f"column {ref} references a relation not in the query")
            p = self.pos[ref.relation]
            ci = self.rels[p].column_index(ref.column)
            return p, ci, self.rels[p].columns[ci][1]

        # equijoin adjacency: per position, edges (other_pos, self_col, other_col)
        self.adj: list[list[tuple[int, int, int]]] = [[] for _ in range(npos)]
        for a, b in query.equijoins:
            pa, ca, ta = resolve(a)
            pb, cb, tb = resolve(b)
            if pa == pb:
                raise QueryError(f"equijoin {a} = {b} references a single relation")
            if _type_class(ta) != _type_class(tb):
                raise QueryError(f"equijoin {a} = {b} compares {ta} with {tb}")
            self.adj[pa].append((pb, ca, cb))
            self.adj[pb].append((pa, cb, ca))

        # predicates: local (single relation) vs cross (need several positions)
        self.local_preds: list[list[Callable]] = [[] for _ in range(npos)]
        self.cross_preds: list[tuple[frozenset, Callable]] = []
        for pred in query.predicates:
            cmp = _compare(pred.op)
            refs = [x for x in (pred.lhs, pred.rhs) if isinstance(x, ColumnRef)]
            if not refs:
                raise QueryError("predicate must reference at least one column")
            if len(refs) == 2:
                pl, cl, tl = resolve(pred.lhs)
                pr, cr, tr = resolve(pred.rhs)
                if _type_class(tl) != _type_class(tr):
                    raise QueryError(
                        f"predicate compares {tl} column with {tr} column"
                    )
                if pl == pr:
                    self.local_preds[pl].append(
                        lambda row, cl=cl, cr=cr, cmp=cmp: cmp(row[cl], row[cr])
                    )
                else:
                    self.cross_preds.append(
                        (
                            frozenset((pl, pr)),
                            lambda rows, pl=pl, cl=cl, pr=pr, cr=cr, cmp=cmp: cmp(
                                rows[pl][cl], rows[pr][cr]
                            ),
                        )
                    )
            else:
                if isinstance(pred.lhs, ColumnRef):
                    p, ci, ct = resolve(pred.lhs)
                    const = _coerce_const(pred.rhs.value, ct)
                    self.local_preds[p].append(
                        lambda row, ci=ci, const=const, cmp=cmp: cmp(row[ci], const)
                    )
                else:
                    p, ci, ct = resolve(pred.rhs)
                    const = _coerce_const(pred.lhs.value, ct)
                    self.local_preds[p].append(
                        lambda row, ci=ci, const=const, cmp=cmp: cmp(const, row[ci])
                    )

        self.kind = query.aggregate.kind
        self.term_fn = (
            self._compile_expr(query.aggregate.expr, resolve)
            if self.kind == "sum"
            else None
        )
        # canonical combination order: positions sorted by relation name
        self.canon_positions = sorted(range(npos), key=lambda p: query.relations[p])
        self.join_order = self._join_order()

    def _compile_expr(self, node, resolve) -> Callable:
        if isinstance(node, Col):
            p, ci, ct = resolve(node.ref)
            if ct not in _NUMERIC:
                raise QueryError(
                    f"arithmetic on non-numeric column {node.ref} ({ct})"
                )
            return lambda rows, p=p, ci=ci: rows[p][ci]
        if isinstance(node, Lit):
            v = float(node.value)
            return lambda rows, v=v: v
        if isinstance(node, BinOp):
            lf = self._compile_expr(node.lhs, resolve)
            rf = self._compile_expr(node.rhs, resolve)
            if node.op == "+":
                return lambda rows: lf(rows) + rf(rows)
            if node.op == "-":
                return lambda rows: lf(rows) - rf(rows)
            return lambda rows: lf(rows) * rf(rows)
        raise QueryError(f"malformed aggregate expression {node!r}")

    def _join_order(self) -> list[int]:
        npos = len(self.rels)
        order = [0]
        bound = {0}
        while len(order) < npos:
            frontier = sorted(
                p
                for p in range(npos)
                if p not in bound and any(o in bound for o, _, _ in self.adj[p])
            )
            nxt = frontier[0] if frontier else min(p for p in range(npos) if p not in bound)
            order.append(nxt)
            bound.add(nxt)
        return order


def bind(query: QuerySpec, instance: DatabaseInstance) -> _Binding:
    return _Binding(query, instance)


def _validate_mask(instance: DatabaseInstance, mask: Mask) -> None:
    if mask is None:
        return
    for rel_name, ids in mask.items():
        rel = instance.relation(rel_name)
        for tid in ids:
            if not rel.has_id(tid):
                raise SchemaError(
                    f"mask id {tid!r} does not belong to relation {rel_name!r}"
                )


def _filtered_rows(binding: _Binding, mask: Mask) -> list[list[tuple[int, tuple]]]:
    out = []
    for p, rel in enumerate(binding.rels):
        present = mask.get(rel.name) if mask else None
        preds = binding.local_preds[p]
        rows = []
        for i, row in enumerate(rel.rows):
            if present is not None and rel.ids[i] not in present:
                continue
            if all(f(row) for f in preds):
                rows.append((i, row))
        out.append(rows)
    return out


def iter_combinations(
    binding: _Binding, mask: Mask = None
) -> Iterator[tuple[tuple[int, ...], tuple[tuple, ...]]]:
    """Yield satisfying join combinations as (row indices, rows), both aligned
    with the query's relation positions.  Yield order is plan-dependent;
    callers needing a canonical order must sort by the canonical key."""
    filtered = _filtered_rows(binding, mask)
    if any(not rows for rows in filtered):
        return
    npos = len(binding.rels)
    remaining_preds = list(binding.cross_preds)
    partials: list[dict[int, tuple[int, tuple]]] = [{}]
    bound: set[int] = set()
    for pos in binding.join_order:
        bound.add(pos)
        checks = [f for need, f in remaining_preds if need <= bound and pos in need]
        remaining_preds = [(need, f) for need, f in remaining_preds if not need <= bound]
        eqs = [(o, sc, oc) for o, sc, oc in binding.adj[pos] if o in bound and o != pos]
        new_partials = []
        if eqs:
            table: dict[tuple, list[tuple[int, tuple]]] = {}
            for idx, row in filtered[pos]:
                key = tuple(row[sc] for _, sc, _ in eqs)
                table.setdefault(key, []).append((idx, row))
            for part in partials:
                key = tuple(part[o][1][oc] for o, _, oc in eqs)
                for idx, row in table.get(key, ()):
                    cand = {**part, pos: (idx, row)}
                    if checks:
                        rows_by_pos = {q: v[1] for q, v in cand.items()}
                        if not all(f(rows_by_pos) for f in checks):
                            continue
                    new_partials.append(cand)
        else:
            for part in partials:
                for idx, row in filtered[pos]:
                    cand = {**part, pos: (idx, row)}
                    if checks:
                        rows_by_pos = {q: v[1] for q, v in cand.items()}
                        if not all(f(rows_by_pos) for f in checks):
                            continue
                    new_partials.append(cand)
        partials = new_partials
        if not partials:
            return
    for part in partials:
        idxs = tuple(part[p][0] for p in range(npos))
        rows = tuple(part[p][1] for p in range(npos))
        yield idxs, rows


def canonical_key(binding: _Binding, idxs: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(idxs[p] for p in binding.canon_positions)


def evaluate_bound(binding: _Binding, mask: Mask = None) -> float:
    """Evaluate the bound query on the masked sub-instance."""
    if binding.kind == "exists":
        for _ in iter_combinations(binding, mask):
            return 1.0
        return 0.0
    if binding.kind == "count":
        return float(sum(1 for _ in iter_combinations(binding, mask)))
    combos = [
        (canonical_key(binding, idxs), rows)
        for idxs, rows in iter_combinations(binding, mask)
    ]
    combos.sort(key=lambda kr: kr[0])
    acc = 0.0
    term = binding.term_fn
    for _, rows in combos:
        acc += float(term(rows))
    return acc


def evaluate(query: QuerySpec, instance: DatabaseInstance, mask: Mask = None) -> float:
    """Evaluate a join-aggregate query restricted to the masked sub-instance.

    SUM over zero satisfying combinations is 0; EXISTS returns 1.0 or 0.0.
    Pure function of (query, instance, mask): repeat calls are bit-identical.
    """
    binding = bind(query, instance)
    _validate_mask(instance, mask)
    return evaluate_bound(binding, mask)
