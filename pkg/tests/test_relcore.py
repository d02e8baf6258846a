import json
import random

import pytest

from relshap.errors import DataError, QueryError, SchemaError
from relshap.harness import EXAMPLE1_QUERY, EXAMPLE1_SCHEMA, gen_instance
from relshap.relcore import (
    DatabaseInstance,
    QuerySpec,
    evaluate,
    instance_from_tables,
    load_instance,
    parse_cell,
)

FULL_ENDOGENOUS = {
    "customer": frozenset({"customer:0"}),
    "orders": frozenset({"orders:0"}),
    "lineitem": frozenset({"lineitem:0", "lineitem:1", "lineitem:2", "lineitem:3"}),
}


def test_load_example1_files(tmp_path):
    paths = gen_instance(tmp_path, preset="example1")
    instance = load_instance(paths["schema"])
    assert instance.tuple_count == 13
    assert [r.name for r in instance.relations] == ["lineitem", "customer", "orders"]
    rel, idx = instance.lookup("orders:0")
    assert rel.name == "orders" and idx == 0


def test_load_with_explicit_table_files(tmp_path):
    paths = gen_instance(tmp_path, preset="example1")
    instance = load_instance(
        paths["schema"], [paths["lineitem"], paths["customer"], paths["orders"]]
    )
    assert instance.tuple_count == 13


def test_empty_relation_is_valid(tmp_path):
    paths = gen_instance(tmp_path, seed=0, scale=(0, 1, 1))
    instance = load_instance(paths["schema"])
    assert len(instance.relation("lineitem").rows) == 0
    query = QuerySpec.from_file(paths["query"])
    assert evaluate(query, instance) == 0.0


def test_type_mismatch_cell():
    with pytest.raises(DataError, match="type mismatch"):
        parse_cell("abc", "decimal")
    bad = {"relations": [{"name": "r", "columns": [["x", "decimal"]]}]}
    with pytest.raises(DataError, match="type mismatch"):
        instance_from_tables(bad, {"r": [["abc"]]})


def test_header_mismatch_rejected(tmp_path):
    paths = gen_instance(tmp_path, preset="example1")
    text = paths["lineitem"].read_text().splitlines()
    text[0] = "a,b,c,d,e"
    paths["lineitem"].write_text("\n".join(text) + "\n")
    with pytest.raises(SchemaError, match="header"):
        load_instance(paths["schema"])


def test_duplicate_relation_name_rejected():
    rel = {"name": "r", "columns": [["x", "integer"]]}
    schema = {"relations": [rel, rel]}
    with pytest.raises(SchemaError, match="duplicate"):
        instance_from_tables(schema, {"r": [["1"]]})


def test_row_arity_checked():
    schema = {"relations": [{"name": "r", "columns": [["x", "integer"], ["y", "integer"]]}]}
    with pytest.raises(DataError, match="cells"):
        instance_from_tables(schema, {"r": [["1"]]})


def test_tuple_ids_relation_major(ex1):
    instance, _ = ex1
    assert instance.relation("lineitem").ids[0] == "lineitem:0"
    assert instance.relation("orders").ids == ("orders:0", "orders:1", "orders:2")


def test_dates_epoch_days():
    assert parse_cell("1998-04-21", "date") - parse_cell("1998-04-20", "date") == 1
    with pytest.raises(DataError, match="type mismatch"):
        parse_cell("not-a-date", "date")


# --- evaluation ---------------------------------------------------------------


def test_golden_full_mask(ex1):
    instance, query = ex1
    assert evaluate(query, instance, FULL_ENDOGENOUS) == pytest.approx(2319.5, abs=1e-9)


def test_golden_no_order(ex1):
    instance, query = ex1
    mask = dict(FULL_ENDOGENOUS)
    mask["orders"] = frozenset()
    mask["lineitem"] = frozenset({"lineitem:0", "lineitem:1", "lineitem:2"})
    assert evaluate(query, instance, mask) == 0.0


def test_sum_over_empty_masks_is_zero(ex1):
    instance, query = ex1
    mask = {rel.name: frozenset() for rel in instance.relations}
    assert evaluate(query, instance, mask) == 0.0


def test_no_mask_means_all_rows(ex1):
    instance, query = ex1
    assert evaluate(query, instance) == pytest.approx(2319.5, abs=1e-9)


def test_mask_id_must_belong_to_relation(ex1):
    instance, query = ex1
    with pytest.raises(SchemaError, match="belong"):
        evaluate(query, instance, {"orders": frozenset({"lineitem:0"})})


def test_count_aggregate(ex1):
    instance, query = ex1
    qd = query.to_dict()
    qd["aggregate"] = {"kind": "count"}
    q2 = QuerySpec.from_dict(qd)
    assert evaluate(q2, instance) == 4.0
    assert evaluate(q2, instance, {"lineitem": frozenset({"lineitem:0"})}) == 1.0


def test_exists_aggregate(ex1):
    instance, query = ex1
    qd = query.to_dict()
    qd["aggregate"] = {"kind": "exists"}
    q2 = QuerySpec.from_dict(qd)
    assert evaluate(q2, instance) == 1.0
    assert evaluate(q2, instance, {"customer": frozenset()}) == 0.0


def test_exists_monotone_masking(ex1):
    instance, query = ex1
    qd = query.to_dict()
    qd["aggregate"] = {"kind": "exists"}
    q2 = QuerySpec.from_dict(qd)
    rnd = random.Random(3)
    for _ in range(50):
        mask = {
            rel.name: set(tid for tid in rel.ids if rnd.random() < 0.5)
            for rel in instance.relations
        }
        before = evaluate(q2, instance, mask)
        grow_rel = rnd.choice(instance.relations)
        missing = [tid for tid in grow_rel.ids if tid not in mask[grow_rel.name]]
        if missing:
            mask[grow_rel.name].add(rnd.choice(missing))
        after = evaluate(q2, instance, mask)
        assert after >= before


def test_pure_function_repeat_calls(ex1):
    instance, query = ex1
    a = evaluate(query, instance, FULL_ENDOGENOUS)
    b = evaluate(query, instance, FULL_ENDOGENOUS)
    assert a == b


def test_join_order_independence(ex1):
    instance, query = ex1
    import itertools

    base = evaluate(query, instance, FULL_ENDOGENOUS)
    qd = query.to_dict()
    for perm in itertools.permutations(qd["relations"]):
        qp = dict(qd)
        qp["relations"] = list(perm)
        assert evaluate(QuerySpec.from_dict(qp), instance, FULL_ENDOGENOUS) == base


def test_constant_selection_prefilters(ex1):
    instance, query = ex1
    # unsatisfiable selection gives the empty aggregate
    qd = query.to_dict()
    qd["predicates"] = [p for p in qd["predicates"]]
    qd["predicates"].append(["orders.orderkey", "=", {"value": 999999}])
    assert evaluate(QuerySpec.from_dict(qd), instance) == 0.0


def test_bad_column_reference(ex1):
    instance, query = ex1
    qd = query.to_dict()
    qd["predicates"] = [["orders.nosuch", "=", {"value": 1}]]
    with pytest.raises(QueryError):
        evaluate(QuerySpec.from_dict(qd), instance)


def test_arithmetic_on_non_numeric_rejected(ex1):
    instance, query = ex1
    qd = query.to_dict()
    qd["aggregate"] = {"kind": "sum", "expr": {"col": "lineitem.shipdate"}}
    with pytest.raises(QueryError, match="non-numeric"):
        evaluate(QuerySpec.from_dict(qd), instance)


def test_query_roundtrip(tmp_path):
    q = QuerySpec.from_dict(EXAMPLE1_QUERY)
    path = tmp_path / "q.json"
    q.save(path)
    q2 = QuerySpec.from_file(path)
    assert q == q2


def test_unknown_relation_in_query(ex1):
    instance, _ = ex1
    q = QuerySpec.from_dict({"relations": ["nosuch"], "aggregate": {"kind": "count"}})
    with pytest.raises(SchemaError):
        evaluate(q, instance)


def test_date_constant_comparison(ex1):
    instance, query = ex1
    qd = query.to_dict()
    qd["predicates"].append(["lineitem.shipdate", ">", {"value": "1998-04-10"}])
    # only l1 (04-21) and l2 (04-16) remain
    assert evaluate(QuerySpec.from_dict(qd), instance) == pytest.approx(450.0 + 594.0)
