import math
import random
from itertools import product

import pytest

from relshap.accel import (
    CoalitionCache,
    PlayerMaskEvaluator,
    bin_strata,
    cached_eval,
    compile_view,
    eval_compiled,
    prune_strata,
)
from relshap.errors import CapacityError, DomainError
from relshap.game import GameContext
from relshap.harness import gen_instance
from relshap.provenance import compute_lineage
from relshap.relcore import QuerySpec, evaluate, load_instance
from relshap.samplers import (
    EstimatorConfig,
    _stream,
    enumerate_strata,
    run_arss,
    sample_coalition,
    stratum_card,
)


def test_view_golden_rows(ex1):
    instance, query = ex1
    view = compile_view(query, instance)
    assert view.row_count == 4
    assert view.terms == (450.0, 594.0, 658.0, 617.5)
    for row, li in zip(view.witness_ids, ("lineitem:0", "lineitem:1", "lineitem:2", "lineitem:3")):
        assert set(row) == {li, "customer:0", "orders:0"}
    assert view.total() == pytest.approx(2319.5, abs=1e-9)


def test_view_unsatisfiable_selection(ex1):
    instance, query = ex1
    qd = query.to_dict()
    qd["predicates"].append(["orders.orderkey", "=", {"value": 1}])
    view = compile_view(QuerySpec.from_dict(qd), instance)
    assert view.row_count == 0
    assert view.total() == 0.0


def test_view_row_cap(ex1):
    instance, query = ex1
    with pytest.raises(CapacityError, match="naive"):
        compile_view(query, instance, max_rows=2)


def test_eval_compiled_golden(ex1):
    instance, query = ex1
    view = compile_view(query, instance)
    mask = {
        "customer": frozenset({"customer:0"}),
        "orders": frozenset({"orders:0"}),
        "lineitem": frozenset({"lineitem:0", "lineitem:1", "lineitem:2"}),
    }
    assert eval_compiled(view, mask) == pytest.approx(1702.0, abs=1e-9)
    empty = {r.name: frozenset() for r in instance.relations}
    assert eval_compiled(view, empty) == 0.0


def test_eval_compiled_equals_naive_1000_masks(ex1):
    instance, query = ex1
    view = compile_view(query, instance)
    rnd = random.Random(7)
    for _ in range(1000):
        mask = {
            rel.name: frozenset(t for t in rel.ids if rnd.random() < 0.6)
            for rel in instance.relations
        }
        assert eval_compiled(view, mask) == evaluate(query, instance, mask)


def test_eval_compiled_equivalence_count_exists(ex1):
    instance, query = ex1
    rnd = random.Random(11)
    for kind in ("count", "exists"):
        qd = query.to_dict()
        qd["aggregate"] = {"kind": kind}
        q2 = QuerySpec.from_dict(qd)
        view = compile_view(q2, instance)
        for _ in range(200):
            mask = {
                rel.name: frozenset(t for t in rel.ids if rnd.random() < 0.5)
                for rel in instance.relations
            }
            assert eval_compiled(view, mask) == evaluate(q2, instance, mask)


def test_player_mask_evaluator_matches_dict_masks(ex1, ex1_partition):
    instance, query = ex1
    view = compile_view(query, instance)
    pe = PlayerMaskEvaluator(view, ex1_partition)
    part = ex1_partition
    for enc in range(64):
        ids = part.decode(enc)
        mask = {
            rel: frozenset(t for t in part.members[rel] if t in ids)
            for rel in part.relations
        }
        assert pe(enc) == eval_compiled(view, mask)


# --- cache ----------------------------------------------------------------------


def test_cached_eval_hit_counter(ex1, ex1_partition):
    instance, query = ex1
    ctx = GameContext(query, instance, ex1_partition)
    enc = ex1_partition.encode(["customer:0", "orders:0"])
    a = ctx.value_int(enc)
    hits0 = ctx.cache.hits
    b = ctx.value_int(enc)
    assert a == b
    assert ctx.cache.hits == hits0 + 1


def test_cache_capacity_zero_always_evaluates(ex1, ex1_partition):
    instance, query = ex1
    ctx = GameContext(query, instance, ex1_partition, cache_capacity=0)
    enc = ex1_partition.encode(["customer:0", "orders:0"])
    ctx.value_int(enc)
    ctx.value_int(enc)
    assert ctx.eval_count == 2
    assert ctx.cache.hits == 0


def test_cache_lru_eviction():
    cache = CoalitionCache(capacity=2)
    cache.store(1, 1.0)
    cache.store(2, 2.0)
    cache.lookup(1)
    cache.store(3, 3.0)  # evicts 2, the least recently used
    assert cache.lookup(1)[0]
    assert not cache.lookup(2)[0]
    assert cache.lookup(3)[0]


def test_cached_eval_function():
    calls = []

    def ev(ctx, key):
        calls.append(key)
        return float(key)

    cache = CoalitionCache(capacity=8)
    assert cached_eval(cache, ev, None, 5) == 5.0
    assert cached_eval(cache, ev, None, 5) == 5.0
    assert calls == [5]


def test_cache_transparency_same_estimates(ex1, ex1_partition):
    instance, query = ex1
    ctx = GameContext(query, instance, ex1_partition)
    on = run_arss(ctx, "orders:0", EstimatorConfig(method="arss", m=300, seed=5, cache=True))
    off = run_arss(ctx, "orders:0", EstimatorConfig(method="arss", m=300, seed=5, cache=False))
    assert on.value == off.value
    assert on.strata == off.strata


# --- pruning ---------------------------------------------------------------------


def test_prune_example1(ex1, ex1_partition):
    instance, query = ex1
    vectors = enumerate_strata(ex1_partition, "orders:0")
    pruned = prune_strata(vectors, query, ex1_partition, "orders:0")
    by_vec = dict(zip(vectors, pruned))
    # all five strata with s_customer = 0 are pruned
    for sl in range(5):
        assert by_vec[(0, 0, sl)]
    # the lineitem-free stratum with the customer present is pruned too
    assert by_vec[(1, 0, 0)]
    unpruned = [v for v, p in by_vec.items() if not p]
    assert unpruned == [(1, 0, 1), (1, 0, 2), (1, 0, 3), (1, 0, 4)]


def test_prune_single_relation():
    from relshap.harness import example1

    instance, _ = example1()
    q = QuerySpec.from_dict(
        {
            "relations": ["lineitem"],
            "predicates": [["lineitem.orderkey", "=", {"value": 23417}]],
            "aggregate": {"kind": "sum", "expr": {"col": "lineitem.extendedprice"}},
        }
    )
    part = compute_lineage(q, instance)
    t = part.players[0]
    vectors = enumerate_strata(part, t)
    assert not any(prune_strata(vectors, q, part, t))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_prune_soundness_exhaustive(tmp_path, seed):
    paths = gen_instance(tmp_path / str(seed), seed=seed, scale=(7, 3, 2), skew=1.0)
    instance = load_instance(paths["schema"])
    query = QuerySpec.from_file(paths["query"])
    part = compute_lineage(query, instance)
    if part.n == 0:
        pytest.skip("empty lineage for this seed")
    ctx = GameContext(query, instance, part)
    for t in part.players:
        ti = part.index[t]
        vectors = enumerate_strata(part, t)
        pruned = prune_strata(vectors, query, part, t)
        pools = [
            [part.index[x] for x in part.members[rel] if part.index[x] != ti]
            for rel in part.relations
        ]
        from itertools import combinations

        for v, p in zip(vectors, pruned):
            if not p:
                continue
            for parts in product(*(combinations(pool, c) for pool, c in zip(pools, v))):
                enc = 0
                for grp in parts:
                    for j in grp:
                        enc |= 1 << j
                assert ctx.delta_int(enc, ti) == 0.0


# --- binning ---------------------------------------------------------------------


def test_bin_identity_when_q_large(ex1_partition):
    vectors = enumerate_strata(ex1_partition, "orders:0")
    groups = bin_strata(vectors, 10, (1, 0, 4))
    assert len(groups) == len(vectors)
    assert all(len(g.members) == 1 for g in groups)


def test_bin_single_group_when_q_one(ex1_partition):
    vectors = enumerate_strata(ex1_partition, "orders:0")
    groups = bin_strata(vectors, 1, (1, 0, 4))
    assert len(groups) == 1
    assert len(groups[0].members) == len(vectors)


def test_bin_cards_conserved(ex1_partition):
    vectors = enumerate_strata(ex1_partition, "orders:0")
    for q in (1, 2, 3, 10):
        groups = bin_strata(vectors, q, (1, 0, 4))
        assert sum(g.card for g in groups) == 32
        assert sum(len(g.members) for g in groups) == len(vectors)


def test_bin_requires_positive_q(ex1_partition):
    with pytest.raises(DomainError):
        bin_strata(enumerate_strata(ex1_partition, "orders:0"), 0, (1, 0, 4))


def test_binned_group_sampling_uniform():
    # group mixing vectors (2,0) and (1,1) over pools (4,1): 6 + 4 coalitions
    from relshap.provenance import EndogenousPartition

    members = {"a": tuple(f"a:{i}" for i in range(5)), "b": ("b:0",)}
    part = EndogenousPartition(("a", "b"), members)
    vectors = [v for v in enumerate_strata(part, "a:0") if sum(v) == 2]
    groups = bin_strata(vectors, 1, (4, 1))
    assert len(groups) == 1
    group = groups[0]
    assert group.card == math.comb(4, 2) + 4

    from relshap.samplers import _make_group_draw, _others_by_relation

    pools = _others_by_relation(part, "a:0")
    draw = _make_group_draw(group, pools)
    rng = _stream(99, 0, 0)
    counts: dict[int, int] = {}
    draws = 100_000
    for _ in range(draws):
        enc = draw(rng)
        counts[enc] = counts.get(enc, 0) + 1
    assert len(counts) == group.card
    expected = draws / group.card
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    # df = 9; critical value at p = 0.001 is 27.877
    assert chi2 < 27.877
