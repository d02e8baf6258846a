"""Coalition games over query lineage: marginal contributions, Shapley
weights, and exact brute-force oracles (subset form, permutation form, and
Banzhaf).

A coalition is canonically encoded as an int bit vector indexed by the
partition's stable player ordering, so identical sets always encode
identically.  The value function v(S) evaluates the query on the
sub-instance S plus all exogenous tuples, through either the naive join
evaluator or a compiled witness view; both agree bit-exactly.
"""

from __future__ import annotations

import math
import threading
import time
from fractions import Fraction
from itertools import combinations, permutations
from typing import Iterable

from .accel import (
    DEFAULT_CACHE_CAPACITY,
    DEFAULT_VIEW_CAP,
    CoalitionCache,
    PlayerMaskEvaluator,
    cached_eval,
    compile_view,
)
from .errors import CapacityError, DomainError
from .provenance import EndogenousPartition, compute_lineage
from .relcore import DatabaseInstance, QuerySpec, bind, evaluate_bound

__all__ = [
    "GameContext",
    "shapley_weight",
    "marginal",
    "exact_shapley",
    "exact_shapley_perm",
    "exact_banzhaf",
    "DEFAULT_EXACT_CAP",
    "DEFAULT_PERM_CAP",
]

DEFAULT_EXACT_CAP = 24
DEFAULT_PERM_CAP = 9


def shapley_weight(s: int, n: int) -> float:
    """Coalition weight s!(n-s-1)!/n! via incremental ratios (no factorials)."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if s < 0 or s >= n:
        raise DomainError(f"coalition size {s} outside [0, {n - 1}]")
    w = 1.0 / n
    for i in range(1, s + 1):
        w *= i / (n - i)
    return w


def _w_fraction(s: int, n: int) -> Fraction:
    """Exact Shapley weight: 1 / (n * C(n-1, s))."""
    return Fraction(1, n * math.comb(n - 1, s))


def _raw_value(ctx: "GameContext", coalition: int) -> float:
    t0 = time.perf_counter()
    if ctx.evaluator == "compiled":
        value = ctx.player_eval(coalition)
    else:
        value = evaluate_bound(ctx._binding, ctx._mask_for(coalition))
    dt = time.perf_counter() - t0
    with ctx._lock:
        ctx.eval_count += 1
        ctx.evaluator_seconds += dt
    return value


class GameContext:
    """Query, instance, lineage partition, and a chosen evaluator.

    Read-only during a run; value lookups go through the coalition cache.
    """

    def __init__(
        self,
        query: QuerySpec,
        instance: DatabaseInstance,
        partition: EndogenousPartition | None = None,
        evaluator: str = "compiled",
        cache_capacity: int = DEFAULT_CACHE_CAPACITY,
        view_cap: int = DEFAULT_VIEW_CAP,
        backend: str | None = None,
    ):
        if evaluator not in ("naive", "compiled"):
            raise DomainError(f"unknown evaluator {evaluator!r}")
        self.query = query
        self.instance = instance
        self.partition = partition if partition is not None else compute_lineage(query, instance)
        self.evaluator = evaluator
        self.cache = CoalitionCache(cache_capacity)
        self.eval_count = 0
        self.evaluator_seconds = 0.0
        self._lock = threading.Lock()
        self._v_empty: float | None = None
        if evaluator == "compiled":
            self.view = compile_view(query, instance, view_cap)
            self.player_eval = PlayerMaskEvaluator(self.view, self.partition, backend)
        else:
            self.view = None
            self._binding = bind(query, instance)
            # non-lineage rows of endogenous relations are exogenous: always present
            self._base_present = {
                rel: frozenset(instance.relation(rel).ids)
                - frozenset(self.partition.members[rel])
                for rel in self.partition.relations
            }
            # player ids grouped by relation for mask construction
            self._rel_players = [
                [(self.partition.index[tid], tid) for tid in self.partition.members[rel]]
                for rel in self.partition.relations
            ]

    @property
    def n(self) -> int:
        return self.partition.n

    def _mask_for(self, coalition: int) -> dict[str, frozenset]:
        mask = {}
        for rel, players in zip(self.partition.relations, self._rel_players):
            chosen = {tid for i, tid in players if (coalition >> i) & 1}
            mask[rel] = self._base_present[rel] | chosen
        return mask

    def value_int(self, coalition: int) -> float:
        """v(S) for a coalition given as the canonical bit encoding."""
        if coalition == 0:
            if self._v_empty is None:
                self._v_empty = _raw_value(self, 0)
            return self._v_empty
        return cached_eval(self.cache, _raw_value, self, coalition)

    def value(self, ids: Iterable[str]) -> float:
        return self.value_int(self.partition.encode(ids))

    @property
    def v_empty(self) -> float:
        return self.value_int(0)

    def delta_int(self, coalition: int, t_index: int) -> float:
        """Marginal contribution of player t_index to the coalition."""
        bit = 1 << t_index
        return self.value_int(coalition | bit) - self.value_int(coalition)

    def reset_counters(self) -> None:
        with self._lock:
            self.eval_count = 0
            self.evaluator_seconds = 0.0


def marginal(ctx: GameContext, coalition: Iterable[str] | int, t: str) -> float:
    """v(S + t) - v(S); exactly two evaluator calls (or cache hits)."""
    part = ctx.partition
    if t not in part.index:
        raise DomainError(f"target {t!r} is not endogenous for this query")
    ti = part.index[t]
    enc = coalition if isinstance(coalition, int) else part.encode(coalition)
    if (enc >> ti) & 1:
        raise DomainError(f"target {t!r} already belongs to the coalition")
    return ctx.delta_int(enc, ti)


def _combo_mask(indices: tuple[int, ...]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


def exact_shapley(ctx: GameContext, t: str, cap: int = DEFAULT_EXACT_CAP) -> float:
    """Brute-force subset-form Shapley value of tuple t.

    Enumerates all 2^(n-1) coalitions of the other players and combines the
    per-size sums with exact rational weights, rounding once at the end.
    """
    if t not in ctx.partition.index:
        return 0.0
    n = ctx.n
    if n > cap:
        raise CapacityError(
            f"exact Shapley needs 2^{n - 1} coalitions (n={n} > cap {cap})"
        )
    ti = ctx.partition.index[t]
    others = [i for i in range(n) if i != ti]
    total = Fraction(0)
    for s in range(len(others) + 1):
        size_sum = math.fsum(
            ctx.delta_int(_combo_mask(c), ti) for c in combinations(others, s)
        )
        total += _w_fraction(s, n) * Fraction(size_sum)
    return float(total)


def exact_shapley_perm(ctx: GameContext, t: str, cap: int = DEFAULT_PERM_CAP) -> float:
    """Permutation-form Shapley oracle: average marginal over all n! orders."""
    if t not in ctx.partition.index:
        return 0.0
    n = ctx.n
    if n > cap:
        raise CapacityError(f"permutation oracle needs {n}! orders (n={n} > cap {cap})")
    ti = ctx.partition.index[t]

    def contributions():
        for perm in permutations(range(n)):
            prefix = 0
            for p in perm:
                if p == ti:
                    break
                prefix |= 1 << p
            yield ctx.delta_int(prefix, ti)

    return math.fsum(contributions()) / math.factorial(n)


def exact_banzhaf(ctx: GameContext, t: str, cap: int = DEFAULT_EXACT_CAP) -> float:
    """Brute-force Banzhaf value: equal weight on all 2^(n-1) coalitions."""
    if t not in ctx.partition.index:
        return 0.0
    n = ctx.n
    if n > cap:
        raise CapacityError(
            f"exact Banzhaf needs 2^{n - 1} coalitions (n={n} > cap {cap})"
        )
    ti = ctx.partition.index[t]
    others = [i for i in range(n) if i != ti]
    size_sums = [
        math.fsum(ctx.delta_int(_combo_mask(c), ti) for c in combinations(others, s))
        for s in range(len(others) + 1)
    ]
    return math.fsum(size_sums) / 2.0 ** (n - 1)
